"""The profile equation  i d/dt beta = (nu(xi)/t) |beta|^2 beta  on a frequency grid.

Written in tau = log t the equation is autonomous, i d/dtau beta = nu |beta|^2 beta,
so horizons such as log t = 10^6 cost a few thousand steps.  Times are
therefore carried as ``log_t`` throughout; ``t`` itself is only derived
(it overflows to ``inf`` beyond log t ~ 709).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .classifier import DissipationClass, Trichotomy, classify_nu
from .nonlinearity import NuPolynomial

LN10 = math.log(10.0)


class ProfileDivergenceError(ArithmeticError):
    def __init__(self, message, xi=None, log_t=None):
        super().__init__(message)
        self.xi = xi
        self.log_t = log_t


def bracket(xi):
    """Japanese bracket <xi> = sqrt(1 + xi^2)."""
    return np.sqrt(1.0 + np.square(xi))


@dataclass(frozen=True)
class FrequencyGrid:
    xi_min: float = -20.0
    xi_max: float = 20.0
    count: int = 4096

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("grid needs at least 2 nodes")
        if not self.xi_max > self.xi_min:
            raise ValueError("xi_max must exceed xi_min")

    @classmethod
    def symmetric(cls, half_width: float, count: int) -> "FrequencyGrid":
        return cls(-half_width, half_width, count)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(self.xi_min, self.xi_max, self.count)

    @property
    def dxi(self) -> float:
        return (self.xi_max - self.xi_min) / (self.count - 1)


@dataclass(frozen=True)
class InitialProfile:
    """alpha(t0, xi) sampled on ``grid`` with |alpha0| <= A <xi>^-2."""

    grid: FrequencyGrid
    alpha0: np.ndarray
    t0: float = 2.0
    envelope: float = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.alpha0, dtype=complex)
        if a.shape != (self.grid.count,):
            raise ValueError("alpha0 does not match the grid")
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        A = self.envelope
        weighted = np.abs(a) * bracket(self.grid.xi) ** 2
        if A is None:
            A = float(weighted.max())
        elif np.any(weighted > A * (1 + 1e-12)):
            raise ValueError("alpha0 exceeds the stated envelope A <xi>^-2")
        object.__setattr__(self, "alpha0", a)
        object.__setattr__(self, "envelope", float(A))

    @property
    def log_t0(self) -> float:
        return math.log(self.t0)

    @classmethod
    def bracket_envelope(cls, grid: FrequencyGrid, eps: float, t0: float = 2.0):
        """alpha0 = eps <xi>^-2, saturating the a priori bound."""
        return cls(grid, eps / bracket(grid.xi) ** 2, t0, envelope=eps)

    @classmethod
    def gaussian(cls, grid: FrequencyGrid, eps: float, width: float = 1.0, t0: float = 2.0):
        xi = grid.xi
        return cls(grid, eps * np.exp(-0.5 * (xi / width) ** 2), t0)


@dataclass(frozen=True)
class ProfileState:
    log_t: float
    beta: np.ndarray
    grid: FrequencyGrid
    steps: int = 0

    @property
    def t(self) -> float:
        return math.exp(self.log_t) if self.log_t < 709.0 else math.inf


def _rhs(beta, nu_vals):
    return -1j * nu_vals * (beta.real ** 2 + beta.imag ** 2) * beta


def _rk4(beta, nu_vals, h):
    k1 = _rhs(beta, nu_vals)
    k2 = _rhs(beta + 0.5 * h * k1, nu_vals)
    k3 = _rhs(beta + 0.5 * h * k2, nu_vals)
    k4 = _rhs(beta + h * k3, nu_vals)
    return beta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_nodes(beta0, nu_values, log_t0: float, log_times: Iterable[float],
                 steps_per_decade: int = 64, *, safety: float = 0.01,
                 max_steps: int = 10_000_000, xi=None, rate_floor: float = 0.0) -> Iterator[tuple[float, np.ndarray, int]]:
    """RK4 in tau = log t for independent nodes i d/dtau beta = nu |beta|^2 beta.

    Yields ``(log_t, beta, steps_taken)`` at each requested log-time (sorted
    ascending, each >= ``log_t0``).  Step sizes are ln(10)/steps_per_decade
    until tau - tau0 reaches 1, then grow geometrically with tau - tau0 (the
    same number of steps per decade of log t), and never exceed
    ``safety / max |nu| |beta|^2``.  All nodes share one schedule, so a
    node's result depends on the rest of the grid only through that maximum;
    runs over different node sets agree when given the same ``rate_floor``
    dominating every set's maximum.
    """
    if steps_per_decade < 16:
        raise ValueError("steps_per_decade must be >= 16")
    nu_vals = np.asarray(nu_values, dtype=complex)
    beta = np.array(beta0, dtype=complex)
    nu_vals = np.broadcast_to(nu_vals, beta.shape)
    abs_nu = np.abs(nu_vals)
    xi = np.arange(beta.size) if xi is None else np.asarray(xi)
    tau0 = tau = float(log_t0)
    h_min = LN10 / steps_per_decade
    growth = h_min
    steps = 0

    for target in sorted(float(x) for x in log_times):
        if target < tau0 - 1e-12:
            raise ValueError("requested log-time precedes log t0")
        while tau < target:
            h = max(h_min, growth * (tau - tau0))
            rate = float(np.max(abs_nu * (beta.real ** 2 + beta.imag ** 2), initial=rate_floor))
            if rate > 0:
                h = min(h, safety / rate)
            last = h >= target - tau
            if last:
                h = target - tau
            with np.errstate(over="ignore", invalid="ignore"):
                beta = _rk4(beta, nu_vals, h)
            tau = target if last else tau + h
            steps += 1
            bad = ~np.isfinite(beta)
            if bad.any():
                k = int(np.argmax(bad))
                raise ProfileDivergenceError(
                    f"non-finite profile at xi = {xi[k]:.6g}, log t = {tau:.6g}", xi[k], tau)
            if steps > max_steps:
                k = int(np.argmax(np.abs(beta)))
                raise ProfileDivergenceError(
                    f"step limit reached near log t = {tau:.6g}; largest |beta| at "
                    f"xi = {xi[k]:.6g} (condition (A) violated?)", xi[k], tau)
        yield tau, beta.copy(), steps


def profile_trajectory(init: InitialProfile, nu: NuPolynomial, log_times: Iterable[float],
                       steps_per_decade: int = 64, **kwargs) -> Iterator[ProfileState]:
    """Profile states at each requested log-time; see :func:`evolve_nodes`."""
    grid = init.grid
    xi = grid.xi
    for log_t, beta, steps in evolve_nodes(init.alpha0, nu(xi), init.log_t0, log_times,
                                           steps_per_decade, xi=xi, **kwargs):
        yield ProfileState(log_t, beta, grid, steps)


def integrate_profile(init: InitialProfile, nu: NuPolynomial, t_end: float | None = None,
                      steps_per_decade: int = 64, *, log_t_end: float | None = None,
                      **kwargs) -> ProfileState:
    """State of the profile equation at ``t_end`` (or at ``log_t_end``)."""
    if (t_end is None) == (log_t_end is None):
        raise ValueError("give exactly one of t_end, log_t_end")
    if log_t_end is None:
        if not t_end > init.t0:
            raise ValueError("t_end must exceed t0")
        log_t_end = math.log(t_end)
    elif not log_t_end > init.log_t0:
        raise ValueError("log_t_end must exceed log t0")
    (state,) = profile_trajectory(init, nu, [log_t_end], steps_per_decade, **kwargs)
    return state


def closed_form_modulus(m0, p_xi, t0=None, t=None, *, log_ratio=None):
    """|beta(t)|^2 = m0 / (1 + 2 p m0 log(t/t0)), the exact modulus when rho = 0.

    ``log_ratio`` may be passed instead of ``t0, t`` for horizons where t
    itself overflows.
    """
    if log_ratio is None:
        if t0 is None or t is None:
            raise ValueError("need t0 and t, or log_ratio")
        log_ratio = np.log(np.asarray(t, dtype=float) / t0)
    m0 = np.asarray(m0, dtype=float)
    p_xi = np.asarray(p_xi, dtype=float)
    out = m0 / (1.0 + 2.0 * p_xi * m0 * log_ratio)
    return out if np.ndim(out) else float(out)


def l2_norm(state: ProfileState) -> float:
    """Trapezoidal (int |beta|^2 dxi)^(1/2) over the grid."""
    dens = state.beta.real ** 2 + state.beta.imag ** 2
    return math.sqrt(float(np.trapezoid(dens, dx=state.grid.dxi)))


def l2_tail_bound(grid: FrequencyGrid, envelope: float) -> float:
    """Upper bound on the L2 norm carried outside the grid by A <xi>^-2."""
    X = min(-grid.xi_min, grid.xi_max)
    if X <= 0:
        return math.inf
    # int_X^inf (1 + xi^2)^-2 dxi
    one_side = math.pi / 4 - 0.5 * (X / (1 + X * X) + math.atan(X))
    return envelope * math.sqrt(2 * max(one_side, 0.0))


def asymptotic_profile(state: ProfileState, nu: NuPolynomial) -> np.ndarray:
    """alpha_plus(xi) = beta(t, xi) exp(i |beta|^2 Re nu(xi) log t).

    Only meaningful when Im nu vanishes identically, where |beta| is
    conserved and the phase drifts linearly in log t.
    """
    cls = classify_nu(nu)
    if cls.trichotomy is not Trichotomy.IDENTICALLY_ZERO:
        raise ValueError("asymptotic_profile requires Im nu == 0")
    beta = state.beta
    re_nu = np.real(nu(state.grid.xi))
    return beta * np.exp(1j * np.abs(beta) ** 2 * re_nu * state.log_t)


def predicted_exponent(cls: DissipationClass) -> float:
    """Exponent gamma in ||u(t)|| ~ (eps^2 log t)^-gamma."""
    if not cls.cond_A:
        raise ValueError("no rate prediction without condition (A)")
    if cls.trichotomy is Trichotomy.DOUBLE_ROOT:
        return 0.25
    if cls.trichotomy is Trichotomy.STRICTLY_POSITIVE_INF:
        return 0.5 if cls.cond_A_plus_plus else 0.375
    raise ValueError("no L2 decay is predicted when Im nu vanishes identically")


def log_sample_times(log_t0: float, log_t_end: float, count: int) -> np.ndarray:
    """``count`` values of log t, geometrically spaced, from log t0 to log_t_end."""
    lo = max(log_t0, 1e-300)
    return np.geomspace(lo, log_t_end, count)

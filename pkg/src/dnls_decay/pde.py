"""Pseudospectral solver for  i u_t + u_xx / 2 = N(u, u_x)  on a periodic box [-L, L).

The unknown is stored as the profile alpha(t, xi) = exp(i t xi^2 / 2) u_hat(t, xi),
which is exactly the integrating-factor variable: the free flow leaves it
untouched and only the nonlinearity moves it,

    d alpha / dt = -i exp(i t xi^2 / 2) F[N(u, u_x)].

``u_hat`` uses the continuum normalisation (2 pi)^-1/2 int exp(-i x xi) u dx,
discretised so that Plancherel holds exactly: dx sum |u|^2 = dxi sum |alpha|^2.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy import fft as sfft

from .nonlinearity import CubicNonlinearity, NuPolynomial, evaluate
from .profile import evolve_nodes

SQRT2PI = math.sqrt(2 * math.pi)


class PdeNumericalError(ArithmeticError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class TruncationError(ValueError):
    """Initial datum is not negligible at the box edge."""


@dataclass(frozen=True)
class SpatialGrid:
    L: float = 200.0
    n: int = 8192

    def __post_init__(self):
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.L / self.n

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Signed mode numbers in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @property
    def xi(self) -> np.ndarray:
        """Wavenumbers pi k / L in FFT order."""
        return self.dxi * self.k

    @property
    def xi_max(self) -> float:
        return self.dxi * self.n / 2

    @property
    def dealias_mask(self) -> np.ndarray:
        return np.abs(self.k) <= self.n // 3

    @property
    def dealias_cutoff(self) -> float:
        return self.dxi * (self.n // 3)

    def forward(self, u):
        """Continuum-normalised Fourier transform (FFT order)."""
        sign = 1.0 - 2.0 * (self.k & 1)
        return (self.dx / SQRT2PI) * sign * sfft.fft(u)

    def inverse(self, u_hat):
        sign = 1.0 - 2.0 * (self.k & 1)
        return (SQRT2PI / self.dx) * sfft.ifft(sign * u_hat)


@dataclass(frozen=True)
class PdeState:
    """Solution at time ``t``; ``alpha`` is the Fourier-side workspace in FFT order.

    ``epsilon`` records ||phi||_{H^3} + ||<x> phi||_{H^2} of the initial datum.
    """

    grid: SpatialGrid
    t: float
    alpha: np.ndarray
    epsilon: float
    h3_initial: float
    steps: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def u_hat(self) -> np.ndarray:
        return np.exp(-0.5j * self.t * self.grid.xi ** 2) * self.alpha

    @property
    def u(self) -> np.ndarray:
        return self.grid.inverse(self.u_hat)


@dataclass(frozen=True)
class ExtractedProfile:
    """alpha(t, xi) on ascending wavenumbers ``xi``."""

    t: float
    xi: np.ndarray
    alpha: np.ndarray

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])


def _h_norm(grid: SpatialGrid, f_hat, order: int) -> float:
    w = (1.0 + grid.xi ** 2) ** order
    return math.sqrt(grid.dxi * float(np.sum(w * (f_hat.real ** 2 + f_hat.imag ** 2))))


def data_norm(phi_samples, grid: SpatialGrid) -> float:
    """Discrete ||phi||_{H^3} + ||<x> phi||_{H^2}."""
    phi_samples = np.asarray(phi_samples, dtype=complex)
    h3 = _h_norm(grid, grid.forward(phi_samples), 3)
    weighted = np.sqrt(1.0 + grid.x ** 2) * phi_samples
    return h3 + _h_norm(grid, grid.forward(weighted), 2)


def initialize(phi, grid: SpatialGrid, edge_tol: float = 1e-12) -> PdeState:
    """State at t = 0 from a callable phi(x) or from n samples on ``grid.x``."""
    if callable(phi):
        samples = np.asarray(phi(grid.x), dtype=complex)
        edges = np.abs(np.asarray(phi(np.array([-grid.L, grid.L])), dtype=complex))
    else:
        samples = np.asarray(phi, dtype=complex)
        if samples.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} samples")
        edges = np.abs(samples[[0, -1]])
    if np.max(edges) >= edge_tol:
        raise TruncationError(
            f"|phi| = {np.max(edges):.3g} at the box edge exceeds {edge_tol:g}; enlarge L")
    alpha = grid.forward(samples)
    return PdeState(grid, 0.0, alpha, data_norm(samples, grid), _h_norm(grid, alpha, 3))


def gaussian_datum(amplitude: float, width: float = 1.0) -> Callable:
    """phi(x) = amplitude * exp(-(x / width)^2)."""
    return lambda x: amplitude * np.exp(-(np.asarray(x) / width) ** 2)


class _Rhs:
    def __init__(self, grid: SpatialGrid, N: CubicNonlinearity):
        self.grid = grid
        self.N = N
        self.mask = grid.dealias_mask
        self.xi = grid.xi
        self.half_xi2 = 0.5 * grid.xi ** 2
        self.zero = not N.monomials

    def __call__(self, t, alpha):
        if self.zero:
            return np.zeros_like(alpha)
        g = self.grid
        phase = np.exp(1j * t * self.half_xi2)
        u_hat = np.where(self.mask, alpha / phase, 0)
        u = g.inverse(u_hat)
        ux = g.inverse(1j * self.xi * u_hat)
        n_hat = np.where(self.mask, g.forward(evaluate(self.N, u, ux)), 0)
        return -1j * phase * n_hat


def _rk4(rhs, t, alpha, dt):
    k1 = rhs(t, alpha)
    k2 = rhs(t + 0.5 * dt, alpha + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, alpha + 0.5 * dt * k2)
    k4 = rhs(t + dt, alpha + dt * k3)
    return alpha + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def check_dt(grid: SpatialGrid, dt: float, safety: float) -> None:
    if not dt > 0:
        raise ValueError("dt must be positive")
    limit = safety / grid.dealias_cutoff ** 2
    if dt > limit:
        raise ValueError(f"dt = {dt:g} exceeds safety / xi_c^2 = {limit:g} "
                         f"(xi_c = {grid.dealias_cutoff:.4g})")


DEFAULT_SAFETY = 100.0
H3_GUARD = 10.0


def step(state: PdeState, dt: float, N: CubicNonlinearity, *,
         safety: float = DEFAULT_SAFETY, _rhs: _Rhs | None = None) -> PdeState:
    """One integrating-factor RK4 step (linear flow exact, 2/3-rule dealiasing)."""
    check_dt(state.grid, dt, safety)
    rhs = _rhs if _rhs is not None else _Rhs(state.grid, N)
    alpha = _rk4(rhs, state.t, state.alpha, dt)
    t = state.t + dt
    if not np.all(np.isfinite(alpha)):
        raise PdeNumericalError(f"non-finite solution at t = {t:.6g}", t)
    h3 = _h_norm(state.grid, alpha, 3)
    if h3 > H3_GUARD * state.h3_initial:
        raise PdeNumericalError(
            f"||u||_H3 grew to {h3 / state.h3_initial:.3g} x its initial value at t = {t:.6g};"
            " outside the small-data regime", t)
    return replace(state, t=t, alpha=alpha, steps=state.steps + 1, diagnostics={})


def evolve(state: PdeState, N: CubicNonlinearity, dt: float, t_end: float, *,
           every: int | None = None, snapshot_times: Sequence[float] | None = None,
           safety: float = DEFAULT_SAFETY) -> Iterator[PdeState]:
    """Advance with fixed ``dt`` up to ``t_end`` and yield snapshots.

    Snapshots are taken every ``every`` steps, or at the steps nearest to
    ``snapshot_times``; the final state is always yielded.  Times are formed
    as t_start + k dt to avoid drift.
    """
    check_dt(state.grid, dt, safety)
    rhs = _Rhs(state.grid, N)
    t_start = state.t
    n_steps = int(round((t_end - t_start) / dt))
    if n_steps < 1:
        raise ValueError("t_end must exceed the current time by at least dt")
    marks = set()
    if snapshot_times is not None:
        marks = {int(round((s - t_start) / dt)) for s in snapshot_times}
    alpha = state.alpha
    h3_0 = state.h3_initial
    for k in range(1, n_steps + 1):
        t_prev = t_start + (k - 1) * dt
        alpha = _rk4(rhs, t_prev, alpha, dt)
        t = t_start + k * dt
        if not np.all(np.isfinite(alpha)):
            raise PdeNumericalError(f"non-finite solution at t = {t:.6g}", t)
        if _h_norm(state.grid, alpha, 3) > H3_GUARD * h3_0:
            raise PdeNumericalError(
                f"||u||_H3 exceeded {H3_GUARD:g} x its initial value at t = {t:.6g};"
                " outside the small-data regime", t)
        if k == n_steps or k in marks or (every and k % every == 0):
            yield replace(state, t=t, alpha=alpha, steps=state.steps + k, diagnostics={})


def mass(state: PdeState) -> float:
    """Discrete L2 norm of u(t) on the physical grid."""
    u = state.u
    return math.sqrt(state.grid.dx * float(np.sum(u.real ** 2 + u.imag ** 2)))


def h3_norm(state: PdeState) -> float:
    return _h_norm(state.grid, state.alpha, 3)


def j_seminorm(state: PdeState, order: int = 2) -> float:
    """||J u||_{H^order} with J = x + i t d/dx.

    F[U(-t) J u] = i d/dxi alpha, and d/dxi on the wavenumber grid is
    multiplication of U(-t) u = F^-1 alpha by -i x.
    """
    g = state.grid
    v = g.inverse(state.alpha)
    return _h_norm(g, g.forward(g.x * v), order)


def j_norm(state: PdeState) -> float:
    """||u||_{H^3} + ||J u||_{H^2}, the quantity of the a priori energy bound."""
    return h3_norm(state) + j_seminorm(state, 2)


def extract_profile(state: PdeState, xi_max: float | None = None) -> ExtractedProfile:
    """alpha(t, xi) = F[U(-t) u(t)](xi) on ascending wavenumbers, optionally |xi| <= xi_max."""
    g = state.grid
    xi = np.fft.fftshift(g.xi)
    alpha = np.fft.fftshift(state.alpha)
    if xi_max is not None:
        keep = np.abs(xi) <= xi_max + 1e-12
        xi, alpha = xi[keep], alpha[keep]
    return ExtractedProfile(state.t, xi, alpha.copy())


def mass_rate_identity(state: PdeState, N: CubicNonlinearity) -> float:
    """d||u||^2/dt of the semi-discrete flow: 2 Im int conj(u) N(u, u_x) dx.

    Evaluated on the dealiased field, which is what the solver evolves.
    """
    g = state.grid
    u_hat = np.where(g.dealias_mask, state.u_hat, 0)
    u = g.inverse(u_hat)
    ux = g.inverse(1j * g.xi * u_hat)
    integrand = np.conj(u) * evaluate(N, u, ux)
    return 2.0 * g.dx * float(np.sum(integrand.imag))


# -- resonance residual ---------------------------------------------------


def fd_weights(t_nodes, t0: float, deriv: int = 1) -> np.ndarray:
    """Fornberg finite-difference weights for the ``deriv``-th derivative at t0."""
    x = np.asarray(t_nodes, dtype=float) - t0
    n = len(x)
    c = np.zeros((n, deriv + 1))
    c1 = 1.0
    c4 = x[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, deriv]


@dataclass(frozen=True)
class ResidualReport:
    """r(t, xi) = i d/dt alpha - (nu / t) |alpha|^2 alpha along a trajectory.

    ``raw_norm`` is the RMS over the window of ||r(t)||_{L2(xi)};
    ``averaged_norm`` is ||(1/|W|) int_W r dt||_{L2(xi)}.
    """

    times: np.ndarray
    raw_norms: np.ndarray
    raw_norm: float
    averaged_norm: float
    window: tuple[float, float]

    @property
    def suppression(self) -> float:
        return self.raw_norm / self.averaged_norm if self.averaged_norm > 0 else math.inf


def resonance_residual(trajectory: Iterable[ExtractedProfile], nu: NuPolynomial,
                       window: tuple[float, float] | None = None) -> ResidualReport:
    """Residual of the resonant profile law, by 5-point centred differences.

    ``trajectory`` may be any iterable (a generator is consumed lazily, only
    five snapshots are held at a time).  Interior snapshots whose time lies
    in ``window`` (default: all) enter the norms.
    """
    buf: deque[ExtractedProfile] = deque(maxlen=5)
    times, norms = [], []
    acc = None
    prev = None  # (t, r) for the trapezoid time average
    seen = 0
    xi = nu_vals = None
    lo, hi = window if window is not None else (-math.inf, math.inf)
    for snap in trajectory:
        seen += 1
        if xi is None:
            xi = snap.xi
            nu_vals = nu(xi)
        buf.append(snap)
        if len(buf) < 5:
            continue
        mid = buf[2]
        if not lo <= mid.t <= hi:
            continue
        w = fd_weights([s.t for s in buf], mid.t)
        dadt = sum(wk * s.alpha for wk, s in zip(w, buf))
        a = mid.alpha
        r = 1j * dadt - (nu_vals / mid.t) * (a.real ** 2 + a.imag ** 2) * a
        times.append(mid.t)
        norms.append(math.sqrt(mid.dxi * float(np.sum(np.abs(r) ** 2))))
        if prev is not None:
            contrib = 0.5 * (mid.t - prev[0]) * (r + prev[1])
            acc = contrib if acc is None else acc + contrib
        prev = (mid.t, r)
    if seen < 5:
        raise ValueError("resonance_residual needs at least 5 snapshots")
    if len(times) < 2:
        raise ValueError("fewer than two interior snapshots inside the window")
    span = times[-1] - times[0]
    mean_r = acc / span
    dxi = float(xi[1] - xi[0])
    norms = np.array(norms)
    return ResidualReport(
        times=np.array(times),
        raw_norms=norms,
        raw_norm=float(np.sqrt(np.mean(norms ** 2))),
        averaged_norm=math.sqrt(dxi * float(np.sum(np.abs(mean_r) ** 2))),
        window=(times[0], times[-1]),
    )


def profile_prediction(start: ExtractedProfile, nu: NuPolynomial, times: Iterable[float],
                       steps_per_decade: int = 256) -> Iterator[tuple[float, np.ndarray]]:
    """Evolve ``start.alpha`` under the profile equation; yields (t, alpha_model)."""
    log_times = [math.log(t) for t in times]
    for log_t, beta, _ in evolve_nodes(start.alpha, nu(start.xi), math.log(start.t),
                                       log_times, steps_per_decade, xi=start.xi):
        yield math.exp(log_t), beta

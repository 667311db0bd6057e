"""Decay-exponent fits, the Matsumura comparison lemma and rate verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .classifier import DissipationClass
from .profile import (InitialProfile, closed_form_modulus, l2_norm, predicted_exponent,
                      profile_trajectory)
from .nonlinearity import NuPolynomial

LOG2 = math.log(2.0)


class InsufficientSpanError(ValueError):
    pass


class HypothesisViolationError(ValueError):
    pass


class ScenarioMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class DecaySeries:
    """Samples of a positive quantity against log t (t itself may overflow)."""

    log_t: np.ndarray
    values: np.ndarray
    epsilon: float
    scenario: Optional[str] = None

    def __post_init__(self):
        lt = np.asarray(self.log_t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if lt.shape != v.shape or lt.ndim != 1:
            raise ValueError("log_t and values must be 1-d of equal length")
        if np.any(np.diff(lt) <= 0):
            raise ValueError("times must be strictly increasing")
        if lt.size and lt[0] < LOG2 - 1e-12:
            raise ValueError("series must start at t >= 2")
        if np.any(v <= 0):
            raise ValueError("values must be positive")
        object.__setattr__(self, "log_t", lt)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_t(cls, t, values, epsilon, scenario=None):
        return cls(np.log(np.asarray(t, dtype=float)), values, epsilon, scenario)

    @property
    def scaled_time(self) -> np.ndarray:
        """eps^2 log t."""
        return self.epsilon ** 2 * self.log_t


@dataclass(frozen=True)
class FitReport:
    exponent: float
    residual: float
    window: tuple[float, float]  # in log t
    n_samples: int
    intercept: float
    scenario: Optional[str] = None

    def to_json(self) -> dict:
        return {"exponent": self.exponent, "residual": self.residual,
                "window_log_t": list(self.window), "n_samples": self.n_samples,
                "intercept": self.intercept, "scenario": self.scenario}


def fit_decay_exponent(series: DecaySeries, window: tuple[float, float] | None = None, *,
                       start: float = 5.0, min_decades: float = 4.0,
                       min_samples: int = 10) -> FitReport:
    """Least-squares slope of log(value) against log(eps^2 log t).

    ``window`` is given in the scaled variable eps^2 log t; by default it
    starts at ``start`` (skipping the pre-asymptotic plateau) and runs to
    the end of the series.  Raises :class:`InsufficientSpanError` when
    fewer than ``min_samples`` points or less than ``min_decades`` decades
    of log t fall inside.
    """
    s = series.scaled_time
    lo, hi = window if window is not None else (start, math.inf)
    sel = (s >= lo * (1 - 1e-9)) & (s <= hi * (1 + 1e-9))
    n = int(sel.sum())
    if n < min_samples:
        raise InsufficientSpanError(f"only {n} samples in the fit window (need {min_samples})")
    lt = series.log_t[sel]
    decades = math.log10(lt[-1] / lt[0])
    if decades < min_decades - 1e-9:
        raise InsufficientSpanError(
            f"fit window spans {decades:.2f} decades of log t (need {min_decades})")
    x = np.log(s[sel])
    y = np.log(series.values[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitReport(
        exponent=float(-slope),
        residual=float(np.sqrt(np.mean(resid ** 2))),
        window=(float(lt[0]), float(lt[-1])),
        n_samples=n,
        intercept=float(intercept),
        scenario=series.scenario,
    )


def profile_decay_series(init: InitialProfile, nu: NuPolynomial, log_times,
                         steps_per_decade: int = 64, scenario=None) -> DecaySeries:
    """L2 norm of the RK4 profile solution at each of ``log_times``."""
    lt, vals = [], []
    for state in profile_trajectory(init, nu, log_times, steps_per_decade):
        lt.append(state.log_t)
        vals.append(l2_norm(state))
    return DecaySeries(np.array(lt), np.array(vals), init.envelope, scenario)


def closed_form_decay_series(init: InitialProfile, p_values, log_times,
                             scenario=None) -> DecaySeries:
    """Same series from the exact modulus m0 / (1 + 2 p m0 log(t/t0))."""
    m0 = np.abs(init.alpha0) ** 2
    dxi = init.grid.dxi
    vals = [math.sqrt(float(np.trapezoid(
        closed_form_modulus(m0, p_values, log_ratio=lt - init.log_t0), dx=dxi)))
        for lt in log_times]
    return DecaySeries(np.asarray(log_times, dtype=float), np.array(vals), init.envelope,
                       scenario)


def collapse_gap(a: DecaySeries, b: DecaySeries, window: tuple[float, float]) -> float:
    """Max relative gap between value/eps curves of two series in eps^2 log t.

    ``b`` is interpolated (log-log, linear) onto the abscissae of ``a`` that
    fall in ``window``.
    """
    sa, sb = a.scaled_time, b.scaled_time
    sel = (sa >= window[0]) & (sa <= window[1])
    if not sel.any():
        raise ValueError("no samples of the first series in the window")
    if sa[sel][0] < sb[0] or sa[sel][-1] > sb[-1]:
        raise ValueError("second series does not cover the window")
    ya = a.values[sel] / a.epsilon
    yb = np.exp(np.interp(np.log(sa[sel]), np.log(sb), np.log(b.values / b.epsilon)))
    return float(np.max(np.abs(ya / yb - 1.0)))


# -- Matsumura lemma ----------------------------------------------------------


@dataclass(frozen=True)
class MatsumuraInstance:
    """Parameters of dPhi/dt <= -C0 |Phi|^q / t + C1 / t^s for t >= 2."""

    C0: float
    C1: float
    q: float
    s: float
    Phi2: float

    def __post_init__(self):
        if not self.C0 > 0:
            raise ValueError("C0 must be positive")
        if not self.C1 >= 0:
            raise ValueError("C1 must be non-negative")
        if not self.q > 1:
            raise ValueError("q must exceed 1")
        if not self.s > 1:
            raise ValueError("s must exceed 1")
        if not math.isfinite(self.Phi2):
            raise ValueError("Phi(2) must be finite")

    @property
    def q_star(self) -> float:
        return self.q / (self.q - 1.0)


def matsumura_c2(inst: MatsumuraInstance) -> float:
    """C2 = [(log 2)^q* Phi(2) + C1 int_2^inf (log tau)^q* tau^-s dtau] / log 2
            + (q* / (q C0))^(q* - 1)."""
    qs = inst.q_star
    forcing = 0.0
    if inst.C1 > 0:
        # tau = e^y turns the integral into int_{log 2}^inf y^q* e^{-(s-1) y} dy
        val, _ = integrate.quad(lambda y: y ** qs * math.exp(-(inst.s - 1.0) * y),
                                LOG2, math.inf, epsabs=0.0, epsrel=1e-13, limit=500)
        forcing = inst.C1 * val
    return (LOG2 ** qs * inst.Phi2 + forcing) / LOG2 + (qs / (inst.q * inst.C0)) ** (qs - 1.0)


MatsumuraRhs = Callable[[float, float], float]


def _selector(inst: MatsumuraInstance, ode) -> MatsumuraRhs:
    """Right-hand side d Phi / d(log t) for a named or user-supplied ODE."""
    C0, C1, q, s = inst.C0, inst.C1, inst.q, inst.s

    def bound(tau, phi):
        return -C0 * abs(phi) ** q + C1 * math.exp((1.0 - s) * tau)

    if ode == "equality":
        return bound
    if ode == "strong-damping":
        return lambda tau, phi: -2.0 * C0 * abs(phi) ** q + C1 * math.exp((1.0 - s) * tau)
    if ode == "weak-forcing":
        return lambda tau, phi: -C0 * abs(phi) ** q + 0.5 * C1 * math.exp((1.0 - s) * tau)
    if callable(ode):
        def checked(tau, phi):
            val = ode(tau, phi)
            b = bound(tau, phi)
            if val > b + 1e-12 * (abs(b) + 1.0):
                raise HypothesisViolationError(
                    f"selected ODE exceeds the lemma's bound at log t = {tau:.6g}")
            return val
        return checked
    raise HypothesisViolationError(f"unknown ODE selector {ode!r}")


@dataclass(frozen=True)
class MatsumuraVerdict:
    passed: bool
    c2: float
    max_ratio: float
    worst_log_t: float
    log_t: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {"passed": self.passed, "C2": self.c2, "max_ratio": self.max_ratio,
                "worst_log_t": self.worst_log_t, "samples": int(self.log_t.size)}


def integrate_matsumura(inst: MatsumuraInstance, log_times, ode="equality",
                        steps_per_decade: int = 64) -> np.ndarray:
    """RK4 in tau = log t from Phi(2) = inst.Phi2; returns Phi at ``log_times``."""
    f = _selector(inst, ode)
    tau0 = tau = LOG2
    phi = float(inst.Phi2)
    h_min = math.log(10.0) / steps_per_decade
    out = []
    for target in log_times:
        if target < tau0 - 1e-12:
            raise ValueError("log_times must be >= log 2")
        while tau < target:
            h = max(h_min, h_min * (tau - tau0))
            stiff = inst.C0 * inst.q * abs(phi) ** (inst.q - 1.0)
            if stiff > 0:
                h = min(h, 0.05 / stiff)
            if inst.C1 > 0 and (inst.s - 1.0) * (tau - tau0) < 40.0:
                h = min(h, 0.05 / (inst.s - 1.0))
            last = h >= target - tau
            if last:
                h = target - tau
            k1 = f(tau, phi)
            k2 = f(tau + 0.5 * h, phi + 0.5 * h * k1)
            k3 = f(tau + 0.5 * h, phi + 0.5 * h * k2)
            k4 = f(tau + h, phi + h * k3)
            phi += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            tau = target if last else tau + h
            if not math.isfinite(phi):
                raise ArithmeticError(f"Phi became non-finite at log t = {tau:.6g}")
        out.append(phi)
    return np.array(out)


def verify_matsumura(inst: MatsumuraInstance, ode="equality", t_end: float | None = None, *,
                     log_t_end: float | None = None, samples: int = 200,
                     steps_per_decade: int = 64, rel_slack: float = 1e-9) -> MatsumuraVerdict:
    """Integrate the selected ODE and check Phi(t) (log t)^(q*-1) <= C2."""
    if (t_end is None) == (log_t_end is None):
        raise ValueError("give exactly one of t_end, log_t_end")
    if log_t_end is None:
        log_t_end = math.log(t_end)
    if not log_t_end > LOG2:
        raise ValueError("t_end must exceed 2")
    lt = np.geomspace(LOG2, log_t_end, samples)
    phi = integrate_matsumura(inst, lt, ode, steps_per_decade)
    c2 = matsumura_c2(inst)
    ratio = phi * lt ** (inst.q_star - 1.0)
    k = int(np.argmax(ratio))
    return MatsumuraVerdict(
        passed=bool(np.all(ratio <= c2 * (1.0 + rel_slack))),
        c2=c2, max_ratio=float(ratio[k]), worst_log_t=float(lt[k]), log_t=lt, phi=phi)


# -- verdicts -----------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    passed: bool
    predicted: float
    measured: float
    tolerance: float
    residual: float
    reason: str

    def to_json(self) -> dict:
        return {"passed": self.passed, "predicted_exponent": self.predicted,
                "measured_exponent": self.measured, "tolerance": self.tolerance,
                "fit_residual": self.residual, "reason": self.reason}


def verdict(cls: DissipationClass, fit: FitReport, tolerance: float = 0.03,
            max_residual: float = 0.05, scenario: Union[str, None] = None) -> Verdict:
    """Pass iff the fitted exponent is within ``tolerance`` of the prediction
    and the regression residual is below ``max_residual``."""
    if scenario is not None and fit.scenario is not None and scenario != fit.scenario:
        raise ScenarioMismatchError(
            f"fit belongs to scenario {fit.scenario!r}, not {scenario!r}")
    predicted = predicted_exponent(cls)
    gap = abs(fit.exponent - predicted)
    if gap > tolerance:
        reason = f"|{fit.exponent:.4f} - {predicted:.4f}| = {gap:.4f} > {tolerance}"
        ok = False
    elif fit.residual > max_residual:
        reason = f"fit residual {fit.residual:.3g} > {max_residual}"
        ok = False
    else:
        reason = f"within {tolerance} of {predicted}"
        ok = True
    return Verdict(ok, predicted, fit.exponent, tolerance, fit.residual, reason)

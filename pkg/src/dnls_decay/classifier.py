"""Sign structure of the dissipation polynomial p(xi) = -Im nu(xi).

For a real cubic p that is non-negative on the line there are exactly three
possibilities: p vanishes identically, p is bounded below by a positive
constant, or p = c0 (xi - xi0)^2.  ``classify`` decides which and returns a
certificate that can be re-checked independently.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .nonlinearity import NuPolynomial

DEFAULT_REL_TOL = 1e-12


class ConditionAError(ValueError):
    """Raised when an operation needs p >= 0 and p takes negative values."""


class Trichotomy(str, enum.Enum):
    IDENTICALLY_ZERO = "IdenticallyZero"
    STRICTLY_POSITIVE_INF = "StrictlyPositiveInf"
    DOUBLE_ROOT = "DoubleRoot"


@dataclass(frozen=True)
class RealCubicPoly:
    coeffs: tuple[float, float, float, float]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if len(c) > 4 and any(x != 0 for x in c[4:]):
            raise ValueError("degree > 3 is not supported")
        c = (c + (0.0,) * 4)[:4]
        if not all(math.isfinite(x) for x in c):
            raise ValueError("non-finite coefficient")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_nu(cls, nu: NuPolynomial) -> "RealCubicPoly":
        return cls(nu.dissipation_coeffs)

    def __call__(self, xi):
        p0, p1, p2, p3 = self.coeffs
        xi = np.asarray(xi, dtype=float)
        val = p0 + xi * (p1 + xi * (p2 + xi * p3))
        return val if np.ndim(val) else float(val)

    def derivative(self, xi):
        _, p1, p2, p3 = self.coeffs
        xi = np.asarray(xi, dtype=float)
        return p1 + xi * (2 * p2 + xi * 3 * p3)

    @property
    def scale(self) -> float:
        return max(abs(x) for x in self.coeffs)


@dataclass(frozen=True)
class DissipationClass:
    """Outcome of the trichotomy together with its certificate.

    ``c0``/``xi0`` are set only for the double-root case, ``inf_p`` only for
    the strictly-positive case, ``a_plus_plus`` (the largest C* with
    p >= C* <xi>^2) only when that constant is positive.
    """

    p: RealCubicPoly
    trichotomy: Trichotomy
    cond_A: bool = True
    c0: Optional[float] = None
    xi0: Optional[float] = None
    inf_p: Optional[float] = None
    a_plus_plus: Optional[float] = None

    @property
    def cond_A0(self) -> bool:
        return self.trichotomy is Trichotomy.IDENTICALLY_ZERO

    @property
    def cond_A_plus(self) -> bool:
        return self.trichotomy is Trichotomy.STRICTLY_POSITIVE_INF

    @property
    def cond_A_plus_plus(self) -> bool:
        return self.a_plus_plus is not None

    @property
    def admissible_theta_sup(self) -> float:
        """Supremum of theta for which I_theta is covered by the convergence argument."""
        if self.trichotomy is Trichotomy.DOUBLE_ROOT:
            return 0.5
        if self.trichotomy is Trichotomy.STRICTLY_POSITIVE_INF:
            return 0.75
        return 0.0

    def certificate(self) -> dict:
        return {"c0": self.c0, "xi0": self.xi0, "inf_p": self.inf_p,
                "a_plus_plus": self.a_plus_plus}

    def to_json(self) -> dict:
        return {
            "p_coeffs": list(self.p.coeffs),
            "condA": self.cond_A,
            "condA0": self.cond_A0,
            "condA_plus": self.cond_A_plus,
            "condA_plus_plus": self.cond_A_plus_plus,
            "trichotomy": self.trichotomy.value,
            "certificates": self.certificate(),
        }


def _is_zero(x: float, scale: float, rel_tol: float) -> bool:
    return abs(x) <= rel_tol * scale


def check_condition_A(p: RealCubicPoly, rel_tol: float = DEFAULT_REL_TOL) -> bool:
    """True iff p(xi) >= 0 on the whole real line.

    Zero tests on the leading coefficients and on the discriminant use a
    tolerance relative to the largest coefficient (squared for the
    discriminant).
    """
    p0, p1, p2, p3 = p.coeffs
    scale = p.scale
    if scale == 0:
        return True
    if not _is_zero(p3, scale, rel_tol):
        return False
    if _is_zero(p2, scale, rel_tol):
        return _is_zero(p1, scale, rel_tol) and p0 >= -rel_tol * scale
    if p2 < 0:
        return False
    return p1 * p1 - 4 * p0 * p2 <= rel_tol * scale * scale


def a_plus_plus_constant(p: RealCubicPoly) -> float:
    """Largest lambda with p(xi) - lambda (1 + xi^2) >= 0 for all xi.

    For quadratic p this is the smallest eigenvalue of the Gram matrix
    [[p0, p1/2], [p1/2, p2]]; it may be negative.
    """
    p0, p1, p2, p3 = p.coeffs
    if p3 != 0:
        return -math.inf
    return 0.5 * ((p0 + p2) - math.hypot(p0 - p2, p1))


def classify(p: RealCubicPoly, rel_tol: float = DEFAULT_REL_TOL) -> DissipationClass:
    """Place a non-negative p in one of the three cases and certify it."""
    if not check_condition_A(p, rel_tol):
        raise ConditionAError(f"p{p.coeffs} takes negative values; condition (A) fails")
    p0, p1, p2, _ = p.coeffs
    scale = p.scale
    if scale == 0:
        return DissipationClass(p, Trichotomy.IDENTICALLY_ZERO)

    if _is_zero(p2, scale, rel_tol):
        # then p1 ~ 0 as well and p is the positive constant p0
        return DissipationClass(p, Trichotomy.STRICTLY_POSITIVE_INF, inf_p=p0)

    disc = p1 * p1 - 4 * p0 * p2
    if disc < -rel_tol * scale * scale:
        lam = a_plus_plus_constant(p)
        return DissipationClass(
            p, Trichotomy.STRICTLY_POSITIVE_INF,
            inf_p=p0 - p1 * p1 / (4 * p2),
            a_plus_plus=lam if lam > rel_tol * scale else None,
        )
    return DissipationClass(p, Trichotomy.DOUBLE_ROOT, c0=p2, xi0=-p1 / (2 * p2) + 0.0)


def classify_nu(nu: NuPolynomial, rel_tol: float = DEFAULT_REL_TOL) -> DissipationClass:
    return classify(RealCubicPoly.from_nu(nu), rel_tol)


def _bracket(xi):
    return 1.0 + xi * xi


def integral_I_theta(p: RealCubicPoly, theta: float, cls: DissipationClass | None = None,
                     tol: float = 1e-10) -> float:
    """I_theta = int dxi / (p^theta <xi>^(4 - 4 theta)); ``math.inf`` when divergent.

    Divergence is decided from the classification: theta >= 1/2 for a double
    root, theta >= 3/4 for p bounded below (beyond that the majorant
    (inf p)^-theta <xi>^(4 theta - 4) is no longer integrable).
    """
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    cls = cls if cls is not None else classify(p)
    if cls.trichotomy is Trichotomy.IDENTICALLY_ZERO:
        if theta == 0:
            return math.pi / 2
        raise ConditionAError("I_theta is undefined for p identically zero and theta > 0")
    if theta >= cls.admissible_theta_sup:
        return math.inf

    opts = dict(epsabs=tol, epsrel=tol, limit=500)
    weight = 4 * theta - 4

    if cls.trichotomy is Trichotomy.STRICTLY_POSITIVE_INF:
        def f(xi):
            return p(xi) ** (-theta) * _bracket(xi) ** (weight / 2)
        left, _ = integrate.quad(f, -np.inf, 0.0, **opts)
        right, _ = integrate.quad(f, 0.0, np.inf, **opts)
        return left + right

    c0, xi0 = cls.c0, cls.xi0

    def g(xi):
        return _bracket(xi) ** (weight / 2)

    # |xi - xi0| = v^(1/a) with a = 1 - 2 theta turns r^(-2 theta) dr into dv / a
    a = 1.0 - 2.0 * theta

    def near(v):
        r = v ** (1.0 / a)
        return (g(xi0 + r) + g(xi0 - r)) / a

    def far(r):
        return r ** (-2 * theta) * (g(xi0 + r) + g(xi0 - r))

    near_val, _ = integrate.quad(near, 0.0, 1.0, **opts)
    far_val, _ = integrate.quad(far, 1.0, np.inf, **opts)
    return c0 ** (-theta) * (near_val + far_val)


def lifespan_bound(psi_hat_sq, xi, nu: NuPolynomial) -> float:
    """Lower bound 1 / (2 max(|F psi|^2 Im nu)) for liminf eps^2 log T_eps.

    Returns ``math.inf`` when the maximum is not positive (the 1/0 convention).
    """
    psi_hat_sq = np.asarray(psi_hat_sq, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if psi_hat_sq.size == 0:
        raise ValueError("empty grid")
    if psi_hat_sq.shape != xi.shape:
        raise ValueError("psi_hat_sq and xi must have the same shape")
    if np.any(psi_hat_sq < 0):
        raise ValueError("psi_hat_sq must be non-negative")
    peak = float(np.max(psi_hat_sq * np.imag(nu(xi))))
    return 1.0 / (2.0 * peak) if peak > 0 else math.inf

"""Cubic nonlinearities N(u, u_x) and their resonance coefficient nu(xi).

A nonlinearity is a cubic homogeneous polynomial in (u, conj(u), u_x,
conj(u_x)).  Each monomial is stored by its power tuple ``(a, b, c, d)``
meaning ``u**a * conj(u)**b * ux**c * conj(ux)**d``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from ._parser import parse_polynomial, ParseError, DegreeError  # noqa: F401

Powers = tuple[int, int, int, int]

#: i**k for k mod 4, kept exact
_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)

ALL_POWERS: tuple[Powers, ...] = tuple(
    p for p in product(range(4), repeat=4) if sum(p) == 3
)


@dataclass(frozen=True)
class Monomial:
    powers: Powers
    coeff: complex

    def __post_init__(self):
        if len(self.powers) != 4 or any(int(k) != k or k < 0 for k in self.powers):
            raise ValueError(f"invalid powers {self.powers!r}")
        if sum(self.powers) != 3:
            raise DegreeError(f"monomial {format_monomial(self.powers)} has degree "
                              f"{sum(self.powers)}, expected 3")
        if not np.isfinite(self.coeff):
            raise ValueError(f"non-finite coefficient for {format_monomial(self.powers)}")
        object.__setattr__(self, "powers", tuple(int(k) for k in self.powers))
        object.__setattr__(self, "coeff", complex(self.coeff))

    @property
    def is_resonant(self) -> bool:
        """True when the monomial survives the gauge-circle average (a + c - b - d = 1)."""
        a, b, c, d = self.powers
        return a + c - b - d == 1


@dataclass(frozen=True)
class CubicNonlinearity:
    """Canonical (sorted, merged, zero-free) list of cubic monomials."""

    monomials: tuple[Monomial, ...] = ()

    def __post_init__(self):
        merged: dict[Powers, complex] = {}
        for m in self.monomials:
            merged[m.powers] = merged.get(m.powers, 0j) + m.coeff
        canon = tuple(Monomial(p, c) for p, c in sorted(merged.items()) if c != 0)
        object.__setattr__(self, "monomials", canon)

    @classmethod
    def from_dict(cls, coeffs: Mapping[Powers, complex]) -> "CubicNonlinearity":
        return cls(tuple(Monomial(tuple(p), c) for p, c in coeffs.items()))

    @classmethod
    def zero(cls) -> "CubicNonlinearity":
        return cls(())

    @property
    def coeffs(self) -> dict[Powers, complex]:
        return {m.powers: m.coeff for m in self.monomials}

    def __len__(self):
        return len(self.monomials)

    def __add__(self, other: "CubicNonlinearity") -> "CubicNonlinearity":
        return CubicNonlinearity(self.monomials + other.monomials)

    def __mul__(self, scalar: complex) -> "CubicNonlinearity":
        return CubicNonlinearity(tuple(Monomial(m.powers, m.coeff * scalar)
                                       for m in self.monomials))

    __rmul__ = __mul__

    def __call__(self, u, ux):
        return evaluate(self, u, ux)

    def __str__(self):
        return format_nonlinearity(self)

    def to_json(self) -> list[dict]:
        return [{"powers": list(m.powers), "re": m.coeff.real, "im": m.coeff.imag}
                for m in self.monomials]

    @classmethod
    def from_json(cls, data: Iterable[Mapping]) -> "CubicNonlinearity":
        mons = []
        for entry in data:
            powers = tuple(entry["powers"])
            mons.append(Monomial(powers, complex(entry.get("re", 0.0), entry.get("im", 0.0))))
        return cls(tuple(mons))


def format_monomial(powers: Powers) -> str:
    names = ("u", "conj(u)", "ux", "conj(ux)")
    parts = []
    for name, k in zip(names, powers):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts) or "1"


def _format_complex(z: complex) -> str:
    if z.imag == 0:
        return repr(z.real)
    if z.real == 0:
        return f"{z.imag!r}*i"
    return f"({z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}*i)"


def format_nonlinearity(N: CubicNonlinearity) -> str:
    if not N.monomials:
        return "0"
    return " + ".join(f"{_format_complex(m.coeff)}*{format_monomial(m.powers)}"
                      for m in N.monomials)


def parse_nonlinearity(source: str) -> CubicNonlinearity:
    """Parse expression text such as ``"-i*|ux|^2*(u+ux) + 3*u^2*ux"``.

    Identifiers are ``u``, ``ux`` and ``conj(...)``; ``|e|^2`` is shorthand
    for ``e*conj(e)``.  There is no derivative operator, so ``(u^3)_x`` must
    be written out as ``3*u^2*ux``.

    Raises
    ------
    ParseError
        malformed text; the message carries the character offset.
    DegreeError
        an expanded monomial does not have total degree 3.
    """
    poly = parse_polynomial(source)
    for powers, coeff in sorted(poly.items()):
        if sum(powers) != 3:
            raise DegreeError(
                f"expanded monomial {_format_complex(coeff)}*{format_monomial(powers)} "
                f"has degree {sum(powers)}, expected 3")
    return CubicNonlinearity.from_dict(poly)


def load_nonlinearity(spec) -> CubicNonlinearity:
    """Accept a CubicNonlinearity, expression text, JSON text or a JSON array."""
    if isinstance(spec, CubicNonlinearity):
        return spec
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("["):
            return CubicNonlinearity.from_json(json.loads(text))
        return parse_nonlinearity(text)
    return CubicNonlinearity.from_json(spec)


def evaluate(N: CubicNonlinearity, u, ux):
    """Sum of coeff * u^a conj(u)^b ux^c conj(ux)^d; broadcasts over arrays."""
    u = np.asarray(u, dtype=complex)
    ux = np.asarray(ux, dtype=complex)
    out = np.zeros(np.broadcast(u, ux).shape, dtype=complex)
    if not N.monomials:
        return out if out.ndim else complex(out)
    ub, uxb = np.conj(u), np.conj(ux)
    factors = (
        [np.ones_like(u), u, u * u, u * u * u],
        [np.ones_like(u), ub, ub * ub, ub * ub * ub],
        [np.ones_like(ux), ux, ux * ux, ux * ux * ux],
        [np.ones_like(ux), uxb, uxb * uxb, uxb * uxb * uxb],
    )
    for m in N.monomials:
        a, b, c, d = m.powers
        out = out + m.coeff * (factors[0][a] * factors[1][b]) * (factors[2][c] * factors[3][d])
    return out if out.ndim else complex(out)


def is_weakly_gauge_invariant(N: CubicNonlinearity) -> bool:
    """Whether N(e^{i theta}, 0) = e^{i theta} N(1, 0) for all theta.

    Only the derivative-free monomials matter; among them only |u|^2 u is
    allowed, which rules out u^3, |u|^2 conj(u) and conj(u)^3.
    """
    return all(m.powers == (2, 1, 0, 0)
               for m in N.monomials if m.powers[2] == m.powers[3] == 0)


@dataclass(frozen=True)
class NuPolynomial:
    """nu(xi) = sum_k coeffs[k] xi^k with complex coefficients, degree <= 3."""

    coeffs: tuple[complex, complex, complex, complex] = (0j, 0j, 0j, 0j)

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coeffs)
        if len(c) > 4:
            if any(x != 0 for x in c[4:]):
                raise ValueError("nu polynomial has degree > 3")
            c = c[:4]
        c = c + (0j,) * (4 - len(c))
        object.__setattr__(self, "coeffs", c)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        c0, c1, c2, c3 = self.coeffs
        val = c0 + xi * (c1 + xi * (c2 + xi * c3))
        return val if np.ndim(val) else complex(val)

    @property
    def real_part(self) -> tuple[float, ...]:
        return tuple(c.real for c in self.coeffs)

    @property
    def imag_part(self) -> tuple[float, ...]:
        return tuple(c.imag for c in self.coeffs)

    @property
    def dissipation_coeffs(self) -> tuple[float, float, float, float]:
        """Coefficients of p(xi) = -Im nu(xi)."""
        return tuple(-c.imag + 0.0 for c in self.coeffs)

    def to_json(self) -> list[dict]:
        return [{"re": c.real, "im": c.imag} for c in self.coeffs]


def compute_nu(N: CubicNonlinearity) -> NuPolynomial:
    """Resonance coefficient by exact residue extraction.

    On |z| = 1 we have u = z, conj(u) = 1/z, ux = i xi z, conj(ux) = -i xi / z,
    so a monomial becomes coeff (i xi)^c (-i xi)^d z^(a+c-b-d) and only the
    z^1 term survives the contour average against dz/z^2.
    """
    out = [0j, 0j, 0j, 0j]
    for m in N.monomials:
        if not m.is_resonant:
            continue
        a, b, c, d = m.powers
        # (i)^c (-i)^d = i^(c + 3d)
        out[c + d] += m.coeff * _I_POWERS[(c + 3 * d) % 4]
    return NuPolynomial(tuple(out))


def nu_quadrature_oracle(N: CubicNonlinearity, xi: float, nodes: int = 64) -> complex:
    """Trapezoidal rule for (1/2 pi i) \\oint N(z, i xi z) z^-2 dz on |z| = 1."""
    if nodes < 8:
        raise ValueError("nodes must be >= 8")
    theta = 2 * math.pi * np.arange(nodes) / nodes
    z = np.exp(1j * theta)
    vals = evaluate(N, z, 1j * xi * z)
    # dz = i z dtheta, so the integrand becomes N z^-1 dtheta / 2 pi
    return complex(np.mean(vals / z))

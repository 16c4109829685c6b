"""Conformal coordinate models, Moebius arithmetic and quadrature domains.

The disc is modelled by the closed upper half-plane ``H`` plus the point at
infinity, the sphere by ``C`` plus infinity.  Sphere points are kept in
homogeneous coordinates so poles never need special cases.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .poly import QI, Scalar, as_scalar

__all__ = [
    "GEOM_TOL",
    "DomainKind",
    "SpherePoint",
    "INFINITY",
    "Moebius",
    "CutAnnulus",
    "moebius_apply",
    "moebius_compose",
    "moebius_inverse",
    "log_polar",
    "log_polar_inverse",
    "sphere_distance",
    "chordal",
    "domain_distance",
    "to_unit_disc",
    "from_unit_disc",
    "CAYLEY",
    "CAYLEY_INV",
    "point_to_json",
    "point_from_json",
]

GEOM_TOL = 1e-9


class DomainKind(str, enum.Enum):
    DISC = "disc"
    SPHERE = "sphere"
    POINTED_SPHERE = "pointed_sphere"

    @property
    def has_boundary(self) -> bool:
        return self is not DomainKind.SPHERE


def _inexact_zero(c, tol=0.0) -> bool:
    if isinstance(c, QI):
        return not c
    return abs(c) <= tol


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """Point ``[a : b]`` of the Riemann sphere; ``z = a/b``, ``[1:0] = inf``.

    The stored representative has the larger-modulus coordinate equal to 1.
    """

    a: Scalar
    b: Scalar

    def __post_init__(self):
        a, b = as_scalar(self.a), as_scalar(self.b)
        if _inexact_zero(a) and _inexact_zero(b):
            raise ValueError("homogeneous coordinates must not both vanish")
        one_a, one_b = a == 1, b == 1
        if one_a and abs(complex(b)) <= 1:
            pass  # already normalised
        elif one_b and abs(complex(a)) < 1:
            pass
        elif abs(complex(a)) >= abs(complex(b)):
            a, b = as_scalar(1) if isinstance(a, QI) else 1 + 0j, b / a
        else:
            a, b = a / b, as_scalar(1) if isinstance(b, QI) else 1 + 0j
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_complex(cls, z) -> "SpherePoint":
        if isinstance(z, SpherePoint):
            return z
        if z is None or (not isinstance(z, QI) and cmath.isinf(complex(z))):
            return INFINITY
        return cls(z, QI(1) if isinstance(as_scalar(z), QI) else 1 + 0j)

    @property
    def is_infinity(self) -> bool:
        return _inexact_zero(self.b)

    def to_complex(self) -> complex:
        if self.is_infinity:
            return complex(math.inf, 0.0)
        return complex(self.a) / complex(self.b)

    def value(self):
        """Affine value, exact when possible; ``None`` at infinity."""
        if self.is_infinity:
            return None
        return self.a / self.b

    def equals(self, other: "SpherePoint", tol: float = GEOM_TOL) -> bool:
        cross = self.a * other.b - self.b * other.a
        if isinstance(cross, QI):
            return not cross
        return abs(cross) <= tol

    def __eq__(self, other):
        if not isinstance(other, SpherePoint):
            return NotImplemented
        return self.equals(other, tol=0.0 if isinstance(self.a, QI) and isinstance(other.a, QI) else GEOM_TOL)

    def __hash__(self):
        return hash(round(abs(complex(self.b)), 6))

    def __repr__(self):
        if self.is_infinity:
            return "SpherePoint(inf)"
        return f"SpherePoint({self.to_complex()!r})"


INFINITY = SpherePoint(QI(1), QI(0))


def chordal(p, q) -> float:
    """Chordal distance between two sphere points (diameter 1)."""
    p = SpherePoint.from_complex(p)
    q = SpherePoint.from_complex(q)
    a1, b1 = complex(p.a), complex(p.b)
    a2, b2 = complex(q.a), complex(q.b)
    num = abs(a1 * b2 - a2 * b1)
    den = math.sqrt(abs(a1) ** 2 + abs(b1) ** 2) * math.sqrt(abs(a2) ** 2 + abs(b2) ** 2)
    return num / den


sphere_distance = chordal


def domain_distance(kind: DomainKind, p, q) -> float:
    """Euclidean on the half-plane, chordal on spheres or when infinity is involved."""
    p = SpherePoint.from_complex(p)
    q = SpherePoint.from_complex(q)
    if kind is DomainKind.DISC and not p.is_infinity and not q.is_infinity:
        return abs(p.to_complex() - q.to_complex())
    return chordal(p, q)


@dataclass(frozen=True)
class Moebius:
    """Fractional linear map ``z -> (a z + b) / (c z + d)``."""

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar
    disc_automorphism: bool = field(init=False)

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, as_scalar(getattr(self, name)))
        det = self.a * self.d - self.b * self.c
        if _inexact_zero(det, 1e-300):
            raise ValueError("degenerate Moebius matrix (ad - bc = 0)")
        object.__setattr__(self, "disc_automorphism", self._is_real_positive())

    def _is_real_positive(self) -> bool:
        entries = [self.a, self.b, self.c, self.d]
        pivot = max(entries, key=lambda e: abs(complex(e)))
        normed = [e / pivot for e in entries]
        for e in normed:
            if isinstance(e, QI):
                if e.im != 0:
                    return False
            elif abs(e.imag) > GEOM_TOL * max(1.0, abs(e)):
                return False
        det = normed[0] * normed[3] - normed[1] * normed[2]
        return complex(det).real > 0

    @classmethod
    def identity(cls) -> "Moebius":
        return cls(QI(1), QI(0), QI(0), QI(1))

    @classmethod
    def affine(cls, shift, scale) -> "Moebius":
        """``z -> shift + scale*z``."""
        return cls(scale, shift, QI(0), QI(1))

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def matrix(self) -> np.ndarray:
        return np.array([[complex(self.a), complex(self.b)], [complex(self.c), complex(self.d)]])

    def is_affine(self) -> bool:
        return _inexact_zero(self.c)

    def __call__(self, z):
        """Apply to a complex scalar/array (floating point); infinity handled."""
        if isinstance(z, SpherePoint):
            return moebius_apply(self, z)
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        zz = np.asarray(z, dtype=np.complex128)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (a * zz + b) / (c * zz + d)
            inf_in = np.isinf(zz)
            if np.any(inf_in):
                lim = a / c if c != 0 else complex(math.inf, 0.0)
                out = np.where(inf_in, lim, out)
        if np.ndim(z) == 0:
            return complex(out)
        return out

    def equals(self, other: "Moebius", tol: float = GEOM_TOL) -> bool:
        """Projective equality of the matrices."""
        u = [self.a, self.b, self.c, self.d]
        v = [other.a, other.b, other.c, other.d]
        for i in range(4):
            for j in range(i + 1, 4):
                cross = u[i] * v[j] - u[j] * v[i]
                if isinstance(cross, QI):
                    if cross:
                        return False
                elif abs(cross) > tol * max(1.0, max(abs(complex(x)) for x in u + v) ** 2):
                    return False
        # proportionality also needs matching zero pattern
        for x, y in zip(u, v):
            if _inexact_zero(x, tol) != _inexact_zero(y, tol):
                return False
        return True

    def to_json(self) -> list:
        return [point_to_json(x) for x in (self.a, self.b, self.c, self.d)]

    @classmethod
    def from_json(cls, data) -> "Moebius":
        if len(data) != 4:
            raise ValueError("Moebius JSON must hold four [re, im] pairs")
        return cls(*(point_from_json(x) for x in data))


def moebius_apply(m: Moebius, z) -> SpherePoint:
    z = SpherePoint.from_complex(z)
    return SpherePoint(m.a * z.a + m.b * z.b, m.c * z.a + m.d * z.b)


def moebius_compose(m1: Moebius, m2: Moebius) -> Moebius:
    """``m1 o m2``."""
    return Moebius(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
    )


def moebius_inverse(m: Moebius) -> Moebius:
    return Moebius(m.d, -m.b, -m.c, m.a)


@dataclass(frozen=True)
class CutAnnulus:
    """``A_z(inner, outer)``: open annulus about ``center`` intersected with H."""

    center: complex
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if self.center.imag < -GEOM_TOL:
            raise ValueError("annulus center must lie in the closed upper half-plane")
        if not self.inner > 0:
            raise ValueError("inner radius must be positive")
        if not self.outer > self.inner:
            raise ValueError("outer radius must exceed inner radius")


def log_polar(z0, s, t):
    """``z0 + exp(s + i t)``."""
    if np.ndim(s) or np.ndim(t):
        return z0 + np.exp(np.asarray(s) + 1j * np.asarray(t))
    return z0 + cmath.exp(complex(s, t))


def log_polar_inverse(z0, z):
    """Inverse of :func:`log_polar` with ``t`` in ``(-pi, pi]``."""
    w = np.asarray(z, dtype=np.complex128) - z0
    s = np.log(np.abs(w))
    t = np.angle(w)
    if np.ndim(z) == 0:
        return float(s), float(t)
    return s, t


CAYLEY = Moebius(QI(-1), QI(0, 1), QI(1), QI(0, 1))
"""Half-plane to unit disc, ``z -> (i - z)/(i + z)``; sends 0 to 1 and i to 0."""

CAYLEY_INV = moebius_inverse(CAYLEY)


def to_unit_disc(z):
    return CAYLEY(z)


def from_unit_disc(w):
    return CAYLEY_INV(w)


def point_to_json(z) -> list:
    if isinstance(z, SpherePoint):
        if z.is_infinity:
            return ["inf", 0]
        z = z.value()
    if isinstance(z, QI):
        return [_frac_json(z.re), _frac_json(z.im)]
    z = complex(z)
    if cmath.isinf(z):
        return ["inf", 0.0]
    return [z.real, z.imag]


def _frac_json(f):
    if f.denominator == 1:
        return int(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def point_from_json(pair):
    """Inverse of :func:`point_to_json`; strings ``"p/q"`` give exact values."""
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise ValueError(f"expected [re, im] pair, got {pair!r}")
    re, im = pair
    if re == "inf":
        return INFINITY
    from fractions import Fraction

    def conv(x):
        if isinstance(x, bool):
            raise ValueError("boolean is not a number")
        if isinstance(x, int):
            return Fraction(x), True
        if isinstance(x, str):
            return Fraction(x), True
        if isinstance(x, float):
            return x, False
        raise ValueError(f"not a number: {x!r}")

    (r, er), (i, ei) = conv(re), conv(im)
    if er and ei:
        return QI(r, i)
    return complex(float(r), float(i))

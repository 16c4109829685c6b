"""Coefficient arithmetic for univariate polynomials over Q(i) or C.

Polynomials are tuples of coefficients in ascending order of degree.  A
coefficient is either an exact Gaussian rational (:class:`QI`) or a Python
``complex``.  Every operation stays exact as long as all inputs are exact
and silently degrades to floating point as soon as one coefficient is
inexact.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "QI",
    "Scalar",
    "as_scalar",
    "is_exact",
    "to_complex",
    "trim",
    "degree",
    "padd",
    "psub",
    "pmul",
    "pscale",
    "ppow",
    "pderiv",
    "peval",
    "pdivmod",
    "pgcd",
    "proots",
    "from_roots",
    "deflate",
    "is_zero_poly",
    "poly_to_array",
]


class QI:
    """Exact Gaussian rational ``re + i*im`` with :class:`Fraction` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("QI is immutable")

    @classmethod
    def _coerce(cls, other):
        if isinstance(other, QI):
            return other
        if isinstance(other, (int, Fraction)) or isinstance(other, Rational):
            return QI(other, 0)
        return None

    def __add__(self, other):
        o = QI._coerce(other)
        if o is None:
            return complex(self) + other
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        o = QI._coerce(other)
        if o is None:
            return complex(self) - other
        return QI(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = QI._coerce(other)
        if o is None:
            return other - complex(self)
        return o - self

    def __mul__(self, other):
        o = QI._coerce(other)
        if o is None:
            return complex(self) * other
        return QI(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QI._coerce(other)
        if o is None:
            return complex(self) / other
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by exact zero")
        return QI((self.re * o.re + self.im * o.im) / n, (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, other):
        o = QI._coerce(other)
        if o is None:
            return other / complex(self)
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return complex(self) ** k
        if k < 0:
            return QI(1) / (self ** (-k))
        out = QI(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return QI(self.re, -self.im)

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __eq__(self, other):
        o = QI._coerce(other)
        if o is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QI({self.re})"
        return f"QI({self.re}, {self.im})"

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im


Scalar = Union[QI, complex]


def as_scalar(c) -> Scalar:
    """Coerce ``c`` to a coefficient: exact input stays exact."""
    if isinstance(c, QI):
        return c
    if isinstance(c, bool):
        return QI(int(c))
    if isinstance(c, (int, Fraction)):
        return QI(c)
    if isinstance(c, (float, complex, np.floating, np.complexfloating, np.integer)):
        if isinstance(c, np.integer):
            return QI(int(c))
        return complex(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def is_exact(coeffs: Iterable) -> bool:
    return all(isinstance(c, QI) for c in coeffs)


def to_complex(coeffs: Sequence) -> np.ndarray:
    return np.array([complex(c) for c in coeffs], dtype=np.complex128)


def _is_zero(c, tol: float = 0.0) -> bool:
    if isinstance(c, QI):
        return not c
    return abs(c) <= tol


def trim(p: Sequence, tol: float = 0.0) -> tuple:
    """Drop vanishing leading coefficients; the zero polynomial is ``()``."""
    p = list(p)
    if p and tol > 0.0:
        scale = max(abs(complex(c)) for c in p)
        cut = tol * scale
    else:
        cut = 0.0
    while p and _is_zero(p[-1], cut):
        p.pop()
    return tuple(p)


def is_zero_poly(p: Sequence) -> bool:
    return len(trim(p)) == 0


def degree(p: Sequence) -> int:
    """Degree of ``p``; ``-1`` for the zero polynomial."""
    return len(trim(p)) - 1


def padd(p: Sequence, q: Sequence) -> tuple:
    n = max(len(p), len(q))
    out = []
    for k in range(n):
        a = p[k] if k < len(p) else QI(0)
        b = q[k] if k < len(q) else QI(0)
        out.append(a + b)
    return trim(out)


def pscale(p: Sequence, c) -> tuple:
    return trim([a * c for a in p])


def psub(p: Sequence, q: Sequence) -> tuple:
    return padd(p, pscale(q, QI(-1)))


def pmul(p: Sequence, q: Sequence) -> tuple:
    if not p or not q:
        return ()
    out = [QI(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if _is_zero(a):
            continue
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return trim(out)


def ppow(p: Sequence, k: int) -> tuple:
    out: tuple = (QI(1),)
    for _ in range(k):
        out = pmul(out, p)
    return out


def pderiv(p: Sequence) -> tuple:
    return trim([p[k] * k for k in range(1, len(p))])


def peval(p: Sequence, z):
    """Horner evaluation; exact when ``p`` and ``z`` are exact."""
    acc = QI(0)
    for c in reversed(p):
        acc = acc * z + c
    return acc


def pdivmod(p: Sequence, q: Sequence) -> tuple[tuple, tuple]:
    """Euclidean division ``p = d*q + r`` with ``deg r < deg q``."""
    q = trim(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(trim(p))
    dq = len(q) - 1
    lead = q[-1]
    if len(r) - 1 < dq:
        return (), tuple(r)
    d = [QI(0)] * (len(r) - dq)
    for k in range(len(r) - 1 - dq, -1, -1):
        c = r[k + dq] / lead
        d[k] = c
        for j in range(dq + 1):
            r[k + j] = r[k + j] - c * q[j]
        r[k + dq] = QI(0) if isinstance(c, QI) else 0j
    return trim(d), trim(r[:dq])


def pgcd(p: Sequence, q: Sequence) -> tuple:
    """Monic gcd by the Euclidean algorithm (exact coefficients only)."""
    if not (is_exact(p) and is_exact(q)):
        raise TypeError("pgcd requires exact coefficients")
    a, b = trim(p), trim(q)
    while b:
        _, r = pdivmod(a, b)
        a, b = b, r
    if not a:
        return ()
    return pscale(a, QI(1) / a[-1])


def poly_to_array(p: Sequence, length: int | None = None) -> np.ndarray:
    arr = to_complex(p)
    if length is not None and len(arr) < length:
        arr = np.concatenate([arr, np.zeros(length - len(arr), dtype=np.complex128)])
    return arr


def proots(p: Sequence) -> np.ndarray:
    """Complex roots (numpy companion matrix)."""
    p = trim(p)
    if len(p) <= 1:
        return np.zeros(0, dtype=np.complex128)
    return np.roots(to_complex(p)[::-1]).astype(np.complex128)


def from_roots(roots: Iterable, lead=1.0) -> tuple:
    out: tuple = (as_scalar(lead),)
    for r in roots:
        out = pmul(out, (-complex(r), 1.0 + 0j))
    return out


def deflate(p: Sequence, root) -> tuple:
    """Synthetic division by ``(z - root)``, remainder discarded."""
    p = trim(p)
    n = len(p) - 1
    if n < 1:
        return p
    out = [0j] * n
    acc = complex(p[-1])
    out[n - 1] = acc
    for k in range(n - 1, 0, -1):
        acc = complex(p[k]) + acc * root
        out[k - 1] = acc
    return trim(out)

"""Exact rational holomorphic maps, reparametrisation, degrees and families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import _accel
from .expr import parse_expr
from .geometry import GEOM_TOL, DomainKind, Moebius, SpherePoint
from .poly import (
    QI,
    as_scalar,
    deflate,
    degree,
    is_exact,
    padd,
    pdivmod,
    pderiv,
    peval,
    pgcd,
    pmul,
    ppow,
    proots,
    pscale,
    psub,
    to_complex,
    trim,
)
from .target import (
    LinearSpace,
    ProjectiveLine,
    TargetSpace,
    UnitDiscPlane,
    boundary_distance,
    target_from_json,
)

__all__ = [
    "UnboundedMapError",
    "DegreeUndetermined",
    "RationalFn",
    "RationalMap",
    "MapFamily",
    "canonicalize",
    "compose_moebius",
    "degree_of",
    "relative_degree",
    "cauchy_riemann_residual",
    "builtin_corpus",
    "builtin_maps",
    "get_family",
    "check_uniformly_bounded",
]

CANON_TOL = 1e-10
DEGREE_SNAP = 0.1


class UnboundedMapError(ValueError):
    """A map into a linear target was evaluated at a pole."""


class DegreeUndetermined(ArithmeticError):
    pass


def _one(exact: bool):
    return QI(1) if exact else 1 + 0j


def canonicalize(num, den, tol: float = CANON_TOL) -> tuple[tuple, tuple]:
    """Remove common factors and make the denominator monic.

    Exact coefficients use the Euclidean gcd; floating coefficients pair
    roots closer than ``tol`` (relative) and deflate them out.
    """
    num = trim([as_scalar(c) for c in num])
    den = trim([as_scalar(c) for c in den])
    if not den:
        raise ZeroDivisionError("denominator is identically zero")
    if not num:
        return (), (_one(is_exact(den)),)
    if is_exact(num) and is_exact(den):
        g = pgcd(num, den)
        if len(g) > 1:
            num, _ = pdivmod(num, g)
            den, _ = pdivmod(den, g)
    else:
        num, den = _cancel_roots(num, den, tol)
    inv = QI(1) / den[-1] if isinstance(den[-1], QI) else 1 / den[-1]
    return pscale(num, inv), pscale(den, inv)


def cancel_common_roots(num, den, tol: float) -> tuple[list, list, list]:
    """Deflate root pairs of ``num`` and ``den`` closer than ``tol`` (relative).

    Returns the reduced coefficient lists and the cancelled roots.
    """
    removed: list[complex] = []
    num, den = _cancel_roots(num, den, tol, removed)
    return num, den, removed


def _cancel_roots(num, den, tol, removed=None):
    num = trim([complex(c) for c in num], 1e-15)
    den = trim([complex(c) for c in den], 1e-15)
    if len(num) <= 1 or len(den) <= 1:
        return num, den
    rn = list(proots(num))
    rd = list(proots(den))
    changed = True
    while changed and rn and rd:
        changed = False
        best = None
        for i, a in enumerate(rn):
            for j, b in enumerate(rd):
                d = abs(a - b)
                if d <= tol * max(1.0, abs(a)) and (best is None or d < best[0]):
                    best = (d, i, j)
        if best is not None:
            _, i, j = best
            r = 0.5 * (rn[i] + rd[j])
            if removed is not None:
                removed.append(complex(r))
            num = deflate(num, r)
            den = deflate(den, r)
            rn.pop(i)
            rd.pop(j)
            changed = True
    return num, den


@dataclass(frozen=True, eq=False)
class RationalFn:
    """``num / den`` with ascending coefficient tuples, stored in canonical form."""

    num: tuple
    den: tuple

    def __post_init__(self):
        n, d = canonicalize(self.num, self.den)
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "den", d)

    @classmethod
    def constant(cls, c) -> "RationalFn":
        return cls((as_scalar(c),), (QI(1),))

    @classmethod
    def identity(cls) -> "RationalFn":
        return cls((QI(0), QI(1)), (QI(1),))

    @property
    def exact(self) -> bool:
        return is_exact(self.num) and is_exact(self.den)

    @property
    def degree(self) -> int:
        return max(degree(self.num), degree(self.den), 0)

    def is_constant(self) -> bool:
        return degree(self.num) <= 0 and degree(self.den) <= 0

    def __call__(self, z):
        if isinstance(z, (QI,)) or (isinstance(z, (int,)) and not isinstance(z, bool)):
            q = peval(self.den, z)
            if not q:
                return None
            return peval(self.num, z) / q
        p, _ = _accel.horner(self.num_array(), z)
        q, _ = _accel.horner(self.den_array(), z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = p / q
        return complex(out) if np.ndim(out) == 0 else out

    def num_array(self, length: int | None = None) -> np.ndarray:
        arr = to_complex(self.num) if self.num else np.zeros(1, dtype=np.complex128)
        if length is not None and len(arr) < length:
            arr = np.concatenate([arr, np.zeros(length - len(arr), dtype=np.complex128)])
        return arr

    def den_array(self, length: int | None = None) -> np.ndarray:
        arr = to_complex(self.den)
        if length is not None and len(arr) < length:
            arr = np.concatenate([arr, np.zeros(length - len(arr), dtype=np.complex128)])
        return arr

    def deriv(self) -> "RationalFn":
        """Formal derivative ``(P'Q - PQ') / Q**2``."""
        top = psub(pmul(pderiv(self.num), self.den), pmul(self.num, pderiv(self.den)))
        return RationalFn(top, pmul(self.den, self.den))

    def __add__(self, other: "RationalFn") -> "RationalFn":
        return RationalFn(padd(pmul(self.num, other.den), pmul(other.num, self.den)), pmul(self.den, other.den))

    def __mul__(self, other: "RationalFn") -> "RationalFn":
        return RationalFn(pmul(self.num, other.num), pmul(self.den, other.den))

    def scale(self, c) -> "RationalFn":
        return RationalFn(pscale(self.num, as_scalar(c)), self.den)

    def compose(self, phi: Moebius) -> "RationalFn":
        """``self o phi`` by homogeneous substitution."""
        n = self.degree
        lin_top = (phi.b, phi.a)
        lin_bot = (phi.d, phi.c)

        def subst(p):
            out: tuple = ()
            for k, c in enumerate(p):
                term = pmul(ppow(lin_top, k), ppow(lin_bot, n - k))
                out = padd(out, pscale(term, c))
            return out

        return RationalFn(subst(self.num), subst(self.den))

    def equals(self, other: "RationalFn", tol: float = 0.0) -> bool:
        if len(self.num) != len(other.num) or len(self.den) != len(other.den):
            return False
        for a, b in zip(self.num + self.den, other.num + other.den):
            if tol == 0.0 and isinstance(a, QI) and isinstance(b, QI):
                if a != b:
                    return False
            elif abs(complex(a) - complex(b)) > tol:
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, RationalFn) and self.equals(other)

    def __hash__(self):
        return hash((tuple(complex(c) for c in self.num), tuple(complex(c) for c in self.den)))

    def to_json(self) -> dict:
        from .geometry import point_to_json

        return {"num": [point_to_json(c) for c in self.num], "den": [point_to_json(c) for c in self.den]}

    @classmethod
    def from_json(cls, data) -> "RationalFn":
        from .geometry import point_from_json

        if not isinstance(data, dict) or "num" not in data or "den" not in data:
            raise ValueError("rational function JSON needs 'num' and 'den'")
        return cls(tuple(point_from_json(c) for c in data["num"]), tuple(point_from_json(c) for c in data["den"]))


def _boundary_samples(n: int = 257) -> np.ndarray:
    t = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n + 2)[1:-1]
    return np.tan(t)


@dataclass(frozen=True, eq=False)
class RationalMap:
    """Holomorphic map ``Sigma -> target`` given by rational components.

    For ``ProjectiveLine`` and ``UnitDiscPlane`` there is a single component;
    for ``LinearSpace`` one component per complex coordinate.
    """

    domain: DomainKind
    target: TargetSpace
    components: tuple
    boundary_certificate: str = field(default="", compare=False)
    boundary_residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if isinstance(self.target, LinearSpace):
            if len(comps) != self.target.n:
                raise ValueError(f"linear target of dimension {self.target.n} needs {self.target.n} components")
        elif len(comps) != 1:
            raise ValueError("single-component target expects exactly one rational function")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "domain", DomainKind(self.domain))
        if not self.boundary_certificate:
            cert, res = self._certify()
            object.__setattr__(self, "boundary_certificate", cert)
            object.__setattr__(self, "boundary_residual", res)

    def __eq__(self, other):
        return (
            isinstance(other, RationalMap)
            and self.domain is other.domain
            and self.target == other.target
            and self.components == other.components
        )

    def __hash__(self):
        return hash((self.domain, self.components))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def single(cls, domain, target, num, den=(1,)) -> "RationalMap":
        return cls(DomainKind(domain), target, (RationalFn(tuple(num), tuple(den)),))

    @property
    def fn(self) -> RationalFn:
        return self.components[0]

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.components)

    def _certify(self) -> tuple[str, float]:
        if self.domain is DomainKind.SPHERE:
            return "none", 0.0
        exact_real = all(
            all(isinstance(c, QI) and c.im == 0 for c in f.num + f.den) for f in self.components
        )
        if isinstance(self.target, ProjectiveLine) and exact_real:
            return "exact_real", 0.0
        if isinstance(self.target, LinearSpace) and exact_real and np.array_equal(
            self.target.frame, np.eye(self.target.n)
        ):
            return "exact_real", 0.0
        res = self.boundary_violation()
        return ("numeric" if res <= 1e-8 else "none"), res

    def boundary_violation(self, samples: np.ndarray | None = None) -> float:
        """Largest distance to ``L`` over sampled boundary points."""
        if self.domain is DomainKind.SPHERE:
            return 0.0
        if self.domain is DomainKind.POINTED_SPHERE:
            pts = [SpherePoint.from_complex(None)]
            vals = [self.eval_point(p) for p in pts]
            return max(boundary_distance(self.target, v) for v in vals)
        x = _boundary_samples() if samples is None else samples
        worst = 0.0
        if isinstance(self.target, ProjectiveLine):
            p = self.fn.num_array()
            q = self.fn.den_array()
            pv, _ = _accel.horner(p, x)
            qv, _ = _accel.horner(q, x)
            for a, b in zip(pv, qv):
                if a == 0 and b == 0:
                    continue
                worst = max(worst, boundary_distance(self.target, SpherePoint(complex(a), complex(b))))
            worst = max(worst, boundary_distance(self.target, self.eval_point(SpherePoint.from_complex(None))))
            return worst
        try:
            vals = self.eval(x)
        except UnboundedMapError:
            return math.inf
        vals = np.asarray(vals).reshape(len(x), -1)
        for v in vals:
            worst = max(worst, boundary_distance(self.target, v if v.size > 1 else v[0]))
        try:
            worst = max(worst, boundary_distance(self.target, self.value_at_infinity()))
        except UnboundedMapError:
            return math.inf
        return worst

    # -- evaluation ---------------------------------------------------------

    def eval(self, z):
        """Evaluate on complex arrays.

        Linear targets return shape ``z.shape + (n,)`` when ``n > 1``; poles
        raise :class:`UnboundedMapError`.  For ``ProjectiveLine`` poles give
        ``inf``.
        """
        zz = np.asarray(z, dtype=np.complex128)
        if isinstance(self.target, ProjectiveLine):
            return self.fn(zz) if zz.ndim else self.fn(complex(zz))
        outs = []
        for f in self.components:
            q, _ = _accel.horner(f.den_array(), zz)
            if np.any(q == 0) or np.any(~np.isfinite(zz)):
                raise UnboundedMapError("unbounded map")
            p, _ = _accel.horner(f.num_array(), zz)
            outs.append(p / q)
        if len(outs) == 1:
            out = outs[0]
            return complex(out) if zz.ndim == 0 else out
        return np.stack(outs, axis=-1)

    __call__ = eval

    def eval_point(self, z):
        """Evaluate at one point of the domain, allowing ``inf``.

        Returns a :class:`SpherePoint` for ``ProjectiveLine`` (exact when the
        map and point are exact) and a complex number / vector otherwise.
        """
        sp = SpherePoint.from_complex(z)
        if isinstance(self.target, ProjectiveLine):
            return _homogeneous_eval(self.fn, sp)
        if sp.is_infinity:
            return self.value_at_infinity()
        zv = sp.value()
        vals = []
        for f in self.components:
            q = peval(f.den, zv)
            if (isinstance(q, QI) and not q) or (not isinstance(q, QI) and q == 0):
                raise UnboundedMapError("unbounded map")
            vals.append(peval(f.num, zv) / q)
        return vals[0] if len(vals) == 1 else np.array([complex(v) for v in vals])

    def value_at_infinity(self):
        vals = []
        for f in self.components:
            dn, dd = degree(f.num), degree(f.den)
            if dn > dd:
                raise UnboundedMapError("unbounded map")
            if dn < dd or dn < 0:
                vals.append(0j)
            else:
                vals.append(complex(f.num[-1]) / complex(f.den[-1]))
        return vals[0] if len(vals) == 1 else np.array(vals)

    def density(self, z) -> np.ndarray:
        """Energy density with respect to Euclidean area in the domain chart."""
        zz = np.asarray(z, dtype=np.complex128)
        if isinstance(self.target, ProjectiveLine):
            return _accel.density_cp1(self.fn.num_array(), self.fn.den_array(), zz)
        width_n = max(len(f.num) for f in self.components) or 1
        width_d = max(len(f.den) for f in self.components)
        nums = np.stack([f.num_array(width_n) for f in self.components])
        dens = np.stack([f.den_array(width_d) for f in self.components])
        try:
            out = _accel.density_linear(nums, dens, zz)
        except ZeroDivisionError:
            raise UnboundedMapError("unbounded map") from None
        if not np.all(np.isfinite(out)):
            raise UnboundedMapError("unbounded map")
        return out

    def deriv(self) -> tuple[RationalFn, ...]:
        return tuple(f.deriv() for f in self.components)

    def poles(self) -> np.ndarray:
        roots = [proots(f.den) for f in self.components]
        return np.concatenate(roots) if roots else np.zeros(0, dtype=np.complex128)

    def zeros(self) -> np.ndarray:
        roots = [proots(f.num) for f in self.components]
        return np.concatenate(roots) if roots else np.zeros(0, dtype=np.complex128)

    def is_constant(self) -> bool:
        return all(f.is_constant() for f in self.components)

    def with_components(self, comps, domain=None) -> "RationalMap":
        return RationalMap(self.domain if domain is None else DomainKind(domain), self.target, tuple(comps))

    def negated(self) -> "RationalMap":
        return self.with_components([f.scale(-1) for f in self.components])

    def inverted_chart(self) -> "RationalMap":
        """Same map in the domain chart ``zeta = -1/z``."""
        return compose_moebius(self, Moebius(QI(0), QI(-1), QI(1), QI(0)), check=False)

    # -- serialisation -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "domain": self.domain.value,
            "target": self.target.to_json(),
            "components": [f.to_json() for f in self.components],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RationalMap":
        if not isinstance(data, dict):
            raise ValueError("map JSON must be an object")
        for key in ("domain", "target", "components"):
            if key not in data:
                raise ValueError(f"map JSON is missing {key!r}")
        comps = tuple(RationalFn.from_json(c) for c in data["components"])
        return cls(DomainKind(data["domain"]), target_from_json(data["target"]), comps)


def _homogeneous_eval(f: RationalFn, sp: SpherePoint) -> SpherePoint:
    n = f.degree
    a, b = sp.a, sp.b

    def hom(p):
        acc = QI(0)
        for k, c in enumerate(p):
            acc = acc + c * (a**k) * (b ** (n - k))
        return acc

    top, bot = hom(f.num), hom(f.den)
    if isinstance(top, QI) and isinstance(bot, QI):
        if not top and not bot:  # pragma: no cover - excluded by canonical form
            raise ArithmeticError("common root at evaluation point")
    return SpherePoint(top, bot)


def compose_moebius(m: RationalMap, phi: Moebius, check: bool = True) -> RationalMap:
    """Reparametrise ``m o phi``; disc domains only admit disc automorphisms."""
    if check:
        if m.domain is DomainKind.DISC and not phi.disc_automorphism:
            raise ValueError("reparametrisation of a disc must be a disc automorphism")
        if m.domain is DomainKind.POINTED_SPHERE and not phi.is_affine():
            raise ValueError("reparametrisation of a pointed sphere must fix infinity")
    return RationalMap(m.domain, m.target, tuple(f.compose(phi) for f in m.components))


# --------------------------------------------------------------------------
# degrees
# --------------------------------------------------------------------------


def degree_of(m: RationalMap) -> int:
    """Topological degree ``max(deg P, deg Q)`` of a single-component map."""
    return m.fn.degree


def _arg_increment(num: np.ndarray, den: np.ndarray | None = None) -> float:
    """Total change of ``arg(num/den)`` along the real line, by quadrature."""

    def dlog(p, x):
        v, d = _accel.horner(p, x)
        return d / v

    def integrand(t):
        x = math.tan(t)
        jac = 1.0 / math.cos(t) ** 2
        w = dlog(num, np.array([x]))[0]
        if den is not None:
            w = w - dlog(den, np.array([x]))[0]
        return w.imag * jac

    lim = 0.5 * math.pi
    pts = np.linspace(-lim, lim, 65)[1:-1]
    total = 0.0
    for lo, hi in zip(np.concatenate([[-lim], pts]), np.concatenate([pts, [lim]])):
        val, _ = integrate.quad(integrand, lo, hi, limit=200, epsabs=1e-11, epsrel=1e-11)
        total += val
    return total


def _roots_in_upper(poly: np.ndarray) -> float:
    """Number of roots in H by the argument principle along the real line."""
    p = np.trim_zeros(poly, "b")
    deg = len(p) - 1
    if deg <= 0:
        return 0.0
    return (_arg_increment(p) + math.pi * deg) / (2.0 * math.pi)


def _snap(value: float) -> int:
    k = round(value)
    if abs(value - k) >= DEGREE_SNAP:
        raise DegreeUndetermined(f"degree undetermined (winding {value:.4f})")
    return int(k)


def relative_degree(m: RationalMap) -> int:
    """Relative degree of a disc ``(H, R) -> (target, L)``.

    ``UnitDiscPlane``: winding number of the boundary loop about the origin.
    ``ProjectiveLine``: half the Maslov index, i.e. the number of preimages
    in H of ``i`` plus those of ``-i``; counts hemispheres, so a sphere of
    degree ``d`` attached in the interior contributes ``2d``.
    ``LinearSpace`` with ``n = 1``: always 0 because ``pi_2(C, L) = 0``.
    """
    if m.domain is DomainKind.SPHERE:
        return degree_of(m)
    if m.boundary_certificate == "none":
        raise DegreeUndetermined("boundary condition not certified")
    if m.is_constant():
        return 0
    if isinstance(m.target, UnitDiscPlane):
        f = m.fn
        num = f.num_array()
        den = f.den_array()
        if np.any(np.abs(np.polyval(num[::-1], _boundary_samples(33))) == 0):
            raise DegreeUndetermined("boundary loop passes through the origin")
        inc = _arg_increment(num, den)
        return _snap(inc / (2.0 * math.pi))
    if isinstance(m.target, ProjectiveLine):
        f = m.fn
        width = max(len(f.num), len(f.den))
        p = f.num_array(width)
        q = f.den_array(width)
        count = _roots_in_upper(p - 1j * q) + _roots_in_upper(p + 1j * q)
        return _snap(count)
    if m.target.n == 1:
        return 0
    raise NotImplementedError("relative degree implemented for n = 1 and CP^1 targets only")


def homotopy_weight(m: RationalMap) -> int:
    """Contribution of a vertex map to the total degree bookkeeping."""
    if m.domain is DomainKind.SPHERE:
        d = degree_of(m)
        return 2 * d if isinstance(m.target, ProjectiveLine) else d
    if m.domain is DomainKind.POINTED_SPHERE:
        return degree_of(m) * (2 if isinstance(m.target, ProjectiveLine) else 1)
    return relative_degree(m)


def cauchy_riemann_residual(m: RationalMap, points, h: float = 1e-6) -> float:
    """Max relative ``|f_y - i f_x|`` by central differences."""
    z = np.asarray(points, dtype=np.complex128)
    worst = 0.0
    for f in m.components:
        fx = (f(z + h) - f(z - h)) / (2 * h)
        fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
        scale = np.maximum(np.abs(fx), 1e-300)
        ok = np.isfinite(fx) & np.isfinite(fy)
        if np.any(ok):
            worst = max(worst, float(np.max(np.abs(fy - 1j * fx)[ok] / np.maximum(scale[ok], 1.0))))
    return worst


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MapFamily:
    """nu-indexed family with coefficients given as closed-form expressions."""

    name: str
    domain: DomainKind
    target: TargetSpace
    components: tuple  # ((num_exprs...), (den_exprs...)) per component
    nu_range: tuple[int, int] = (2, 10_000)
    description: str = ""

    def __post_init__(self):
        comps = []
        for num, den in self.components:
            comps.append((tuple(parse_expr(s) for s in num), tuple(parse_expr(s) for s in den)))
        object.__setattr__(self, "components", tuple(comps))
        object.__setattr__(self, "domain", DomainKind(self.domain))
        lo, hi = self.nu_range
        if lo > hi:
            raise ValueError("empty nu range")

    def instantiate(self, nu) -> RationalMap:
        lo, hi = self.nu_range
        if not lo <= nu <= hi:
            raise ValueError(f"nu={nu} outside range [{lo}, {hi}] of family {self.name!r}")
        fns = []
        for num, den in self.components:
            fns.append(RationalFn(tuple(e(nu) for e in num), tuple(e(nu) for e in den)))
        return RationalMap(self.domain, self.target, tuple(fns))

    at = instantiate

    def cut_at(self, nu) -> float:
        """Lower edge ``Im z >= cut`` of the domain (``-inf`` for spheres)."""
        return 0.0 if self.domain is DomainKind.DISC else -math.inf

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain.value,
            "target": self.target.to_json(),
            "components": [
                {"num": [e.source for e in num], "den": [e.source for e in den]} for num, den in self.components
            ],
            "nu_range": list(self.nu_range),
            "description": self.description,
        }

    @classmethod
    def from_json(cls, data: dict) -> "MapFamily":
        if not isinstance(data, dict):
            raise ValueError("family JSON must be an object")
        for key in ("name", "domain", "target", "components"):
            if key not in data:
                raise ValueError(f"family JSON is missing {key!r}")
        comps = []
        for k, c in enumerate(data["components"]):
            if "num" not in c or "den" not in c:
                raise ValueError(f"components[{k}] needs 'num' and 'den'")
            comps.append((tuple(c["num"]), tuple(c["den"])))
        return cls(
            data["name"],
            DomainKind(data["domain"]),
            target_from_json(data["target"]),
            tuple(comps),
            tuple(data.get("nu_range", (2, 10_000))),
            data.get("description", ""),
        )


def check_uniformly_bounded(family, nus: Sequence, radius: float | None = None, samples: int = 400) -> float:
    """Sup of ``|u^nu|`` over sampled domain points (linear-type targets).

    Returns the observed sup; raises if it exceeds the target's compact radius.
    """
    if isinstance(family.target, ProjectiveLine):
        return 1.0
    rng = np.random.default_rng(7)
    r = rng.uniform(0.0, 1.0, samples)
    th = rng.uniform(0.0, math.pi, samples)
    pts = np.concatenate([np.tan(0.5 * math.pi * r) * np.exp(1j * th), _boundary_samples(65)])
    bound = getattr(family.target, "k_radius", 1.0 + GEOM_TOL) if radius is None else radius
    sup = 0.0
    for nu in nus:
        vals = np.abs(np.asarray(family.at(nu).eval(pts)))
        sup = max(sup, float(np.max(vals)))
    if sup > bound:
        raise UnboundedMapError(f"family exceeds compact radius {bound} (sup {sup:.3g})")
    return sup


def _cp1_disc(name, num, den, description):
    return MapFamily(name, DomainKind.DISC, ProjectiveLine(), ((num, den),), (2, 10_000), description)


def builtin_corpus() -> dict[str, MapFamily]:
    """Named degenerating families used throughout the tests and CLI."""
    fams = [
        MapFamily(
            "blaschke",
            DomainKind.DISC,
            UnitDiscPlane(),
            ((("-1/nu", "-2*i", "2-1/nu"), ("-1/nu", "2*i", "2-1/nu")),),
            (2, 10_000),
            "w(w-a)/(1-aw), a = 1-1/nu, pulled back to H by w = (i-z)/(i+z); "
            "boundary disc bubble at z = 0 (w = 1)",
        ),
        _cp1_disc(
            "sphere-bubble",
            ("1/nu", "1", "0", "1"),
            ("1", "0", "1"),
            "z + (1/nu)/(z^2+1) into CP^1; interior sphere bubble at z = i",
        ),
        _cp1_disc(
            "ghost",
            ("0", "ln(nu)^-2 + 2/nu", "0", "1"),
            ("ln(nu)^-2", "0", "1"),
            "z + 2 d z/(z^2+y^2), d = 1/nu, y = 1/ln(nu); peak at i y escapes to the "
            "boundary slower than the bubble scale (y/d -> inf)",
        ),
        MapFamily(
            "two-bubble",
            DomainKind.DISC,
            UnitDiscPlane(),
            (
                (
                    (
                        "(1/nu)*(i/nu + 1 - i)",
                        "nu^-2 + (1/nu)*(-3+i) + 2 + 2*i",
                        "i*nu^-2 + (1/nu) - i/nu - 4",
                        "nu^-2 + (1/nu)*(-3+i) + 2 - 2*i",
                    ),
                    (
                        "(1/nu)*(-i/nu + 1 + i)",
                        "nu^-2 - 3/nu - i/nu + 2 - 2*i",
                        "-i*nu^-2 + 1/nu + i/nu - 4",
                        "nu^-2 - 3/nu - i/nu + 2 + 2*i",
                    ),
                ),
            ),
            (2, 10_000),
            "w B_a(w) B_{ia}(w), a = 1-1/nu, pulled back to H; boundary bubbles at z = 0 and z = 1",
        ),
        MapFamily(
            "pointed-collapse",
            DomainKind.DISC,
            ProjectiveLine(),
            ((("0", "2/nu"), ("1/4", "0", "1")),),
            (2, 10_000),
            "(1/nu)(1/(z-i/2) + 1/(z+i/2)); the boundary collapses to a point and the "
            "limit is a pointed sphere",
        ),
    ]
    return {f.name: f for f in fams}


def builtin_maps(target: str = "cp1") -> dict[str, RationalMap]:
    """Single maps addressable as ``builtin:<name>`` from the CLI."""
    t = ProjectiveLine() if target == "cp1" else UnitDiscPlane()
    out = {}
    if target == "cp1":
        out["identity-disc"] = RationalMap.single(DomainKind.DISC, t, (QI(0), QI(1)))
        out["identity-sphere"] = RationalMap.single(DomainKind.SPHERE, t, (QI(0), QI(1)))
        out["square-disc"] = RationalMap.single(DomainKind.DISC, t, (QI(0), QI(0), QI(1)))
        out["square-sphere"] = RationalMap.single(DomainKind.SPHERE, t, (QI(0), QI(0), QI(1)))
    else:
        # identity of the unit disc in half-plane coordinates: z -> (i-z)/(i+z)
        out["identity-disc"] = RationalMap.single(DomainKind.DISC, t, (QI(0, 1), QI(-1)), (QI(0, 1), QI(1)))
        out["blaschke2-disc"] = RationalMap.single(
            DomainKind.DISC, t, (QI(-1), QI(0, -2), QI(1)), (QI(-1), QI(0, 2), QI(1))
        )
    return out


def get_family(spec: str) -> MapFamily:
    """Resolve ``builtin:<name>`` or a JSON file path."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        corpus = builtin_corpus()
        if name not in corpus:
            raise KeyError(f"unknown builtin family {name!r}; known: {sorted(corpus)}")
        return corpus[name]
    import json

    with open(spec, encoding="utf-8") as fh:
        return MapFamily.from_json(json.load(fh))


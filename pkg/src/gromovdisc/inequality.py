"""Empirical checks of the analytic inequalities behind compactness.

Each check returns an :class:`InequalityReport` with the sampled left and
right hand sides, the smallest constants that make the inequality hold on
the samples, and a verdict.  Samples that violate a precondition are marked
inadmissible and never count against the verdict; samples whose quadrature
missed its tolerance are marked unconverged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .geometry import DomainKind
from .holomap import RationalMap
from .reporting import rows_to_csv
from .quadrature import Annulus, HalfBall, WholeDomain, energy, line_integral_lambda
from .target import (
    LinearSpace,
    LocalSymplecticData,
    ProjectiveLine,
    TargetSpace,
    boundary_distance,
    target_distance,
)

__all__ = [
    "HBAR_DEFAULT",
    "InequalityReport",
    "ConstantsProfile",
    "target_r_omega",
    "mean_value_check",
    "mean_value_profile",
    "energy_quantum",
    "isoperimetric_check",
    "concentration_check",
    "distance_energy_check",
    "default_t0",
    "fit_decay",
    "minimal_decay_constant",
    "estimate_profile",
]

HBAR_DEFAULT = 0.5 * math.pi
HOLDS, FAILS, UNCONVERGED, INADMISSIBLE = "holds", "fails", "unconverged", "inadmissible"

# leading CSV columns of the T sweeps; other sample keys follow
SWEEP_COLUMNS = {
    "concentration": ("T", "E_T", "bound", "converged", "admissible", "inner", "outer", "error"),
    "distance-energy": ("T", "diameter", "bound", "converged", "admissible", "inner", "outer"),
}


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs_model: str
    samples: list[dict] = field(default_factory=list)
    fitted_constants: dict = field(default_factory=dict)
    verdict: str = HOLDS
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs_model": self.rhs_model,
            "samples": self.samples,
            "fitted_constants": self.fitted_constants,
            "verdict": self.verdict,
            "notes": self.notes,
        }

    def to_csv(self) -> str:
        """Samples as RFC-4180 CSV; an empty sweep gives a header-only file."""
        return rows_to_csv(self.samples, SWEEP_COLUMNS.get(self.name, ()))


def target_r_omega(t: TargetSpace) -> float:
    """Radius of the neighbourhood of ``L`` carrying the exact form.

    Linear targets carry a global primitive.  On ``CP^1`` the primitive
    lives on the complement of the two poles, at chordal distance
    ``1/sqrt(2)`` from the real circle.
    """
    if isinstance(t, ProjectiveLine):
        return 1.0 / math.sqrt(2.0)
    return math.inf


@dataclass(frozen=True)
class ConstantsProfile:
    hbar: float
    C: float
    c: float
    provenance: str = ""
    r_omega: float = math.inf

    def __post_init__(self):
        for name in ("hbar", "C", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"profile constant {name} must be positive")

    @property
    def length_bound(self) -> float:
        """``sqrt(8 C hbar) pi``: bound on boundary-curve lengths in necks."""
        return math.sqrt(8.0 * self.C * self.hbar) * math.pi

    @property
    def gate_ok(self) -> bool:
        return self.length_bound < self.r_omega

    def shrunk(self, margin: float = 0.99) -> "ConstantsProfile":
        """Same profile with ``hbar`` lowered until the length gate passes."""
        if self.gate_ok:
            return self
        hbar = margin * self.r_omega**2 / (8.0 * self.C * math.pi**2)
        return replace(self, hbar=hbar, provenance=self.provenance + "; hbar shrunk for the length gate")

    def to_json(self) -> dict:
        return {
            "hbar": self.hbar,
            "C": self.C,
            "c": self.c,
            "provenance": self.provenance,
            "r_omega": None if math.isinf(self.r_omega) else self.r_omega,
            "length_bound": self.length_bound,
            "gate_ok": self.gate_ok,
        }


# --------------------------------------------------------------------------
# mean value inequality
# --------------------------------------------------------------------------


def mean_value_check(
    m: RationalMap,
    z: complex,
    r: float,
    hbar: float = HBAR_DEFAULT,
    C: float | None = None,
    tol: float = 1e-10,
) -> InequalityReport:
    """``|grad w(z)|^2 <= (C/r^2) int_{B_r(z)} |grad w|^2`` at one point.

    Reports the minimal ``C`` for this sample; with a profile ``C`` the
    verdict compares against it.
    """
    z = complex(z)
    lhs = float(2.0 * m.density(np.array([z]))[0])
    q = energy(m, HalfBall(z, r), tol=tol)
    dirichlet = 2.0 * q.value
    sample = {"z_re": z.real, "z_im": z.imag, "r": r, "lhs": lhs, "energy": q.value, "converged": q.converged}
    rep = InequalityReport("mean-value", lhs, "C / r^2 * int_{B_r(z)} |grad w|^2", [sample])
    if not q.value < hbar:
        sample["admissible"] = False
        rep.verdict = INADMISSIBLE
        rep.notes.append("energy on the ball is not below hbar")
        return rep
    sample["admissible"] = True
    if lhs == 0.0:
        c_min = 0.0
    elif dirichlet == 0.0:
        c_min = math.inf
    else:
        c_min = lhs * r * r / dirichlet
    sample["C_min"] = c_min
    rep.fitted_constants = {"C": c_min}
    if not q.converged:
        rep.verdict = UNCONVERGED
    elif C is not None:
        rhs = C / (r * r) * dirichlet
        sample["rhs"] = rhs
        rep.verdict = HOLDS if lhs <= rhs * (1 + 1e-9) else FAILS
    return rep


def mean_value_profile(reports: Iterable[InequalityReport]) -> float:
    """Largest minimal ``C`` over admissible converged samples."""
    vals = [
        r.fitted_constants["C"]
        for r in reports
        if r.verdict not in (INADMISSIBLE, UNCONVERGED) and "C" in r.fitted_constants
    ]
    if not vals:
        raise ValueError("no admissible mean-value samples")
    return max(vals)


# --------------------------------------------------------------------------
# energy quantum
# --------------------------------------------------------------------------


def energy_quantum(corpus: Iterable[RationalMap] | dict, tol: float = 1e-10) -> tuple[float, list[dict]]:
    """Least energy among the nonconstant maps of ``corpus``."""
    items = corpus.items() if isinstance(corpus, dict) else enumerate(corpus)
    rows = []
    for key, m in items:
        if m.is_constant():
            rows.append({"map": str(key), "energy": 0.0, "excluded": "constant"})
            continue
        q = energy(m, WholeDomain(), tol=tol)
        rows.append({"map": str(key), "domain": m.domain.value, "energy": q.value, "converged": q.converged})
    vals = [r["energy"] for r in rows if "excluded" not in r]
    if not vals:
        raise ValueError("energy quantum needs a nonempty corpus of nonconstant maps")
    return min(vals), rows


# --------------------------------------------------------------------------
# isoperimetric inequality
# --------------------------------------------------------------------------


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _curve_length(curve, dcurve=None, panels: int = 64) -> float:
    if not callable(curve):
        x = np.asarray(curve, dtype=float)
        return float(np.linalg.norm(np.diff(x, axis=0), axis=1).sum())
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    t = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    if dcurve is None:
        h = 1e-6
        v = (np.asarray(curve(t + h)) - np.asarray(curve(t - h))) / (2 * h)
    else:
        v = np.asarray(dcurve(t), dtype=float)
    return float(np.sum(w * np.linalg.norm(v, axis=1)))


def _endpoints(curve) -> tuple[np.ndarray, np.ndarray]:
    if callable(curve):
        ends = np.asarray(curve(np.array([0.0, 1.0])), dtype=float)
        return ends[0], ends[1]
    x = np.asarray(curve, dtype=float)
    return x[0], x[-1]


def isoperimetric_check(
    data: LocalSymplecticData,
    curve: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    dcurve: Callable[[np.ndarray], np.ndarray] | None = None,
    profile: ConstantsProfile | None = None,
    c: float | None = None,
    endpoint_tol: float = 1e-9,
) -> InequalityReport:
    """``|int gamma^* lambda| <= c length(gamma)^2`` for a curve with ends on ``L``.

    Also evaluates the closed-loop variant in which the curve is closed by
    the chord inside ``L`` (on which ``lambda`` vanishes).
    """
    n = data.n
    lhs = abs(line_integral_lambda(data, curve, dcurve))
    length = _curve_length(curve, dcurve)
    a, b = _endpoints(curve)
    target = LinearSpace(data.frame)
    ends_off = max(
        boundary_distance(target, a[:n] + 1j * a[n:]),
        boundary_distance(target, b[:n] + 1j * b[n:]),
    )
    chord = float(np.linalg.norm(b - a))
    closed = length + chord
    c_min = lhs / length**2 if length > 0 else 0.0
    c_closed = lhs / closed**2 if closed > 0 else 0.0
    sample = {"lhs": lhs, "length": length, "closed_length": closed, "c_min": c_min, "c_min_closed": c_closed}
    rep = InequalityReport("isoperimetric", lhs, "c * length(gamma)^2", [sample])
    rep.fitted_constants = {"c": c_min, "c_closed": c_closed}
    if ends_off > endpoint_tol:
        sample["admissible"] = False
        rep.verdict = INADMISSIBLE
        rep.notes.append(f"endpoint off L by {ends_off:.3e}")
        return rep
    if profile is not None and length > profile.length_bound:
        sample["admissible"] = False
        rep.verdict = INADMISSIBLE
        rep.notes.append("curve longer than sqrt(8 C hbar) pi")
        return rep
    sample["admissible"] = True
    if c is not None:
        sample["rhs"] = c * length**2
        rep.verdict = HOLDS if lhs <= c * length**2 * (1 + 1e-9) + 1e-15 else FAILS
    return rep


# --------------------------------------------------------------------------
# concentration and distance-energy inequalities
# --------------------------------------------------------------------------


def default_t0(eta: float) -> float:
    """``max(7, 3 + 2 ln eta)``; ``eta = 0`` gives 7."""
    if eta <= 0:
        return 7.0
    return max(7.0, 3.0 + 2.0 * math.log(eta))


def fit_decay(ts: Sequence[float], values: Sequence[float], fraction: float = 0.6) -> tuple[float, float, float]:
    """Least-squares line through ``(T, log value)`` on the last ``fraction``.

    Returns ``(slope, intercept, r_squared)``.
    """
    t = np.asarray(ts, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    k = max(2, int(math.ceil(fraction * len(t))))
    t, y = t[-k:], y[-k:]
    if len(t) < 2:
        return math.nan, math.nan, math.nan
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def minimal_decay_constant(ts: Sequence[float], ratios: Sequence[float]) -> float:
    """Least ``c`` with ``ratio(T) <= c exp(-T/c)`` at every sample.

    ``c exp(-T/c)`` is increasing in ``c`` for ``T >= 0``, so the constraint
    set is a ray and its end is found by root bracketing.
    """
    t = np.asarray(ts, dtype=float)
    r = np.asarray(ratios, dtype=float)
    keep = r > 0
    if not np.any(keep):
        return 0.0
    t, lr = t[keep], np.log(r[keep])

    def g(c):
        return float(np.max(lr - math.log(c) + t / c))

    lo, hi = 1e-6, 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    if g(lo) <= 0:
        return lo
    return float(optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-12))


def _t_grid(t0: float, t_max: float, n: int) -> np.ndarray:
    if not t_max > t0:
        return np.zeros(0)
    return np.linspace(t0, t_max, n + 1)[:-1]


def _annulus_cut(m: RationalMap):
    return None if m.domain is DomainKind.DISC else -math.inf


def concentration_check(
    m: RationalMap,
    z: complex,
    delta: float,
    eps: float,
    t_grid: Sequence[float] | None = None,
    eta: float = 0.0,
    hbar: float = HBAR_DEFAULT,
    n_t: int = 10,
    tol: float = 1e-10,
    t0: float | None = None,
) -> InequalityReport:
    """``E(w; A_z(e^T delta, e^-T eps)) <= c e^{-T/c} e(w)`` over a T sweep.

    ``e(w) = E(w; A_z(delta, eps))`` must be below ``hbar``.  Samples outside
    ``[T0, ln sqrt(eps/delta)]`` are inadmissible.
    """
    z = complex(z)
    t0 = default_t0(eta) if t0 is None else float(t0)
    t_max = 0.5 * math.log(eps / delta)
    grid = _t_grid(t0, t_max, n_t) if t_grid is None else np.asarray(t_grid, dtype=float)
    base = energy(m, Annulus(z, delta, eps), tol=tol)
    e_w = base.value
    consts = {"T0": t0, "T_max": t_max, "eta": eta, "e_w": e_w}
    rep = InequalityReport("concentration", math.nan, "c * exp(-T/c) * e(w)", fitted_constants=consts)
    if not e_w < hbar:
        rep.verdict = INADMISSIBLE
        rep.notes.append("e(w) is not below hbar")
        return rep
    good_t, good_e = [], []
    for tt in grid:
        inner, outer = math.exp(tt) * delta, math.exp(-tt) * eps
        row = {"T": float(tt), "inner": inner, "outer": outer}
        if not (t0 - 1e-12 <= tt < t_max) or not outer > inner:
            row.update(admissible=False, converged=False)
            rep.samples.append(row)
            continue
        q = energy(m, Annulus(z, inner, outer), tol=tol)
        row.update(admissible=True, E_T=q.value, error=q.error_estimate, converged=q.converged)
        rep.samples.append(row)
        if q.converged and base.converged and q.value > 0:
            good_t.append(float(tt))
            good_e.append(q.value)
    if len(good_t) < 3:
        rep.verdict = UNCONVERGED
        rep.notes.append(
            f"fewer than 3 converged samples in T range [{t0:.4g}, {t_max:.4g}]"
            + (" (empty range)" if not t_max > t0 else "")
        )
        return rep
    slope, intercept, r2 = fit_decay(good_t, good_e)
    c_fit = minimal_decay_constant(good_t, np.asarray(good_e) / e_w)
    consts.update(c=c_fit, slope=slope, intercept=intercept, r2=r2)
    for row in rep.samples:
        if row.get("admissible") and "E_T" in row:
            row["bound"] = c_fit * math.exp(-row["T"] / c_fit) * e_w
    rep.lhs = good_e[-1]
    bound_ok = all(e <= c_fit * math.exp(-t / c_fit) * e_w * (1 + 1e-9) for t, e in zip(good_t, good_e))
    rep.verdict = HOLDS if bound_ok and slope <= -1.0 / c_fit else FAILS
    return rep


def _annulus_points(m: RationalMap, z: complex, inner: float, outer: float, n_r: int, n_theta: int) -> np.ndarray:
    """Arcs at geometric radii plus the vertical segment through the center."""
    radii = np.geomspace(inner, outer, n_r)
    on_cut = m.domain is DomainKind.DISC and abs(z.imag) == 0.0
    if on_cut:
        th = np.linspace(0.0, math.pi, n_theta)
    else:
        th = np.linspace(-math.pi, math.pi, n_theta, endpoint=False)
    pts = (z + radii[:, None] * np.exp(1j * th)[None, :]).ravel()
    seg = z + 1j * np.geomspace(inner, outer, 2 * n_r)
    pts = np.concatenate([pts, seg])
    if m.domain is DomainKind.DISC:
        pts = pts[pts.imag >= 0]
    return pts


def _diameter(m: RationalMap, pts: np.ndarray) -> float:
    vals = m.eval(pts)
    if isinstance(m.target, ProjectiveLine):
        w = np.asarray(vals, dtype=np.complex128)
        finite = np.isfinite(w)
        a = np.where(finite, w, 1.0)
        b = np.where(finite, 1.0, 0.0)
        norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
        a, b = a / norm, b / norm
        d = np.abs(a[:, None] * b[None, :] - a[None, :] * b[:, None])
        return float(d.max())
    w = np.asarray(vals)
    if w.ndim == 1:
        return float(np.abs(w[:, None] - w[None, :]).max())
    diff = w[:, None, :] - w[None, :, :]
    return float(np.sqrt((np.abs(diff) ** 2).sum(axis=-1)).max())


def distance_energy_check(
    m: RationalMap,
    z: complex,
    delta: float,
    eps: float,
    t_grid: Sequence[float] | None = None,
    eta: float = 0.0,
    hbar: float = HBAR_DEFAULT,
    n_t: int = 10,
    n_r: int = 6,
    n_theta: int = 33,
    tol: float = 1e-10,
    t0: float | None = None,
) -> InequalityReport:
    """``dist(w(z1), w(z2)) <= c e^{-T/c} sqrt(e(w))`` on the T-annuli.

    The left side is the image diameter over sampled arcs and the vertical
    segment through the center.
    """
    z = complex(z)
    t0 = default_t0(eta) if t0 is None else float(t0)
    t_max = 0.5 * math.log(eps / delta)
    grid = _t_grid(t0, t_max, n_t) if t_grid is None else np.asarray(t_grid, dtype=float)
    base = energy(m, Annulus(z, delta, eps), tol=tol)
    e_w = base.value
    consts = {"T0": t0, "T_max": t_max, "eta": eta, "e_w": e_w}
    rep = InequalityReport("distance-energy", math.nan, "c * exp(-T/c) * sqrt(e(w))", fitted_constants=consts)
    if not e_w < hbar:
        rep.verdict = INADMISSIBLE
        rep.notes.append("e(w) is not below hbar")
        return rep
    good_t, good_d = [], []
    for tt in grid:
        inner, outer = math.exp(tt) * delta, math.exp(-tt) * eps
        row = {"T": float(tt), "inner": inner, "outer": outer}
        if not (t0 - 1e-12 <= tt < t_max) or not outer > inner:
            row.update(admissible=False, converged=False)
            rep.samples.append(row)
            continue
        diam = _diameter(m, _annulus_points(m, z, inner, outer, n_r, n_theta))
        row.update(admissible=True, diameter=diam, converged=base.converged)
        rep.samples.append(row)
        if base.converged and diam > 0:
            good_t.append(float(tt))
            good_d.append(diam)
    if len(good_t) < 3:
        rep.verdict = UNCONVERGED
        rep.notes.append(
            f"fewer than 3 converged samples in T range [{t0:.4g}, {t_max:.4g}]"
            + (" (empty range)" if not t_max > t0 else "")
        )
        return rep
    root = math.sqrt(e_w)
    slope, intercept, r2 = fit_decay(good_t, good_d)
    c_fit = minimal_decay_constant(good_t, np.asarray(good_d) / root)
    consts.update(c=c_fit, slope=slope, intercept=intercept, r2=r2)
    for row in rep.samples:
        if row.get("admissible") and "diameter" in row:
            row["bound"] = c_fit * math.exp(-row["T"] / c_fit) * root
    rep.lhs = good_d[-1]
    bound_ok = all(d <= c_fit * math.exp(-t / c_fit) * root * (1 + 1e-9) for t, d in zip(good_t, good_d))
    rep.verdict = HOLDS if bound_ok and slope <= -1.0 / c_fit else FAILS
    return rep


# --------------------------------------------------------------------------
# profile estimation
# --------------------------------------------------------------------------


def estimate_profile(
    maps: dict[str, RationalMap],
    mean_value_points: Sequence[tuple[str, complex, float]] = (),
    c: float | None = None,
    tol: float = 1e-10,
) -> tuple[ConstantsProfile, dict]:
    """Empirical ``(hbar, C, c)`` from a corpus of maps.

    ``hbar`` is the energy quantum of ``maps``; ``C`` the largest minimal
    mean-value constant over ``mean_value_points`` (``(map name, z, r)``);
    ``c`` the isoperimetric constant of semicircles, ``1/(2 pi)``, unless
    given.
    """
    hbar, rows = energy_quantum(maps, tol=tol)
    reps = [mean_value_check(maps[name], z, r, hbar=hbar, tol=tol) for name, z, r in mean_value_points]
    big_c = mean_value_profile(reps) if reps else 2.0 / math.pi
    iso_c = 1.0 / (2.0 * math.pi) if c is None else c
    targets = {type(m.target) for m in maps.values()}
    r_omega = min(target_r_omega(m.target) for m in maps.values())
    prof = ConstantsProfile(
        hbar, big_c, iso_c, provenance=f"{len(maps)} maps, {len(reps)} mean-value samples", r_omega=r_omega
    )
    diag = {
        "energies": rows,
        "mean_value": [r.to_json() for r in reps],
        "targets": sorted(t.__name__ for t in targets),
        "gate_ok_unshrunk": prof.gate_ok,
    }
    return prof, diag

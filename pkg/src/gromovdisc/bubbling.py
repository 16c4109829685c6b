"""Bubbling analysis: peaks, soft rescaling, bubble detection and Gromov limits.

Every limit in this module is replaced by a finite ladder of ``nu`` values
together with a trend test, so each report can be checked at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .extrapolate import extrapolate_nu
from .reporting import rows_to_csv
from .geometry import (
    INFINITY,
    DomainKind,
    Moebius,
    SpherePoint,
    domain_distance,
    moebius_compose,
    moebius_inverse,
    point_to_json,
)
from .holomap import (
    RationalFn,
    RationalMap,
    UnboundedMapError,
    cancel_common_roots,
    relative_degree,
)
from .inequality import HBAR_DEFAULT
from .quadrature import (
    MAX_CELLS,
    Annulus,
    Complement,
    HalfBall,
    MassEstimate,
    MassUndetermined,
    Quadrant,
    WholeDomain,
    _candidates,
    _project,
    curve_length,
    default_nu_ladder,
    double_limit,
    energy,
)
from .stablemap import (
    BubbleTree,
    GromovLimitCandidate,
    MoebiusFamily,
    Violation,
    bubble_tree_energy,
    is_stable,
    serialize,
    total_degree,
    total_energy,
    validate,
)
from .target import ProjectiveLine, UnitDiscPlane, target_distance

__all__ = [
    "BubblingProfile",
    "RescaledFamily",
    "RescaleDiagnostics",
    "CaseUndetermined",
    "find_peak",
    "solve_delta",
    "soft_rescale",
    "BubblePoint",
    "detect_bubble_points",
    "LimitFit",
    "fit_limit_map",
    "RemovalReport",
    "removal_of_singularity_check",
    "ConditionVerdict",
    "GromovReport",
    "gromov_limit",
    "verify_gromov_convergence",
    "connection_ladder",
]

BOUNDARY_SNAP = 1e-6


@dataclass(frozen=True)
class BubblingProfile:
    """Numerical knobs of the bubbling pipeline."""

    hbar: float = HBAR_DEFAULT
    nus: tuple[int, ...] = tuple(default_nu_ladder())
    eta_max: float = 1e3
    grid_h: float = 0.05
    tol: float = 1e-9
    mass_tol: float = 1e-2
    match_tol: float = 1e-2
    conv_tol: float = 1e-2
    search_radius: float = 0.5
    eps: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05, 0.025)
    rhos: tuple[float, ...] = (0.5, 0.25)
    trend_points: int = 5
    max_cells: int = MAX_CELLS

    def with_nu_max(self, nu_max: int) -> "BubblingProfile":
        return BubblingProfile(**{**self.__dict__, "nus": tuple(default_nu_ladder(nu_max))})

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["nus"] = list(self.nus)
        d["eps"] = list(self.eps)
        d["rhos"] = list(self.rhos)
        return d


def _cut_of(domain: DomainKind, cut) -> float:
    if cut is not None:
        return float(cut)
    return 0.0 if domain is DomainKind.DISC else -math.inf


@dataclass(frozen=True, eq=False)
class RescaledFamily:
    """``nu -> f^nu o phi^nu`` on the ladder where ``phi^nu`` is recorded.

    ``cuts`` give the lower edge ``Im z >= cut`` of the pulled-back domain
    and ``radii`` the radius of the rescaled ball ``(phi^nu)^-1 B_eps``.
    """

    parent: object
    phis: Mapping[int, Moebius]
    cuts: Mapping[int, float]
    radii: Mapping[int, float]
    domain: DomainKind
    case: str = ""
    name: str = ""

    @property
    def target(self):
        return self.parent.target

    @property
    def nu_range(self) -> tuple[int, int]:
        return min(self.phis), max(self.phis)

    def phi(self, nu) -> Moebius:
        return self.phis[nu]

    def at(self, nu) -> RationalMap:
        m = self.parent.at(nu)
        phi = self.phis[nu]
        return RationalMap(self.domain, m.target, tuple(f.compose(phi) for f in m.components))

    instantiate = at

    def cut_at(self, nu) -> float:
        return self.cuts[nu]

    def radius_at(self, nu) -> float:
        return self.radii[nu]


def chart_family(parent, nus: Sequence[int]) -> RescaledFamily:
    """``parent`` seen in the chart at infinity (``-1/z`` on discs, ``1/z`` on spheres)."""
    sign = -1 if parent.domain is DomainKind.DISC else 1
    chart = Moebius(0, sign, 1, 0)
    cut = 0.0 if parent.domain is DomainKind.DISC else -math.inf
    return RescaledFamily(
        parent,
        {nu: chart for nu in nus},
        {nu: cut for nu in nus},
        {nu: math.inf for nu in nus},
        parent.domain,
        "chart",
        f"{getattr(parent, 'name', '')}@inf",
    )


# --------------------------------------------------------------------------
# peaks and scales
# --------------------------------------------------------------------------


def _lexmin(points: np.ndarray) -> complex:
    order = np.lexsort((points.imag, points.real))
    return complex(points[order[0]])


def find_peak(m: RationalMap, region: HalfBall, n_grid: int = 48, pos_tol: float = 1e-10) -> complex:
    """Maximiser of the energy density of ``m`` on a bounded ball.

    A Cartesian grid (plus the concentration candidates of ``m``) is scanned
    first; a pattern search then refines the best point until the step is
    below ``pos_tol``.  Ties go to the smallest ``(Re, Im)``.
    """
    if not math.isfinite(region.radius):
        raise ValueError("find_peak needs a bounded region")
    c, r = region.center, region.radius
    cut = _cut_of(m.domain, region.cut)
    lo_y = max(c.imag - r, cut)
    if lo_y > c.imag + r:
        raise ValueError("region does not meet the domain")
    xs = np.linspace(c.real - r, c.real + r, n_grid + 1)
    ys = np.linspace(lo_y, c.imag + r, n_grid + 1)
    grid = (xs[None, :] + 1j * ys[:, None]).ravel()
    grid = grid[np.abs(grid - c) <= r * (1 + 1e-12)]
    extra = _project(np.concatenate([_candidates(m), [c]]), c, r, cut)
    pts = np.concatenate([grid, extra])

    def dens(z):
        with np.errstate(all="ignore"):
            v = np.asarray(m.density(np.asarray(z, dtype=np.complex128)), dtype=float)
        if not np.all(np.isfinite(v)):
            raise UnboundedMapError("energy density unbounded on the region")
        return v

    vals = dens(pts)
    best = float(vals.max())
    ties = pts[vals >= best - 1e-13 * max(best, 1e-300)]
    p = _lexmin(ties)
    fp = best
    step = float(xs[1] - xs[0])
    dirs = np.exp(1j * np.pi * np.arange(8) / 4)
    for _ in range(20_000):
        if step <= pos_tol:
            break
        nb = _project(p + step * dirs, c, r, cut)
        nb = nb[np.abs(nb - c) <= r * (1 + 1e-12)]
        if len(nb) == 0:
            step /= 2
            continue
        v = dens(nb)
        top = float(v.max())
        if top > fp * (1 + 1e-14) and top > fp:
            p = _lexmin(nb[v >= top - 1e-15 * top])
            fp = top
        else:
            step /= 2
    return complex(p)


def solve_delta(
    m: RationalMap,
    z,
    target: float,
    r_max: float,
    cut: float | None = None,
    rtol: float = 1e-8,
    tol: float = 1e-10,
) -> float:
    """Radius ``delta`` with ``E(m; B_delta(z)) = target`` by bisection in ``log r``."""
    z = complex(z)
    if not target > 0:
        raise ValueError("target energy must be positive")

    def e(r):
        return energy(m, HalfBall(z, r, cut), tol=tol, focus=z).value

    if e(r_max) < target:
        raise ValueError("insufficient local energy")
    lo, hi = r_max * 1e-14, r_max
    if e(lo) >= target:
        return lo
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if e(mid) < target:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


@dataclass
class RescaleDiagnostics:
    """Per-``nu`` peak, scales and the Case I/II classification."""

    z0: complex
    nus: list[int]
    peaks: list[complex]
    deltas: list[float]
    eps: list[float]
    ratios: list[float]
    eta: float
    case: str
    target: float
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "z0": point_to_json(self.z0),
            "case": self.case,
            "eta": self.eta if math.isfinite(self.eta) else "inf",
            "target_energy": self.target,
            "ladder": [
                {
                    "nu": nu,
                    "peak": [p.real, p.imag],
                    "delta": d,
                    "eps": e,
                    "ratio": r if math.isfinite(r) else "inf",
                }
                for nu, p, d, e, r in zip(self.nus, self.peaks, self.deltas, self.eps, self.ratios)
            ],
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        rows = [
            {"nu": nu, "peak_re": p.real, "peak_im": p.imag, "delta": d, "eps": e, "ratio": r}
            for nu, p, d, e, r in zip(self.nus, self.peaks, self.deltas, self.eps, self.ratios)
        ]
        return rows_to_csv(rows, ("nu", "peak_re", "peak_im", "delta", "eps", "ratio"))


class CaseUndetermined(ValueError):
    """Ratio ladder fits neither case; ``branches`` holds both rescalings."""

    def __init__(self, branches: dict):
        self.branches = branches
        super().__init__("case undetermined")


def _classify(ratios: Sequence[float], eta_max: float, k: int) -> str:
    r = np.asarray(ratios[-k:], dtype=float)
    if r[-1] > eta_max:
        return "II"
    d = np.diff(r)
    inc = bool(np.all(d > 0))
    if inc and r[-1] >= 2.0 * max(r[0], 1e-300):
        return "II"
    flat = float(r.max() - r.min()) <= 0.1 * max(1.0, float(r.max()))
    if inc or bool(np.all(d <= 0)) or flat:
        return "I"
    return "undetermined"


def _rescaled(family, nus, case, peaks, deltas, ys, eps, parent_cuts):
    phis, cuts, radii = {}, {}, {}
    for k, nu in enumerate(nus):
        p, d = peaks[k], deltas[k]
        if case == "interior":
            phis[nu] = Moebius.affine(p, d)
            pc = parent_cuts[k]
            cuts[nu] = (pc - p.imag) / d if math.isfinite(pc) else -math.inf
            radii[nu] = eps[k] / d
        elif case == "I":
            phis[nu] = Moebius.affine(complex(p.real, parent_cuts[k]), d)
            cuts[nu] = 0.0
            radii[nu] = eps[k] / d
        else:
            phis[nu] = Moebius.affine(complex(p.real, parent_cuts[k]), ys[k])
            cuts[nu] = 0.0
            radii[nu] = eps[k] / ys[k]
    domain = DomainKind.SPHERE if case == "interior" else DomainKind.DISC
    name = f"{getattr(family, 'name', '')}/{case}"
    return RescaledFamily(family, phis, cuts, radii, domain, case, name)


def soft_rescale(
    family,
    z0,
    m0: float,
    profile: BubblingProfile | None = None,
    search_radius: float | None = None,
    others: Sequence[complex] = (),
) -> tuple[RescaledFamily, RescaleDiagnostics]:
    """Rescale ``family`` at the bubble point ``z0`` of mass ``m0``.

    Interior points are rescaled by ``z^nu + delta^nu z`` onto a sphere.
    Boundary points use ``x^nu + delta^nu z`` while ``y^nu / delta^nu``
    stays bounded (Case I) and ``x^nu + y^nu z`` when it grows (Case II, a
    ghost candidate).  Raises :class:`CaseUndetermined` carrying both
    branches when the ratio ladder fits neither pattern.
    """
    pr = BubblingProfile() if profile is None else profile
    z0 = complex(z0)
    nus = list(pr.nus)
    r_s = pr.search_radius if search_radius is None else search_radius
    gaps = [abs(z0 - complex(o)) for o in others if o is not None and np.isfinite(complex(o))]
    if gaps:
        r_s = min(r_s, 0.5 * min(gaps))
    target = m0 - pr.hbar / 2
    peaks, deltas, ys, cuts = [], [], [], []
    for nu in nus:
        m = family.at(nu)
        cut = family.cut_at(nu)
        p = find_peak(m, HalfBall(z0, r_s, cut))
        d = solve_delta(m, p, target, 2 * r_s, cut, tol=pr.tol)
        peaks.append(p)
        deltas.append(d)
        ys.append(p.imag - cut if math.isfinite(cut) else math.inf)
        cuts.append(cut)
    interior = not math.isfinite(cuts[-1]) or z0.imag - cuts[-1] > BOUNDARY_SNAP
    ratios = [y / d for y, d in zip(ys, deltas)]
    cap = min(gaps) if gaps else math.inf
    cap = min(cap, r_s)
    notes = ["comparison scale eps^nu = sqrt(scale), capped at the nearest other bubble point (own rule)"]
    if interior:
        case = "interior"
    else:
        case = _classify(ratios, pr.eta_max, pr.trend_points)

    def build(c):
        scale = ys if c == "II" else deltas
        eps = [min(math.sqrt(s), cap) for s in scale]
        fam = _rescaled(family, nus, c, peaks, deltas, ys, eps, cuts)
        diag = RescaleDiagnostics(
            z0, nus, peaks, deltas, eps, ratios, float(max(ratios)) if not interior else math.inf, c, target, notes
        )
        return fam, diag

    if case == "undetermined":
        raise CaseUndetermined({"I": build("I"), "II": build("II")})
    return build(case)


# --------------------------------------------------------------------------
# limit maps
# --------------------------------------------------------------------------


@dataclass
class LimitFit:
    """Coefficient-extrapolated limit of a family (convenience mode)."""

    map: RationalMap
    cancelled: list[complex]
    models: list[str]
    residual: float

    def to_json(self) -> dict:
        return {
            "map": self.map.to_json(),
            "cancelled_roots": [[z.real, z.imag] for z in self.cancelled],
            "models": sorted(set(self.models)),
            "fit_residual": self.residual,
        }


def _snap(c: np.ndarray, rel: float) -> np.ndarray:
    c = np.asarray(c, dtype=np.complex128).copy()
    scale = float(np.max(np.abs(c))) if len(c) else 0.0
    re, im = c.real, c.imag
    re[np.abs(re) < rel * scale] = 0.0
    im[np.abs(im) < rel * scale] = 0.0
    return re + 1j * im


def _project_boundary(num: np.ndarray, den: np.ndarray, domain: DomainKind, target) -> tuple[np.ndarray, np.ndarray]:
    """Nearest coefficients satisfying the boundary condition exactly."""
    if domain is not DomainKind.DISC:
        return num, den
    if isinstance(target, ProjectiveLine):
        allc = np.concatenate([num, den])
        piv = allc[int(np.argmax(np.abs(allc)))]
        ph = piv / abs(piv)
        return (num / ph).real.astype(np.complex128), (den / ph).real.astype(np.complex128)
    if isinstance(target, UnitDiscPlane):
        n = max(len(num), len(den))
        p = np.zeros(n, np.complex128)
        q = np.zeros(n, np.complex128)
        p[: len(num)] = num
        q[: len(den)] = den
        inner = np.vdot(np.conj(q), p)
        if abs(inner) == 0:
            return num, den
        lam = inner / abs(inner)
        q2 = 0.5 * (q + lam * np.conj(p))
        return lam * np.conj(q2), q2
    return num, den


def _fit_radius(family, nu) -> float:
    if isinstance(family, RescaledFamily) and family.case != "chart":
        return family.radius_at(nu)
    return math.inf


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, np.complex128)
    out[: len(c)] = c
    return out


def _truncate(f: RationalFn, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``f`` with roots beyond ``radius`` frozen into the constant.

    On ``|z| << |r|`` a factor ``z - r`` is ``-r`` up to ``O(|z/r|)``, so the
    truncated function agrees with ``f`` on the rescaled ball while its degree
    no longer carries the far-away part of the family.
    """
    num, den = f.num_array(), f.den_array()
    if not math.isfinite(radius):
        return num, den

    def cut(c):
        c = np.trim_zeros(c, "b")
        if len(c) <= 1:
            return c
        roots = np.roots(c[::-1])
        lead = c[-1]
        near = roots[np.abs(roots) <= radius]
        far = roots[np.abs(roots) > radius]
        lead = lead * np.prod(-far)
        return (lead * np.poly(near))[::-1] if len(near) else np.array([lead])

    return cut(num), cut(den)


def fit_limit_map(
    family,
    nus: Sequence[int],
    snap: float = 1e-6,
    cancel_tol: float = 2e-2,
) -> LimitFit:
    """Extrapolate the normalised coefficients of ``family`` to ``nu = inf``.

    Numerator and denominator are scaled jointly by the coefficient that is
    largest at the top of the ladder; each coefficient is extrapolated in
    ``nu``; tiny coefficients are zeroed; nearly common roots are cancelled
    (they mark bubble candidates) and the result is projected onto the
    boundary condition.
    """
    maps = [family.at(nu) for nu in nus]
    radii = [_fit_radius(family, nu) for nu in nus]
    comps, cancelled, models = [], [], []
    resid = 0.0
    for k in range(len(maps[0].components)):
        pairs = [_truncate(m.components[k], r) for m, r in zip(maps, radii)]
        nl = max(len(p) for p, _ in pairs)
        dl = max(len(q) for _, q in pairs)
        rows = np.array([np.concatenate([_pad(p, nl), _pad(q, dl)]) for p, q in pairs])
        piv = int(np.argmax(np.abs(rows[-1])))
        rows = rows / rows[:, piv : piv + 1]
        lim = np.zeros(rows.shape[1], np.complex128)
        for j in range(rows.shape[1]):
            er = extrapolate_nu(nus, rows[:, j].real)
            ei = extrapolate_nu(nus, rows[:, j].imag)
            lim[j] = er.value + 1j * ei.value
            models += [er.model, ei.model]
            resid = max(resid, er.residual, ei.residual)
        lim = _snap(lim, snap)
        num, den, gone = cancel_common_roots(list(lim[:nl]), list(lim[nl:]), cancel_tol)
        cancelled += gone
        num, den = _project_boundary(np.asarray(num, complex), np.asarray(den, complex), family.domain, family.target)
        # snapping can break the symmetry, so project once more
        num, den = _project_boundary(_snap(num, snap), _snap(den, snap), family.domain, family.target)
        comps.append(RationalFn(tuple(complex(c) for c in num), tuple(complex(c) for c in den)))
    return LimitFit(RationalMap(family.domain, family.target, tuple(comps)), cancelled, models, resid)


# --------------------------------------------------------------------------
# bubble points
# --------------------------------------------------------------------------


@dataclass
class BubblePoint:
    """A bubble point in the chart ``chart`` of its family, with its mass."""

    local: complex
    chart: str
    family: object
    mass: MassEstimate
    peaks: list[complex]
    boundary: bool

    @property
    def point(self) -> SpherePoint:
        """The bubble point in the family's own coordinates (may be infinity)."""
        if self.chart == "A":
            return SpherePoint.from_complex(self.local)
        if self.local == 0:
            return INFINITY
        sign = -1 if self.family.domain is DomainKind.DISC else 1
        return SpherePoint.from_complex(sign / self.local)

    def to_json(self) -> dict:
        return {
            "point": point_to_json(self.point),
            "chart": self.chart,
            "boundary": self.boundary,
            "mass": self.mass.value,
            "mass_detail": self.mass.to_json(),
            "peaks": [[p.real, p.imag] for p in self.peaks],
        }


def _clusters(pts: np.ndarray, link: float) -> list[list[int]]:
    seen = np.zeros(len(pts), bool)
    out = []
    for i in range(len(pts)):
        if seen[i]:
            continue
        stack, comp = [i], []
        seen[i] = True
        while stack:
            j = stack.pop()
            comp.append(j)
            near = np.nonzero((np.abs(pts - pts[j]) <= link) & ~seen)[0]
            seen[near] = True
            stack.extend(int(x) for x in near)
        out.append(sorted(comp))
    return out


def _grid_candidates(fam, nu: int, radius: float, h: float, threshold: float, tol: float) -> list[complex]:
    m = fam.at(nu)
    cut = fam.cut_at(nu)
    xs = np.arange(-radius, radius + 0.5 * h, h)
    y0 = max(cut, -radius) if math.isfinite(cut) else -radius
    ys = np.arange(y0, radius + 0.5 * h, h)
    pts = (xs[None, :] + 1j * ys[:, None]).ravel()
    pts = pts[np.abs(pts) <= radius + 1e-12]
    if m.is_constant():
        return []
    masses = np.array([energy(m, HalfBall(p, h, cut), tol=tol).value for p in pts])
    hot = masses >= threshold
    if not np.any(hot):
        return []
    hp, hm = pts[hot], masses[hot]
    seeds = []
    for comp in _clusters(hp, 1.5 * h):
        k = comp[int(np.argmax(hm[comp]))]
        seeds.append(complex(find_peak(m, HalfBall(hp[k], 2 * h, cut))))
    return seeds


def _round(z: complex, digits: int = 9) -> complex:
    return complex(round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0)


def detect_bubble_points(
    family,
    profile: BubblingProfile | None = None,
    limit_map: RationalMap | None = None,
) -> list[BubblePoint]:
    """Points where at least ``hbar`` of energy concentrates along the ladder.

    A grid of balls of radius ``h`` is scanned at the top of the ladder;
    each cluster with mass at least ``hbar/2`` seeds a peak that is tracked
    down the ladder.  The bubble point is the extrapolated peak and its mass
    the double limit of the energy of shrinking balls about the tracked
    peaks.  Root families are scanned in two charts so infinity is covered.
    """
    pr = BubblingProfile() if profile is None else profile
    nus = list(pr.nus)
    top = nus[-1]
    if isinstance(family, RescaledFamily) and family.case != "chart":
        radius = min(4.0, 0.75 * family.radius_at(top))
        charts = [("A", family, radius)]
    else:
        charts = [("A", family, 1.0), ("B", chart_family(family, nus), 1.0)]
    raw = []
    for label, fam, radius in charts:
        h = pr.grid_h * radius
        for p in _grid_candidates(fam, top, radius, h, pr.hbar / 2, 1e-7):
            raw.append((label, fam, p, radius))
    # the two charts overlap near the unit circle: keep the better-centred copy
    sign = -1 if family.domain is DomainKind.DISC else 1
    glob = [p if lab == "A" else (sign / p if p != 0 else complex(math.inf)) for lab, _, p, _ in raw]
    keep = []
    for i, item in enumerate(raw):
        dup = False
        for j in keep:
            if SpherePoint.from_complex(glob[i]).equals(SpherePoint.from_complex(glob[j]), 1e-12) or (
                _chordal_c(glob[i], glob[j]) < pr.grid_h
            ):
                if abs(raw[j][2]) <= abs(item[2]) + 1e-6:
                    dup = True
                else:
                    keep.remove(j)
                break
        if not dup:
            keep.append(i)
    out = []
    for i in keep:
        label, fam, p, radius = raw[i]
        others = [raw[j][2] for j in keep if j != i and raw[j][0] == label]
        gap = min([abs(p - o) for o in others], default=math.inf)
        r_t = min(pr.search_radius * radius, 0.5 * gap)
        peaks = [find_peak(fam.at(nu), HalfBall(p, r_t, fam.cut_at(nu))) for nu in nus]
        zr = extrapolate_nu(nus, [q.real for q in peaks]).value
        zi = extrapolate_nu(nus, [q.imag for q in peaks]).value
        z = _round(complex(zr, zi))
        cut = fam.cut_at(top)
        boundary = fam.domain is DomainKind.DISC and _reaches_boundary(z, peaks, cut)
        if boundary:
            z = complex(z.real, cut)
        eps = [e * radius for e in pr.eps if e * radius < 0.5 * gap]
        if len(eps) < 3:
            eps = [0.4 * gap * 2.0**-k for k in range(5)]
        base_map = limit_map if (label == "A" and limit_map is not None) else None
        if label == "B" and limit_map is not None:
            base_map = limit_map.inverted_chart() if fam.domain is DomainKind.DISC else _sphere_chart(limit_map)
        base = None
        if base_map is not None and not base_map.is_constant():

            def base(e, z=z, bm=base_map):
                return energy(bm, HalfBall(z, e), tol=pr.tol, focus=z).value

        def measure(nu, e, fam=fam, peaks=peaks):
            k = nus.index(nu)
            return energy(fam.at(nu), HalfBall(peaks[k], e, fam.cut_at(nu)), tol=pr.tol, focus=peaks[k])

        mass = double_limit(nus, eps, measure, base)
        if mass.value >= pr.hbar - pr.mass_tol:
            out.append(BubblePoint(z, label, fam, mass, peaks, boundary))
    return out


def _reaches_boundary(z: complex, peaks: Sequence[complex], cut: float) -> bool:
    """Extrapolated point on the edge, or peaks closing in on it.

    Peaks that approach the boundary only logarithmically leave an
    extrapolation remainder well above round-off, so a point whose height
    fell below 2% of the first tracked height on a decreasing ladder counts.
    """
    h = abs(z.imag - cut)
    if h <= BOUNDARY_SNAP:
        return True
    heights = np.array([q.imag - cut for q in peaks])
    return bool(np.all(np.diff(heights) < 0) and h <= 0.02 * heights[0])


def _chordal_c(a: complex, b: complex) -> float:
    from .geometry import chordal

    return chordal(a, b)


def _sphere_chart(m: RationalMap) -> RationalMap:
    return RationalMap(
        m.domain, m.target, tuple(f.compose(Moebius(0, 1, 1, 0)) for f in m.components)
    )


# --------------------------------------------------------------------------
# removal of singularities
# --------------------------------------------------------------------------


@dataclass
class RemovalReport:
    z0: complex
    radii: list[float]
    energies: list[float]
    lengths: list[float]
    removable: bool
    extension_exact: bool | None
    verdict: str

    def to_json(self) -> dict:
        return {
            "z0": point_to_json(self.z0),
            "radii": self.radii,
            "energies": self.energies,
            "lengths": self.lengths,
            "removable": self.removable,
            "extension_exact": self.extension_exact,
            "verdict": self.verdict,
        }


def removal_of_singularity_check(
    m: RationalMap | None,
    z0,
    radii: Sequence[float] | None = None,
    ball_energy=None,
    circle_length=None,
    decay: float = 1e-2,
    tol: float = 1e-10,
) -> RemovalReport:
    """Check that energy and loop length both die out at a puncture.

    With a rational ``m`` the ball energies and the lengths of the image
    arcs are computed directly; otherwise the callables ``ball_energy(r)``
    and (optionally) ``circle_length(r)`` supply them.  The puncture is
    removable when both ladders decrease and end below ``decay`` times their
    first value.
    """
    z0 = complex(z0)
    rs = list(radii) if radii is not None else [0.1 * 2.0**-k for k in range(8)]
    if m is not None:
        cut = 0.0 if m.domain is DomainKind.DISC else None

        def ball_energy(r):
            return energy(m, HalfBall(z0, r, cut), tol=tol, focus=z0).value

        def circle_length(r):
            if m.domain is DomainKind.DISC and abs(z0.imag) <= BOUNDARY_SNAP:
                return curve_length(m, z0, r, (0.0, math.pi))
            lo = 0.0
            if m.domain is DomainKind.DISC and z0.imag < r:
                lo = -math.asin(z0.imag / r)
                return curve_length(m, z0, r, (lo, math.pi - lo))
            return curve_length(m, z0, r, (0.0, 2 * math.pi))

    if ball_energy is None:
        raise ValueError("need a map or a ball_energy callable")
    es = [float(ball_energy(r)) for r in rs]
    ls = [float(circle_length(r)) for r in rs] if circle_length is not None else []

    def dies(vals):
        if not vals:
            return True
        v = np.asarray(vals)
        return bool(np.all(np.diff(v) <= 1e-12 * max(1.0, abs(v[0])))) and v[-1] <= decay * max(v[0], 1e-300)

    ok = dies(es) and dies(ls)
    exact = None
    if m is not None and ok:
        # a rational map is its own extension; it only has to be finite at z0
        try:
            m.eval_point(z0)
            exact = True
        except UnboundedMapError:
            exact = False
    verdict = "removable" if ok else "not removable at tolerance"
    return RemovalReport(z0, rs, es, ls, ok, exact, verdict)


# --------------------------------------------------------------------------
# convergence conditions
# --------------------------------------------------------------------------


@dataclass
class ConditionVerdict:
    """One checked condition on one vertex or directed edge."""

    condition: str
    where: str
    verdict: str
    ladder: list[float]
    final: float
    detail: dict = field(default_factory=dict)
    nus: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "where": self.where,
            "verdict": self.verdict,
            "ladder": [_jnum(x) for x in self.ladder],
            "final": _jnum(self.final),
            "detail": self.detail,
            "nus": list(self.nus),
        }


def _jnum(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _trend(vals: Sequence[float], tol: float, k: int) -> str:
    v = np.asarray(vals[-k:], dtype=float)
    if not np.all(np.isfinite(v)):
        return "unconverged"
    d = np.diff(v)
    mono = bool(np.all(d <= 1e-12 * max(1.0, float(np.abs(v).max()))))
    return "pass" if mono and v[-1] < tol else "fail"


def _limit_trend(nus: Sequence[int], vals: Sequence[float], tol: float, k: int) -> tuple[str, float]:
    """Verdict on a deviation ladder that should tend to 0 as ``nu -> inf``.

    Needs a non-increasing tail; then either the last value or the
    extrapolated limit of the tail must be below ``tol``.
    """
    v = np.asarray(vals[-k:], dtype=float)
    if not np.all(np.isfinite(v)):
        return "unconverged", math.nan
    d = np.diff(v)
    if not np.all(d <= 1e-12 * max(1.0, float(np.abs(v).max()))):
        return "fail", math.nan
    lim = extrapolate_nu(list(nus)[-k:], v, window=k).value
    return ("pass" if v[-1] < tol or abs(lim) < tol else "fail"), lim


def _pullback_cut(root_domain: DomainKind, phi: Moebius) -> float:
    """Lower edge of ``phi^-1(H)`` when it is a half-plane ``Im z >= cut``."""
    if root_domain is not DomainKind.DISC:
        return -math.inf
    if phi.disc_automorphism:
        return 0.0
    if phi.is_affine():
        a = complex(phi.a) / complex(phi.d)
        b = complex(phi.b) / complex(phi.d)
        if abs(a.imag) <= 1e-12 * abs(a) and a.real > 0:
            return -b.imag / a.real
    return -math.inf


def vertex_family(family, mf: MoebiusFamily, domain: DomainKind, nus: Sequence[int]) -> RescaledFamily:
    phis = {nu: mf.at(nu) for nu in nus}
    cuts = {nu: _pullback_cut(family.domain, phis[nu]) for nu in nus}
    return RescaledFamily(family, phis, cuts, {nu: math.inf for nu in nus}, domain, "vertex")


def _samples(kind: DomainKind, rho: float, exclude: Sequence[SpherePoint], n_r: int = 24, n_t: int = 48) -> np.ndarray:
    """Polar sample of ``K_rho``: the ``1/rho`` ball minus ``rho``-balls at ``exclude``."""
    big = 1.0 / rho
    r = np.linspace(0.0, big, n_r + 1)[1:]
    if kind is DomainKind.DISC:
        t = np.linspace(0.0, math.pi, n_t + 1)
    else:
        t = np.linspace(0.0, 2 * math.pi, n_t, endpoint=False)
    pts = np.concatenate([[0j], (r[:, None] * np.exp(1j * t[None, :])).ravel()])
    keep = np.ones(len(pts), bool)
    for p in exclude:
        if p.is_infinity:
            continue
        keep &= np.abs(pts - p.to_complex()) >= rho
    return pts[keep]


def _tdist(target, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, np.complex128)
    b = np.asarray(b, np.complex128)
    if isinstance(target, ProjectiveLine):
        with np.errstate(all="ignore"):
            ia, ib = ~np.isfinite(a), ~np.isfinite(b)
            a0 = np.where(ia, 0, a)
            b0 = np.where(ib, 0, b)
            na = np.sqrt(1 + np.abs(a0) ** 2)
            nb = np.sqrt(1 + np.abs(b0) ** 2)
            d = np.abs(a0 - b0) / (na * nb)
            d = np.where(ia & ~ib, 1 / nb, d)
            d = np.where(ib & ~ia, 1 / na, d)
            d = np.where(ia & ib, 0.0, d)
        return d
    if a.ndim > 1 or b.ndim > 1:
        return np.linalg.norm(np.atleast_2d(a) - np.atleast_2d(b), axis=-1)
    return np.abs(a - b)


def _chart_values(target, g: np.ndarray, flip: np.ndarray) -> np.ndarray:
    if not isinstance(target, ProjectiveLine):
        return g
    with np.errstate(all="ignore"):
        return np.where(flip, 1.0 / g, g)


def _map_deviation(target, g: RationalMap, u: RationalMap, pts: np.ndarray, h: float = 1e-3) -> tuple[float, float, float]:
    """Sup distance and first/second difference-quotient deviations."""
    gv, uv = g.eval(pts), u.eval(pts)
    c0 = float(np.max(_tdist(target, gv, uv))) if len(pts) else 0.0
    if not len(pts):
        return 0.0, 0.0, 0.0
    # poles carry no derivative information in a fixed chart; C0 covers them
    keep = np.isfinite(gv) & np.isfinite(uv)
    pts, gv, uv = pts[keep], gv[keep], uv[keep]
    if not len(pts):
        return c0, 0.0, 0.0
    with np.errstate(all="ignore"):
        flip = np.abs(uv) > 1 if isinstance(target, ProjectiveLine) else None
    devs = []
    vals = {}
    for name, m in (("g", g), ("u", u)):
        left, mid, right = m.eval(pts - h), m.eval(pts), m.eval(pts + h)
        if flip is not None:
            left, mid, right = (_chart_values(target, x, flip) for x in (left, mid, right))
        vals[name] = ((right - left) / (2 * h), (right - 2 * mid + left) / h**2)
    for k in range(2):
        diff = np.abs(np.asarray(vals["g"][k]) - np.asarray(vals["u"][k]))
        diff = diff.reshape(len(pts), -1).max(axis=1) if diff.ndim > 1 else diff
        devs.append(float(np.nanmax(np.where(np.isfinite(diff), diff, np.inf))))
    return c0, devs[0], devs[1]


def _domain_dist(kind: DomainKind, pts: np.ndarray, z: SpherePoint) -> np.ndarray:
    if kind is DomainKind.DISC and not z.is_infinity:
        with np.errstate(all="ignore"):
            d = np.abs(pts - z.to_complex())
        return np.where(np.isfinite(pts), d, np.inf)
    zc = z.to_complex() if not z.is_infinity else complex(math.inf)
    return _tdist(ProjectiveLine(), pts, np.full(len(pts), zc))


def _rooted(tree: BubbleTree, root: str) -> list[tuple[str, str]]:
    """Edges oriented away from ``root`` in breadth-first order."""
    out, seen, queue = [], {root}, [root]
    while queue:
        v = queue.pop(0)
        for w in sorted(tree.neighbours(v)):
            if w not in seen:
                seen.add(w)
                out.append((v, w))
                queue.append(w)
    return out


def _guess_root(cand: GromovLimitCandidate, family, nus) -> str:
    if cand.root is not None:
        return cand.root
    for v in sorted(cand.tree.maps):
        if v in cand.moebius_families and cand.moebius_families[v].at(nus[-1]).equals(Moebius.identity()):
            return v
    return sorted(cand.tree.maps)[0]


def _affine_scale(phi: Moebius) -> float:
    if not phi.is_affine():
        return math.nan
    return abs(complex(phi.a) / complex(phi.d))


def connection_ladder(
    tree: BubbleTree,
    parent: str,
    child: str,
    radii: Sequence[float],
) -> tuple[float, list[float]]:
    """Bubble-connection residual of the edge ``parent -> child``.

    Returns the exact mismatch ``dist(u_parent(z), u_child(z'))`` of the
    limit maps at the nodal points together with its finite-``nu``
    surrogate: the largest distance from ``u_parent(z)`` to the image of the
    neck circle of radius ``R_nu`` about the child's nodal point (or the
    circle of radius ``1/R_nu`` about a finite nodal point).
    """
    t = tree.maps[parent].target
    up = tree.maps[parent].eval_point(tree.nodal[(parent, child)])
    uc = tree.maps[child].eval_point(tree.nodal[(child, parent)])
    a = _sp_value(up)
    exact = float(_tdist(t, np.array([a]), np.array([_sp_value(uc)]))[0])
    zc = tree.nodal[(child, parent)]
    disc = tree.kind(child) is DomainKind.DISC
    theta = np.linspace(0.0, math.pi, 257) if disc else np.linspace(0.0, 2 * math.pi, 512, endpoint=False)
    out = []
    for r in radii:
        if zc.is_infinity:
            circle = r * np.exp(1j * theta)
        else:
            circle = zc.to_complex() + np.exp(1j * theta) / r
        vals = tree.maps[child].eval(circle)
        out.append(float(np.max(_tdist(t, np.full(len(circle), a), vals))))
    return exact, out


def _sp_value(p):
    if isinstance(p, SpherePoint):
        return complex(math.inf) if p.is_infinity else p.to_complex()
    return p


def verify_gromov_convergence(
    family,
    candidate: GromovLimitCandidate,
    profile: BubblingProfile | None = None,
) -> dict:
    """Check the convergence conditions of ``family`` to ``candidate`` on the ladder.

    Returns a dict with the candidate's validation findings, one
    :class:`ConditionVerdict` per (condition, vertex/edge) and an overall
    ``accepted`` flag.  Each finite-``nu`` quantity must end below
    ``profile.conv_tol`` and be non-increasing over the last
    ``profile.trend_points`` ladder entries.
    """
    pr = BubblingProfile() if profile is None else profile
    nus = list(pr.nus)
    k = pr.trend_points
    tree = candidate.tree
    violations = list(validate(tree))
    stable = is_stable(tree) if not any(v.code in ("acyclic", "connected") for v in violations) else False
    if not stable:
        violations.append(Violation("stability", "candidate is not stable"))
    root = _guess_root(candidate, family, nus)
    fams = {
        v: vertex_family(family, candidate.moebius_families[v], tree.kind(v), nus)
        for v in tree.maps
        if v in candidate.moebius_families
    }
    missing = [v for v in tree.maps if v not in fams]
    for v in missing:
        violations.append(Violation("moebius", "no reparametrisation family", v))
    verdicts: list[ConditionVerdict] = []

    # (Map)
    for v in sorted(fams):
        u = tree.maps[v]
        worst = []
        parts = {}
        for rho in pr.rhos:
            base = _samples(tree.kind(v), rho, tree.nodal_points(v))
            row = []
            for nu in nus:
                pts = base[base.imag >= fams[v].cut_at(nu)] if math.isfinite(fams[v].cut_at(nu)) else base
                try:
                    c0, c1, c2 = _map_deviation(u.target, fams[v].at(nu), u, pts)
                    row.append(max(c0, c1, c2))
                except UnboundedMapError:
                    row.append(math.inf)
            parts[repr(rho)] = row
            worst.append(row)
        ladder = list(np.max(np.array(worst), axis=0))
        verdict, lim = _limit_trend(nus, ladder, pr.conv_tol, k)
        verdicts.append(ConditionVerdict("map", v, verdict, ladder, ladder[-1], {"per_rho": parts, "limit": _jnum(lim)}))

    # (Rescaling) in both directions along every edge
    for a, b in _rooted(tree, root):
        for x, y in ((a, b), (b, a)):
            if x not in fams or y not in fams:
                continue
            zxy = tree.nodal[(x, y)]
            zyx = tree.nodal[(y, x)]
            rows = []
            for rho in pr.rhos:
                pts = _samples(tree.kind(y), rho, [zyx])
                row = []
                for nu in nus:
                    psi = moebius_compose(moebius_inverse(fams[x].phi(nu)), fams[y].phi(nu))
                    row.append(float(np.max(_domain_dist(tree.kind(x), psi(pts), zxy))))
                rows.append(row)
            ladder = list(np.max(np.array(rows), axis=0))
            verdict, lim = _limit_trend(nus, ladder, pr.conv_tol, k)
            verdicts.append(
                ConditionVerdict("rescaling", f"{x}->{y}", verdict, ladder, ladder[-1], {"limit": _jnum(lim)})
            )

    # (Energy) in both directions along every edge
    for a, b in _rooted(tree, root):
        for x, y in ((a, b), (b, a)):
            if x not in fams:
                continue
            want = bubble_tree_energy(tree, (x, y), tol=pr.tol).value
            verdicts.append(_energy_condition(fams[x], tree, x, y, want, pr))

    # degenerate vertices: pointed spheres, whose boundary has collapsed to infinity
    for v in sorted(fams):
        if tree.kind(v) is not DomainKind.POINTED_SPHERE:
            continue
        verdicts.extend(_degenerate_conditions(fams[v], tree, v, pr))

    for c in verdicts:
        if len(c.ladder) == len(nus) and not c.nus:
            c.nus = list(nus)
    ok = not violations and all(c.verdict == "pass" for c in verdicts)
    return {
        "accepted": ok,
        "root": root,
        "violations": [v.to_json() for v in violations],
        "conditions": verdicts,
    }


_TOTALS: dict = {}


def _base_family(fam):
    while isinstance(fam, RescaledFamily):
        fam = fam.parent
    return fam


def _outside(fam, nu, radius: float, tol: float):
    """``E(f^nu o phi^nu; |z| > radius)`` as the total energy minus a ball."""
    base = _base_family(fam)
    key = (id(base), nu, tol)
    if key not in _TOTALS:
        _TOTALS[key] = (base, energy(base.at(nu), tol=tol))
    total = _TOTALS[key][1]
    ball = energy(fam.at(nu), HalfBall(0j, radius, fam.cut_at(nu)), tol=tol, focus=0j)
    return Quadrant(
        total.value - ball.value,
        total.error_estimate + ball.error_estimate,
        total.cells_used + ball.cells_used,
        total.converged and ball.converged,
    )


def _ladder_eps(pr: BubblingProfile, gap: float) -> list[float]:
    eps = [e for e in pr.eps if e < 0.5 * gap]
    if len(eps) < 3:
        eps = [0.4 * gap * 2.0**-j for j in range(5)]
    return eps


def _energy_condition(fam: RescaledFamily, tree: BubbleTree, x: str, y: str, want: float, pr) -> ConditionVerdict:
    nus = list(pr.nus)
    z = tree.nodal[(x, y)]
    u = tree.maps[x]
    others = [p for p in tree.nodal_points(x) if not p.equals(z)]
    if z.is_infinity:
        radii = [max(2.5, 2 * max([abs(p.to_complex()) for p in others if not p.is_infinity], default=0.0))]
        eps = [1.0 / (radii[0] * 2.0**j) for j in range(5)]

        def measure(nu, e):
            return _outside(fam, nu, 1.0 / e, pr.tol)

        def base(e):
            return energy(u, Complement(HalfBall(0j, 1.0 / e)), tol=pr.tol).value

    else:
        zc = z.to_complex()
        gap = min([abs(zc - p.to_complex()) for p in others if not p.is_infinity], default=math.inf)
        eps = _ladder_eps(pr, gap)

        def measure(nu, e):
            return energy(fam.at(nu), HalfBall(zc, e, fam.cut_at(nu)), tol=pr.tol, focus=zc)

        def base(e):
            return energy(u, HalfBall(zc, e), tol=pr.tol, focus=zc).value

    try:
        est = double_limit(nus, eps, measure, None if u.is_constant() else base)
    except MassUndetermined as exc:
        return ConditionVerdict("energy", f"{x}->{y}", "unconverged", [], math.nan, {"error": str(exc)})
    gap_e = abs(est.value - want)
    verdict = "pass" if gap_e <= pr.conv_tol else "fail"
    if not est.converged:
        verdict = "unconverged"
    inner_last = [v["y"][-1] for v in est.inner.values()]
    return ConditionVerdict(
        "energy",
        f"{x}->{y}",
        verdict,
        inner_last,
        gap_e,
        {"double_limit": est.value, "tree_energy": want, "estimate": est.to_json()},
    )


def _degenerate_conditions(fam: RescaledFamily, tree: BubbleTree, v: str, pr) -> list[ConditionVerdict]:
    nus = list(pr.nus)
    k = pr.trend_points
    out = []
    # compact sets must eventually sit inside the original domain
    rows = []
    for rho in pr.rhos:
        big = 1.0 / rho
        t = np.linspace(0, 2 * math.pi, 256, endpoint=False)
        r = np.linspace(0, big, 17)
        pts = (r[:, None] * np.exp(1j * t[None, :])).ravel()
        row = []
        for nu in nus:
            img = fam.phi(nu)(pts)
            row.append(float(-np.min(img.imag)) if fam.parent.domain is DomainKind.DISC else -math.inf)
        rows.append(row)
    ladder = list(np.max(np.array(rows), axis=0))
    ok = all(x < 0 for x in ladder[-k:])
    out.append(
        ConditionVerdict(
            "degenerate-rescaling",
            v,
            "pass" if ok else "fail",
            ladder,
            ladder[-1],
            {"meaning": "largest depth of phi(K) below the boundary line; negative means inside"},
        )
    )
    # no energy escapes to the collapsed boundary point
    u = tree.maps[v]

    def measure(nu, e):
        return _outside(fam, nu, 1.0 / e, pr.tol)

    def base(e):
        return energy(u, Complement(HalfBall(0j, 1.0 / e)), tol=pr.tol).value

    eps = [1.0 / (2.5 * 2.0**j) for j in range(5)]
    try:
        est = double_limit(nus, eps, measure, None if u.is_constant() else base)
        verdict = "pass" if abs(est.value) <= pr.conv_tol and est.converged else "fail"
        out.append(ConditionVerdict("degenerate-energy", v, verdict, [], abs(est.value), {"estimate": est.to_json()}))
    except MassUndetermined as exc:
        out.append(ConditionVerdict("degenerate-energy", v, "unconverged", [], math.nan, {"error": str(exc)}))
    return out


# --------------------------------------------------------------------------
# Gromov limit
# --------------------------------------------------------------------------


@dataclass
class LedgerRow:
    """Energy bookkeeping of one level: ``lim E = E(limit) + sum m_j + m_inf``."""

    vertex: str
    limit_energy: float
    vertex_energy: float
    masses: list[float]
    mass_at_infinity: float
    converged: bool

    @property
    def defect(self) -> float:
        return abs(self.limit_energy - self.vertex_energy - math.fsum(self.masses) - self.mass_at_infinity)

    def to_json(self) -> dict:
        return {
            "vertex": self.vertex,
            "lim_energy": self.limit_energy,
            "vertex_energy": self.vertex_energy,
            "masses": list(self.masses),
            "mass_at_infinity": self.mass_at_infinity,
            "defect": self.defect,
            "converged": self.converged,
        }


@dataclass
class Connection:
    parent: str
    child: str
    exact: float
    nus: list[int]
    radii: list[float]
    ladder: list[float]
    verdict: str

    @property
    def final(self) -> float:
        return self.ladder[-1] if self.ladder else self.exact

    def to_json(self) -> dict:
        return {
            "edge": [self.parent, self.child],
            "limit_residual": self.exact,
            "ladder": [{"nu": n, "neck_radius": _jnum(r), "residual": x} for n, r, x in zip(self.nus, self.radii, self.ladder)],
            "final": self.final,
            "verdict": self.verdict,
        }


@dataclass
class GromovReport:
    """Everything the pipeline learned about one family."""

    family: str
    mode: str
    tree: BubbleTree | None
    root: str | None
    bubble_points: dict = field(default_factory=dict)
    ledger: list[LedgerRow] = field(default_factory=list)
    connections: list[Connection] = field(default_factory=list)
    conditions: list[ConditionVerdict] = field(default_factory=list)
    violations: list[dict] = field(default_factory=list)
    rescalings: dict = field(default_factory=dict)
    stable: bool | None = None
    degree: dict = field(default_factory=dict)
    energy: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    accepted: bool | None = None

    def defect(self, vertex: str | None = None) -> float:
        rows = [r for r in self.ledger if vertex is None or r.vertex == vertex]
        return max(r.defect for r in rows) if rows else math.nan

    def vertex_residuals(self) -> dict:
        return {c.where: {"final": c.final, "ladder": c.ladder} for c in self.conditions if c.condition == "map"}

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "mode": self.mode,
            "root": self.root,
            "tree": serialize(self.tree) if self.tree is not None else None,
            "stable": self.stable,
            "bubble_points": self.bubble_points,
            "ledger": [r.to_json() for r in self.ledger],
            "connections": [c.to_json() for c in self.connections],
            "vertex_residuals": self.vertex_residuals(),
            "conditions": [c.to_json() for c in self.conditions],
            "violations": self.violations,
            "rescalings": self.rescalings,
            "degree": self.degree,
            "energy": self.energy,
            "accepted": self.accepted,
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        """Long-format ladders: one row per (kind, where, nu)."""
        rows = []
        for c in self.connections:
            for nu, x in zip(c.nus, c.ladder):
                rows.append({"kind": "connection", "where": f"{c.parent}->{c.child}", "nu": nu, "value": x,
                             "verdict": c.verdict})
        for c in self.conditions:
            for i, x in enumerate(c.ladder):
                nu = c.nus[i] if i < len(c.nus) else None
                rows.append({"kind": c.condition, "where": c.where, "nu": nu, "value": float(x), "verdict": c.verdict})
        for r in self.ledger:
            rows.append({"kind": "defect", "where": r.vertex, "nu": None, "value": r.defect,
                         "verdict": "converged" if r.converged else "unconverged"})
        return rows_to_csv(rows, ("kind", "where", "nu", "value", "verdict"))


def _neck_energy(fam: RescaledFamily, limit: RationalMap, pr: BubblingProfile) -> MassEstimate:
    """``lim_R lim_nu E(v^nu; R < |z| < R_nu)`` minus the limit's tail."""
    nus = list(pr.nus)
    eps = [1.0 / (2.5 * 2.0**j) for j in range(5)]

    def measure(nu, e):
        outer = fam.radius_at(nu)
        if not outer > (1.0 / e) * (1 + 1e-9):
            return Quadrant(0.0, 0.0, 0, True)
        if math.isinf(outer):
            return _outside(fam, nu, 1.0 / e, pr.tol)
        big = energy(fam.at(nu), HalfBall(0j, outer, fam.cut_at(nu)), tol=pr.tol, focus=0j)
        small = energy(fam.at(nu), HalfBall(0j, 1.0 / e, fam.cut_at(nu)), tol=pr.tol, focus=0j)
        return Quadrant(
            big.value - small.value,
            big.error_estimate + small.error_estimate,
            big.cells_used + small.cells_used,
            big.converged and small.converged,
        )

    base = None
    if not limit.is_constant():

        def base(e):
            return energy(limit, Complement(HalfBall(0j, 1.0 / e)), tol=pr.tol).value

    return double_limit(nus, eps, measure, base)


def _root_tail(family, limit: RationalMap, points: list[BubblePoint], pr: BubblingProfile) -> MassEstimate:
    nus = list(pr.nus)
    finite = [abs(b.point.to_complex()) for b in points if not b.point.is_infinity]
    r0 = max(2.5, 2.0 * max(finite, default=0.0))
    eps = [1.0 / (r0 * 2.0**j) for j in range(5)]

    def measure(nu, e):
        return energy(family.at(nu), Complement(HalfBall(0j, 1.0 / e, family.cut_at(nu))), tol=pr.tol)

    base = None
    if not limit.is_constant():

        def base(e):
            return energy(limit, Complement(HalfBall(0j, 1.0 / e)), tol=pr.tol).value

    return double_limit(nus, eps, measure, base)


def _constant_map(domain: DomainKind, target, value) -> RationalMap:
    v = _sp_value(value)
    if isinstance(v, complex) and not np.isfinite(v):
        raise NotImplementedError("constant vertex at infinity")
    return RationalMap.single(domain, target, (complex(v),))


def gromov_limit(
    family,
    candidate: GromovLimitCandidate | None = None,
    profile: BubblingProfile | None = None,
) -> GromovReport:
    """Bubble tree of ``family`` on the ladder, with its ledgers and checks.

    With ``candidate`` the report only verifies the supplied vertices and
    reparametrisations.  Without one it runs in fitted mode: limit maps are
    extrapolated from coefficients (a convenience that can pick wrong
    degrees, so the mode is recorded in the report), bubble points are
    detected and rescaled recursively, and the assembled tree is then
    verified like a supplied candidate.
    """
    pr = BubblingProfile() if profile is None else profile
    nus = list(pr.nus)
    name = getattr(family, "name", "")
    energies = [energy(family.at(nu), tol=pr.tol) for nu in nus]
    sup_e = max(q.value for q in energies)
    lim_e = extrapolate_nu(nus, [q.value for q in energies])
    e_info = {
        "ladder": [{"nu": nu, "energy": q.value, "error": q.error_estimate} for nu, q in zip(nus, energies)],
        "limit": lim_e.value,
        "sup": sup_e,
    }
    rel = relative_degree(family.at(nus[-1]))
    if candidate is not None:
        rep = GromovReport(name, "verification", candidate.tree, None, energy=e_info)
        _finish(rep, family, candidate, pr, rel, lim_e.value)
        return rep

    max_depth = math.ceil(sup_e / pr.hbar) + 1
    maps: dict[str, RationalMap] = {}
    edges: list[tuple[str, str]] = []
    nodal: dict = {}
    ghosts: set[str] = set()
    mfs: dict[str, dict] = {}
    radii: dict[tuple[str, str], dict] = {}
    rep = GromovReport(name, "fitted", None, "root", energy=e_info)
    rep.notes.append("limit maps fitted by coefficient extrapolation (convenience mode)")

    def analyze(fam, vid: str, phis: dict, lim_energy: float, depth: int, constant=None):
        if depth > max_depth:
            raise RuntimeError("internal error: recursion deeper than the energy bound allows")
        if constant is not None:
            limit = _constant_map(fam.domain, fam.target, constant)
            fit_info = {"constant": True}
        else:
            fit = fit_limit_map(fam, nus)
            limit = fit.map
            fit_info = fit.to_json()
        maps[vid] = limit
        mfs[vid] = phis
        points = detect_bubble_points(fam, pr, None if limit.is_constant() else limit)
        if len(points) > math.ceil(sup_e / pr.hbar):
            rep.notes.append(f"{vid}: more bubble points than the energy bound allows")
        rep.bubble_points[vid] = {"fit": fit_info, "points": [b.to_json() for b in points]}
        e_v = energy(limit, tol=pr.tol).value if not limit.is_constant() else 0.0
        conv = all(b.mass.converged for b in points)
        try:
            if vid == "root":
                tail = _root_tail(fam, limit, points, pr)
            else:
                tail = _neck_energy(fam, limit, pr)
            m_inf, conv = tail.value, conv and tail.converged
        except MassUndetermined as exc:
            rep.notes.append(f"{vid}: mass at infinity undetermined ({exc})")
            m_inf, conv = math.nan, False
        if any(b.point.is_infinity for b in points) and vid == "root":
            m_inf = 0.0
        rep.ledger.append(LedgerRow(vid, lim_energy, e_v, [b.mass.value for b in points], m_inf, conv))
        for j, bp in enumerate(points, start=1):
            cid = f"{vid}.{j}"
            others = [o.local for o in points if o is not bp and o.chart == bp.chart]
            try:
                child, diag = soft_rescale(bp.family, bp.local, bp.mass.value, pr, others=others)
            except CaseUndetermined as exc:
                rep.notes.append(f"{cid}: case undetermined, Case I branch followed")
                child, diag = exc.branches["I"]
            rep.rescalings[cid] = diag.to_json()
            chart = bp.family.phis[nus[-1]] if bp.chart == "B" else None
            cphis = {}
            for nu in nus:
                local = child.phi(nu) if chart is None else moebius_compose(chart, child.phi(nu))
                cphis[nu] = moebius_compose(phis[nu], local)
            edges.append((vid, cid))
            nodal[(vid, cid)] = bp.point
            nodal[(cid, vid)] = INFINITY
            radii[(vid, cid)] = {nu: child.radius_at(nu) for nu in nus}
            const = None
            if diag.case == "II":
                ghosts.add(cid)
                const = limit.eval_point(bp.point)
            analyze(child, cid, cphis, bp.mass.value, depth + 1, const)

    analyze(family, "root", {nu: Moebius.identity() for nu in nus}, lim_e.value, 1)

    root = "root"
    # a constant root with a single bubble is not stable: the bubble takes its place
    if maps["root"].is_constant() and len(edges) and sum(1 for e in edges if e[0] == "root") == 1:
        (_, child) = next(e for e in edges if e[0] == "root")
        if maps[child].domain is DomainKind.SPHERE:
            m = maps[child]
            maps[child] = RationalMap(DomainKind.POINTED_SPHERE, m.target, m.components)
        edges = [e for e in edges if e[0] != "root"]
        for key in [k for k in nodal if "root" in k]:
            del nodal[key]
        del maps["root"], mfs["root"]
        rep.notes.append(f"constant root with one bubble removed; {child} becomes the root")
        root = child
    tree = BubbleTree(maps, edges, nodal, frozenset(ghosts), pr.match_tol)
    rep.tree = tree
    rep.root = root
    cand = GromovLimitCandidate(
        tree,
        {v: MoebiusFamily.from_callable(lambda nu, v=v: mfs[v][nu], nus) for v in maps},
        {e: rep_mass(rep, e) for e in edges},
        root=root,
    )
    _finish(rep, family, cand, pr, rel, lim_e.value, radii)
    return rep


def rep_mass(rep: GromovReport, edge: tuple[str, str]) -> float:
    parent, child = edge
    j = int(child.rsplit(".", 1)[1]) - 1
    return float(rep.bubble_points[parent]["points"][j]["mass"])


def _finish(rep: GromovReport, family, cand: GromovLimitCandidate, pr, rel: int, lim_e: float, radii=None):
    nus = list(pr.nus)
    tree = cand.tree
    res = verify_gromov_convergence(family, cand, pr)
    rep.conditions = res["conditions"]
    rep.violations = res["violations"]
    rep.root = res["root"]
    rep.stable = is_stable(tree)
    td = total_degree(tree)
    rep.degree = {"tree": td, "family": rel, "conserved": td == rel}
    tot = total_energy(tree, tol=pr.tol)
    rep.energy["tree"] = tot.value
    if not rep.ledger:
        rep.ledger.append(LedgerRow(rep.root, lim_e, tot.value, [], cand.mass_at_infinity, True))
    for a, b in _rooted(tree, rep.root):
        if radii is not None and (a, b) in radii:
            rs = [radii[(a, b)][nu] for nu in nus]
        else:
            psi = [
                moebius_compose(moebius_inverse(cand.moebius_families[a].at(nu)), cand.moebius_families[b].at(nu))
                for nu in nus
            ]
            rs = [1.0 / math.sqrt(_affine_scale(p)) for p in psi]
        exact, ladder = connection_ladder(tree, a, b, rs)
        verdict = _trend(ladder, pr.conv_tol, pr.trend_points)
        rep.connections.append(Connection(a, b, exact, nus, rs, ladder, verdict))
    rep.accepted = bool(res["accepted"]) and rep.stable and rep.degree["conserved"]
    rep.notes.append("neck radius R_nu = eps^nu / scale^nu with eps^nu = sqrt(scale^nu) (own rule)")

"""Bubble trees: nodal data, stability, energy and degree bookkeeping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Callable, Iterable, Mapping

import jsonschema

from .expr import parse_expr
from .geometry import GEOM_TOL, DomainKind, Moebius, SpherePoint, point_from_json, point_to_json
from .holomap import RationalMap, homotopy_weight
from .quadrature import MAX_CELLS, Quadrant, WholeDomain, energy
from .target import target_distance

__all__ = [
    "MATCH_TOL",
    "Violation",
    "TreeInvalid",
    "BubbleTree",
    "validate",
    "is_stable",
    "on_boundary",
    "bubble_tree_energy",
    "total_energy",
    "total_degree",
    "serialize",
    "deserialize",
    "load_schema",
    "MoebiusFamily",
    "GromovLimitCandidate",
]

MATCH_TOL = 1e-6
SCHEMA_ID = "gromovdisc.stablemap/1"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: str = ""

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "where": self.where}

    def __str__(self):
        return f"[{self.code}] {self.where}: {self.message}" if self.where else f"[{self.code}] {self.message}"


class TreeInvalid(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid tree")


def on_boundary(kind: DomainKind, z) -> bool:
    """Whether ``z`` lies on the boundary of a domain of the given kind.

    The disc boundary is ``R u {inf}``; the pointed sphere's boundary is
    ``{inf}``; spheres have none.
    """
    p = SpherePoint.from_complex(z)
    if kind is DomainKind.SPHERE:
        return False
    if p.is_infinity:
        return True
    if kind is DomainKind.POINTED_SPHERE:
        return False
    return abs(p.to_complex().imag) <= GEOM_TOL


def _edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class BubbleTree:
    """Tree of vertex maps with nodal points ``nodal[(alpha, beta)]`` on ``Sigma_alpha``.

    ``ghosts`` names constant disc vertices that stand for a collapsed
    boundary component; they are ordinary vertices for every check.
    """

    maps: Mapping[str, RationalMap]
    edges: tuple[tuple[str, str], ...]
    nodal: Mapping[tuple[str, str], object]
    ghosts: frozenset = frozenset()
    match_tol: float = MATCH_TOL
    claims: Mapping[tuple[str, str], bool] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "maps", dict(self.maps))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        nod = {}
        for (a, b), z in dict(self.nodal).items():
            nod[(a, b)] = SpherePoint.from_complex(z)
        object.__setattr__(self, "nodal", nod)
        object.__setattr__(self, "ghosts", frozenset(self.ghosts))
        object.__setattr__(self, "claims", {tuple(k): bool(b) for k, b in dict(self.claims).items()})

    @property
    def vertices(self) -> list[str]:
        return list(self.maps)

    def kind(self, v: str) -> DomainKind:
        return self.maps[v].domain

    def neighbours(self, v: str) -> list[str]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return out

    def nodal_points(self, v: str) -> list[SpherePoint]:
        """``Z_alpha`` without the point at infinity of a pointed sphere."""
        return [self.nodal[(v, w)] for w in self.neighbours(v) if (v, w) in self.nodal]

    def component(self, start: str, removed: tuple[str, str] | None = None) -> set[str]:
        seen = {start}
        stack = [start]
        cut = _edge_key(*removed) if removed else None
        while stack:
            v = stack.pop()
            for w in self.neighbours(v):
                if cut is not None and _edge_key(v, w) == cut:
                    continue
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def boundary_subtree(self) -> list[str]:
        """``dT``: vertices whose domain has boundary."""
        return [v for v in self.maps if self.kind(v).has_boundary]

    @cached_property
    def _energies(self) -> dict[str, Quadrant]:
        return {}

    def vertex_energy(self, v: str, tol: float = 1e-10, max_cells: int = MAX_CELLS) -> Quadrant:
        cache = self._energies
        if v not in cache:
            cache[v] = energy(self.maps[v], WholeDomain(), tol=tol, max_cells=max_cells)
        return cache[v]


# --------------------------------------------------------------------------
# validation and stability
# --------------------------------------------------------------------------


def _match_distance(t: BubbleTree, a: str, b: str) -> float:
    pa = t.maps[a].eval_point(t.nodal[(a, b)])
    pb = t.maps[b].eval_point(t.nodal[(b, a)])
    return target_distance(t.maps[a].target, pa, pb)


def validate(t: BubbleTree, check_matching: bool = True) -> list[Violation]:
    """All violated tree invariants; empty iff the tree is valid."""
    out: list[Violation] = []
    verts = set(t.maps)
    n = len(verts)
    if n == 0:
        return [Violation("empty", "tree has no vertices")]
    seen_edges = set()
    for a, b in t.edges:
        where = f"edge {a}-{b}"
        if a not in verts or b not in verts:
            out.append(Violation("unknown-vertex", "edge refers to an unknown vertex", where))
            continue
        if a == b:
            out.append(Violation("self-loop", "edge joins a vertex to itself", where))
            continue
        k = _edge_key(a, b)
        if k in seen_edges:
            out.append(Violation("multi-edge", "edge listed twice", where))
        seen_edges.add(k)
    if len(t.edges) != n - 1:
        out.append(Violation("acyclic", f"{len(t.edges)} edges for {n} vertices; a tree needs {n - 1}"))
    start = next(iter(t.maps))
    if len(t.component(start)) != n:
        out.append(Violation("connected", "tree is not connected"))
    if out:
        return out

    targets = {json.dumps(m.target.to_json(), sort_keys=True) for m in t.maps.values()}
    if len(targets) > 1:
        out.append(Violation("target", "vertex maps have different targets"))

    for a, b in t.edges:
        for x, y in ((a, b), (b, a)):
            if (x, y) not in t.nodal:
                out.append(Violation("nodal-missing", f"no nodal point on {x} for the edge to {y}", f"edge {x}->{y}"))
    for key in t.nodal:
        if _edge_key(*key) not in seen_edges:
            out.append(Violation("nodal-stray", "nodal point for a non-edge", f"edge {key[0]}->{key[1]}"))
    if out:
        return out

    for (a, b), claim in t.claims.items():
        if (a, b) in t.nodal and a in t.maps and claim != on_boundary(t.kind(a), t.nodal[(a, b)]):
            side = "on the boundary" if claim else "in the interior"
            out.append(
                Violation("pairing", f"nodal point declared {side} of a {t.kind(a).value} but is not", f"edge {a}->{b}")
            )
    for a, b in t.edges:
        ka, kb = t.kind(a), t.kind(b)
        ba = on_boundary(ka, t.nodal[(a, b)])
        bb = on_boundary(kb, t.nodal[(b, a)])
        where = f"edge {a}-{b}"
        if ba != bb:
            out.append(Violation("pairing", "boundary nodal point matched with an interior one", where))
        if (ba or bb) and not (ka is DomainKind.DISC and kb is DomainKind.DISC):
            out.append(Violation("pairing", "boundary nodal points must join two discs", where))

    for v in t.maps:
        pts = t.nodal_points(v)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i].equals(pts[j], GEOM_TOL):
                    out.append(Violation("distinct", "two nodal points coincide", f"vertex {v}"))
        if t.kind(v) is DomainKind.POINTED_SPHERE and any(p.is_infinity for p in pts):
            out.append(Violation("pointed", "nodal point at infinity on a pointed sphere", f"vertex {v}"))

    btree = t.boundary_subtree()
    if not btree:
        out.append(Violation("boundary", "boundary subtree is empty"))
    else:
        # the boundary vertices must span a connected subtree
        sub = set(btree)
        seen, stack = {btree[0]}, [btree[0]]
        while stack:
            v = stack.pop()
            for w in t.neighbours(v):
                if w in sub and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != sub:
            out.append(Violation("boundary", "boundary vertices do not form a subtree"))
    pointed = [v for v in t.maps if t.kind(v) is DomainKind.POINTED_SPHERE]
    if pointed and btree != pointed[:1]:
        out.append(Violation("boundary", "a pointed sphere must be the only boundary vertex", f"vertex {pointed[0]}"))

    if check_matching:
        for a, b in t.edges:
            try:
                d = _match_distance(t, a, b)
            except (ValueError, ArithmeticError) as exc:
                out.append(Violation("matching", f"cannot evaluate nodal values: {exc}", f"edge {a}-{b}"))
                continue
            if not d <= t.match_tol:
                out.append(Violation("matching", f"nodal values differ by {d:.3e}", f"edge {a}-{b}"))
    return out


def is_stable(t: BubbleTree) -> bool:
    """Every constant vertex has at least three special points, or is a disc
    with two special points not both on the boundary.  The pointed sphere
    counts infinity as a special point."""
    for v, m in t.maps.items():
        if not m.is_constant():
            continue
        kind = t.kind(v)
        flags = [on_boundary(kind, p) for p in t.nodal_points(v)]
        if kind is DomainKind.POINTED_SPHERE:
            flags.append(True)
        if len(flags) >= 3:
            continue
        if kind is DomainKind.DISC and len(flags) == 2 and not all(flags):
            continue
        return False
    return True


# --------------------------------------------------------------------------
# bookkeeping
# --------------------------------------------------------------------------


def _sum(qs: Iterable[Quadrant]) -> Quadrant:
    qs = list(qs)
    return Quadrant(
        math.fsum(q.value for q in qs),
        math.fsum(q.error_estimate for q in qs),
        sum(q.cells_used for q in qs),
        all(q.converged for q in qs),
    )


def bubble_tree_energy(t: BubbleTree, edge: tuple[str, str], tol: float = 1e-10) -> Quadrant:
    """Energy of the component containing ``edge[1]`` once the edge is cut."""
    a, b = edge
    if _edge_key(a, b) not in {_edge_key(*e) for e in t.edges}:
        raise KeyError(f"{a}-{b} is not an edge")
    comp = sorted(t.component(b, removed=(a, b)))
    return _sum(t.vertex_energy(v, tol) for v in comp)


def total_energy(t: BubbleTree, tol: float = 1e-10) -> Quadrant:
    return _sum(t.vertex_energy(v, tol) for v in sorted(t.maps))


def total_degree(t: BubbleTree) -> int:
    """Sum of vertex degrees in the hemisphere/winding normalisation."""
    return sum(homotopy_weight(t.maps[v]) for v in sorted(t.maps))


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def load_schema() -> dict:
    text = resources.files("gromovdisc").joinpath("data/stablemap.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _path(err) -> str:
    out = "$"
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def serialize(t: BubbleTree) -> dict:
    verts = []
    for v in t.maps:
        entry = {"id": v, "map": t.maps[v].to_json()}
        if v in t.ghosts:
            entry["ghost"] = True
        verts.append(entry)
    nodal = []
    for (a, b), z in sorted(t.nodal.items()):
        entry = {"from": a, "to": b, "point": point_to_json(z)}
        if (a, b) in t.claims:
            entry["boundary"] = t.claims[(a, b)]
        nodal.append(entry)
    return {
        "schema": SCHEMA_ID,
        "vertices": verts,
        "edges": [list(e) for e in t.edges],
        "nodal_points": nodal,
        "match_tol": t.match_tol,
    }


def deserialize(data, strict: bool = True) -> BubbleTree | tuple[BubbleTree, list[Violation]]:
    """Inverse of :func:`serialize`; accepts a dict or JSON text.

    Schema errors raise :class:`ValueError` naming the JSON path.  With
    ``strict`` any tree violation raises :class:`TreeInvalid`; otherwise the
    tree and its violations are returned.
    """
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ValueError(f"cannot parse stable map JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errs:
        raise ValueError("; ".join(f"{_path(e)}: {e.message}" for e in errs))
    maps = {}
    ghosts = set()
    for k, entry in enumerate(data["vertices"]):
        vid = entry["id"]
        if vid in maps:
            raise ValueError(f"$.vertices[{k}].id: duplicate vertex id {vid!r}")
        try:
            maps[vid] = RationalMap.from_json(entry["map"])
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"$.vertices[{k}].map: {exc}") from None
        if entry.get("ghost"):
            ghosts.add(vid)
    nodal, claims = {}, {}
    violations = []
    for k, entry in enumerate(data["nodal_points"]):
        key = (entry["from"], entry["to"])
        if key in nodal:
            violations.append(Violation("nodal-duplicate", "nodal point given twice", f"$.nodal_points[{k}]"))
        nodal[key] = point_from_json(entry["point"])
        if "boundary" in entry:
            claims[key] = entry["boundary"]
    tree = BubbleTree(
        maps,
        tuple(tuple(e) for e in data["edges"]),
        nodal,
        frozenset(ghosts),
        data.get("match_tol", MATCH_TOL),
        claims,
    )
    violations += validate(tree)
    if strict:
        if violations:
            raise TreeInvalid(violations)
        return tree
    return tree, violations


# --------------------------------------------------------------------------
# limit candidates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MoebiusFamily:
    """``nu -> phi^nu`` given by four coefficient expressions or a table."""

    exprs: tuple[str, str, str, str] | None = None
    table: Mapping[float, Moebius] | None = None

    def __post_init__(self):
        if (self.exprs is None) == (self.table is None):
            raise ValueError("give either expressions or a table")
        if self.exprs is not None:
            for s in self.exprs:
                parse_expr(s)

    def at(self, nu) -> Moebius:
        if self.exprs is not None:
            a, b, c, d = (parse_expr(s)(nu) for s in self.exprs)
            return Moebius(a, b, c, d)
        if nu not in self.table:
            raise KeyError(f"no reparametrisation recorded for nu={nu}")
        return self.table[nu]

    @classmethod
    def from_callable(cls, fn: Callable[[float], Moebius], nus) -> "MoebiusFamily":
        return cls(table={nu: fn(nu) for nu in nus})

    def to_json(self):
        if self.exprs is not None:
            return {"exprs": list(self.exprs)}
        return {"table": [{"nu": nu, "moebius": m.to_json()} for nu, m in sorted(self.table.items())]}

    @classmethod
    def from_json(cls, data) -> "MoebiusFamily":
        if not isinstance(data, dict):
            raise ValueError("expected an object with 'exprs' or 'table'")
        if "exprs" in data:
            ex = data["exprs"]
            if not (isinstance(ex, list) and len(ex) == 4 and all(isinstance(e, str) for e in ex)):
                raise ValueError(".exprs: need four expression strings")
            return cls(exprs=tuple(ex))
        if "table" in data:
            return cls(table={float(r["nu"]): Moebius.from_json(r["moebius"]) for r in data["table"]})
        raise ValueError("expected 'exprs' or 'table'")


@dataclass(frozen=True, eq=False)
class GromovLimitCandidate:
    tree: BubbleTree
    moebius_families: Mapping[str, MoebiusFamily]
    masses: Mapping[tuple[str, str], float] = field(default_factory=dict)
    mass_at_infinity: float = 0.0
    root: str | None = None

    def mass_violations(self, hbar: float, mass_tol: float = 1e-3) -> list[Violation]:
        return [
            Violation("mass", f"mass {m:.6g} below hbar - tol", f"edge {a}->{b}")
            for (a, b), m in self.masses.items()
            if m < hbar - mass_tol
        ]

    def to_json(self) -> dict:
        return {
            "tree": serialize(self.tree),
            "root": self.root,
            "moebius_families": {v: f.to_json() for v, f in self.moebius_families.items()},
            "masses": [{"from": a, "to": b, "mass": m} for (a, b), m in sorted(self.masses.items())],
            "mass_at_infinity": self.mass_at_infinity,
        }

    @classmethod
    def from_json(cls, data, strict: bool = False) -> "GromovLimitCandidate":
        """Inverse of :meth:`to_json`; errors name the offending JSON path."""
        if not isinstance(data, dict):
            raise ValueError("$: candidate JSON must be an object")
        if "tree" not in data or "moebius_families" not in data:
            raise ValueError("$: candidate JSON needs 'tree' and 'moebius_families'")
        res = deserialize(data["tree"], strict=strict)
        tree = res if strict else res[0]
        fams = {}
        for v, f in data["moebius_families"].items():
            try:
                fams[v] = MoebiusFamily.from_json(f)
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"$.moebius_families.{v}: {exc}") from None
        masses = {(r["from"], r["to"]): float(r["mass"]) for r in data.get("masses", [])}
        return cls(tree, fams, masses, float(data.get("mass_at_infinity", 0.0)), data.get("root"))

"""Command-line front end.

Every command prints a deterministic JSON run report (command, config,
input digests, outputs, verdict).  Exit codes: 0 holds/valid/accepted,
1 fails/invalid/rejected, 2 unconverged, 3 usage error, malformed input or
inputs outside the hypotheses of the checked statement.
"""

from __future__ import annotations

import json
import math
import sys
import time
from functools import wraps
from importlib import resources
from pathlib import Path

import click
import numpy as np

from .bubbling import BubblingProfile, gromov_limit, verify_gromov_convergence
from .config import Config, ConfigError, RunReport
from .geometry import DomainKind
from .holomap import DegreeUndetermined, RationalMap, builtin_corpus, builtin_maps, relative_degree
from .inequality import (
    concentration_check,
    distance_energy_check,
    estimate_profile,
    isoperimetric_check,
    mean_value_check,
)
from .quadrature import Annulus, HalfBall, WholeDomain, energy
from .reporting import digest_bytes, dumps, rows_to_csv, schema_errors
from .stablemap import (
    GromovLimitCandidate,
    Violation,
    deserialize,
    is_stable,
    serialize,
    total_degree,
    total_energy,
)
from .target import lagrangefy

__all__ = ["main", "EXIT_CODES"]

EXIT_CODES = {
    "holds": 0,
    "valid": 0,
    "accepted": 0,
    "info": 0,
    "fails": 1,
    "invalid": 1,
    "rejected": 1,
    "unconverged": 2,
    "inadmissible": 3,
}
USAGE = 3


class InputError(click.ClickException):
    """Malformed input; the message names the file and JSON path."""

    exit_code = USAGE


# --------------------------------------------------------------------------
# input resolution
# --------------------------------------------------------------------------


def _read_json(path: str, inputs: dict) -> object:
    p = Path(path)
    if not p.exists():
        # shipped examples resolve by file name
        cand = resources.files("gromovdisc").joinpath("data", p.name)
        if p.parent.name == "examples" and cand.is_file():
            data = cand.read_bytes()
        else:
            raise InputError(f"{path}: no such file")
    else:
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror}") from None
    inputs[str(path)] = digest_bytes(data)
    try:
        return json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None


def _load_map(spec: str, target: str, inputs: dict) -> RationalMap:
    """``builtin:<name>``, ``family:<name>@<nu>`` or a map JSON file."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        maps = builtin_maps(target)
        if name not in maps:
            raise click.BadParameter(f"unknown builtin map {name!r} for target {target}; known: {sorted(maps)}")
        inputs["map"] = f"builtin:{target}:{name}"
        return maps[name]
    if spec.startswith("family:"):
        body = spec.split(":", 1)[1]
        name, _, nu = body.partition("@")
        corpus = builtin_corpus()
        if name not in corpus or not nu:
            raise click.BadParameter(f"expected family:<name>@<nu> with name in {sorted(corpus)}")
        try:
            m = corpus[name].at(float(nu) if "." in nu else int(nu))
        except ValueError as exc:
            raise click.BadParameter(str(exc)) from None
        inputs["map"] = f"builtin:family:{name}@{nu}"
        return m
    data = _read_json(spec, inputs)
    errs = schema_errors(data, "stablemap", "/$defs/map")
    if errs:
        raise InputError("; ".join(f"{spec}: {e}" for e in errs))
    try:
        return RationalMap.from_json(data)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{spec}: $: {exc}") from None


def _load_family(spec: str, inputs: dict):
    corpus = builtin_corpus()
    name = spec.split(":", 1)[1] if spec.startswith("builtin:") else spec
    if name in corpus:
        inputs["family"] = f"builtin:{name}"
        return corpus[name]
    from .holomap import MapFamily

    data = _read_json(spec, inputs)
    try:
        return MapFamily.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{spec}: $: {exc}") from None


def _load_tree(path: str, inputs: dict):
    data = _read_json(path, inputs)
    try:
        return deserialize(data, strict=False)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _point(text: str) -> complex:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected 're,im', got {text!r}") from None
    if len(parts) != 2:
        raise click.BadParameter(f"expected 're,im', got {text!r}")
    return complex(parts[0], parts[1])


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        vals = []
    if len(vals) != n:
        raise click.BadParameter(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    return vals


def _region(text: str):
    kind, _, rest = text.partition(":")
    if kind == "whole" and not rest:
        return WholeDomain()
    try:
        if kind == "ball":
            x, y, r = _floats(rest, 3, "ball")
            return HalfBall(complex(x, y), r)
        if kind == "annulus":
            x, y, r0, r1 = _floats(rest, 4, "annulus")
            return Annulus(complex(x, y), r0, r1)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    raise click.BadParameter(f"region must be whole, ball:x,y,r or annulus:x,y,r0,r1 (got {text!r})")


# --------------------------------------------------------------------------
# shared options and report emission
# --------------------------------------------------------------------------


def _common(fn):
    """Configuration flags shared by every computing command."""

    @click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON configuration file.")
    @click.option("--tol", type=float, help="Relative quadrature tolerance.")
    @click.option("--max-cells", type=int, help="Quadrature cell cap.")
    @click.option("--nu-max", type=int, help="Top of the nu ladder.")
    @click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here instead of stdout.")
    @click.option("--report", "report_path", type=click.Path(dir_okay=False), help="Also write the report with timing.")
    @click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write sample rows as CSV.")
    @wraps(fn)
    def wrapper(config_path, tol, max_cells, nu_max, out, report_path, csv_path, **kw):
        inputs: dict = {}
        cfg = Config()
        if config_path:
            data = _read_json(config_path, inputs)
            try:
                cfg = Config.from_json(data)
            except ConfigError as exc:
                raise InputError(f"{config_path}: {exc}") from None
        try:
            cfg = cfg.with_overrides(tol=tol, max_cells=max_cells, nu_max=nu_max)
        except ConfigError as exc:
            raise click.BadParameter(str(exc)) from None
        t0 = time.perf_counter()
        outputs, verdict, csv_text = fn(cfg=cfg, inputs=inputs, **kw)
        rep = RunReport(_command(), cfg, inputs, outputs, verdict)
        _write(out, dumps(rep.payload()))
        if report_path:
            rep.wall_time = time.perf_counter() - t0
            _write(report_path, dumps(rep.to_json()))
        if csv_path:
            _write(csv_path, csv_text or "", newline="")
        return EXIT_CODES[verdict]

    return wrapper


def _command() -> list[str]:
    return list(_ARGV) if _ARGV else sys.argv[1:]


def _write(path: str | None, text: str, newline: str | None = None) -> None:
    if path is None:
        click.echo(text, nl=False)
        return
    try:
        with open(path, "w", encoding="utf-8", newline=newline) as fh:
            fh.write(text)
    except OSError as exc:
        raise click.ClickException(f"{path}: {exc.strerror}") from None


def _bubbling_profile(cfg: Config) -> BubblingProfile:
    return BubblingProfile(
        hbar=cfg.profile.hbar,
        nus=cfg.nus,
        tol=cfg.tol,
        mass_tol=cfg.mass_tol,
        match_tol=cfg.match_tol,
        conv_tol=cfg.conv_tol,
        trend_points=cfg.trend_window,
        max_cells=cfg.max_cells,
    )


def _triage(conditions, violations) -> str:
    if violations or any(c.verdict == "fail" for c in conditions):
        return "rejected"
    if any(c.verdict != "pass" for c in conditions):
        return "unconverged"
    return "accepted"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Energy, bubbling and stable-map checks for holomorphic discs."""


@cli.command("energy")
@click.option("--map", "map_spec", required=True, help="builtin:<name>, family:<name>@<nu> or a map JSON file.")
@click.option("--region", default="whole", show_default=True, help="whole, ball:x,y,r or annulus:x,y,r0,r1.")
@click.option("--target", type=click.Choice(["cp1", "unit_disc"]), default="cp1", show_default=True)
@_common
def energy_cmd(cfg, inputs, map_spec, region, target):
    """Energy of one map on a region of its domain."""
    m = _load_map(map_spec, target, inputs)
    q = energy(m, _region(region), tol=cfg.tol, max_cells=cfg.max_cells)
    out = {"region": region, "energy": q.to_json(), "map": m.to_json()}
    if m.domain is DomainKind.DISC:
        bv = m.boundary_violation()
        out["boundary_violation"] = bv
        if bv > cfg.boundary_tol:
            out["note"] = "map violates the boundary condition"
            return out, "inadmissible", None
    return out, ("holds" if q.converged else "unconverged"), None


def _map_options(fn):
    fn = click.option("--nu", type=float, help="Ladder value for --family.")(fn)
    fn = click.option("--family", "family_name", help="Corpus family, instantiated at --nu.")(fn)
    fn = click.option("--target", type=click.Choice(["cp1", "unit_disc"]), default="cp1")(fn)
    fn = click.option("--map", "map_spec", help="builtin:<name>, family:<name>@<nu> or a map JSON file.")(fn)
    return fn


def _resolve_map(map_spec, family_name, nu, target, inputs) -> RationalMap:
    if (map_spec is None) == (family_name is None):
        raise click.UsageError("give exactly one of --map and --family")
    if family_name is not None:
        if nu is None:
            raise click.UsageError("--family needs --nu")
        nu_txt = str(int(nu)) if float(nu).is_integer() else repr(float(nu))
        map_spec = f"family:{family_name}@{nu_txt}"
    return _load_map(map_spec, target, inputs)


@cli.group("ineq")
def ineq():
    """Numerical checks of the local inequalities."""


def _ineq_result(rep):
    return rep.to_json(), rep.verdict, rep.to_csv()


@ineq.command("mean-value")
@_map_options
@click.option("--point", "--center", "point", required=True, help="Centre 're,im'.")
@click.option("--radius", type=float, required=True)
@click.option("--C", "big_c", type=float, help="Constant to test (default: from the profile).")
@_common
def ineq_mean_value(cfg, inputs, map_spec, target, family_name, nu, point, radius, big_c):
    """|grad w(z)|^2 <= (C/r^2) E(w; B_r(z))."""
    m = _resolve_map(map_spec, family_name, nu, target, inputs)
    rep = mean_value_check(m, _point(point), radius, cfg.profile.hbar, cfg.profile.C if big_c is None else big_c, cfg.tol)
    return _ineq_result(rep)


def _curve(spec: str, n: int, inputs: dict) -> np.ndarray:
    if spec.startswith("semicircle:"):
        a, b = _floats(spec.split(":", 1)[1], 2, "semicircle")
        if n != 1:
            raise click.BadParameter("semicircle curves need a one-dimensional frame")
        t = np.linspace(0.0, 1.0, 2049)
        c, r = 0.5 * (a + b), 0.5 * (b - a)
        z = c + r * np.exp(1j * math.pi * (1.0 - t))
        return np.stack([z.real, z.imag], axis=1)
    data = _read_json(spec, inputs)
    pts = data.get("points") if isinstance(data, dict) else None
    arr = np.asarray(pts, dtype=float) if isinstance(pts, list) else None
    if arr is None or arr.ndim != 2 or arr.shape[1] != 2 * n or len(arr) < 2:
        raise InputError(f"{spec}: $.points: need at least two rows of {2 * n} real coordinates")
    return arr


@ineq.command("isoperimetric")
@click.option("--frame", default="standard:1", show_default=True, help="standard:<n> or a JSON file {'frame': ...}.")
@click.option("--curve", "curve_spec", required=True, help="semicircle:a,b or a JSON file {'points': [[x..., y...], ...]}.")
@click.option("--c", "iso_c", type=float, help="Constant to test (default: from the profile).")
@_common
def ineq_isoperimetric(cfg, inputs, frame, curve_spec, iso_c):
    """|int gamma^* lambda| <= c length(gamma)^2 for curves with ends on L."""
    if frame.startswith("standard:"):
        try:
            n = int(frame.split(":", 1)[1])
        except ValueError:
            raise click.BadParameter(f"bad frame {frame!r}") from None
        f = np.eye(n, dtype=complex)
    else:
        data = _read_json(frame, inputs)
        try:
            rows = data["frame"]
            f = np.array([[complex(*c) for c in row] for row in rows])
        except (KeyError, TypeError, ValueError):
            raise InputError(f"{frame}: $.frame: need rows of [re, im] pairs") from None
    try:
        data = lagrangefy(f, seed=cfg.seed)
    except ValueError as exc:
        raise InputError(f"{frame}: $.frame: {exc}") from None
    rep = isoperimetric_check(data, _curve(curve_spec, data.n, inputs), c=cfg.profile.c if iso_c is None else iso_c)
    return _ineq_result(rep)


def _sweep_options(fn):
    fn = click.option("--tgrid", help="Comma-separated T values (default: n-t points on [T0, T_max]).")(fn)
    fn = click.option("--n-t", type=int, default=10, show_default=True, help="Samples in the T sweep.")(fn)
    fn = click.option("--t0", type=float, help="Lower end of the T range.")(fn)
    fn = click.option("--eta", type=float, default=0.0, show_default=True)(fn)
    fn = click.option("--eps", "outer", type=float, required=True, help="Outer radius.")(fn)
    fn = click.option("--delta", type=float, required=True, help="Inner radius.")(fn)
    fn = click.option("--point", "--center", "point", required=True, help="Centre 're,im'.")(fn)
    return _map_options(fn)


def _tgrid(text):
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"--tgrid: expected comma-separated numbers, got {text!r}") from None


@ineq.command("concentration")
@_sweep_options
@_common
def ineq_concentration(cfg, inputs, map_spec, target, family_name, nu, point, delta, outer, eta, t0, n_t, tgrid):
    """Exponential energy decay on the middle annuli."""
    m = _resolve_map(map_spec, family_name, nu, target, inputs)
    rep = concentration_check(
        m, _point(point), delta, outer, _tgrid(tgrid), eta=eta, hbar=cfg.profile.hbar, n_t=n_t, tol=cfg.tol, t0=t0
    )
    return _ineq_result(rep)


@ineq.command("distance-energy")
@_sweep_options
@_common
def ineq_distance_energy(cfg, inputs, map_spec, target, family_name, nu, point, delta, outer, eta, t0, n_t, tgrid):
    """Exponential decay of image diameters on the middle annuli."""
    m = _resolve_map(map_spec, family_name, nu, target, inputs)
    rep = distance_energy_check(
        m, _point(point), delta, outer, _tgrid(tgrid), eta=eta, hbar=cfg.profile.hbar, n_t=n_t, tol=cfg.tol, t0=t0
    )
    return _ineq_result(rep)


@cli.group("stablemap")
def stablemap():
    """Validate and measure serialised bubble trees."""


@stablemap.command("validate")
@click.argument("path")
@_common
def stablemap_validate(cfg, inputs, path):
    """Schema, tree and nodal-matching checks."""
    tree, violations = _load_tree(path, inputs)
    stable = is_stable(tree) if not violations else None
    if stable is False:
        violations = [Violation("stability", "a constant vertex has too few special points")]
    out = {"vertices": sorted(tree.maps), "violations": [v.to_json() for v in violations], "stable": stable}
    return out, ("invalid" if violations else "valid"), None


@stablemap.command("energy")
@click.argument("path")
@_common
def stablemap_energy(cfg, inputs, path):
    """Total energy of a tree and of each vertex."""
    tree, violations = _load_tree(path, inputs)
    per = {v: energy(m, tol=cfg.tol, max_cells=cfg.max_cells).to_json() for v, m in sorted(tree.maps.items())}
    tot = total_energy(tree, tol=cfg.tol)
    out = {"total": tot.to_json(), "vertices": per, "violations": [v.to_json() for v in violations]}
    if violations:
        return out, "invalid", None
    return out, ("holds" if tot.converged else "unconverged"), None


@stablemap.command("degree")
@click.argument("path")
@_common
def stablemap_degree(cfg, inputs, path):
    """Total degree (hemisphere count on CP^1, winding on the unit disc)."""
    tree, violations = _load_tree(path, inputs)
    out = {"violations": [v.to_json() for v in violations]}
    if violations:
        return out, "invalid", None
    try:
        out["degree"] = total_degree(tree)
    except DegreeUndetermined as exc:
        out["error"] = str(exc)
        return out, "unconverged", None
    return out, "holds", None


@cli.group("bubble")
def bubble():
    """Bubbling analysis of degenerating families."""


@bubble.command("analyze")
@click.option("--family", "family_spec", required=True, help="Corpus name or a family JSON file.")
@_common
def bubble_analyze(cfg, inputs, family_spec):
    """Fit limits, detect bubbles recursively and verify the resulting tree."""
    fam = _load_family(family_spec, inputs)
    rep = gromov_limit(fam, profile=_bubbling_profile(cfg))
    out = rep.to_json()
    if rep.tree is not None:
        out["stablemap"] = serialize(rep.tree)
    return out, _triage(rep.conditions, rep.violations), rep.to_csv()


@bubble.command("verify")
@click.option("--family", "family_spec", required=True)
@click.option("--candidate", "cand_path", required=True, help="Candidate JSON (tree plus reparametrisations).")
@_common
def bubble_verify(cfg, inputs, family_spec, cand_path):
    """Check a proposed limit against the convergence conditions."""
    fam = _load_family(family_spec, inputs)
    data = _read_json(cand_path, inputs)
    try:
        cand = GromovLimitCandidate.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{cand_path}: {exc}") from None
    res = verify_gromov_convergence(fam, cand, _bubbling_profile(cfg))
    out = {
        "accepted": res["accepted"],
        "root": res["root"],
        "violations": res["violations"],
        "conditions": [c.to_json() for c in res["conditions"]],
    }
    rows = [
        {"condition": c.condition, "where": c.where, "nu": nu, "value": float(x), "verdict": c.verdict}
        for c in res["conditions"]
        for nu, x in zip(c.nus or [None] * len(c.ladder), c.ladder)
    ]
    csv_text = rows_to_csv(rows, ("condition", "where", "nu", "value", "verdict"))
    return out, _triage(res["conditions"], res["violations"]), csv_text


@cli.group("corpus")
def corpus():
    """Built-in degenerating families."""


@corpus.command("list")
@_common
def corpus_list(cfg, inputs):
    """Names, domains, targets and descriptions of the corpus."""
    rows = []
    for name, fam in sorted(builtin_corpus().items()):
        try:
            deg = relative_degree(fam.at(fam.nu_range[1])) if fam.domain is DomainKind.DISC else None
        except DegreeUndetermined:
            deg = None
        rows.append(
            {
                "name": name,
                "domain": fam.domain.value,
                "target": fam.target.to_json()["kind"],
                "nu_range": list(fam.nu_range),
                "relative_degree": deg,
                "description": fam.description,
            }
        )
    return {"families": rows}, "info", rows_to_csv(rows, ("name", "domain", "target"))


@cli.group("profile")
def profile():
    """Empirical constants (hbar, C, c)."""


@profile.command("estimate")
@click.option("--points", type=int, default=6, show_default=True, help="Random mean-value sample points.")
@click.option("--radius", type=float, default=0.1, show_default=True)
@_common
def profile_estimate(cfg, inputs, points, radius):
    """Energy quantum, mean-value and isoperimetric constants from the built-in maps."""
    maps = builtin_maps("cp1")
    rng = np.random.default_rng(cfg.seed)
    names = sorted(maps)
    samples = []
    for _ in range(points):
        name = names[int(rng.integers(len(names)))]
        z = complex(rng.uniform(-1.0, 1.0), rng.uniform(2 * radius, 1.0))
        samples.append((name, z, radius))
    prof, diag = estimate_profile(maps, samples, tol=cfg.tol)
    shrunk = prof.shrunk()
    out = {"profile": prof.to_json(), "shrunk": shrunk.to_json(), "diagnostics": diag, "seed": cfg.seed}
    return out, "info", None


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

_ARGV: list[str] = []


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return the exit code."""
    global _ARGV
    args = list(sys.argv[1:] if argv is None else argv)
    _ARGV = args
    try:
        rc = cli.main(args=args, prog_name="gromovdisc", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return USAGE
    except click.UsageError as exc:
        exc.show()
        return USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code if isinstance(exc, InputError) else USAGE
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return USAGE
    if rc is None:
        return 0
    return int(rc)


if __name__ == "__main__":
    sys.exit(main())

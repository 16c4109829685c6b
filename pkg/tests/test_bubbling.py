from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from gromovdisc.bubbling import (
    BubblingProfile,
    detect_bubble_points,
    find_peak,
    fit_limit_map,
    gromov_limit,
    removal_of_singularity_check,
    soft_rescale,
    solve_delta,
    verify_gromov_convergence,
)
from gromovdisc.bubbling import _classify, _limit_trend
from gromovdisc.geometry import DomainKind
from gromovdisc.holomap import builtin_corpus, builtin_maps, relative_degree
from gromovdisc.quadrature import HalfBall
from gromovdisc.reporting import read_csv, schema_errors
from gromovdisc.stablemap import GromovLimitCandidate, is_stable, total_degree, validate

DOCS = Path(__file__).resolve().parents[1] / "docs" / "examples"
CORPUS = builtin_corpus()


def candidate(name):
    return GromovLimitCandidate.from_json(json.loads((DOCS / f"{name}.json").read_text()))


@pytest.fixture(scope="module")
def reports():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = gromov_limit(CORPUS[name])
        return cache[name]

    return get


def test_find_peak_sphere_bubble():
    p = find_peak(CORPUS["sphere-bubble"].at(50), HalfBall(1j, 0.5))
    assert abs(p - 1j) < 1e-2


def test_solve_delta_closed_form():
    # E(B_r(0)) = pi r^2 / (2 (1 + r^2)) for the identity disc
    r = solve_delta(builtin_maps()["identity-disc"], 0j, math.pi / 4, 4.0, 0.0)
    assert r == pytest.approx(1.0, rel=1e-7)


def test_classify_cases():
    assert _classify([1, 1.1, 1, 1.05, 1, 1], 1e3, 5) == "I"
    assert _classify([10, 20, 40, 80, 160, 320], 1e3, 5) == "II"
    assert _classify([1, 50, 2, 80, 3, 40], 1e3, 5) == "undetermined"


def test_limit_trend_rule():
    nus = [10, 20, 40, 80, 160]
    assert _limit_trend(nus, [1 / n for n in nus], 1e-2, 5)[0] == "pass"
    # clean 1/nu decay to a non-zero limit is not convergence
    assert _limit_trend(nus, [0.5 + 1 / n for n in nus], 1e-2, 5)[0] == "fail"
    assert _limit_trend(nus, [0.001, 0.002, 0.001, 0.003, 0.001], 1e-2, 5)[0] != "pass"


def test_soft_rescale_interior():
    fam, diag = soft_rescale(CORPUS["sphere-bubble"], 1j, math.pi)
    assert diag.case == "interior"
    assert fam.domain is DomainKind.SPHERE


def test_soft_rescale_boundary_case_one():
    fam, diag = soft_rescale(CORPUS["blaschke"], 0j, math.pi)
    assert diag.case == "I"
    assert fam.domain is DomainKind.DISC
    assert relative_degree(fam.at(10_000)) == 2


def test_soft_rescale_ghost_is_case_two():
    fam, diag = soft_rescale(CORPUS["ghost"], 0j, math.pi)
    assert diag.case == "II"
    ratios = np.asarray(diag.ratios)
    assert np.all(np.diff(ratios) > 0)
    # the zoom keeps the half-plane: the ghost vertex is a disc
    assert fam.domain is DomainKind.DISC


def test_detect_bubble_points_sphere_bubble():
    pts = detect_bubble_points(CORPUS["sphere-bubble"])
    assert len(pts) == 1
    assert abs(pts[0].point.to_complex() - 1j) < 1e-6
    assert not pts[0].boundary
    assert pts[0].mass.value == pytest.approx(math.pi, rel=1e-2)


def test_fit_limit_map_sphere_bubble():
    fit = fit_limit_map(CORPUS["sphere-bubble"], BubblingProfile().nus)
    assert fit.map == builtin_maps()["identity-disc"]
    assert fit.residual < 1e-8


def test_removal_of_singularity():
    rep = removal_of_singularity_check(builtin_maps()["identity-disc"], 0j)
    assert rep.removable and rep.extension_exact
    # boundary puncture of a bounded Blaschke member
    rep = removal_of_singularity_check(CORPUS["blaschke"].at(4), 0.5)
    assert rep.removable
    flat = removal_of_singularity_check(None, 0j, ball_energy=lambda r: 1.0)
    assert not flat.removable
    with pytest.raises(ValueError):
        removal_of_singularity_check(None, 0j)


def test_verify_hand_candidate_accepted():
    res = verify_gromov_convergence(CORPUS["blaschke"], candidate("blaschke_candidate"))
    assert res["accepted"]
    assert res["violations"] == []
    assert {c.condition for c in res["conditions"]} == {"map", "rescaling", "energy"}


def test_verify_displaced_rejected():
    res = verify_gromov_convergence(CORPUS["blaschke"], candidate("blaschke_displaced"))
    assert not res["accepted"]
    failing = {c.condition for c in res["conditions"] if c.verdict == "fail"}
    assert failing & {"map", "rescaling"}


def test_verify_negated_map_fails_energy_passes():
    res = verify_gromov_convergence(CORPUS["blaschke"], candidate("blaschke_negated"))
    assert not res["accepted"]
    by = {}
    for c in res["conditions"]:
        by.setdefault(c.condition, []).append(c.verdict)
    assert "fail" in by["map"]
    assert set(by["energy"]) == {"pass"}


@pytest.mark.slow
def test_blaschke_pipeline(reports):
    rep = reports("blaschke")
    assert rep.tree is not None and validate(rep.tree) == []
    assert rep.stable and is_stable(rep.tree)
    assert total_degree(rep.tree) == relative_degree(CORPUS["blaschke"].at(100)) == 2
    assert rep.defect() < 1e-3
    assert len(rep.tree.maps) == 2
    assert rep.energy["tree"] == pytest.approx(2 * math.pi, rel=1e-3)


@pytest.mark.slow
def test_sphere_bubble_pipeline(reports):
    rep = reports("sphere-bubble")
    kinds = sorted(rep.tree.kind(v).value for v in rep.tree.maps)
    assert kinds == ["disc", "sphere"]
    assert total_degree(rep.tree) == 3
    assert rep.defect() < 1e-2
    assert rep.accepted
    assert all(c.verdict == "pass" for c in rep.connections)


@pytest.mark.slow
def test_ghost_pipeline_structure(reports):
    rep = reports("ghost")
    t = rep.tree
    assert validate(t) == [] and is_stable(t)
    ghosts = [v for v in t.maps if t.maps[v].is_constant()]
    assert len(ghosts) == 1
    g = ghosts[0]
    # a constant disc carrying the node to its parent and one interior bubble
    assert t.kind(g) is DomainKind.DISC
    assert len(t.neighbours(g)) == 2
    assert rep.rescalings[g]["case"] == "II"
    assert total_degree(t) == 3


@pytest.mark.slow
def test_two_bubble_and_pointed_collapse(reports):
    two = reports("two-bubble")
    assert len(two.tree.maps) == 3 and total_degree(two.tree) == 3
    pc = reports("pointed-collapse")
    (v,) = pc.tree.maps
    assert pc.tree.kind(v) is DomainKind.POINTED_SPHERE
    assert total_degree(pc.tree) == 2


@pytest.mark.slow
def test_report_serialisation(reports):
    rep = reports("blaschke")
    doc = rep.to_json()
    json.dumps(doc)
    assert schema_errors(doc["tree"], "stablemap") == []
    header, rows = read_csv(rep.to_csv())
    assert header == ["kind", "where", "nu", "value", "verdict"]
    assert {r["kind"] for r in rows} >= {"connection", "map", "defect"}

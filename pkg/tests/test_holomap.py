from __future__ import annotations

import json

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gromovdisc.expr import ExprError, parse_expr
from gromovdisc.geometry import INFINITY, DomainKind, Moebius, SpherePoint, moebius_apply
from gromovdisc.holomap import (
    DegreeUndetermined,
    MapFamily,
    RationalFn,
    RationalMap,
    UnboundedMapError,
    builtin_corpus,
    builtin_maps,
    canonicalize,
    cauchy_riemann_residual,
    check_uniformly_bounded,
    compose_moebius,
    degree_of,
    get_family,
    homotopy_weight,
    relative_degree,
)
from gromovdisc.poly import QI
from gromovdisc.target import LinearSpace, ProjectiveLine, UnitDiscPlane

CP1 = ProjectiveLine()
small = st.integers(-5, 5)
rat = st.builds(lambda a, b: QI(Fraction(a, b)), small, st.integers(1, 4))


def test_expr_exact_arithmetic():
    assert parse_expr("1/nu")(10) == QI(Fraction(1, 10))
    assert parse_expr("0.1")(3) == QI(Fraction(1, 10))
    assert parse_expr("(1+i)^2")(1) == QI(0, 2)
    assert parse_expr("nu**-2")(4) == QI(Fraction(1, 16))
    assert parse_expr("ν - 1")(5) == QI(4)


def test_expr_log_models_are_float():
    v = parse_expr("ln(nu)^-2")(100)
    assert isinstance(v, complex)
    assert v.real == pytest.approx(1 / math.log(100) ** 2)
    assert parse_expr("exp(0)")(1) == 1.0


@pytest.mark.parametrize("bad", ["", "nu**nu", "sqrt(nu)", "x+1", "nu % 2", "'a'", "ln(nu, 2)", "True"])
def test_expr_rejects(bad):
    with pytest.raises(ExprError):
        parse_expr(bad)


def test_expr_ln_zero():
    with pytest.raises(ExprError):
        parse_expr("ln(nu - 1)")(1)


def test_canonicalize_normalises_leading_denominator():
    num, den = canonicalize((QI(2), QI(4)), (QI(0), QI(2)))
    assert den[-1] == QI(1)
    f = RationalFn((QI(2), QI(4)), (QI(0), QI(2)))
    assert f(QI(1)) == QI(3)


def test_rational_fn_exact_evaluation_and_poles():
    f = RationalFn((QI(1),), (QI(-1), QI(1)))
    assert f(QI(1)) is None
    assert f(QI(3)) == QI(Fraction(1, 2))
    assert degree_of(RationalMap(DomainKind.SPHERE, CP1, (f,))) == 1


def test_derivative_matches_finite_difference():
    f = RationalFn((QI(1), QI(2), QI(0, 1)), (QI(3), QI(0), QI(1)))
    z = np.array([0.3 + 0.7j, -1.2 + 0.4j])
    h = 1e-6
    fd = (f(z + h) - f(z - h)) / (2 * h)
    assert np.allclose(f.deriv()(z), fd, rtol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.lists(rat, min_size=2, max_size=4), st.lists(rat, min_size=1, max_size=3), rat, rat, rat, rat)
def test_compose_moebius_exact(num, den, a, b, c, d):
    if all(x == QI(0) for x in den) or a * d - b * c == QI(0):
        return
    f = RationalFn(tuple(num), tuple(den))
    phi = Moebius(a, b, c, d)
    g = f.compose(phi)
    m_g = RationalMap(DomainKind.SPHERE, CP1, (g,))
    m_f = RationalMap(DomainKind.SPHERE, CP1, (f,))
    for z in (QI(0), QI(1), QI(Fraction(1, 3), 2), INFINITY):
        assert m_g.eval_point(z) == m_f.eval_point(moebius_apply(phi, z))


def test_compose_rejects_non_automorphism_of_disc():
    m = builtin_maps()["identity-disc"]
    with pytest.raises(ValueError):
        compose_moebius(m, Moebius(0, -1, -1, 0))
    compose_moebius(m, Moebius(2, 1, 1, 1))


def test_boundary_certificates():
    assert builtin_maps()["identity-disc"].boundary_certificate == "exact_real"
    shifted = RationalMap.single(DomainKind.DISC, CP1, (QI(0, 1), QI(1)))
    assert shifted.boundary_certificate == "none"
    with pytest.raises(DegreeUndetermined):
        relative_degree(shifted)
    bl = builtin_maps("unit_disc")["blaschke2-disc"]
    assert bl.boundary_certificate == "numeric"
    assert bl.boundary_residual < 1e-12


@pytest.mark.parametrize(
    "name,expected",
    [("identity-disc", 1), ("square-disc", 2), ("identity-sphere", 1), ("square-sphere", 2)],
)
def test_relative_degree_cp1(name, expected):
    assert relative_degree(builtin_maps()[name]) == expected


def test_relative_degree_unit_disc():
    maps = builtin_maps("unit_disc")
    assert relative_degree(maps["identity-disc"]) == 1
    assert relative_degree(maps["blaschke2-disc"]) == 2


def test_relative_degree_linear_is_zero():
    # bounded holomorphic discs in (C, R) are constant by reflection
    m = RationalMap.single(DomainKind.DISC, LinearSpace.standard(1), (QI(3),))
    assert m.boundary_certificate == "exact_real"
    assert relative_degree(m) == 0
    leaky = RationalMap.single(DomainKind.DISC, LinearSpace.standard(1), (QI(0), QI(1)), (QI(0, 1), QI(1)))
    with pytest.raises(DegreeUndetermined):
        relative_degree(leaky)


def test_sphere_weight_counts_hemispheres():
    assert homotopy_weight(builtin_maps()["identity-sphere"]) == 2
    assert homotopy_weight(builtin_maps()["identity-disc"]) == 1


def test_relative_degree_invariant_under_reparametrisation():
    m = builtin_maps("unit_disc")["blaschke2-disc"]
    rng = np.random.default_rng(5)
    for _ in range(5):
        a, b, c = (Fraction(int(x), 3) for x in rng.integers(1, 7, 3))
        d = (1 + b * c) / a
        assert relative_degree(compose_moebius(m, Moebius(QI(a), QI(b), QI(c), QI(d)))) == 2


@pytest.mark.parametrize(
    "name,expected",
    [("blaschke", 2), ("sphere-bubble", 3), ("ghost", 3), ("two-bubble", 3), ("pointed-collapse", 2)],
)
def test_corpus_degrees_constant_along_family(name, expected):
    fam = builtin_corpus()[name]
    for nu in (4, 50, 1000):
        assert relative_degree(fam.at(nu)) == expected


def test_corpus_maps_are_holomorphic():
    rng = np.random.default_rng(6)
    z = rng.standard_normal(40) + 1j * rng.uniform(0.2, 2.0, 40)
    for fam in builtin_corpus().values():
        assert cauchy_riemann_residual(fam.at(20), z) < 1e-5


def test_unit_disc_families_bounded():
    corpus = builtin_corpus()
    for name in ("blaschke", "two-bubble"):
        assert check_uniformly_bounded(corpus[name], [2, 10, 100]) <= 1 + 1e-8


def test_unbounded_family_detected():
    fam = MapFamily("grow", DomainKind.DISC, UnitDiscPlane(), ((("nu", "0"), ("1",)),))
    with pytest.raises(UnboundedMapError):
        check_uniformly_bounded(fam, [2, 3])


def test_linear_pole_raises():
    m = RationalMap.single(DomainKind.SPHERE, LinearSpace.standard(1), (QI(1),), (QI(0), QI(1)))
    with pytest.raises(UnboundedMapError):
        m.eval(np.array([0j]))
    with pytest.raises(UnboundedMapError):
        m.density(np.array([0j]))


def test_cp1_pole_evaluates_to_infinity():
    m = RationalMap.single(DomainKind.SPHERE, CP1, (QI(1),), (QI(0), QI(1)))
    assert m.eval_point(QI(0)) == INFINITY
    assert m.eval_point(INFINITY) == SpherePoint.from_complex(QI(0))


def test_family_range_and_json():
    fam = builtin_corpus()["sphere-bubble"]
    with pytest.raises(ValueError):
        fam.at(1)
    back = MapFamily.from_json(fam.to_json())
    assert back.at(7) == fam.at(7)
    with pytest.raises(ValueError):
        MapFamily.from_json({"name": "x"})


def test_get_family(tmp_path):
    assert get_family("builtin:ghost").name == "ghost"
    with pytest.raises(KeyError):
        get_family("builtin:nope")
    p = tmp_path / "fam.json"
    p.write_text(json.dumps(builtin_corpus()["blaschke"].to_json()))
    assert get_family(str(p)).at(3) == builtin_corpus()["blaschke"].at(3)


def test_map_json_round_trip():
    for m in list(builtin_maps().values()) + list(builtin_maps("unit_disc").values()):
        assert RationalMap.from_json(m.to_json()) == m

from __future__ import annotations

import math

import numpy as np
import pytest

from gromovdisc.geometry import INFINITY, DomainKind, chordal
from gromovdisc.holomap import RationalMap
from gromovdisc.poly import QI
from gromovdisc.target import (
    LinearSpace,
    ProjectiveLine,
    TamingError,
    UnitDiscPlane,
    boundary_distance,
    lagrangefy,
    real_form,
    standard_complex_structure,
    target_distance,
    target_from_json,
    totally_real_check,
)


def random_frame(rng, n):
    while True:
        f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if totally_real_check(f)[0]:
            return f


def test_totally_real_examples():
    assert totally_real_check(np.eye(2))[0]
    assert totally_real_check(np.array([[1j]]))[0]
    ok, cond = totally_real_check(np.array([[1, 1j], [0, 0]]))
    assert not ok and cond == math.inf or cond > 1e12


def test_linear_space_rejects_non_totally_real_frame():
    with pytest.raises(ValueError):
        LinearSpace(np.array([[1, 1j], [0, 0]]))


def test_lagrangefy_standard_frame():
    data = lagrangefy(np.eye(2))
    j = standard_complex_structure(2)
    # omega_L is the standard form dq ^ dp
    std = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    assert np.allclose(data.form, std) or np.allclose(data.form, -std)
    v = np.random.default_rng(0).standard_normal((50, 4))
    assert np.all(np.einsum("ki,ij,kj->k", v, data.form, v @ j.T) > 0)


@pytest.mark.parametrize("theta", np.linspace(0, math.pi, 7)[:-1])
def test_lagrangefy_rotated_line_gives_area_form(theta):
    data = lagrangefy(np.array([[np.exp(1j * theta)]]))
    # rotations preserve dq ^ dp
    assert data.form[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert data.form[1, 0] == pytest.approx(-1.0, abs=1e-12)


def test_lagrangefy_non_lagrangian_frame():
    a = np.array([[0.0, 0.7], [-0.3, 0.2]])
    f = np.eye(2) + 1j * a
    data = lagrangefy(f)
    std = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    assert not np.allclose(data.form, std)
    assert data.taming_margin > 0
    assert data.equivalence_kappa >= 1.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lagrangefy_properties_random(n):
    rng = np.random.default_rng(10 + n)
    j = standard_complex_structure(n)
    for _ in range(20):
        f = random_frame(rng, n)
        data = lagrangefy(f, seed=int(rng.integers(1000)))
        basis = np.vstack([f.real, f.imag])
        lam_on_l = basis.T @ data.primitive @ basis
        assert np.abs(lam_on_l).max() <= 1e-10 * max(1.0, np.abs(data.primitive).max())
        assert np.allclose(data.form, -data.form.T)
        assert data.taming_margin > 0
        jl = j @ basis
        assert np.abs(jl.T @ data.form @ jl).max() <= 1e-12 * max(1.0, np.abs(data.form).max() * np.abs(jl).max() ** 2)


def test_lagrangefy_rejects_bad_frame():
    with pytest.raises(ValueError):
        lagrangefy(np.zeros((1, 1)))
    assert issubclass(TamingError, RuntimeError)


def test_real_form_matches_complex_multiplication():
    rng = np.random.default_rng(3)
    f = random_frame(rng, 2)
    q, p = rng.standard_normal(2), rng.standard_normal(2)
    z = f @ (q + 1j * p)
    x = real_form(f) @ np.concatenate([q, p])
    assert np.allclose(x, np.concatenate([z.real, z.imag]))


def test_densities():
    c = LinearSpace.standard(1)
    ident = RationalMap.single(DomainKind.SPHERE, c, (QI(0), QI(1)))
    square = RationalMap.single(DomainKind.SPHERE, c, (QI(0), QI(0), QI(1)))
    z = np.array([0.3 + 0.1j, -2 + 1j])
    assert np.allclose(ident.density(z), 1.0)
    assert np.allclose(square.density(z), 4 * np.abs(z) ** 2)
    cp1 = RationalMap.single(DomainKind.SPHERE, ProjectiveLine(), (QI(0), QI(1)))
    assert cp1.density(np.array([0j]))[0] == pytest.approx(1.0)
    assert np.allclose(cp1.density(z), 1 / (1 + np.abs(z) ** 2) ** 2)


def test_cp1_density_chart_independent():
    rng = np.random.default_rng(4)
    num, den = (QI(1), QI(2), QI(0, 1)), (QI(3), QI(0), QI(1))
    m = RationalMap.single(DomainKind.SPHERE, ProjectiveLine(), num, den)
    other = RationalMap.single(DomainKind.SPHERE, ProjectiveLine(), den, num)
    r = rng.uniform(0.5, 2.0, 200)
    z = r * np.exp(1j * rng.uniform(0, 2 * np.pi, 200))
    # the target chart w -> 1/w is an isometry of the Fubini-Study metric
    assert np.allclose(m.density(z), other.density(z), rtol=1e-10, atol=0)


def test_target_distances():
    assert target_distance(LinearSpace.standard(1), 0, 3 + 4j) == pytest.approx(5.0)
    assert target_distance(ProjectiveLine(), 0, INFINITY) == pytest.approx(1.0)
    assert target_distance(ProjectiveLine(), 2j, 2j) == 0.0
    assert target_distance(UnitDiscPlane(), 0.5, -0.5) == pytest.approx(1.0)


def test_boundary_distances():
    assert boundary_distance(LinearSpace.standard(1), 2.5) == 0.0
    assert boundary_distance(LinearSpace.standard(1), 1j) == pytest.approx(1.0)
    assert boundary_distance(ProjectiveLine(), 7.0) == pytest.approx(0.0, abs=1e-15)
    assert boundary_distance(ProjectiveLine(), INFINITY) == 0.0
    # brute-force minimum of the chordal distance over the real circle
    xs = np.tan(np.linspace(-np.pi / 2, np.pi / 2, 20001)[1:-1])
    for p in (1j, 0.5 + 0.3j, -2 + 5j):
        brute = min(chordal(p, float(x)) for x in xs)
        assert boundary_distance(ProjectiveLine(), p) == pytest.approx(brute, abs=1e-6)
    assert boundary_distance(UnitDiscPlane(), 0.25) == pytest.approx(0.75)


def test_target_json_round_trip():
    for t in (ProjectiveLine(), UnitDiscPlane(), LinearSpace(np.array([[1 + 0.5j]]))):
        assert target_from_json(t.to_json()) == t
    with pytest.raises(ValueError):
        target_from_json({"kind": "torus"})

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from gromovdisc.geometry import DomainKind
from gromovdisc.holomap import RationalMap, builtin_corpus, builtin_maps
from gromovdisc.poly import QI
from gromovdisc.quadrature import (
    Annulus,
    BallAtInfinity,
    Complement,
    HalfBall,
    MassProtocol,
    MassUndetermined,
    Quadrant,
    WholeDomain,
    curve_length,
    default_nu_ladder,
    dirichlet_energy_fd,
    double_limit,
    energy,
    line_integral_lambda,
    mass_at,
)
from gromovdisc.target import LinearSpace, ProjectiveLine, lagrangefy

CP1 = ProjectiveLine()
C1 = LinearSpace.standard(1)


def brute_energy(m, center, radius, cut=0.0):
    """Polar dblquad oracle on ``B_r(center) cap {Im z > cut}``."""

    def f(rho, t):
        z = center + rho * complex(math.cos(t), math.sin(t))
        return float(m.density(np.array([z]))[0]) * rho

    def rho_max(t):
        # the ray leaves through the cut line when it points downwards
        s = math.sin(t)
        return min(radius, (center.imag - cut) / -s) if s < 0 else radius

    v, _ = integrate.dblquad(f, 0, 2 * math.pi, 0, rho_max, epsabs=1e-11, epsrel=1e-11)
    return v


@pytest.mark.parametrize(
    "name,expected",
    [("identity-sphere", math.pi), ("square-sphere", 2 * math.pi), ("identity-disc", math.pi / 2), ("square-disc", math.pi)],
)
def test_total_energy_is_degree_times_area(name, expected):
    q = energy(builtin_maps()[name])
    assert q.converged
    assert q.value == pytest.approx(expected, rel=1e-10)


def test_unit_disc_energies():
    maps = builtin_maps("unit_disc")
    assert energy(maps["identity-disc"]).value == pytest.approx(math.pi, rel=1e-10)
    assert energy(maps["blaschke2-disc"]).value == pytest.approx(2 * math.pi, rel=1e-10)


@pytest.mark.parametrize("r", [0.1, 1.0, 7.0])
def test_half_ball_closed_form(r):
    m = builtin_maps()["identity-disc"]
    assert energy(m, HalfBall(0, r)).value == pytest.approx(0.5 * math.pi * r * r / (1 + r * r), rel=1e-10)


def test_linear_identity_area():
    m = RationalMap.single(DomainKind.DISC, C1, (QI(0), QI(1)))
    assert energy(m, HalfBall(0.3, 2.0)).value == pytest.approx(2 * math.pi, rel=1e-10)
    assert energy(m, HalfBall(1j, 0.5)).value == pytest.approx(0.25 * math.pi, rel=1e-10)


def test_region_additivity():
    m = builtin_corpus()["sphere-bubble"].at(50)
    total = energy(m).value
    ball = energy(m, HalfBall(0.2 + 0.5j, 0.8)).value
    comp = energy(m, Complement(HalfBall(0.2 + 0.5j, 0.8))).value
    assert ball + comp == pytest.approx(total, rel=1e-9)
    inner = energy(m, HalfBall(1j, 0.1)).value
    outer = energy(m, HalfBall(1j, 0.4)).value
    ann = energy(m, Annulus(1j, 0.1, 0.4)).value
    assert inner + ann == pytest.approx(outer, rel=1e-9)


def test_ball_at_infinity():
    m = builtin_maps()["identity-sphere"]
    # |z| > R carries area pi / (1 + R^2)
    assert energy(m, BallAtInfinity(0.5)).value == pytest.approx(math.pi / 5, rel=1e-10)


def test_against_dblquad_oracle():
    m = builtin_corpus()["sphere-bubble"].at(5)
    for c, r in [(0.3 + 0.4j, 0.5), (1j, 0.7), (0.01j, 1.3)]:
        got = energy(m, HalfBall(c, r)).value
        assert got == pytest.approx(brute_energy(m, c, r), rel=1e-7)


def test_concentrated_bubble_resolved():
    m = builtin_corpus()["sphere-bubble"].at(10_000)
    q = energy(m)
    assert q.converged
    assert q.value == pytest.approx(1.5 * math.pi, rel=1e-8)


def test_finite_difference_energy_agrees():
    for m in (builtin_corpus()["sphere-bubble"].at(4), builtin_corpus()["blaschke"].at(4)):
        a = energy(m, HalfBall(0.1 + 0.2j, 1.5)).value
        b = dirichlet_energy_fd(m, HalfBall(0.1 + 0.2j, 1.5), tol=1e-8).value
        assert b == pytest.approx(a, rel=1e-6)


def test_cell_cap_reports_unconverged():
    q = energy(builtin_corpus()["sphere-bubble"].at(1000), tol=1e-14, max_cells=8)
    assert not q.converged
    # no refinement beyond the initial grid
    assert q.cells_used < energy(builtin_corpus()["sphere-bubble"].at(1000)).cells_used


def test_constant_map_zero():
    m = RationalMap.single(DomainKind.DISC, CP1, (QI(3),))
    assert energy(m) == Quadrant(0.0, 0.0, 0, True)


def test_region_validation():
    with pytest.raises(ValueError):
        HalfBall(0, 0.0)
    with pytest.raises(ValueError):
        Annulus(0, 0.5, 0.4)
    assert isinstance(WholeDomain(), WholeDomain)


def test_curve_length():
    m = RationalMap.single(DomainKind.SPHERE, C1, (QI(0), QI(1)))
    assert curve_length(m, center=0.5j, radius=2.0) == pytest.approx(4 * math.pi, rel=1e-10)
    assert curve_length(m, segment=(0, 3 + 4j)) == pytest.approx(5.0, rel=1e-12)
    cp = builtin_maps()["identity-sphere"]
    # the real line is a great circle of length pi
    assert curve_length(cp, segment=(-1e6, 1e6)) == pytest.approx(math.pi, abs=1e-5)
    with pytest.raises(ValueError):
        curve_length(m)


def test_line_integral_is_enclosed_area():
    data = lagrangefy(np.eye(1))
    square = np.array([[0, 0], [2, 0], [2, 1], [0, 1], [0, 0]], dtype=float)
    assert line_integral_lambda(data, square) == pytest.approx(2.0, rel=1e-14)
    circle = lambda t: np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=-1)  # noqa: E731
    assert line_integral_lambda(data, circle) == pytest.approx(math.pi, rel=1e-10)


def test_line_integral_vanishes_on_L():
    rng = np.random.default_rng(9)
    f = np.array([[1.0 + 0.3j, 0.2j], [0.1, 1.0 - 0.4j]])
    data = lagrangefy(f)
    basis = np.vstack([f.real, f.imag])
    pts = rng.standard_normal((6, 2)) @ basis.T
    assert abs(line_integral_lambda(data, pts)) < 1e-12


def test_default_nu_ladder():
    lad = default_nu_ladder()
    assert lad[-1] == 10_000 and lad == sorted(set(lad)) and len(lad) == 8
    assert default_nu_ladder(100, 20, 2)[0] == 2
    with pytest.raises(ValueError):
        default_nu_ladder(factor=1.0)


def test_double_limit_synthetic():
    def measure(nu, e):
        return Quadrant(3.0 + e * e + 1.0 / nu, 0.0, 1)

    est = double_limit(default_nu_ladder(), (0.4, 0.2, 0.1, 0.05), measure)
    assert est.value == pytest.approx(3.0, abs=1e-6)
    assert est.reversed_order == pytest.approx(3.0 + 1e-4, abs=1e-5)


def test_double_limit_rejects_oscillation():
    def measure(nu, e):
        return Quadrant(1.0 + (-1) ** nu * 0.5, 0.0, 1)

    with pytest.raises(MassUndetermined):
        double_limit([2, 3, 4, 5, 6, 7], (0.1, 0.05), measure)


@pytest.mark.slow
def test_sphere_bubble_mass():
    fam = builtin_corpus()["sphere-bubble"]
    limit = builtin_maps()["identity-disc"]
    pr = MassProtocol(nus=tuple(default_nu_ladder(10_000, 6)), eps=(0.2, 0.1, 0.05, 0.025), limit_map=limit)
    est = mass_at(fam, 1j, pr)
    assert est.value == pytest.approx(math.pi, rel=1e-3)

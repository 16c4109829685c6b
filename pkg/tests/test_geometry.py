from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gromovdisc.geometry import (
    CAYLEY,
    INFINITY,
    CutAnnulus,
    DomainKind,
    Moebius,
    SpherePoint,
    chordal,
    domain_distance,
    from_unit_disc,
    log_polar,
    log_polar_inverse,
    moebius_apply,
    moebius_compose,
    moebius_inverse,
    point_from_json,
    point_to_json,
    to_unit_disc,
)
from gromovdisc.poly import QI

small_int = st.integers(-6, 6)
gauss = st.builds(lambda a, b, c: QI(Fraction(a, c), Fraction(b, c)), small_int, small_int, st.integers(1, 5))


def moebius_exact():
    return st.tuples(gauss, gauss, gauss, gauss).filter(lambda t: t[0] * t[3] - t[1] * t[2] != QI(0)).map(
        lambda t: Moebius(*t)
    )


def test_apply_identity_and_translation():
    assert moebius_apply(Moebius.identity(), QI(1, 2)) == SpherePoint.from_complex(QI(1, 2))
    assert moebius_apply(Moebius(1, 1, 0, 1), QI(0)) == SpherePoint.from_complex(QI(1))


def test_inversion_fixes_i():
    assert moebius_apply(Moebius(0, -1, 1, 0), QI(0, 1)) == SpherePoint.from_complex(QI(0, 1))


def test_apply_handles_infinity():
    m = Moebius(2, 1, 1, 1)
    assert moebius_apply(m, INFINITY) == SpherePoint.from_complex(QI(2))
    assert moebius_apply(m, QI(-1)).is_infinity


def test_compose_inverse_is_identity():
    m = Moebius(QI(2), QI(3, 1), QI(1), QI(5))
    assert moebius_compose(m, moebius_inverse(m)).equals(Moebius.identity())


def test_real_translations_compose():
    x1, d1, x2, d2 = Fraction(1, 3), Fraction(1, 7), Fraction(-2, 5), Fraction(3, 11)
    got = moebius_compose(Moebius.affine(QI(x1), QI(d1)), Moebius.affine(QI(x2), QI(d2)))
    assert got.equals(Moebius.affine(QI(x1 + d1 * x2), QI(d1 * d2)), tol=0.0)


def test_disc_automorphism_flag():
    a = Moebius(2, 1, 1, 1)
    b = Moebius(1, -3, 0, 2)
    assert a.disc_automorphism and b.disc_automorphism
    assert moebius_compose(a, b).disc_automorphism
    assert not Moebius(0, -1, -1, 0).disc_automorphism  # det < 0 swaps half-planes
    assert not Moebius(QI(0, 1), 0, 0, 1).disc_automorphism


def test_degenerate_matrix_rejected():
    with pytest.raises(ValueError):
        Moebius(1, 2, 2, 4)


@settings(max_examples=200, deadline=None)
@given(moebius_exact(), moebius_exact(), gauss)
def test_group_action_exact(m1, m2, z):
    lhs = moebius_apply(moebius_compose(m1, m2), z)
    rhs = moebius_apply(m1, moebius_apply(m2, z))
    assert lhs == rhs


def test_group_action_float():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        e = rng.standard_normal(8)
        m1 = Moebius(complex(e[0], e[1]), complex(e[2], e[3]), complex(e[4], e[5]), complex(e[6], e[7]))
        e = rng.standard_normal(8)
        m2 = Moebius(complex(e[0], e[1]), complex(e[2], e[3]), complex(e[4], e[5]), complex(e[6], e[7]))
        z = complex(*rng.standard_normal(2))
        assert chordal(moebius_apply(moebius_compose(m1, m2), z), moebius_apply(m1, moebius_apply(m2, z))) < 1e-12


def test_disc_automorphisms_preserve_upper_half_plane():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b, c, d = rng.standard_normal(4)
        if a * d - b * c < 0:
            a, b = -a, -b
        m = Moebius(a, b, c, d)
        z = rng.standard_normal(200) + 1j * rng.exponential(1.0, 200)
        w = m(z)
        assert np.all(w.imag[np.isfinite(w)] >= -1e-12)


def test_log_polar_examples():
    assert log_polar(0, 0.0, 0.0) == pytest.approx(1.0)
    assert abs(log_polar(1j, math.log(2.0), math.pi / 2) - 3j) < 1e-15


@settings(max_examples=200, deadline=None)
@given(
    st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
    st.floats(-5, 5),
    st.floats(-3.1, 3.1),
)
def test_log_polar_round_trip(z0, s, t):
    z = log_polar(z0, s, t)
    s2, t2 = log_polar_inverse(z0, z)
    assert abs(s2 - s) < 1e-12
    assert abs(cmath.exp(1j * t2) - cmath.exp(1j * t)) < 1e-12


def test_chordal_examples():
    assert chordal(0, INFINITY) == pytest.approx(1.0)
    assert chordal(QI(3, 1), QI(3, 1)) == 0.0
    assert chordal(1, -1) == pytest.approx(1.0)
    assert chordal(1j, -1j) == pytest.approx(1.0)


def test_domain_distance_metrics():
    assert domain_distance(DomainKind.DISC, 1j, 3j) == pytest.approx(2.0)
    assert domain_distance(DomainKind.SPHERE, 0, INFINITY) == pytest.approx(1.0)
    assert domain_distance(DomainKind.DISC, 0, INFINITY) == pytest.approx(1.0)


def test_cut_annulus_rejects_bad_radii():
    CutAnnulus(0, 0.1, 0.2)
    with pytest.raises(ValueError):
        CutAnnulus(0, 0.2, 0.2)
    with pytest.raises(ValueError):
        CutAnnulus(0, 0.3, 0.2)
    with pytest.raises(ValueError):
        CutAnnulus(-1j, 0.1, 0.2)


def test_cayley_conventions():
    assert abs(to_unit_disc(1j)) < 1e-15
    assert to_unit_disc(0) == pytest.approx(1.0)
    assert CAYLEY.equals(Moebius(-1, QI(0, 1), 1, QI(0, 1)))
    z = np.array([0.3 + 2j, -1.5 + 0.1j, 4.0 + 0j])
    assert np.allclose(from_unit_disc(to_unit_disc(z)), z)
    # real axis goes to the unit circle
    assert np.allclose(np.abs(to_unit_disc(np.linspace(-5, 5, 11))), 1.0)


def test_sphere_point_normalisation():
    p = SpherePoint(QI(4), QI(2))
    assert p.value() == QI(2)
    assert SpherePoint(2, 0).is_infinity
    with pytest.raises(ValueError):
        SpherePoint(0, 0)


def test_point_json_round_trip():
    for z in (QI(Fraction(1, 3), -2), INFINITY, 0.25 + 1.5j):
        back = point_from_json(point_to_json(z))
        assert SpherePoint.from_complex(back) == SpherePoint.from_complex(z)
    assert point_from_json(["1/10", 0]) == QI(Fraction(1, 10))

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gromovdisc import _accel

pytestmark = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba missing")

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
coefs = arrays(np.float64, st.integers(2, 6), elements=finite)


def cplx(a, b):
    n = min(len(a), len(b))
    return a[:n] + 1j * b[:n]


def points(seed, n=200):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.uniform(0.01, 3, n)


@settings(max_examples=50, deadline=None)
@given(coefs, coefs, st.integers(0, 2**16))
def test_horner_agrees(a, b, seed):
    c, z = cplx(a, b), points(seed)
    v1, d1 = _accel._horner_numba(c, z)
    v0, d0 = _accel._horner_numpy(c, z)
    np.testing.assert_allclose(v1, v0, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(d1, d0, rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(coefs, coefs, coefs, st.integers(0, 2**16))
def test_density_cp1_agrees(a, b, c, seed):
    num, z = cplx(a, b), points(seed)
    den = np.zeros_like(num)
    den[: min(len(c), len(den))] = c[: len(den)]
    den[0] += 5.0  # keep away from the all-zero polynomial
    d1 = _accel._density_cp1_numba(num, den, z)
    d0 = _accel._density_cp1_numpy(num, den, z)
    np.testing.assert_allclose(d1, d0, rtol=1e-10, atol=1e-300)


def test_density_linear_agrees():
    rng = np.random.default_rng(2)
    for _ in range(20):
        k, n = rng.integers(1, 4), rng.integers(1, 5)
        nums = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
        dens = np.zeros((k, 2), complex)
        dens[:, 0] = 1.0
        dens[:, 1] = 1j * rng.uniform(0.1, 1, k)
        z = points(int(rng.integers(1000)))
        np.testing.assert_allclose(
            _accel._density_linear_numba(nums, dens, z), _accel._density_linear_numpy(nums, dens, z), rtol=1e-11
        )


def test_dispatch_keeps_shape():
    z = points(0, 12).reshape(3, 4)
    v, d = _accel.horner(np.array([0, 1, 1], complex), z)
    assert v.shape == d.shape == (3, 4)
    np.testing.assert_allclose(v, z + z * z)
    np.testing.assert_allclose(d, 1 + 2 * z)


@pytest.mark.parametrize("flag,name", [("0", "numpy"), ("1", "numba"), ("off", "numpy")])
def test_environment_flag(flag, name):
    env = dict(os.environ, GROMOVDISC_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from gromovdisc import _accel; print(_accel.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == name


def test_energy_same_under_both_backends():
    code = (
        "from gromovdisc.holomap import builtin_corpus; from gromovdisc.quadrature import energy; "
        "print(repr(energy(builtin_corpus()['sphere-bubble'].at(100)).value))"
    )
    vals = []
    for flag in ("0", "1"):
        env = dict(os.environ, GROMOVDISC_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)

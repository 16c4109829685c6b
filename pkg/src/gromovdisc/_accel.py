"""Hot kernels: rational-map evaluation and energy densities on point arrays.

Each kernel exists twice, a numba ``@njit`` loop and a vectorised numpy
version.  The numba path is used unless ``GROMOVDISC_NUMBA=0`` is set in the
environment (or numba cannot be imported).  Both paths must agree to
rounding; ``tests/test_accel.py`` checks this.

Coefficient arrays are ascending (``c[k]`` multiplies ``z**k``).  Multi-
component maps pass a 2-D array of shape ``(ncomp, ncoef)`` padded with
zeros.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return decorator


def _flag_enabled() -> bool:
    raw = os.environ.get("GROMOVDISC_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "no", "off")


USE_NUMBA = NUMBA_AVAILABLE and _flag_enabled()

__all__ = [
    "USE_NUMBA",
    "NUMBA_AVAILABLE",
    "horner",
    "density_linear",
    "density_cp1",
    "backend_name",
]


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------


@njit(cache=True)
def _horner_numba(c, z):
    n = z.shape[0]
    val = np.empty(n, dtype=np.complex128)
    der = np.empty(n, dtype=np.complex128)
    m = c.shape[0]
    for i in range(n):
        zi = z[i]
        v = 0j
        d = 0j
        for k in range(m - 1, -1, -1):
            d = d * zi + v
            v = v * zi + c[k]
        val[i] = v
        der[i] = d
    return val, der


@njit(cache=True)
def _density_linear_numba(nums, dens, z):
    n = z.shape[0]
    ncomp = nums.shape[0]
    mn = nums.shape[1]
    md = dens.shape[1]
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        zi = z[i]
        acc = 0.0
        for j in range(ncomp):
            p = 0j
            dp = 0j
            for k in range(mn - 1, -1, -1):
                dp = dp * zi + p
                p = p * zi + nums[j, k]
            q = 0j
            dq = 0j
            for k in range(md - 1, -1, -1):
                dq = dq * zi + q
                q = q * zi + dens[j, k]
            w = (dp * q - p * dq) / (q * q)
            acc += w.real * w.real + w.imag * w.imag
        out[i] = acc
    return out


@njit(cache=True)
def _density_cp1_numba(num, den, z):
    n = z.shape[0]
    mn = num.shape[0]
    md = den.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        zi = z[i]
        p = 0j
        dp = 0j
        for k in range(mn - 1, -1, -1):
            dp = dp * zi + p
            p = p * zi + num[k]
        q = 0j
        dq = 0j
        for k in range(md - 1, -1, -1):
            dq = dq * zi + q
            q = q * zi + den[k]
        w = dp * q - p * dq
        s = p.real * p.real + p.imag * p.imag + q.real * q.real + q.imag * q.imag
        out[i] = (w.real * w.real + w.imag * w.imag) / (s * s)
    return out


# --------------------------------------------------------------------------
# numpy fallbacks
# --------------------------------------------------------------------------


def _horner_numpy(c, z):
    val = np.zeros(z.shape, dtype=np.complex128)
    der = np.zeros(z.shape, dtype=np.complex128)
    for k in range(c.shape[0] - 1, -1, -1):
        der = der * z + val
        val = val * z + c[k]
    return val, der


def _density_linear_numpy(nums, dens, z):
    out = np.zeros(z.shape, dtype=np.float64)
    for j in range(nums.shape[0]):
        p, dp = _horner_numpy(nums[j], z)
        q, dq = _horner_numpy(dens[j], z)
        w = (dp * q - p * dq) / (q * q)
        out += w.real**2 + w.imag**2
    return out


def _density_cp1_numpy(num, den, z):
    p, dp = _horner_numpy(num, z)
    q, dq = _horner_numpy(den, z)
    w = dp * q - p * dq
    s = np.abs(p) ** 2 + np.abs(q) ** 2
    return (w.real**2 + w.imag**2) / (s * s)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def _prep(z):
    z = np.asarray(z, dtype=np.complex128)
    return np.ascontiguousarray(z.ravel()), z.shape


def horner(c: np.ndarray, z) -> tuple[np.ndarray, np.ndarray]:
    """Value and first derivative of the polynomial ``c`` at ``z``."""
    flat, shape = _prep(z)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    if USE_NUMBA:
        v, d = _horner_numba(c, flat)
    else:
        v, d = _horner_numpy(c, flat)
    return v.reshape(shape), d.reshape(shape)


def density_linear(nums: np.ndarray, dens: np.ndarray, z) -> np.ndarray:
    """``sum_j |w_j'(z)|**2`` for ``w_j = nums[j] / dens[j]``."""
    flat, shape = _prep(z)
    nums = np.ascontiguousarray(np.atleast_2d(nums), dtype=np.complex128)
    dens = np.ascontiguousarray(np.atleast_2d(dens), dtype=np.complex128)
    if USE_NUMBA:
        out = _density_linear_numba(nums, dens, flat)
    else:
        out = _density_linear_numpy(nums, dens, flat)
    return out.reshape(shape)


def density_cp1(num: np.ndarray, den: np.ndarray, z) -> np.ndarray:
    """Fubini-Study density ``|P'Q - PQ'|**2 / (|P|**2 + |Q|**2)**2``."""
    flat, shape = _prep(z)
    num = np.ascontiguousarray(num, dtype=np.complex128)
    den = np.ascontiguousarray(den, dtype=np.complex128)
    if USE_NUMBA:
        out = _density_cp1_numba(num, den, flat)
    else:
        out = _density_cp1_numpy(num, den, flat)
    return out.reshape(shape)

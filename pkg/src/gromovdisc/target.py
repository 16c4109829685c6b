"""Target geometries, energy densities and the local exact symplectic form.

Three targets are supported:

``LinearSpace``
    ``C^n`` with the standard structure and a linear totally real subspace
    ``L = F R^n`` given by a complex frame ``F``.
``ProjectiveLine``
    ``CP^1`` with the Fubini-Study form normalised to total area pi and
    boundary condition the real circle ``R u {inf}``.
``UnitDiscPlane``
    ``C`` with boundary condition the unit circle; the planar model in which
    Blaschke products are proper holomorphic discs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import SpherePoint, chordal

__all__ = [
    "LinearSpace",
    "ProjectiveLine",
    "UnitDiscPlane",
    "TargetSpace",
    "LocalSymplecticData",
    "TamingError",
    "totally_real_check",
    "real_form",
    "lagrangefy",
    "target_distance",
    "boundary_distance",
    "target_from_json",
    "standard_complex_structure",
]

DEFAULT_K_RADIUS = 1e6


@dataclass(frozen=True, eq=False)
class LinearSpace:
    frame: np.ndarray
    k_radius: float = DEFAULT_K_RADIUS
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.frame, dtype=np.complex128))
        if f.shape[0] != f.shape[1]:
            raise ValueError("frame must be square")
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)
        ok, cond = totally_real_check(f)
        if not ok:
            raise ValueError(f"frame is not totally real (condition number {cond:.3g})")

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    @classmethod
    def standard(cls, n: int = 1) -> "LinearSpace":
        return cls(np.eye(n, dtype=np.complex128))

    def to_json(self) -> dict:
        return {"kind": "linear", "frame": [[[z.real, z.imag] for z in row] for row in self.frame]}

    def __eq__(self, other):
        return isinstance(other, LinearSpace) and np.array_equal(self.frame, other.frame)

    def __hash__(self):
        return hash(("linear", self.frame.tobytes()))


@dataclass(frozen=True)
class ProjectiveLine:
    kind: str = field(default="cp1", init=False)

    def to_json(self) -> dict:
        return {"kind": "cp1"}


@dataclass(frozen=True)
class UnitDiscPlane:
    kind: str = field(default="unit_disc", init=False)

    def to_json(self) -> dict:
        return {"kind": "unit_disc"}


TargetSpace = LinearSpace | ProjectiveLine | UnitDiscPlane


def target_from_json(data: dict) -> TargetSpace:
    kind = data.get("kind") if isinstance(data, dict) else None
    if kind == "cp1":
        return ProjectiveLine()
    if kind == "unit_disc":
        return UnitDiscPlane()
    if kind == "linear":
        rows = data.get("frame")
        if not isinstance(rows, list) or not rows:
            raise ValueError("linear target needs a non-empty 'frame'")
        frame = np.array([[complex(re, im) for re, im in row] for row in rows])
        return LinearSpace(frame)
    raise ValueError(f"unknown target kind {kind!r}")


# --------------------------------------------------------------------------
# totally real frames and the local symplectic form
# --------------------------------------------------------------------------


def real_form(f: np.ndarray) -> np.ndarray:
    """Real ``2n x 2n`` matrix of ``(q, p) -> F (q + i p)`` in (Re, Im) coordinates."""
    f = np.atleast_2d(np.asarray(f, dtype=np.complex128))
    return np.block([[f.real, -f.imag], [f.imag, f.real]])


def standard_complex_structure(n: int) -> np.ndarray:
    """Multiplication by i on ``R^2n = (Re z, Im z)``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def totally_real_check(f) -> tuple[bool, float]:
    """Whether the columns of ``F`` and ``iF`` are R-independent, plus cond number."""
    m = real_form(f)
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] == 0.0:
        return False, math.inf
    cond = float(s[0] / s[-1])
    return cond < 1e12, cond


class TamingError(RuntimeError):
    """Raised when the constructed symplectic data fails its own checks."""


@dataclass(frozen=True, eq=False)
class LocalSymplecticData:
    """Exact symplectic data near a linear totally real ``L``.

    The primitive is ``lambda_x(v) = x @ primitive @ v`` (coefficients linear
    in the base point), ``form`` is the constant matrix of ``d lambda`` and
    ``metric`` the Hermitian metric in which the frame is unitary.
    """

    frame: np.ndarray
    primitive: np.ndarray
    form: np.ndarray
    metric: np.ndarray
    r_omega: float
    taming_margin: float
    equivalence_kappa: float

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    def lam(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Evaluate the 1-form at base points ``x`` on vectors ``v`` (last axis 2n)."""
        return np.einsum("...i,ij,...j->...", x, self.primitive, v)

    def omega(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("...i,ij,...j->...", u, self.form, v)

    def qp(self, x: np.ndarray) -> np.ndarray:
        """Coordinates ``(q, p)`` of real points ``x`` in the splitting ``L + JL``."""
        return np.linalg.solve(real_form(self.frame), np.asarray(x, dtype=float).T).T


def lagrangefy(frame, r_omega: float = 1.0, n_checks: int = 10_000, seed: int = 0) -> LocalSymplecticData:
    """Build ``omega_L = d lambda`` taming i with ``lambda|_L = 0``.

    Raises :class:`TamingError` if any of the defining properties fails
    numerically; that indicates a construction bug rather than bad input.
    """
    f = np.atleast_2d(np.asarray(frame, dtype=np.complex128))
    ok, cond = totally_real_check(f)
    if not ok:
        raise ValueError(f"frame is not totally real (condition number {cond:.3g})")
    n = f.shape[0]
    rf = real_form(f)
    rinv = np.linalg.inv(rf)
    qrows, prows = rinv[:n], rinv[n:]
    # lambda = -sum p_j dq_j pulled back through x -> (q, p)
    primitive = -prows.T @ qrows
    form = primitive - primitive.T
    metric = rinv.T @ rinv
    jmat = standard_complex_structure(n)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_checks, 2 * n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    tame = np.einsum("ki,ij,kj->k", v, form, v @ jmat.T)
    margin = float(tame.min())
    if not margin > 0:
        raise TamingError(f"omega_L fails to tame J (min {margin:.3e})")

    basis_l = np.vstack([f.real, f.imag])  # columns: F e_j as real vectors
    scale = max(1.0, float(np.abs(primitive).max()))
    lam_on_l = basis_l.T @ primitive @ np.hstack([basis_l, jmat @ basis_l])
    if np.abs(lam_on_l).max() > 1e-12 * scale * max(1.0, np.abs(basis_l).max() ** 2):
        raise TamingError("lambda does not vanish on L")
    jl = jmat @ basis_l
    iso = jl.T @ form @ jl
    if np.abs(iso).max() > 1e-12 * max(1.0, np.abs(form).max()) * max(1.0, np.abs(jl).max() ** 2):
        raise TamingError("JTL is not omega_L-Lagrangian")

    # g_L = sym(omega_L(., J.)) against the standard metric
    g_l = 0.5 * (form @ jmat + (form @ jmat).T)
    eig = np.linalg.eigvalsh(g_l)
    kappa = float(max(eig.max(), 1.0 / eig.min()))
    return LocalSymplecticData(f, primitive, form, metric, float(r_omega), margin, kappa)


# --------------------------------------------------------------------------
# distances
# --------------------------------------------------------------------------


def _as_vector(p, n: int) -> np.ndarray:
    return np.atleast_1d(np.asarray(p, dtype=np.complex128)).reshape(n)


def target_distance(t: TargetSpace, p, q) -> float:
    if isinstance(t, ProjectiveLine):
        return chordal(p, q)
    if isinstance(t, UnitDiscPlane):
        return abs(complex(p) - complex(q))
    return float(np.linalg.norm(_as_vector(p, t.n) - _as_vector(q, t.n)))


def boundary_distance(t: TargetSpace, p) -> float:
    """Distance from ``p`` to the boundary condition ``L``."""
    if isinstance(t, ProjectiveLine):
        sp = SpherePoint.from_complex(p)
        if sp.is_infinity:
            return 0.0
        z = sp.to_complex()
        # unit-sphere height over the real great circle; chords scaled by 1/2
        h = min(1.0, 2.0 * abs(z.imag) / (1.0 + abs(z) ** 2))
        return math.sin(0.5 * math.asin(h))
    if isinstance(t, UnitDiscPlane):
        return abs(abs(complex(p)) - 1.0)
    x = _as_vector(p, t.n)
    coeff = np.linalg.solve(t.frame, x)
    return float(np.linalg.norm(coeff.imag))

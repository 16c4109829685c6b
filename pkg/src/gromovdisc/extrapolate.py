"""Least-squares limit extrapolation with simple model selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["Extrapolation", "NU_MODELS", "EPS_MODELS", "fit_limit", "extrapolate_nu", "extrapolate_eps"]

Basis = Sequence[Callable[[np.ndarray], np.ndarray]]

# value(nu) = c + sum a_k g_k(nu); c is the nu -> inf limit
NU_MODELS: dict[str, Basis] = {
    "1/nu": (lambda n: 1.0 / n,),
    "1/nu^2": (lambda n: 1.0 / n**2,),
    "1/nu+1/nu^2": (lambda n: 1.0 / n, lambda n: 1.0 / n**2),
    "1/ln(nu)": (lambda n: 1.0 / np.log(n),),
    "1/ln(nu)+1/ln(nu)^2": (lambda n: 1.0 / np.log(n), lambda n: 1.0 / np.log(n) ** 2),
    "1/ln(nu)+1/nu": (lambda n: 1.0 / np.log(n), lambda n: 1.0 / n),
    "1/ln(nu)^2": (lambda n: 1.0 / np.log(n) ** 2,),
    "1/ln(nu)^2+1/nu": (lambda n: 1.0 / np.log(n) ** 2, lambda n: 1.0 / n),
}

# value(eps) = c + sum a_k g_k(eps); c is the eps -> 0 limit
EPS_MODELS: dict[str, Basis] = {
    "eps^2+eps^3": (lambda e: e**2, lambda e: e**3),
    "const": (),
}


@dataclass(frozen=True)
class Extrapolation:
    value: float
    model: str
    residual: float
    coeffs: tuple[float, ...]
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    scores: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "model": self.model,
            "residual": self.residual,
            "coeffs": list(self.coeffs),
            "x": list(self.xs),
            "y": list(self.ys),
            "scores": dict(self.scores),
        }


def _lstsq(x: np.ndarray, y: np.ndarray, basis: Basis) -> tuple[np.ndarray, float]:
    cols = [np.ones_like(x)] + [g(x) for g in basis]
    a = np.stack(cols, axis=1)
    # column scaling keeps the normal equations tame for tiny 1/nu^2 columns
    scale = np.maximum(np.abs(a).max(axis=0), 1e-300)
    coef, *_ = np.linalg.lstsq(a / scale, y, rcond=None)
    coef = coef / scale
    res = float(np.max(np.abs(a @ coef - y))) if len(y) else 0.0
    return coef, res


def fit_limit(xs, ys, models: dict[str, Basis], window: int = 5) -> Extrapolation:
    """Fit each model on the last ``window`` points and keep the best predictor.

    A model is scored by how well a fit that omits the final sample predicts
    it; the winner is then refitted on the whole window.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) == 0:
        raise ValueError("no samples to extrapolate")
    w = min(window, len(x))
    xw, yw = x[-w:], y[-w:]
    scores = {}
    best = None
    for name, basis in models.items():
        npar = 1 + len(basis)
        if w < npar:
            continue
        if w >= npar + 1:
            coef, _ = _lstsq(xw[:-1], yw[:-1], basis)
            pred = coef[0] + sum(c * g(xw[-1:])[0] for c, g in zip(coef[1:], basis))
            score = abs(float(pred) - float(yw[-1]))
        else:
            score = math.inf
        # prefer simpler models on ties
        scores[name] = score
        key = (score, npar)
        if best is None or key < best[0]:
            best = (key, name, basis)
    if best is None:
        return Extrapolation(float(y[-1]), "last", 0.0, (float(y[-1]),), tuple(x), tuple(y), scores)
    _, name, basis = best
    coef, res = _lstsq(xw, yw, basis)
    return Extrapolation(float(coef[0]), name, res, tuple(float(c) for c in coef), tuple(x), tuple(y), scores)


def extrapolate_nu(nus, values, window: int = 5, models: dict[str, Basis] | None = None) -> Extrapolation:
    order = np.argsort(np.asarray(nus, dtype=float))
    xs = np.asarray(nus, dtype=float)[order]
    ys = np.asarray(values, dtype=float)[order]
    return fit_limit(xs, ys, NU_MODELS if models is None else models, window)


def extrapolate_eps(eps, values, window: int = 5, models: dict[str, Basis] | None = None) -> Extrapolation:
    # sort by decreasing eps so the final sample is the one nearest the limit
    order = np.argsort(-np.asarray(eps, dtype=float))
    xs = np.asarray(eps, dtype=float)[order]
    ys = np.asarray(values, dtype=float)[order]
    return fit_limit(xs, ys, EPS_MODELS if models is None else models, window)

"""Empirical Fréchet means and metric-space treatment effects.

Weighted Fréchet means under the Euclidean metric (closed form), the
elastic Fisher-Rao metric (weighted Karcher mean in SRSF space) and the
spherical Fisher-Rao metric (projected gradient on a box domain of
density-like vectors).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import elastic
from .errors import ArmEmptyError, WeightError
from .fdata import Curve, Dataset, grid_norm

__all__ = [
    "Metric",
    "Weighting",
    "FrechetMeanResult",
    "DynamicEffect",
    "frechet_mean",
    "group_potential_outcomes",
    "dynamic_effect",
    "effect_from_means",
]

PROPENSITY_CLIP = 0.01


class Metric(enum.Enum):
    EUCLIDEAN = "euclidean"
    FISHER_RAO_SRSF = "fisher_rao_srsf"
    FISHER_RAO_SPHERE = "fisher_rao_sphere"


class Weighting(enum.Enum):
    UNIFORM = "uniform"
    INVERSE_PROPENSITY = "inverse_propensity"


@dataclass
class FrechetMeanResult:
    mean: Curve
    metric: Metric
    objective: float
    converged: bool


@dataclass
class DynamicEffect:
    """Pointwise effect curve and its scalar norm under a metric."""

    delta: Curve
    scalar_norm: float
    metric: Metric


def _normalized_weights(n: int, weights) -> np.ndarray:
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0):
        raise WeightError("weights must be nonnegative, one per curve")
    total = w.sum()
    if total <= 0:
        raise WeightError("weights must not all be zero")
    return w / total


def _sphere_objective(g: np.ndarray, ymat: np.ndarray, w: np.ndarray) -> float:
    s = np.clip(np.sqrt(ymat * g[None, :]).sum(axis=1), -1.0, 1.0)
    return float(np.sum(w * (2.0 * np.arccos(s)) ** 2))


def _sphere_mean(
    curves: Sequence[Curve],
    w: np.ndarray,
    max_iter: int = 500,
    grad_tol: float = 1e-8,
    delta: float = 1e-6,
) -> FrechetMeanResult:
    """Projected gradient descent with backtracking on the domain of
    density-like vectors: entries at least a small floor, total mass at
    most 1 - delta."""
    grid = curves[0].grid
    ymat = np.array([c.values for c in curves])
    if np.any(ymat < 0):
        raise ValueError("spherical metric needs nonnegative curves")
    lo = 1e-10
    cap = 1.0 - delta

    def project(g):
        g = np.clip(g, lo, None)
        if g.sum() <= cap:
            return g
        # Euclidean projection onto {g >= lo, sum(g) = cap}: shift by a
        # common threshold and re-clip, with the threshold found from the
        # sorted entries
        srt = np.sort(g - lo)[::-1]
        csum = np.cumsum(srt)
        budget = cap - lo * g.size
        k = np.arange(1, g.size + 1)
        tau = (csum - budget) / k
        valid = srt - tau > 0
        kk = int(np.max(np.flatnonzero(valid))) if np.any(valid) else 0
        return np.maximum(g - tau[kk], lo)

    g = project(w @ ymat)
    obj = _sphere_objective(g, ymat, w)
    converged = False
    for _ in range(max_iter):
        s = np.clip(np.sqrt(ymat * g[None, :]).sum(axis=1), -1.0, 1.0 - 1e-12)
        phi = 2.0 * np.arccos(s)
        coef = -2.0 * w * phi / np.sqrt(1.0 - s**2)
        grad = (coef[:, None] * np.sqrt(ymat / g[None, :])).sum(axis=0)
        step = 1.0
        improved = False
        for _ in range(40):
            cand = project(g - step * grad)
            cand_obj = _sphere_objective(cand, ymat, w)
            if cand_obj < obj - 1e-15:
                g, obj, improved = cand, cand_obj, True
                break
            step *= 0.5
        if not improved or np.linalg.norm(project(g - grad) - g) < grad_tol:
            converged = True
            break
    return FrechetMeanResult(Curve(grid, g), Metric.FISHER_RAO_SPHERE, obj, converged)


def frechet_mean(
    curves: Sequence[Curve],
    weights=None,
    metric: Metric = Metric.EUCLIDEAN,
    **options,
) -> FrechetMeanResult:
    """Weighted empirical Fréchet mean of curves under a chosen metric."""
    curves = list(curves)
    if not curves:
        raise ValueError("need at least one curve")
    w = _normalized_weights(len(curves), weights)
    grid = curves[0].grid

    if metric is Metric.EUCLIDEAN:
        ymat = np.array([c.values for c in curves])
        mean = w @ ymat
        obj = float(sum(wi * grid_norm(mean - row, grid) ** 2 for wi, row in zip(w, ymat)))
        return FrechetMeanResult(Curve(grid, mean), metric, obj, True)

    if metric is Metric.FISHER_RAO_SRSF:
        result = elastic.karcher_mean(curves, weights=w, **options)
        return FrechetMeanResult(
            result.mean, metric, result.objective_trace[-1], result.converged
        )

    if metric is Metric.FISHER_RAO_SPHERE:
        return _sphere_mean(curves, w, **options)

    raise ValueError(f"unknown metric: {metric}")


def group_potential_outcomes(
    ds: Dataset,
    metric: Metric = Metric.EUCLIDEAN,
    weighting: Weighting = Weighting.UNIFORM,
    propensity=None,
):
    """Per-arm weighted Fréchet means (F1, F0) for a binary dataset.

    With inverse-propensity weighting, treated units get weight 1/pi(V) and
    controls 1/(1 - pi(V)), with propensities clipped away from {0, 1}.
    """
    if not ds.is_binary():
        raise ValueError("group potential outcomes need binary treatments")
    x = ds.treatments
    idx1, idx0 = np.flatnonzero(x == 1.0), np.flatnonzero(x == 0.0)
    if idx1.size == 0 or idx0.size == 0:
        raise ArmEmptyError("both treatment arms must be non-empty")

    if weighting is Weighting.UNIFORM:
        w1 = w0 = None
    else:
        if propensity is None:
            raise ValueError("inverse propensity weighting needs a fitted model")
        pi = np.clip(propensity.predict(ds.covariate_matrix), PROPENSITY_CLIP, 1 - PROPENSITY_CLIP)
        w1 = 1.0 / pi[idx1]
        w0 = 1.0 / (1.0 - pi[idx0])

    curves = ds.outcome_curves()
    f1 = frechet_mean([curves[i] for i in idx1], weights=w1, metric=metric)
    f0 = frechet_mean([curves[i] for i in idx0], weights=w0, metric=metric)
    return f1, f0


def effect_from_means(mean1: Curve, mean0: Curve, metric: Metric) -> DynamicEffect:
    """Assemble a DynamicEffect from two mean curves."""
    if mean1.grid != mean0.grid:
        raise ValueError("means must share a grid")
    delta = Curve(mean1.grid, mean1.values - mean0.values)
    if metric is Metric.EUCLIDEAN:
        norm = grid_norm(delta.values, delta.grid)
    elif metric is Metric.FISHER_RAO_SRSF:
        norm = elastic.fr_distance_srsf(mean1, mean0)
    elif metric is Metric.FISHER_RAO_SPHERE:
        norm = elastic.fr_distance_sphere(mean1, mean0)
    else:
        raise ValueError(f"unknown metric: {metric}")
    return DynamicEffect(delta=delta, scalar_norm=norm, metric=metric)


def dynamic_effect(
    f1: FrechetMeanResult, f0: FrechetMeanResult, metric: Optional[Metric] = None
) -> DynamicEffect:
    """Pointwise difference of group means plus its scalar norm."""
    return effect_from_means(f1.mean, f0.mean, metric or f1.metric)

"""Asymptotic confidence intervals for functional treatment effects.

The scaled effect estimator converges to a Gaussian process with covariance
kernel K = lim n (S1 / n1 + S0 / n0).  When the true effect has nonzero
norm the norm estimate is asymptotically normal with a delta-method
variance; when the effect is exactly zero the limit is the norm of the
Gaussian process itself, whose distribution we tabulate by Monte Carlo over
the eigenvalues of the estimated kernel.  Also provides a Welch two-sample
t-test for comparing benchmark error samples.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import ArmEmptyError
from .fdata import Curve, Dataset

__all__ = [
    "Regime",
    "EffectCI",
    "TTestResult",
    "effect_ci",
    "pointwise_ci",
    "welch_t_test",
]

EIGENVALUE_FLOOR = 1e-12


class Regime(enum.Enum):
    NONZERO_NORM = "nonzero_norm"
    ZERO_NORM = "zero_norm"


@dataclass
class EffectCI:
    estimate: float
    lower: float
    upper: float
    level: float
    regime: Regime
    pointwise: Optional[np.ndarray] = None  # T x 2 lower/upper bands


@dataclass
class TTestResult:
    statistic: float
    p_value: float
    dof: float


def _covariance_kernel(ds: Dataset) -> np.ndarray:
    """K-hat = n (S1 / n1 + S0 / n0) from the per-arm sample covariances."""
    if not ds.is_binary():
        raise ValueError("covariance kernel needs binary treatments")
    y = ds.outcome_matrix
    i1, i0 = ds.arm_indices(1.0), ds.arm_indices(0.0)
    if i1.size < 2 or i0.size < 2:
        raise ArmEmptyError("each arm needs at least 2 samples for a covariance")
    n = len(ds)
    s1 = np.cov(y[i1], rowvar=False)
    s0 = np.cov(y[i0], rowvar=False)
    return n * (s1 / i1.size + s0 / i0.size)


def _norm_quantile(p: float) -> float:
    return math.sqrt(2.0) * special.erfinv(2.0 * p - 1.0)


def effect_ci(
    ds: Dataset,
    delta_hat: Curve,
    level: float = 0.95,
    seed: int = 0,
    mc_draws: int = 100_000,
) -> EffectCI:
    """Confidence interval for the norm of the effect curve.

    Splits on the estimated norm: above the threshold 2 sqrt(tr K) / sqrt(n)
    the delta-method normal interval applies; below it the interval comes
    from Monte Carlo quantiles of the limiting weighted chi-square norm.
    """
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    k_hat = _covariance_kernel(ds)
    n = len(ds)
    d = np.asarray(delta_hat.values, dtype=float)
    norm = float(np.linalg.norm(d))
    threshold = 2.0 * math.sqrt(max(np.trace(k_hat), 0.0)) / math.sqrt(n)

    if norm > threshold:
        sigma2 = float(d @ k_hat @ d) / max(norm**2, EIGENVALUE_FLOOR)
        sigma2 = max(sigma2, 0.0)
        z = _norm_quantile(0.5 + level / 2.0)
        half = z * math.sqrt(sigma2) / math.sqrt(n)
        lower, upper = norm - half, norm + half
        regime = Regime.NONZERO_NORM
    else:
        evals = np.linalg.eigvalsh(k_hat)
        evals = np.clip(evals, EIGENVALUE_FLOOR, None)
        rng = np.random.default_rng(seed)
        draws = rng.standard_normal((mc_draws, evals.size))
        norms = np.sqrt((draws**2) @ evals) / math.sqrt(n)
        alpha = 1.0 - level
        lower = float(np.quantile(norms, alpha / 2.0))
        upper = float(np.quantile(norms, 1.0 - alpha / 2.0))
        regime = Regime.ZERO_NORM

    bands = pointwise_ci(delta_hat, np.diag(k_hat), level, n)
    return EffectCI(
        estimate=norm,
        lower=max(lower, 0.0),
        upper=upper,
        level=level,
        regime=regime,
        pointwise=bands,
    )


def pointwise_ci(delta_hat: Curve, k_diag: np.ndarray, level: float, n: int) -> np.ndarray:
    """Per-grid-point normal bands delta(t) +- z sqrt(K(t, t) / n)."""
    z = _norm_quantile(0.5 + level / 2.0)
    half = z * np.sqrt(np.clip(np.asarray(k_diag, dtype=float), 0.0, None) / n)
    d = np.asarray(delta_hat.values, dtype=float)
    return np.column_stack([d - half, d + half])


def welch_t_test(a, b) -> TTestResult:
    """Welch's unequal-variance two-sample t-test (two-sided)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    sa, sb = va / a.size, vb / b.size
    se2 = sa + sb
    diff = a.mean() - b.mean()
    if se2 == 0.0:
        # identical constant samples: no evidence either way
        return TTestResult(statistic=0.0, p_value=1.0, dof=float(a.size + b.size - 2))
    t = diff / math.sqrt(se2)
    dof = se2**2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = 2.0 * special.stdtr(dof, -abs(t))
    return TTestResult(statistic=float(t), p_value=float(p), dof=float(dof))

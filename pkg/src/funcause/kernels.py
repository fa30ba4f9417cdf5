"""Scalar kernels, bandwidth heuristics and Gram-matrix construction.

Input Grams combine a treatment kernel and a covariate kernel entrywise;
the output Gram encodes correlation among grid points.  Curve inputs go
through the Fisher-Rao SRSF embedding, which keeps the Gaussian curve
kernel positive definite.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .elastic import fr_distance_srsf, srsf_transform
from .fdata import Curve, Grid

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "GramMatrix",
    "se_kernel",
    "binary_kernel",
    "fr_kernel",
    "median_heuristic",
    "input_gram",
    "output_gram",
]


class KernelFamily(enum.Enum):
    SQUARED_EXPONENTIAL = "se"
    BINARY_INDICATOR = "binary"
    FISHER_RAO_GAUSSIAN = "fisher_rao"
    CONSTANT = "constant"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its bandwidth (lengthscale or decay rate)."""

    family: KernelFamily
    lengthscale: float = 1.0

    def __post_init__(self):
        if self.lengthscale <= 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Symmetric PSD kernel matrix with provenance."""

    entries: np.ndarray
    spec: Optional[KernelSpec] = None

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("gram matrix must be square")
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("gram matrix must be symmetric")
        object.__setattr__(self, "entries", (m + m.T) / 2.0)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def is_psd(self, rel_tol: float = 1e-8) -> bool:
        eigs = np.linalg.eigvalsh(self.entries)
        return eigs[0] >= -rel_tol * max(1.0, eigs[-1])


def se_kernel(a, b, lengthscale: float) -> float:
    """Squared exponential kernel exp(-||a - b||^2 / (2 l^2))."""
    if lengthscale <= 0:
        raise ValueError("lengthscale must be positive")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError("inputs must have equal dimension")
    d2 = float(np.sum((a - b) ** 2))
    return math.exp(-d2 / (2.0 * lengthscale**2))


def binary_kernel(x, y) -> float:
    """Indicator kernel: 1 when the treatments match."""
    return 1.0 if x == y else 0.0


def fr_kernel(f: Curve, g: Curve, zeta: float) -> float:
    """Gaussian kernel on curves through the Fisher-Rao distance."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    return math.exp(-zeta * fr_distance_srsf(f, g) ** 2)


def _srsf_feature_matrix(curves: Sequence[Curve]) -> np.ndarray:
    """SRSF values scaled so Euclidean row distances equal d_FR."""
    grid = curves[0].grid
    qmat = np.array([srsf_transform(c).values for c in curves])
    w = np.full(len(grid), grid.spacing)
    w[0] = w[-1] = grid.spacing / 2.0
    return qmat * np.sqrt(w)


def median_heuristic(points, metric: str = "euclidean") -> float:
    """Median pairwise distance, with degenerate-case fallbacks.

    Falls back to the mean positive distance when the median is zero, and
    to 1.0 when every pairwise distance vanishes.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points")
    if metric == "euclidean":
        mat = np.atleast_2d(np.asarray(points, dtype=float))
        if mat.shape[0] == 1:
            mat = mat.T
        dists = pdist(mat)
    elif metric == "fisher_rao":
        dists = pdist(_srsf_feature_matrix(list(points)))
    else:
        raise ValueError(f"unknown metric: {metric}")
    med = float(np.median(dists))
    if med > 0:
        return med
    positive = dists[dists > 0]
    if positive.size:
        return float(np.mean(positive))
    return 1.0


def _se_gram(mat: np.ndarray, lengthscale: float) -> np.ndarray:
    d2 = squareform(pdist(mat, "sqeuclidean"))
    return np.exp(-d2 / (2.0 * lengthscale**2))


def _gram_for(spec: KernelSpec, treatments=None, vectors=None, curves=None, n=None) -> np.ndarray:
    if spec.family is KernelFamily.CONSTANT:
        return np.ones((n, n))
    if spec.family is KernelFamily.BINARY_INDICATOR:
        x = np.asarray(treatments, dtype=float)
        return (x[:, None] == x[None, :]).astype(float)
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        if vectors is None:
            x = np.asarray(treatments, dtype=float)[:, None]
        else:
            x = np.atleast_2d(np.asarray(vectors, dtype=float))
        return _se_gram(x, spec.lengthscale)
    if spec.family is KernelFamily.FISHER_RAO_GAUSSIAN:
        feats = _srsf_feature_matrix(curves)
        d2 = squareform(pdist(feats, "sqeuclidean"))
        return np.exp(-spec.lengthscale * d2)
    raise ValueError(f"unsupported kernel family: {spec.family}")


def input_gram(ds, kx: KernelSpec, kv: Optional[KernelSpec]) -> GramMatrix:
    """Entrywise product of treatment and covariate Grams.

    ``kv`` may be None (or have zero covariate columns), in which case the
    covariate factor is constant one.  Fisher-Rao covariate kernels act on
    the dataset's covariate curves.
    """
    n = len(ds)
    kx_mat = _gram_for(kx, treatments=ds.treatments, n=n)
    if kv is None:
        kv_mat = np.ones((n, n))
    elif kv.family is KernelFamily.FISHER_RAO_GAUSSIAN:
        if ds.covariate_grid is None:
            raise ValueError("dataset has no covariate curves")
        curves = [s.covariate_curve for s in ds.samples]
        kv_mat = _gram_for(kv, curves=curves, n=n)
    else:
        v = ds.covariate_matrix
        if v.shape[1] == 0 or kv.family is KernelFamily.CONSTANT:
            kv_mat = np.ones((n, n))
        else:
            kv_mat = _gram_for(kv, vectors=v, n=n)
    return GramMatrix(kx_mat * kv_mat, spec=kx)


def output_gram(grid: Grid, lengthscale: Optional[float] = None) -> GramMatrix:
    """Squared exponential Gram over grid points.

    Defaults the lengthscale to the median heuristic over the grid points.
    """
    pts = grid.points
    if lengthscale is None:
        lengthscale = median_heuristic(pts)
    spec = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, lengthscale)
    return GramMatrix(_se_gram(pts[:, None], lengthscale), spec=spec)

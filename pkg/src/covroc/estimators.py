"""Covariate-adjusted AUC, sensitivity/specificity and ROC estimators.

The comparison indicator is closed at zero everywhere: a tie ``y == x``
counts as a success, in the Mann-Whitney statistic, the covariate-adjusted
Mann-Whitney estimator (CAMWE), the working-sample sensitivity/specificity
and the bivariate kernel estimator alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr, ndtri

from .errors import EmptySampleError, EstimationError, ZeroDenominatorError
from .kernels import Kernel
from .locpoly import SamplePairs


class Estimator(str, Enum):
    NORMAL = "normal"
    CAMWE = "camwe"
    KERNEL = "kernel"
    MANN_WHITNEY = "mann_whitney"


class Curves(Protocol):
    """Anything providing vectorised mean and variance functions."""

    def f(self, z: ArrayLike) -> NDArray: ...
    def g(self, z: ArrayLike) -> NDArray: ...
    def v1(self, z: ArrayLike) -> NDArray: ...
    def v2(self, z: ArrayLike) -> NDArray: ...


@dataclass(frozen=True)
class KnownCurves:
    """Curves given by explicit functions, e.g. the true functions of a simulation.

    Variances are clamped below at ``variance_floor`` like fitted ones.
    """

    mean_x: Callable[[NDArray], NDArray]
    mean_y: Callable[[NDArray], NDArray]
    var_x: Callable[[NDArray], NDArray]
    var_y: Callable[[NDArray], NDArray]
    variance_floor: float = float(np.finfo(np.float64).tiny)

    def _eval(self, fn, z):
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        return np.broadcast_to(np.asarray(fn(z), dtype=np.float64), z.shape).copy()

    def f(self, z):
        return self._eval(self.mean_x, z)

    def g(self, z):
        return self._eval(self.mean_y, z)

    def v1(self, z):
        return np.maximum(self._eval(self.var_x, z), self.variance_floor)

    def v2(self, z):
        return np.maximum(self._eval(self.var_y, z), self.variance_floor)

    @classmethod
    def constant(cls, f: float, g: float, v1: float, v2: float) -> KnownCurves:
        return cls(lambda z: f, lambda z: g, lambda z: v1, lambda z: v2)


@dataclass(frozen=True)
class AucEstimate:
    z: float
    value: float
    estimator: Estimator
    clamped: bool = False


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    sensitivity: float
    one_minus_specificity: float


@dataclass(frozen=True, eq=False)
class StandardizedResiduals:
    eps_x: NDArray[np.float64]
    eps_y: NDArray[np.float64]
    source: Curves | None = None


@dataclass(frozen=True, eq=False)
class WorkingSample:
    """Marker values reconstructed as if every subject had covariate ``z``."""

    z: float
    x_values: NDArray[np.float64]
    y_values: NDArray[np.float64]


def _maybe_clamp(value: float, clamp: bool) -> tuple[float, bool]:
    if clamp and value < 0.5:
        return 0.5, True
    return value, False


# --------------------------------------------------------------------------
# Classical Mann-Whitney
# --------------------------------------------------------------------------


def _count_pairs(x_sorted: NDArray, y: NDArray) -> int:
    """Number of pairs with ``y_j >= x_i``; ``x_sorted`` must be ascending."""
    return int(np.searchsorted(x_sorted, y, side="right").sum())


def mann_whitney(x: ArrayLike, y: ArrayLike) -> float:
    """``(1/mn) sum_i sum_j 1{y_j - x_i >= 0}``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise EmptySampleError("Mann-Whitney statistic needs two non-empty samples")
    return _count_pairs(np.sort(x), y) / (x.size * y.size)


# --------------------------------------------------------------------------
# Normal-noise closed forms
# --------------------------------------------------------------------------


def auc_normal_values(curves: Curves, z: ArrayLike) -> NDArray[np.float64]:
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    delta = curves.g(z) - curves.f(z)
    return ndtr(delta / np.sqrt(curves.v1(z) + curves.v2(z)))


def auc_normal(curves: Curves, z: float, clamp: bool = False) -> AucEstimate:
    """``Phi{(g - f) / sqrt(v1 + v2)}`` at ``z``."""
    value, clamped = _maybe_clamp(float(auc_normal_values(curves, z)[0]), clamp)
    return AucEstimate(float(z), value, Estimator.NORMAL, clamped)


def sens_spec_normal(curves: Curves, z: float, c: float) -> tuple[float, float]:
    q = ndtr((curves.g(z)[0] - c) / np.sqrt(curves.v2(z)[0]))
    p = ndtr((c - curves.f(z)[0]) / np.sqrt(curves.v1(z)[0]))
    return float(q), float(p)


def roc_curve_normal(curves: Curves, z: float, fpr_grid: ArrayLike) -> list[RocPoint]:
    """Binormal ROC at ``z`` on a strictly increasing grid of false positive rates."""
    t = np.asarray(fpr_grid, dtype=np.float64)
    if t.ndim != 1 or np.any(t <= 0) or np.any(t >= 1) or np.any(np.diff(t) <= 0):
        raise ValueError("fpr_grid must be strictly increasing inside (0, 1)")
    f, g = curves.f(z)[0], curves.g(z)[0]
    s1, s2 = np.sqrt(curves.v1(z)[0]), np.sqrt(curves.v2(z)[0])
    # 1 - p = t  <=>  c = f + s1 * Phi^{-1}(1 - t)
    thresholds = f + s1 * ndtri(1.0 - t)
    q = ndtr((g - f + s1 * ndtri(t)) / s2)
    q = np.maximum.accumulate(q)
    return [RocPoint(float(c), float(qq), float(tt)) for c, qq, tt in zip(thresholds, q, t)]


def roc_area(points: list[RocPoint]) -> float:
    """Trapezoid area under ROC points, closed with (0, 0) and (1, 1)."""
    fpr = np.array([0.0] + [p.one_minus_specificity for p in points] + [1.0])
    tpr = np.array([0.0] + [p.sensitivity for p in points] + [1.0])
    return float(np.trapezoid(tpr, fpr))


# --------------------------------------------------------------------------
# General noise: working samples and CAMWE
# --------------------------------------------------------------------------


def standardized_residuals(
    x_data: SamplePairs, y_data: SamplePairs, curves: Curves
) -> StandardizedResiduals:
    eps = []
    for data, mean, var in ((x_data, curves.f, curves.v1), (y_data, curves.g, curves.v2)):
        e = (data.markers - mean(data.covariates)) / np.sqrt(var(data.covariates))
        bad = np.flatnonzero(~np.isfinite(e))
        if bad.size:
            raise EstimationError(
                f"non-finite standardized residual for population {data.population.value} "
                f"at observation index {int(bad[0])}"
            )
        e.setflags(write=False)
        eps.append(e)
    return StandardizedResiduals(eps[0], eps[1], curves)


def working_sample_values(
    resid: StandardizedResiduals, f_z: float, g_z: float, v1_z: float, v2_z: float
) -> tuple[NDArray, NDArray]:
    x = f_z + np.sqrt(v1_z) * resid.eps_x
    y = g_z + np.sqrt(v2_z) * resid.eps_y
    return x, y


def working_sample(resid: StandardizedResiduals, curves: Curves, z: float) -> WorkingSample:
    x, y = working_sample_values(resid, curves.f(z)[0], curves.g(z)[0], curves.v1(z)[0], curves.v2(z)[0])
    return WorkingSample(float(z), x, y)


def camwe_values(resid: StandardizedResiduals, curves: Curves, z: ArrayLike) -> NDArray[np.float64]:
    """CAMWE on a covariate grid, reusing one set of residuals."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    f, g, v1, v2 = curves.f(z), curves.g(z), curves.v1(z), curves.v2(z)
    m, n = resid.eps_x.size, resid.eps_y.size
    out = np.empty(z.size)
    for k in range(z.size):
        x, y = working_sample_values(resid, f[k], g[k], v1[k], v2[k])
        out[k] = _count_pairs(np.sort(x), y) / (m * n)
    return out


def camwe(
    x_data: SamplePairs,
    y_data: SamplePairs,
    curves: Curves,
    z: float,
    clamp: bool = False,
    resid: StandardizedResiduals | None = None,
) -> AucEstimate:
    """Mann-Whitney statistic of the working sample at ``z``."""
    if resid is None:
        resid = standardized_residuals(x_data, y_data, curves)
    value, clamped = _maybe_clamp(float(camwe_values(resid, curves, z)[0]), clamp)
    return AucEstimate(float(z), value, Estimator.CAMWE, clamped)


def sens_spec_camwe(ws: WorkingSample, c: float) -> tuple[float, float]:
    q = np.count_nonzero(ws.y_values >= c) / ws.y_values.size
    p = np.count_nonzero(ws.x_values <= c) / ws.x_values.size
    return q, p


def roc_curve_camwe(ws: WorkingSample) -> list[RocPoint]:
    """Empirical step ROC of a working sample.

    Thresholds run from ``+inf`` down through every distinct pooled value
    to ``-inf``. At each value ``v`` two points are emitted: the ROC point
    at ``c = v`` and the one just below ``v``, so every segment is vertical
    or horizontal and the trapezoid area equals the Mann-Whitney statistic
    under the closed tie convention.
    """
    x = np.sort(ws.x_values)
    y = np.sort(ws.y_values)
    m, n = x.size, y.size
    values = np.unique(np.concatenate([x, y]))[::-1]
    # counts of y >= v, x > v and x >= v
    y_ge = n - np.searchsorted(y, values, side="left")
    x_gt = m - np.searchsorted(x, values, side="right")
    x_ge = m - np.searchsorted(x, values, side="left")

    pts = [RocPoint(np.inf, 0.0, 0.0)]
    for v, yg, xg, xge in zip(values, y_ge, x_gt, x_ge):
        pts.append(RocPoint(float(v), yg / n, xg / m))
        if xge != xg:
            below = float(np.nextafter(v, -np.inf))
            pts.append(RocPoint(below, yg / n, xge / m))
    pts.append(RocPoint(-np.inf, 1.0, 1.0))
    # drop consecutive duplicates in (fpr, tpr)
    out = [pts[0]]
    for p in pts[1:]:
        if (p.one_minus_specificity, p.sensitivity) != (
            out[-1].one_minus_specificity,
            out[-1].sensitivity,
        ):
            out.append(p)
    return out


def youden_index(ws: WorkingSample) -> tuple[float, float]:
    """Max of ``q + p - 1`` over the pooled working-sample values.

    Returns ``(index, threshold)``; ties take the smallest threshold.
    """
    x = np.sort(ws.x_values)
    y = np.sort(ws.y_values)
    cands = np.unique(np.concatenate([x, y]))  # ascending
    m, n = x.size, y.size
    q_count = n - np.searchsorted(y, cands, side="left")
    p_count = np.searchsorted(x, cands, side="right")
    # exact integer numerator of q + p - 1 so equal indices tie exactly
    num = q_count * m + p_count * n - m * n
    k = int(np.argmax(num))  # first maximiser = smallest threshold
    return float(num[k] / (m * n)), float(cands[k])


# --------------------------------------------------------------------------
# Bivariate kernel estimator
# --------------------------------------------------------------------------


def _kernel_weights(cov: NDArray, z: NDArray, h: NDArray, kernel: Kernel) -> NDArray:
    """Weights ``K((cov - z) / h)`` normalised to max 1 per (h, z); shape (H, G, n).

    The normalisation cancels in the ratio and makes equal weights exactly 1.
    """
    w = kernel((cov[None, None, :] - z[None, :, None]) / h[:, None, None])
    top = w.max(axis=-1, keepdims=True)
    return np.divide(w, top, out=np.zeros_like(w), where=top > 0)


def kernel_auc_grid(
    x_data: SamplePairs,
    y_data: SamplePairs,
    hx: ArrayLike,
    hy: ArrayLike,
    kernel: Kernel,
    z: ArrayLike,
) -> tuple[NDArray, NDArray]:
    """Bivariate kernel AUC for every ``(hx, hy, z)`` combination.

    Returns estimates of shape ``(len(hx), len(hy), len(z))`` and a mask of
    where the total weight is positive.
    """
    hx = np.atleast_1d(np.asarray(hx, dtype=np.float64))
    hy = np.atleast_1d(np.asarray(hy, dtype=np.float64))
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if np.any(hx <= 0) or np.any(hy <= 0):
        raise ValueError("kernel bandwidths must be positive")
    wx = _kernel_weights(x_data.covariates, z, hx, kernel)  # (A, G, m)
    wy = _kernel_weights(y_data.covariates, z, hy, kernel)  # (B, G, n)
    ind = (y_data.markers[None, :] >= x_data.markers[:, None]).astype(np.float64)  # (m, n)
    num = np.einsum("agn,bgn->abg", wx @ ind, wy)
    den = wx.sum(axis=-1)[:, None, :] * wy.sum(axis=-1)[None, :, :]
    ok = den > 0
    est = np.divide(num, den, out=np.full(num.shape, np.nan), where=ok)
    # num sums a subset of the terms in den; rounding may still push the ratio past 1
    np.clip(est, 0.0, 1.0, out=est, where=ok)
    return est, ok


def auc_bivariate_kernel_values(
    x_data: SamplePairs, y_data: SamplePairs, hx: float, hy: float, kernel: Kernel, z: ArrayLike
) -> NDArray[np.float64]:
    est, ok = kernel_auc_grid(x_data, y_data, hx, hy, kernel, z)
    est, ok = est[0, 0], ok[0, 0]
    if not ok.all():
        raise ZeroDenominatorError(np.atleast_1d(z)[int(np.argmin(ok))])
    return est


def auc_bivariate_kernel(
    x_data: SamplePairs,
    y_data: SamplePairs,
    hx: float,
    hy: float,
    kernel: Kernel,
    z: float,
    clamp: bool = False,
) -> AucEstimate:
    value = float(auc_bivariate_kernel_values(x_data, y_data, hx, hy, kernel, z)[0])
    value, clamped = _maybe_clamp(value, clamp)
    return AucEstimate(float(z), value, Estimator.KERNEL, clamped)

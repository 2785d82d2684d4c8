"""Local polynomial regression for mean and variance functions.

The estimate at ``z`` is the intercept of the weighted least squares
fit of ``sum_k beta_k (z_i - z)^k`` with weights ``K((z_i - z) / h)``.
Each local problem is solved by a QR factorisation of the
square-root-weighted design, batched over evaluation points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError, InsufficientLocalDataError
from .kernels import SUPPORTED_ORDERS, Kernel

# Ratio of smallest to largest |R_kk| below which the local design is singular.
SINGULAR_RTOL = 1e-10
DEFAULT_FLOOR_FRACTION = 1e-8
# Cap on elements of one batched design array.
_CHUNK_ELEMENTS = 4_000_000


class Population(str, Enum):
    X = "x"  # non-diseased
    Y = "y"  # diseased


@dataclass(frozen=True, eq=False)
class SamplePairs:
    """Covariate/marker observations for one population."""

    covariates: NDArray[np.float64]
    markers: NDArray[np.float64]
    population: Population = Population.X

    def __post_init__(self):
        z = np.array(self.covariates, dtype=np.float64).ravel()
        v = np.array(self.markers, dtype=np.float64).ravel()
        if z.shape != v.shape:
            raise InputError(
                f"covariates and markers differ in length ({z.size} vs {v.size})"
            )
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(v))):
            raise InputError("covariates and markers must be finite")
        z.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "covariates", z)
        object.__setattr__(self, "markers", v)
        object.__setattr__(self, "population", Population(self.population))

    def __len__(self) -> int:
        return self.covariates.size

    def check_order(self, p: int) -> None:
        if len(self) < p + 2:
            raise InputError(
                f"population {self.population.value}: degree-{p} fit needs at least "
                f"{p + 2} observations, got {len(self)}"
            )
        if np.unique(self.covariates).size < p + 1:
            raise InputError(
                f"population {self.population.value}: degree-{p} fit needs at least "
                f"{p + 1} distinct covariate values"
            )

    def with_markers(self, markers: ArrayLike) -> SamplePairs:
        return SamplePairs(self.covariates, markers, self.population)

    def take(self, index: NDArray[np.intp]) -> SamplePairs:
        return SamplePairs(self.covariates[index], self.markers[index], self.population)


def local_poly_batch(
    z_obs: NDArray,
    values: NDArray,
    z_eval: NDArray,
    p: int,
    h: float | NDArray,
    kernel: Kernel,
    *,
    leave_one_out: bool = False,
) -> tuple[NDArray, NDArray, NDArray]:
    """Local polynomial estimates for every bandwidth and evaluation point.

    Args:
        z_obs: observed covariates, shape ``(n,)``.
        values: responses, shape ``(n,)``.
        z_eval: evaluation points, shape ``(G,)``.
        p: polynomial degree.
        h: scalar bandwidth or array of ``C`` bandwidths.
        kernel: weight kernel.
        leave_one_out: drop observation ``i`` when evaluating at point ``i``
            (requires ``z_eval`` to be ``z_obs``).

    Returns:
        ``(estimates, ok, counts)``, each of shape ``(C, G)`` (``(G,)`` when
        ``h`` is scalar). Failed points hold NaN and ``ok=False``; ``counts``
        is the number of observations with positive weight.
    """
    scalar = np.ndim(h) == 0
    hs = np.atleast_1d(np.asarray(h, dtype=np.float64))
    z_obs = np.asarray(z_obs, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    z_eval = np.atleast_1d(np.asarray(z_eval, dtype=np.float64))
    if leave_one_out and z_eval.shape != z_obs.shape:
        raise ValueError("leave-one-out evaluation must be at the observed covariates")

    n, G, C = z_obs.size, z_eval.size, hs.size
    est = np.full((C, G), np.nan)
    ok = np.zeros((C, G), dtype=bool)
    counts = np.zeros((C, G), dtype=np.int64)

    diff = z_obs[None, :] - z_eval[:, None]  # (G, n)
    step = max(1, _CHUNK_ELEMENTS // max(1, n * (p + 1) * G))
    for c0 in range(0, C, step):
        hc = hs[c0 : c0 + step]
        d = diff[None, :, :] / hc[:, None, None]  # (c, G, n)
        w = kernel(d)
        if leave_one_out:
            idx = np.arange(n)
            w[:, idx, idx] = 0.0
        cnt = np.count_nonzero(w > 0.0, axis=-1)
        e, good = _solve_intercepts(d.reshape(-1, n), w.reshape(-1, n), values, p)
        good &= cnt.reshape(-1) >= p + 1
        e[~good] = np.nan
        est[c0 : c0 + hc.size] = e.reshape(hc.size, G)
        ok[c0 : c0 + hc.size] = good.reshape(hc.size, G)
        counts[c0 : c0 + hc.size] = cnt
    if scalar:
        return est[0], ok[0], counts[0]
    return est, ok, counts


def _solve_intercepts(d: NDArray, w: NDArray, values: NDArray, p: int) -> tuple[NDArray, NDArray]:
    # Columns use (z_i - z) / h; rescaling non-intercept columns leaves the
    # intercept unchanged and keeps R well scaled.
    if p == 0:
        tot = w.sum(axis=-1)
        good = tot > 0
        out = np.divide(w @ values, tot, out=np.full(tot.shape, np.nan), where=good)
        return out, good
    sw = np.sqrt(w)
    design = np.empty(d.shape + (p + 1,))
    design[..., 0] = sw
    for k in range(1, p + 1):
        design[..., k] = design[..., k - 1] * d
    rhs = values[None, :] * sw
    q, r = _qr_cgs2(design)
    qtb = np.einsum("bnk,bn->bk", q, rhs)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    dmax = diag.max(axis=-1)
    good = (dmax > 0) & (diag.min(axis=-1) > SINGULAR_RTOL * dmax)
    # Back substitution on the well-conditioned systems only.
    beta = np.zeros_like(qtb)
    rr = np.where(good[:, None, None], r, np.eye(p + 1))
    for k in range(p, -1, -1):
        acc = qtb[:, k] - np.einsum("bj,bj->b", rr[:, k, k + 1 :], beta[:, k + 1 :])
        beta[:, k] = acc / rr[:, k, k]
    out = np.where(good, beta[:, 0], np.nan)
    return out, good


def _qr_cgs2(a: NDArray) -> tuple[NDArray, NDArray]:
    """Thin QR of a stack of tall matrices by Gram-Schmidt with reorthogonalisation.

    Vectorised over the leading axis; each column is orthogonalised twice
    against the previous ones, which keeps ``Q`` orthogonal to working
    precision. Rank-deficient columns come out with ``R_kk`` ~ 0 and a
    zero ``Q`` column.
    """
    B, n, k = a.shape
    q = np.zeros_like(a)
    r = np.zeros((B, k, k))
    for j in range(k):
        v = a[:, :, j].copy()
        for _ in range(2):
            if j:
                c = np.einsum("bni,bn->bi", q[:, :, :j], v)
                r[:, :j, j] += c
                v -= np.einsum("bni,bi->bn", q[:, :, :j], c)
        nrm = np.sqrt(np.einsum("bn,bn->b", v, v))
        r[:, j, j] = nrm
        scale = np.divide(1.0, nrm, out=np.zeros_like(nrm), where=nrm > 0)
        q[:, :, j] = v * scale[:, None]
    return q, r


@dataclass(frozen=True, eq=False)
class LocalPolyFit:
    """A local polynomial smoother, evaluable at any covariate value.

    ``floor`` (variance fits only) clamps evaluations from below.
    ``max_widen`` lets a failing point retry with 2h, 4h, ... up to that
    many doublings; zero means strict.
    """

    data: SamplePairs
    order_p: int
    bandwidth: float
    kernel: Kernel = field(default_factory=Kernel)
    floor: float | None = None
    max_widen: int = 0
    label: str | None = None

    def __post_init__(self):
        if self.order_p not in SUPPORTED_ORDERS:
            raise ValueError(f"order p must be one of {SUPPORTED_ORDERS}, got {self.order_p}")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.floor is not None and not self.floor > 0:
            raise ValueError("variance floor must be positive")

    def evaluate_raw(self, z: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
        """Unclamped estimates, success mask and local counts; never raises."""
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        est, ok, cnt = local_poly_batch(
            self.data.covariates, self.data.markers, z, self.order_p, self.bandwidth, self.kernel
        )
        h = self.bandwidth
        for _ in range(self.max_widen):
            if ok.all():
                break
            h *= 2.0
            bad = ~ok
            e2, ok2, c2 = local_poly_batch(
                self.data.covariates, self.data.markers, z[bad], self.order_p, h, self.kernel
            )
            est[bad], ok[bad], cnt[bad] = e2, ok2, c2
        return est, ok, cnt

    def evaluate(self, z: ArrayLike) -> NDArray[np.float64]:
        """Estimates at ``z``; raises on the first point that cannot be fitted."""
        zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
        est, ok, cnt = self.evaluate_raw(zz)
        if not ok.all():
            i = int(np.argmin(ok))
            raise InsufficientLocalDataError(zz[i], cnt[i], self.order_p, self.label)
        if self.floor is not None:
            est = np.maximum(est, self.floor)
        return est

    def __call__(self, z: ArrayLike) -> NDArray[np.float64]:
        return self.evaluate(z)


def _label(kind: str, data: SamplePairs) -> str:
    return f"{kind} (population {data.population.value})"


def fit_mean(
    data: SamplePairs,
    p: int,
    h: float,
    kernel: Kernel | None = None,
    *,
    max_widen: int = 0,
) -> LocalPolyFit:
    data.check_order(p)
    name = "f_hat" if data.population is Population.X else "g_hat"
    return LocalPolyFit(
        data, p, float(h), kernel or Kernel(), max_widen=max_widen, label=_label(name, data)
    )


def eval_mean(fit: LocalPolyFit, z: float) -> float:
    return float(fit.evaluate(z)[0])


def variance_observations(data: SamplePairs, mean_fit: LocalPolyFit) -> SamplePairs:
    """Squared residuals ``(marker_i - mean(z_i))**2`` at the observed covariates."""
    resid = data.markers - mean_fit.evaluate(data.covariates)
    return data.with_markers(resid * resid)


def default_floor(markers: ArrayLike) -> float:
    """``1e-8`` times the sample variance, with a tiny positive fallback."""
    var = float(np.var(np.asarray(markers, dtype=np.float64), ddof=1)) if np.size(markers) > 1 else 0.0
    return max(DEFAULT_FLOOR_FRACTION * var, np.finfo(np.float64).tiny)


def fit_variance(
    resid2: SamplePairs,
    p: int,
    b: float,
    kernel: Kernel | None = None,
    floor: float | None = None,
    *,
    max_widen: int = 0,
) -> LocalPolyFit:
    if np.any(resid2.markers < 0):
        raise InputError("squared residuals must be non-negative")
    resid2.check_order(p)
    if floor is None:
        floor = np.finfo(np.float64).tiny
    name = "v1_hat" if resid2.population is Population.X else "v2_hat"
    return LocalPolyFit(
        resid2,
        p,
        float(b),
        kernel or Kernel(),
        floor=float(floor),
        max_widen=max_widen,
        label=_label(name, resid2),
    )


@dataclass(frozen=True, eq=False)
class FittedCurves:
    """Estimated mean and variance functions of both populations."""

    f_hat: LocalPolyFit
    g_hat: LocalPolyFit
    v1_hat: LocalPolyFit
    v2_hat: LocalPolyFit

    def f(self, z: ArrayLike) -> NDArray:
        return self.f_hat.evaluate(z)

    def g(self, z: ArrayLike) -> NDArray:
        return self.g_hat.evaluate(z)

    def v1(self, z: ArrayLike) -> NDArray:
        return self.v1_hat.evaluate(z)

    def v2(self, z: ArrayLike) -> NDArray:
        return self.v2_hat.evaluate(z)

    @property
    def variance_floor(self) -> tuple[float, float]:
        return (self.v1_hat.floor, self.v2_hat.floor)

    @property
    def bandwidths(self) -> dict[str, float]:
        return {
            "h1": self.f_hat.bandwidth,
            "h2": self.g_hat.bandwidth,
            "b1": self.v1_hat.bandwidth,
            "b2": self.v2_hat.bandwidth,
        }


def fit_all(
    x_data: SamplePairs,
    y_data: SamplePairs,
    p: int,
    bandwidths: Mapping[str, float],
    kernel: Kernel | None = None,
    *,
    orders: Mapping[str, int] | None = None,
    floors: tuple[float, float] | None = None,
    max_widen: int = 0,
) -> FittedCurves:
    """Fit ``f, g`` to the markers and ``v1, v2`` to the squared residuals.

    ``bandwidths`` maps ``h1, h2, b1, b2`` to positive values; ``orders``
    optionally overrides the degree per function (same keys).
    """
    kernel = kernel or Kernel()
    for key in ("h1", "h2", "b1", "b2"):
        val = bandwidths[key]
        if not (np.isfinite(val) and val > 0):
            raise ValueError(f"bandwidth {key} must be positive, got {val}")
    order = {k: p for k in ("h1", "h2", "b1", "b2")}
    order.update(orders or {})
    if floors is None:
        floors = (default_floor(x_data.markers), default_floor(y_data.markers))

    f_hat = fit_mean(x_data, order["h1"], bandwidths["h1"], kernel, max_widen=max_widen)
    g_hat = fit_mean(y_data, order["h2"], bandwidths["h2"], kernel, max_widen=max_widen)
    v1_hat = fit_variance(
        variance_observations(x_data, f_hat), order["b1"], bandwidths["b1"], kernel,
        floors[0], max_widen=max_widen,
    )
    v2_hat = fit_variance(
        variance_observations(y_data, g_hat), order["b2"], bandwidths["b2"], kernel,
        floors[1], max_widen=max_widen,
    )
    return FittedCurves(f_hat, g_hat, v1_hat, v2_hat)

"""Pointwise percentile bands and variances by resampling the original data.

(covariate, marker) pairs are resampled with replacement within each
population. Replicate ``b`` always draws from the random stream
``(seed, b)``, so results do not depend on how replicates are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray

from ._rng import stream
from .errors import BootstrapFailureError, CovrocError
from .locpoly import SamplePairs
from .pipeline import EstimatorSpec

MAX_FAILURE_RATE = 0.10


class RefitMode(str, Enum):
    FROZEN = "frozen"
    PER_REPLICATE = "per-replicate"


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 1000
    band_level: float = 0.95
    seed: int = 0
    refit_bandwidths: RefitMode = RefitMode.FROZEN
    threads: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("number of bootstrap replicates must be positive")
        if not 0.0 < self.band_level < 1.0:
            raise ValueError("band level must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "refit_bandwidths", RefitMode(self.refit_bandwidths))


@dataclass(frozen=True, eq=False)
class AucBand:
    z_grid: NDArray[np.float64]
    point_estimates: NDArray[np.float64]
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    variance: NDArray[np.float64]
    B: int
    level: float
    failures: int = 0
    replicate_values: NDArray[np.float64] = field(default=None, repr=False)
    spec: EstimatorSpec | None = field(default=None, repr=False)

    @property
    def B_effective(self) -> int:
        return self.B - self.failures

    def at_level(self, level: float) -> tuple[NDArray, NDArray]:
        """Percentile band of the same replicates at another level."""
        return percentile_band(self.replicate_values, level)


def percentile_interval(values: ArrayLike, level: float) -> tuple[float, float]:
    """Type-7 (linear interpolation) quantiles at ``(1 -+ level) / 2``."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("percentile interval of an empty sample")
    lo, hi = percentile_band(v[:, None], level)
    return float(lo[0]), float(hi[0])


def percentile_band(values: NDArray, level: float) -> tuple[NDArray, NDArray]:
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    alpha = (1.0 - level) / 2.0
    q = np.quantile(np.sort(values, axis=0), [alpha, 1.0 - alpha], axis=0, method="linear")
    return q[0], q[1]


def resample(data: SamplePairs, rng: np.random.Generator) -> SamplePairs:
    return data.take(rng.integers(0, len(data), size=len(data)))


def _replicate(
    b: int,
    x_data: SamplePairs,
    y_data: SamplePairs,
    spec: EstimatorSpec,
    z: NDArray,
    seed: int,
    refit: bool,
) -> NDArray | None:
    rng = stream(seed, b)
    xb, yb = resample(x_data, rng), resample(y_data, rng)
    try:
        s = spec.resolve(xb, yb) if refit else spec
        return s.evaluate(xb, yb, z)
    except CovrocError:
        return None


def _run_chunk(indices, *args) -> list[NDArray | None]:
    return [_replicate(b, *args) for b in indices]


def replicate_estimates(
    x_data: SamplePairs,
    y_data: SamplePairs,
    spec: EstimatorSpec,
    z_grid: NDArray,
    seed: int,
    B: int,
    refit: bool,
    threads: int = 1,
) -> list[NDArray | None]:
    """Estimates for replicates ``0..B-1``, in replicate order (``None`` = failed)."""
    args = (x_data, y_data, spec, z_grid, seed, refit)
    if threads == 1 or B < 2:
        return _run_chunk(range(B), *args)
    chunks = np.array_split(np.arange(B), min(B, 4 * threads))
    parts = Parallel(n_jobs=threads)(delayed(_run_chunk)(c.tolist(), *args) for c in chunks)
    return [r for part in parts for r in part]


def bootstrap_auc(
    x_data: SamplePairs,
    y_data: SamplePairs,
    spec: EstimatorSpec,
    z_grid: ArrayLike,
    cfg: BootstrapConfig,
) -> AucBand:
    """Percentile band and bootstrap variance of an AUC estimator on ``z_grid``.

    With ``cfg.refit_bandwidths == "frozen"`` every replicate reuses the
    bandwidths selected on the original data; otherwise replicates re-run
    the selection (only meaningful when ``spec`` leaves them to CV).

    Raises:
        BootstrapFailureError: more than 10% of replicates failed.
    """
    z = np.atleast_1d(np.asarray(z_grid, dtype=np.float64))
    resolved = spec.resolve(x_data, y_data)
    point = resolved.evaluate(x_data, y_data, z)

    refit = cfg.refit_bandwidths is RefitMode.PER_REPLICATE
    rep_spec = spec if refit else resolved
    results = replicate_estimates(
        x_data, y_data, rep_spec, z, int(cfg.seed), cfg.replicates, refit, cfg.threads
    )
    good = [r for r in results if r is not None]
    failures = cfg.replicates - len(good)
    if failures > MAX_FAILURE_RATE * cfg.replicates:
        raise BootstrapFailureError(failures, cfg.replicates, MAX_FAILURE_RATE)
    reps = np.vstack(good) if good else np.empty((0, z.size))
    lower, upper = percentile_band(reps, cfg.band_level)
    return AucBand(
        z_grid=z,
        point_estimates=point,
        lower=lower,
        upper=upper,
        variance=sample_variance(reps),
        B=cfg.replicates,
        level=cfg.band_level,
        failures=failures,
        replicate_values=reps,
        spec=resolved,
    )


def sample_variance(values: NDArray) -> NDArray:
    """Per-column variance (ddof=1) summed in sorted order; zero for one row."""
    if values.shape[0] < 2:
        return np.zeros(values.shape[1])
    return np.var(np.sort(values, axis=0), axis=0, ddof=1)

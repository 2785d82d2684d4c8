"""Bandwidth selection: leave-one-out cross-validation and simulation oracles.

Scores are minimised over a finite candidate grid. Candidates whose fits
fail anywhere they are needed score ``+inf``. Near-equal scores are ties
and resolve toward the larger bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InfeasibleBandwidthError
from .kernels import Kernel
from .locpoly import SamplePairs, default_floor, fit_mean, local_poly_batch, variance_observations

# Scores within TIE_RTOL * min + TIE_ATOL_FRACTION * scale of the minimum tie.
TIE_RTOL = 1e-12
TIE_ATOL_FRACTION = 1e-20


class GridScale(str, Enum):
    ABSOLUTE = "absolute"
    FRACTION_OF_RANGE = "fraction_of_range"


@dataclass(frozen=True)
class BandwidthGrid:
    """Candidate bandwidths, absolute or as fractions of the covariate range."""

    candidates: tuple[float, ...]
    scale: GridScale = GridScale.FRACTION_OF_RANGE

    def __post_init__(self):
        cand = tuple(float(c) for c in self.candidates)
        if not cand:
            raise ValueError("bandwidth grid must be non-empty")
        if any(not (np.isfinite(c) and c > 0) for c in cand):
            raise ValueError("bandwidth candidates must be positive and finite")
        if any(b <= a for a, b in zip(cand, cand[1:])):
            raise ValueError("bandwidth candidates must be strictly increasing")
        object.__setattr__(self, "candidates", cand)
        object.__setattr__(self, "scale", GridScale(self.scale))

    @classmethod
    def log_spaced(
        cls, lo: float, hi: float, count: int, scale: GridScale | str = GridScale.FRACTION_OF_RANGE
    ) -> BandwidthGrid:
        if count == 1:
            return cls((lo,), scale)
        return cls(tuple(np.geomspace(lo, hi, count)), scale)

    @classmethod
    def default(cls) -> BandwidthGrid:
        return cls.log_spaced(0.05, 1.0, 15)

    def resolve(self, covariates: ArrayLike) -> NDArray[np.float64]:
        c = np.asarray(self.candidates)
        if self.scale is GridScale.ABSOLUTE:
            return c
        z = np.asarray(covariates, dtype=np.float64)
        span = float(z.max() - z.min())
        if span <= 0:
            raise ValueError("covariate range is zero; use an absolute bandwidth grid")
        return c * span


class SelectionMethod(str, Enum):
    LOO_CV = "loo_cv"
    ORACLE_ISE = "oracle_ise"
    FIXED = "fixed"


@dataclass(frozen=True)
class BandwidthSet:
    h1: float
    h2: float
    b1: float
    b2: float
    method: SelectionMethod = SelectionMethod.FIXED
    cv_scores: Mapping[str, tuple[tuple[float, float], ...]] | None = field(
        default=None, compare=False
    )

    def __post_init__(self):
        for key in ("h1", "h2", "b1", "b2"):
            val = getattr(self, key)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"bandwidth {key} must be positive, got {val}")
            object.__setattr__(self, key, float(val))
        object.__setattr__(self, "method", SelectionMethod(self.method))

    def as_dict(self) -> dict[str, float]:
        return {"h1": self.h1, "h2": self.h2, "b1": self.b1, "b2": self.b2}


class Selection(NamedTuple):
    bandwidth: float
    scores: NDArray[np.float64]
    candidates: NDArray[np.float64]


def pick_largest_minimiser(scores: NDArray, scale: float) -> int:
    """Index of the minimum score, ties resolved toward the last (largest) index.

    Raises:
        InfeasibleBandwidthError: if every score is infinite or NaN.
    """
    scores = np.asarray(scores, dtype=np.float64)
    finite = np.isfinite(scores)
    if not finite.any():
        raise InfeasibleBandwidthError("no feasible bandwidth candidate")
    best = scores[finite].min()
    tol = TIE_RTOL * abs(best) + TIE_ATOL_FRACTION * abs(scale)
    tied = np.flatnonzero(finite & (scores <= best + tol))
    return int(tied[-1])


def loo_cv_scores(
    data: SamplePairs, p: int, kernel: Kernel, candidates: ArrayLike, floor: float | None = None
) -> NDArray[np.float64]:
    """Sum of squared leave-one-out prediction errors per candidate.

    ``floor`` clamps predictions from below, as the variance smoother does.
    """
    z, v = data.covariates, data.markers
    est, ok, _ = local_poly_batch(z, v, z, p, np.asarray(candidates, float), kernel, leave_one_out=True)
    if floor is not None:
        est = np.maximum(est, floor)
    resid = v[None, :] - est
    scores = np.einsum("cn,cn->c", resid, resid)  # fixed summation order
    scores[~ok.all(axis=1)] = np.inf
    return scores


def loo_cv_bandwidth(
    data: SamplePairs,
    p: int,
    kernel: Kernel | None = None,
    grid: BandwidthGrid | None = None,
    floor: float | None = None,
) -> Selection:
    """Grid candidate minimising the leave-one-out CV score."""
    kernel = kernel or Kernel()
    grid = grid or BandwidthGrid.default()
    if len(data) < p + 3:
        raise ValueError(f"leave-one-out CV needs at least {p + 3} observations, got {len(data)}")
    cand = grid.resolve(data.covariates)
    scores = loo_cv_scores(data, p, kernel, cand, floor)
    try:
        i = pick_largest_minimiser(scores, float(np.dot(data.markers, data.markers)))
    except InfeasibleBandwidthError as exc:
        raise InfeasibleBandwidthError(
            f"population {data.population.value}: every CV bandwidth candidate failed"
        ) from exc
    return Selection(float(cand[i]), scores, cand)


def _scores_table(sel: Selection) -> tuple[tuple[float, float], ...]:
    return tuple((float(c), float(s)) for c, s in zip(sel.candidates, sel.scores))


def select_all(
    x_data: SamplePairs,
    y_data: SamplePairs,
    p: int,
    kernel: Kernel | None = None,
    grid: BandwidthGrid | None = None,
) -> BandwidthSet:
    """CV for the mean bandwidths, then for variance bandwidths on the residuals
    of the selected mean fits."""
    kernel = kernel or Kernel()
    chosen: dict[str, Selection] = {}
    for data, hkey, bkey in ((x_data, "h1", "b1"), (y_data, "h2", "b2")):
        mean_sel = loo_cv_bandwidth(data, p, kernel, grid)
        resid2 = variance_observations(data, fit_mean(data, p, mean_sel.bandwidth, kernel))
        var_sel = loo_cv_bandwidth(resid2, p, kernel, grid, floor=default_floor(data.markers))
        chosen[hkey], chosen[bkey] = mean_sel, var_sel
    return BandwidthSet(
        chosen["h1"].bandwidth,
        chosen["h2"].bandwidth,
        chosen["b1"].bandwidth,
        chosen["b2"].bandwidth,
        SelectionMethod.LOO_CV,
        {k: _scores_table(v) for k, v in chosen.items()},
    )


# --------------------------------------------------------------------------
# Simulation-only oracles: they take the true functions.
# --------------------------------------------------------------------------


def _trapezoid_ise(err: NDArray, grid: NDArray) -> NDArray:
    return np.trapezoid(err * err, grid, axis=-1)


def oracle_ise_scores(
    true_fn: Callable[[NDArray], NDArray],
    data: SamplePairs,
    p: int,
    kernel: Kernel,
    candidates: ArrayLike,
    eval_grid: ArrayLike,
    floor: float | None = None,
    required_points: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """Trapezoid ISE of the fit against ``true_fn`` per candidate.

    A candidate is infeasible (``+inf``) if the fit fails on ``eval_grid``
    or at any ``required_points``.
    """
    grid = np.asarray(eval_grid, dtype=np.float64)
    cand = np.asarray(candidates, dtype=np.float64)
    est, ok, _ = local_poly_batch(data.covariates, data.markers, grid, p, cand, kernel)
    if floor is not None:
        est = np.maximum(est, floor)
    scores = _trapezoid_ise(est - np.asarray(true_fn(grid))[None, :], grid)
    feasible = ok.all(axis=1)
    if required_points is not None and np.size(required_points):
        _, ok2, _ = local_poly_batch(
            data.covariates, data.markers, np.asarray(required_points, float), p, cand, kernel
        )
        feasible &= ok2.all(axis=1)
    scores[~feasible] = np.inf
    return scores


def oracle_ise_bandwidth(
    true_fn: Callable[[NDArray], NDArray],
    data: SamplePairs,
    p: int,
    kernel: Kernel | None,
    grid: BandwidthGrid,
    eval_grid: ArrayLike,
    floor: float | None = None,
    required_points: ArrayLike | None = None,
) -> float:
    kernel = kernel or Kernel()
    cand = grid.resolve(data.covariates)
    egrid = np.asarray(eval_grid, dtype=np.float64)
    scores = oracle_ise_scores(true_fn, data, p, kernel, cand, egrid, floor, required_points)
    scale = float(_trapezoid_ise(np.asarray(true_fn(egrid), float), egrid))
    return float(cand[pick_largest_minimiser(scores, scale)])


def oracle_ise_auc_bandwidths(
    true_auc: Callable[[NDArray], NDArray],
    estimator: Callable[[NDArray, NDArray, NDArray], tuple[NDArray, NDArray]],
    candidates_x: Sequence[float],
    candidates_y: Sequence[float],
    eval_grid: ArrayLike,
) -> tuple[float, float]:
    """Exhaustive scan of a two-bandwidth estimator over the product grid.

    Args:
        true_auc: the known AUC function.
        estimator: ``estimator(hx_array, hy_array, z_grid)`` returning values
            of shape ``(len(hx), len(hy), len(z))`` and a matching success mask.
        candidates_x, candidates_y: absolute bandwidth candidates.
        eval_grid: covariate grid for the trapezoid ISE.

    Returns:
        ``(hx, hy)``; ties prefer the largest ``hx``, then the largest ``hy``.
    """
    grid = np.asarray(eval_grid, dtype=np.float64)
    hx = np.asarray(candidates_x, dtype=np.float64)
    hy = np.asarray(candidates_y, dtype=np.float64)
    truth = np.asarray(true_auc(grid), dtype=np.float64)
    est, ok = estimator(hx, hy, grid)
    scores = _trapezoid_ise(est - truth, grid)
    scores[~ok.all(axis=-1)] = np.inf
    # Row-major flattening: later index = larger hx, then larger hy.
    idx = pick_largest_minimiser(scores.ravel(), float(_trapezoid_ise(truth, grid)))
    i, j = np.unravel_index(idx, scores.shape)
    return float(hx[i]), float(hy[j])

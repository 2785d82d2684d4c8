"""Fit-then-estimate pipeline shared by the bootstrap, simulations and CLI."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .bandwidth import BandwidthGrid, BandwidthSet, select_all
from .estimators import (
    Estimator,
    auc_bivariate_kernel_values,
    auc_normal_values,
    camwe_values,
    standardized_residuals,
)
from .kernels import Kernel
from .locpoly import FittedCurves, SamplePairs, fit_all


@dataclass(frozen=True)
class EstimatorSpec:
    """Which AUC estimator to run and how its smoothing parameters are chosen.

    ``bandwidths=None`` means leave-one-out CV on ``bw_grid``.
    ``kernel_bandwidths=None`` makes the bivariate kernel estimator reuse
    the mean bandwidths ``(h1, h2)``.
    """

    estimator: Estimator = Estimator.CAMWE
    order: int = 1
    kernel: Kernel = field(default_factory=Kernel)
    bandwidths: BandwidthSet | None = None
    bw_grid: BandwidthGrid = field(default_factory=BandwidthGrid.default)
    kernel_bandwidths: tuple[float, float] | None = None
    clamp: bool = False
    max_widen: int = 0

    def __post_init__(self):
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        if self.estimator is Estimator.MANN_WHITNEY:
            raise ValueError("the unadjusted Mann-Whitney statistic has no covariate pipeline")

    def needs_curves(self) -> bool:
        return self.estimator is not Estimator.KERNEL or self.kernel_bandwidths is None

    def resolve(self, x_data: SamplePairs, y_data: SamplePairs) -> EstimatorSpec:
        """Copy with every bandwidth fixed, running CV if needed."""
        spec = self
        if spec.bandwidths is None and spec.needs_curves():
            spec = replace(spec, bandwidths=select_all(x_data, y_data, spec.order, spec.kernel, spec.bw_grid))
        if spec.estimator is Estimator.KERNEL and spec.kernel_bandwidths is None:
            spec = replace(spec, kernel_bandwidths=(spec.bandwidths.h1, spec.bandwidths.h2))
        return spec

    def fit(self, x_data: SamplePairs, y_data: SamplePairs) -> FittedCurves:
        if self.bandwidths is None:
            raise ValueError("resolve() the spec before fitting")
        return fit_all(
            x_data, y_data, self.order, self.bandwidths.as_dict(), self.kernel,
            max_widen=self.max_widen,
        )

    def evaluate(self, x_data: SamplePairs, y_data: SamplePairs, z_grid: ArrayLike) -> NDArray[np.float64]:
        """AUC estimates on ``z_grid``; the spec must already be resolved."""
        z = np.atleast_1d(np.asarray(z_grid, dtype=np.float64))
        if self.estimator is Estimator.KERNEL:
            if self.kernel_bandwidths is None:
                raise ValueError("resolve() the spec before evaluating")
            hx, hy = self.kernel_bandwidths
            values = auc_bivariate_kernel_values(x_data, y_data, hx, hy, self.kernel, z)
        else:
            curves = self.fit(x_data, y_data)
            values = estimate_from_curves(self.estimator, x_data, y_data, curves, z)
        if self.clamp:
            values = np.maximum(values, 0.5)
        return values


def estimate_from_curves(
    estimator: Estimator,
    x_data: SamplePairs,
    y_data: SamplePairs,
    curves,
    z: NDArray,
) -> NDArray[np.float64]:
    if estimator is Estimator.NORMAL:
        return auc_normal_values(curves, z)
    if estimator is Estimator.CAMWE:
        return camwe_values(standardized_residuals(x_data, y_data, curves), curves, z)
    raise ValueError(f"{estimator.value} does not use fitted curves")

"""Compactly supported kernels, their moments and equivalent kernels.

All integrals use a fixed 2001-point composite Simpson rule over the
support, so every value here is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from .errors import SingularMomentMatrixError

SIMPSON_POINTS = 2001
GAUSSIAN_RADIUS = 4.0
SUPPORTED_ORDERS = (0, 1, 3, 5)
MAX_MOMENT_CONDITION = 1e12


class KernelFamily(str, Enum):
    EPANECHNIKOV = "epanechnikov"
    BIWEIGHT = "biweight"
    TRIWEIGHT = "triweight"
    GAUSSIAN_TRUNCATED = "gaussian"


# Gaussian truncated at +-4 and renormalised to unit mass.
_GAUSS_NORM = 1.0 / (np.sqrt(2.0 * np.pi) * (2.0 * ndtr(GAUSSIAN_RADIUS) - 1.0))


def simpson_weights(a: float, b: float, n: int = SIMPSON_POINTS) -> tuple[NDArray, NDArray]:
    """Nodes and weights of the composite Simpson rule on ``[a, b]`` (``n`` odd)."""
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of points >= 3")
    nodes = np.linspace(a, b, n)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (n - 1) / 3.0
    return nodes, w


@dataclass(frozen=True)
class Kernel:
    """Symmetric kernel density with compact support ``[-a, a]``.

    ``support_halfwidth`` is 1 for the polynomial kernels and the
    truncation radius for the Gaussian.
    """

    family: KernelFamily = KernelFamily.EPANECHNIKOV
    support_halfwidth: float | None = None

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        expected = GAUSSIAN_RADIUS if family is KernelFamily.GAUSSIAN_TRUNCATED else 1.0
        if self.support_halfwidth is None:
            object.__setattr__(self, "support_halfwidth", expected)
        elif self.support_halfwidth != expected:
            raise ValueError(
                f"{family.value} kernel has support half-width {expected}, "
                f"got {self.support_halfwidth}"
            )

    @classmethod
    def from_name(cls, name: str) -> Kernel:
        return cls(KernelFamily(name.lower()))

    @property
    def name(self) -> str:
        return self.family.value

    def __call__(self, u: ArrayLike) -> NDArray[np.float64]:
        u = np.asarray(u, dtype=np.float64)
        inside = np.abs(u) <= self.support_halfwidth
        if self.family is KernelFamily.GAUSSIAN_TRUNCATED:
            val = _GAUSS_NORM * np.exp(-0.5 * u * u)
        else:
            t = 1.0 - u * u
            if self.family is KernelFamily.EPANECHNIKOV:
                val = 0.75 * t
            elif self.family is KernelFamily.BIWEIGHT:
                val = (15.0 / 16.0) * t * t
            else:
                val = (35.0 / 32.0) * t * t * t
        return np.where(inside, val, 0.0)

    def quadrature(self, n: int = SIMPSON_POINTS) -> tuple[NDArray, NDArray]:
        a = self.support_halfwidth
        return simpson_weights(-a, a, n)


def kernel_eval(k: Kernel, u: float) -> float:
    return float(k(u))


def kernel_moment(k: Kernel, j: int) -> float:
    """j-th moment ``int u**j K(u) du``."""
    if j < 0:
        raise ValueError("moment order must be non-negative")
    nodes, w = k.quadrature()
    return float(np.dot(w, nodes**j * k(nodes)))


@dataclass(frozen=True, eq=False)
class EquivalentKernel:
    """Weight function induced by a degree-``p`` local polynomial fit.

    ``K*(u) = e1' S_p^{-1} (1, u, ..., u^p)' K(u)`` with
    ``S_p[j, l] = mu_{j+l}(K)``.
    """

    order_p: int
    base: Kernel
    moment_matrix: NDArray[np.float64] = field(repr=False)
    _coef: NDArray[np.float64] = field(repr=False)

    def __call__(self, u: ArrayLike) -> NDArray[np.float64]:
        u = np.asarray(u, dtype=np.float64)
        poly = np.polynomial.polynomial.polyval(u, self._coef)
        return poly * self.base(u)

    @property
    def support_halfwidth(self) -> float:
        return self.base.support_halfwidth

    def moment(self, j: int) -> float:
        nodes, w = self.base.quadrature()
        return float(np.dot(w, nodes**j * self(nodes)))


def equivalent_kernel(k: Kernel, p: int) -> EquivalentKernel:
    if p not in SUPPORTED_ORDERS:
        raise ValueError(f"order p must be one of {SUPPORTED_ORDERS}, got {p}")
    moments = [kernel_moment(k, j) for j in range(2 * p + 1)]
    S = np.array([[moments[j + l] for l in range(p + 1)] for j in range(p + 1)])
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond >= MAX_MOMENT_CONDITION:
        raise SingularMomentMatrixError(
            f"moment matrix S_{p} of {k.name} kernel is ill-conditioned (cond={cond:.3g})"
        )
    e1 = np.zeros(p + 1)
    e1[0] = 1.0
    coef = np.linalg.solve(S, e1)  # S symmetric: e1' S^-1 = (S^-1 e1)'
    S.setflags(write=False)
    coef.setflags(write=False)
    return EquivalentKernel(p, k, S, coef)


def kernel_roughness(k: EquivalentKernel, rho: float) -> float:
    """``R(K*, rho) = int K*(u) K*(u / rho) du``.

    The integration range is the intersection of both supports so the
    Simpson rule never straddles a support edge.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    a = k.support_halfwidth * min(1.0, rho)
    nodes, w = simpson_weights(-a, a)
    return float(np.dot(w, k(nodes) * k(nodes / rho)))

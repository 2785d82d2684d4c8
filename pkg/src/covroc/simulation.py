"""Monte Carlo harness for the three benchmark data-generating models.

* ``normal``: markers ``6 + 1.5 z + 1.5 sin z (+ sqrt(z - 0.5) for y)`` with
  variances ``0.3 + Phi(2z - 6)`` and ``1.5 + Phi(2z - 6)``, normal noise,
  ``z ~ U[1, 5]``.
* ``t3``: the same with Student-t(3) noise scaled by ``1/sqrt(3)``.
* ``lognormal``: ``x = exp{f0(z) + sigma e}``, ``y = exp{g0(z) + sigma e}``
  with ``sigma^2 = 1/3``, ``z ~ U[0, 1]``; ``f0, g0`` follow from the
  original-scale means ``f(z) = 1 - z/2 - sin(pi z)/4`` and
  ``g(z) = f(z) + 1.5 sqrt(z + 0.5)``.

Run ``r`` of a study with seed ``s`` draws everything from stream ``(s, r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.special import ndtr, stdtr

from ._rng import stream
from .bandwidth import (
    BandwidthGrid,
    BandwidthSet,
    SelectionMethod,
    oracle_ise_auc_bandwidths,
    oracle_ise_bandwidth,
)
from .bootstrap import BootstrapConfig, bootstrap_auc, percentile_band, sample_variance
from .errors import CovrocError, SimulationFailureError
from .estimators import Estimator, KnownCurves, kernel_auc_grid
from .kernels import Kernel
from .locpoly import Population, SamplePairs, default_floor, fit_mean, variance_observations
from .pipeline import EstimatorSpec, estimate_from_curves

MAX_RUN_FAILURE_RATE = 0.05
LOGNORMAL_SIGMA2 = 1.0 / 3.0


class NoiseFamily(str, Enum):
    NORMAL = "normal"
    T3 = "t3"
    LOGNORMAL = "lognormal"


class BandwidthPolicy(str, Enum):
    ORACLE = "oracle"
    CV = "cv"
    TRUE_CURVES = "true"


def _model1_v1(z):
    return 0.3 + ndtr(2.0 * np.asarray(z) - 6.0)


def _model1_v2(z):
    return 1.5 + ndtr(2.0 * np.asarray(z) - 6.0)


def _model1_f(z):
    z = np.asarray(z)
    return 6.0 + 1.5 * z + 1.5 * np.sin(z)


def _model1_g(z):
    return _model1_f(z) + np.sqrt(np.asarray(z) - 0.5)


def _lognormal_f(z):
    z = np.asarray(z)
    return 1.0 - 0.5 * z - 0.25 * np.sin(np.pi * z)


def _lognormal_g(z):
    return _lognormal_f(z) + 1.5 * np.sqrt(np.asarray(z) + 0.5)


@dataclass(frozen=True)
class SimScenario:
    """A data-generating model with known mean, variance and AUC functions.

    ``noise_scale`` multiplies the noise (0 switches it off). For the
    log-normal model it scales the log-scale standard deviation.
    ``covariate_law`` defaults to ``[1, 5]`` (normal, t3) or ``[0, 1]``.
    """

    name: NoiseFamily = NoiseFamily.NORMAL
    m: int = 40
    n: int = 40
    noise_scale: float = 1.0
    covariate_law: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "name", NoiseFamily(self.name))
        if self.covariate_law is None:
            law = (0.0, 1.0) if self.name is NoiseFamily.LOGNORMAL else (1.0, 5.0)
            object.__setattr__(self, "covariate_law", law)
        lo, hi = self.covariate_law
        if hi < lo:
            raise ValueError("covariate law needs lo <= hi")
        if self.name is not NoiseFamily.LOGNORMAL and lo < 0.5:
            raise ValueError("the diseased mean involves sqrt(z - 0.5); covariates must be >= 0.5")
        if self.m < 1 or self.n < 1 or self.noise_scale < 0:
            raise ValueError("invalid sample sizes or noise scale")

    @property
    def sigma(self) -> float:
        return math.sqrt(LOGNORMAL_SIGMA2) * self.noise_scale

    # log-scale means of the log-normal model
    def f0(self, z):
        return np.log(_lognormal_f(z)) - LOGNORMAL_SIGMA2 / 2.0

    def g0(self, z):
        return np.log(_lognormal_g(z)) - LOGNORMAL_SIGMA2 / 2.0

    def f(self, z):
        if self.name is not NoiseFamily.LOGNORMAL:
            return _model1_f(z)
        if self.noise_scale == 1.0:
            return _lognormal_f(z)
        return np.exp(self.f0(z) + self.sigma**2 / 2.0)

    def g(self, z):
        if self.name is not NoiseFamily.LOGNORMAL:
            return _model1_g(z)
        if self.noise_scale == 1.0:
            return _lognormal_g(z)
        return np.exp(self.g0(z) + self.sigma**2 / 2.0)

    def v1(self, z):
        if self.name is not NoiseFamily.LOGNORMAL:
            return self.noise_scale**2 * _model1_v1(z)
        return math.expm1(self.sigma**2) * self.f(z) ** 2

    def v2(self, z):
        if self.name is not NoiseFamily.LOGNORMAL:
            return self.noise_scale**2 * _model1_v2(z)
        return math.expm1(self.sigma**2) * self.g(z) ** 2

    def curves(self) -> KnownCurves:
        return KnownCurves(self.f, self.g, self.v1, self.v2)

    def default_z_grid(self, count: int = 41) -> NDArray[np.float64]:
        """Equispaced points over the central 90% of the covariate interval."""
        lo, hi = self.covariate_law
        pad = 0.05 * (hi - lo)
        return np.linspace(lo + pad, hi - pad, count)

    def ise_grid(self) -> NDArray[np.float64]:
        return self.default_z_grid(101)


def _noise(name: NoiseFamily, rng: np.random.Generator, size: int) -> NDArray:
    if name is NoiseFamily.T3:
        return rng.standard_t(3, size) / math.sqrt(3.0)
    return rng.standard_normal(size)


def generate(scenario: SimScenario, seed: int | np.random.Generator) -> tuple[SamplePairs, SamplePairs]:
    """Draw one ``(x_data, y_data)`` pair of samples."""
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    lo, hi = scenario.covariate_law
    s = scenario.noise_scale
    zx = rng.uniform(lo, hi, scenario.m)
    ex = _noise(scenario.name, rng, scenario.m)
    zy = rng.uniform(lo, hi, scenario.n)
    ey = _noise(scenario.name, rng, scenario.n)
    if scenario.name is NoiseFamily.LOGNORMAL:
        sig = scenario.sigma
        x = np.exp(scenario.f0(zx) + sig * ex)
        y = np.exp(scenario.g0(zy) + sig * ey)
    else:
        assert np.all(zy >= 0.5)
        x = _model1_f(zx) + s * np.sqrt(_model1_v1(zx)) * ex
        y = _model1_g(zy) + s * np.sqrt(_model1_v2(zy)) * ey
    return SamplePairs(zx, x, Population.X), SamplePairs(zy, y, Population.Y)


def _t3_unit_cdf(u: float) -> float:
    return float(stdtr(3, u * math.sqrt(3.0)))


def _t3_unit_pdf(e: float) -> float:
    # density of T / sqrt(3) for T ~ t_3
    return 2.0 / (math.pi * (1.0 + e * e) ** 2)


def _quad(fn, a: float, b: float) -> float:
    val, _ = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def _true_auc_point(scenario: SimScenario, z: float) -> float:
    f, g = float(scenario.f(z)), float(scenario.g(z))
    if scenario.noise_scale == 0.0:
        if scenario.name is NoiseFamily.LOGNORMAL:
            return 1.0 if scenario.g0(z) >= scenario.f0(z) else 0.0
        return 1.0 if g >= f else 0.0
    if scenario.name is NoiseFamily.NORMAL:
        return float(ndtr((g - f) / math.sqrt(scenario.v1(z) + scenario.v2(z))))
    if scenario.name is NoiseFamily.T3:
        s1, s2 = math.sqrt(float(scenario.v1(z))), math.sqrt(float(scenario.v2(z)))

        # P(Y >= X) = E_e[ 1 - G((f - g + s1 e) / s2) ]
        def integrand(e):
            return _t3_unit_pdf(e) * (1.0 - _t3_unit_cdf((f - g + s1 * e) / s2))

        return _quad(integrand, -np.inf, 0.0) + _quad(integrand, 0.0, np.inf)
    # log-normal: integrate F_X(t) f_Y(t) dt on the original scale
    sig = scenario.sigma
    mx, my = float(scenario.f0(z)), float(scenario.g0(z))
    norm = 1.0 / (sig * math.sqrt(2.0 * math.pi))

    def integrand(t):
        if t <= 0.0:
            return 0.0
        lt = math.log(t)
        u = (lt - my) / sig
        return float(ndtr((lt - mx) / sig)) * norm * math.exp(-0.5 * u * u) / t

    mid = math.exp(my)
    return _quad(integrand, 0.0, mid) + _quad(integrand, mid, np.inf)


def true_auc(scenario: SimScenario, z: float | ArrayLike) -> float | NDArray[np.float64]:
    """``P(Y > X | Z = z)`` for the scenario (closed form or quadrature)."""
    if np.ndim(z) == 0:
        return _true_auc_point(scenario, float(z))
    return np.array([_true_auc_point(scenario, float(v)) for v in np.asarray(z).ravel()])


def lognormal_auc_closed_form(scenario: SimScenario, z: ArrayLike) -> NDArray[np.float64]:
    """``Phi{(g0 - f0) / (sigma sqrt 2)}``: log is monotone, so the AUC is binormal."""
    return ndtr((scenario.g0(z) - scenario.f0(z)) / (scenario.sigma * math.sqrt(2.0)))


# --------------------------------------------------------------------------
# Bandwidth policies inside a run
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StudySettings:
    order: int = 1
    kernel: Kernel = field(default_factory=Kernel)
    bw_grid: BandwidthGrid = field(default_factory=BandwidthGrid.default)


def oracle_bandwidths(
    scenario: SimScenario,
    x_data: SamplePairs,
    y_data: SamplePairs,
    settings: StudySettings,
    z_grid: NDArray,
) -> BandwidthSet:
    """Bandwidths minimising the true ISE of each of the four smooths."""
    p, K, grid, ise = settings.order, settings.kernel, settings.bw_grid, scenario.ise_grid()
    out = {}
    for data, mean_fn, var_fn, hk, bk in (
        (x_data, scenario.f, scenario.v1, "h1", "b1"),
        (y_data, scenario.g, scenario.v2, "h2", "b2"),
    ):
        required = np.concatenate([z_grid, data.covariates])
        h = oracle_ise_bandwidth(mean_fn, data, p, K, grid, ise, required_points=required)
        resid2 = variance_observations(data, fit_mean(data, p, h, K))
        b = oracle_ise_bandwidth(
            var_fn, resid2, p, K, grid, ise, floor=default_floor(data.markers), required_points=required
        )
        out[hk], out[bk] = h, b
    return BandwidthSet(**out, method=SelectionMethod.ORACLE_ISE)


def oracle_kernel_bandwidths(
    truth_on_ise: NDArray,
    scenario: SimScenario,
    x_data: SamplePairs,
    y_data: SamplePairs,
    settings: StudySettings,
    z_grid: NDArray,
) -> tuple[float, float]:
    ise = scenario.ise_grid()
    K = settings.kernel
    cx = settings.bw_grid.resolve(x_data.covariates)
    cy = settings.bw_grid.resolve(y_data.covariates)

    def estimator(hx, hy, grid):
        est, ok = kernel_auc_grid(x_data, y_data, hx, hy, K, grid)
        _, ok_z = kernel_auc_grid(x_data, y_data, hx, hy, K, z_grid)
        return est, ok & ok_z.all(axis=-1, keepdims=True)

    return oracle_ise_auc_bandwidths(lambda g: truth_on_ise, estimator, cx, cy, ise)


# --------------------------------------------------------------------------
# MSE study
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimResult:
    scenario: str
    m: int
    n: int
    policy: str
    z_grid: NDArray[np.float64]
    true_auc: NDArray[np.float64]
    mse: dict[str, NDArray[np.float64]]
    mean_estimate: dict[str, NDArray[np.float64]]
    runs: int
    seed: int
    failures: dict[str, int]

    def integrated_mse(self, estimator: Estimator | str) -> float:
        """Trapezoid integral of the MSE curve over the evaluation grid."""
        key = Estimator(estimator).value
        return float(np.trapezoid(self.mse[key], self.z_grid))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "m": self.m,
            "n": self.n,
            "policy": self.policy,
            "runs": self.runs,
            "seed": self.seed,
            "z_grid": self.z_grid.tolist(),
            "true_auc": self.true_auc.tolist(),
            "mse": {k: v.tolist() for k, v in self.mse.items()},
            "integrated_mse": {k: self.integrated_mse(k) for k in self.mse},
            "mean_estimate": {k: v.tolist() for k, v in self.mean_estimate.items()},
            "failures": dict(self.failures),
        }


def _mse_run(
    r: int,
    scenario: SimScenario,
    estimators: tuple[Estimator, ...],
    policy: BandwidthPolicy,
    z_grid: NDArray,
    truth_on_ise: NDArray,
    settings: StudySettings,
    seed: int,
) -> dict[str, NDArray | None]:
    x_data, y_data = generate(scenario, stream(seed, r))
    out: dict[str, NDArray | None] = {}
    curve_based = [e for e in estimators if e is not Estimator.KERNEL]
    if curve_based:
        try:
            if policy is BandwidthPolicy.TRUE_CURVES:
                curves = scenario.curves()
            else:
                if policy is BandwidthPolicy.ORACLE:
                    bws = oracle_bandwidths(scenario, x_data, y_data, settings, z_grid)
                else:
                    bws = None
                spec = EstimatorSpec(
                    Estimator.CAMWE, settings.order, settings.kernel, bws, settings.bw_grid
                ).resolve(x_data, y_data)
                curves = spec.fit(x_data, y_data)
            for e in curve_based:
                out[e.value] = estimate_from_curves(e, x_data, y_data, curves, z_grid)
        except CovrocError:
            for e in curve_based:
                out[e.value] = None
    if Estimator.KERNEL in estimators:
        try:
            if policy is BandwidthPolicy.CV:
                spec = EstimatorSpec(
                    Estimator.KERNEL, settings.order, settings.kernel, None, settings.bw_grid
                ).resolve(x_data, y_data)
                hx, hy = spec.kernel_bandwidths
            else:
                hx, hy = oracle_kernel_bandwidths(
                    truth_on_ise, scenario, x_data, y_data, settings, z_grid
                )
            est, ok = kernel_auc_grid(x_data, y_data, hx, hy, settings.kernel, z_grid)
            out[Estimator.KERNEL.value] = est[0, 0] if ok.all() else None
        except CovrocError:
            out[Estimator.KERNEL.value] = None
    return out


def _chunked(fn, indices: Sequence[int], threads: int, *args) -> list:
    if threads == 1 or len(indices) < 2:
        return [fn(i, *args) for i in indices]
    chunks = np.array_split(np.asarray(indices), min(len(indices), 4 * threads))
    parts = Parallel(n_jobs=threads)(
        delayed(_run_many)(fn, c.tolist(), args) for c in chunks
    )
    return [r for part in parts for r in part]


def _run_many(fn, indices, args):
    return [fn(i, *args) for i in indices]


def run_mse_study(
    scenario: SimScenario,
    runs: int,
    estimators: Iterable[Estimator | str] = tuple(
        (Estimator.NORMAL, Estimator.CAMWE, Estimator.KERNEL)
    ),
    policy: BandwidthPolicy | str = BandwidthPolicy.ORACLE,
    z_grid: ArrayLike | None = None,
    seed: int = 0,
    settings: StudySettings | None = None,
    threads: int = 1,
) -> SimResult:
    """Monte Carlo MSE of each estimator on ``z_grid``.

    Failed runs are dropped per estimator and counted.

    Raises:
        SimulationFailureError: more than 5% of runs failed for an estimator.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    policy = BandwidthPolicy(policy)
    settings = settings or StudySettings()
    ests = tuple(dict.fromkeys(Estimator(e) for e in estimators))
    if Estimator.MANN_WHITNEY in ests:
        raise ValueError("the unadjusted Mann-Whitney statistic is not part of the MSE study")
    z = scenario.default_z_grid() if z_grid is None else np.atleast_1d(np.asarray(z_grid, float))
    truth = true_auc(scenario, z)
    truth_ise = true_auc(scenario, scenario.ise_grid()) if Estimator.KERNEL in ests else None

    results = _chunked(
        _mse_run, list(range(runs)), threads, scenario, ests, policy, z, truth_ise, settings, seed
    )
    mse, mean_est, failures = {}, {}, {}
    for e in ests:
        vals = [res[e.value] for res in results if res[e.value] is not None]
        failures[e.value] = runs - len(vals)
        if failures[e.value] > MAX_RUN_FAILURE_RATE * runs:
            raise SimulationFailureError(
                f"{e.value}: {failures[e.value]} of {runs} runs failed "
                f"(limit {MAX_RUN_FAILURE_RATE:.0%})"
            )
        arr = np.vstack(vals)
        mse[e.value] = np.mean((arr - truth[None, :]) ** 2, axis=0)
        mean_est[e.value] = arr.mean(axis=0)
    return SimResult(
        scenario.name.value, scenario.m, scenario.n, policy.value, z, truth, mse, mean_est,
        runs, int(seed), failures,
    )


# --------------------------------------------------------------------------
# Bootstrap band study
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BandStudyResult:
    """Monte Carlo bands/variances of CAMWE next to averaged bootstrap ones."""

    scenario: str
    m: int
    n: int
    policy: str
    z_grid: NDArray[np.float64]
    true_auc: NDArray[np.float64]
    mean_estimate: NDArray[np.float64]
    mc_lower: NDArray[np.float64]
    mc_upper: NDArray[np.float64]
    mc_variance: NDArray[np.float64]
    boot_lower: NDArray[np.float64]
    boot_upper: NDArray[np.float64]
    boot_variance: NDArray[np.float64]
    runs: int
    replicates: int
    seed: int
    failed_runs: int
    failed_replicates: int

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def _bootstrap_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(r), 1)).generate_state(1, np.uint64)[0])


def _band_run(
    r: int,
    scenario: SimScenario,
    policy: BandwidthPolicy,
    z_grid: NDArray,
    replicates: int,
    level: float,
    settings: StudySettings,
    seed: int,
):
    x_data, y_data = generate(scenario, stream(seed, r))
    try:
        bws = None
        if policy is BandwidthPolicy.ORACLE:
            bws = oracle_bandwidths(scenario, x_data, y_data, settings, z_grid)
        spec = EstimatorSpec(Estimator.CAMWE, settings.order, settings.kernel, bws, settings.bw_grid)
        band = bootstrap_auc(
            x_data, y_data, spec, z_grid,
            BootstrapConfig(replicates, level, _bootstrap_seed(seed, r)),
        )
    except CovrocError:
        return None
    return band.point_estimates, band.lower, band.upper, band.variance, band.failures


def run_band_study(
    scenario: SimScenario,
    runs: int,
    replicates: int,
    z_grid: ArrayLike | None = None,
    seed: int = 0,
    policy: BandwidthPolicy | str = BandwidthPolicy.CV,
    level: float = 0.95,
    settings: StudySettings | None = None,
    threads: int = 1,
) -> BandStudyResult:
    """Compare Monte Carlo and averaged bootstrap bands of CAMWE."""
    if runs < 2:
        raise ValueError("band study needs at least two runs")
    policy = BandwidthPolicy(policy)
    if policy is BandwidthPolicy.TRUE_CURVES:
        raise ValueError("band study needs estimated curves")
    settings = settings or StudySettings()
    z = scenario.default_z_grid() if z_grid is None else np.atleast_1d(np.asarray(z_grid, float))
    results = _chunked(
        _band_run, list(range(runs)), threads, scenario, policy, z, replicates, level, settings, seed
    )
    good = [res for res in results if res is not None]
    failed = runs - len(good)
    if failed > MAX_RUN_FAILURE_RATE * runs:
        raise SimulationFailureError(
            f"band study: {failed} of {runs} runs failed (limit {MAX_RUN_FAILURE_RATE:.0%})"
        )
    point = np.vstack([g[0] for g in good])
    mc_lower, mc_upper = percentile_band(point, level)
    return BandStudyResult(
        scenario=scenario.name.value,
        m=scenario.m,
        n=scenario.n,
        policy=policy.value,
        z_grid=z,
        true_auc=true_auc(scenario, z),
        mean_estimate=point.mean(axis=0),
        mc_lower=mc_lower,
        mc_upper=mc_upper,
        mc_variance=sample_variance(point),
        boot_lower=np.mean([g[1] for g in good], axis=0),
        boot_upper=np.mean([g[2] for g in good], axis=0),
        boot_variance=np.mean([g[3] for g in good], axis=0),
        runs=runs,
        replicates=replicates,
        seed=int(seed),
        failed_runs=failed,
        failed_replicates=int(sum(g[4] for g in good)),
    )

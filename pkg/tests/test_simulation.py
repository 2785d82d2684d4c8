import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import stdtr
from scipy.stats import kstest

import covroc.simulation as sim
from covroc.bootstrap import BootstrapConfig, bootstrap_auc, percentile_band
from covroc.errors import SimulationFailureError
from covroc.estimators import Estimator
from covroc.kernels import Kernel
from covroc.pipeline import EstimatorSpec
from covroc.simulation import (
    BandwidthPolicy,
    SimScenario,
    StudySettings,
    generate,
    lognormal_auc_closed_form,
    run_band_study,
    run_mse_study,
    true_auc,
)
from covroc._rng import stream

MODEL1_AUC_Z3 = 0.827647888996521178611  # Phi(sqrt(2.5 / 2.8)), mpmath
EXPM1_THIRD = 0.395612425086089528628  # e^(1/3) - 1, mpmath
# P(Y > X | z = 3) under t3 noise from 10^7 independent draws (numpy seed 12345);
# standard error 1.0e-4
T3_AUC_Z3_MONTE_CARLO = 0.887584


def test_zero_noise_degenerate_covariate():
    sc = SimScenario("normal", m=3, n=2, noise_scale=0.0, covariate_law=(3.0, 3.0))
    x, y = generate(sc, 0)
    expected_x = 6 + 4.5 + 1.5 * math.sin(3)
    np.testing.assert_allclose(x.markers, expected_x, rtol=1e-15)
    np.testing.assert_allclose(y.markers, expected_x + math.sqrt(2.5), rtol=1e-15)
    np.testing.assert_array_equal(x.covariates, 3.0)


def test_generate_shapes_and_determinism():
    sc = SimScenario("t3", m=30, n=25)
    x, y = generate(sc, 4)
    assert (len(x), len(y)) == (30, 25)
    assert np.all((x.covariates >= 1) & (x.covariates <= 5))
    x2, y2 = generate(sc, 4)
    np.testing.assert_array_equal(x.markers, x2.markers)
    np.testing.assert_array_equal(y.covariates, y2.covariates)
    x3, _ = generate(sc, 5)
    assert not np.array_equal(x.markers, x3.markers)


def test_lognormal_draws_are_positive_on_unit_interval():
    x, y = generate(SimScenario("lognormal"), 1)
    assert np.all(x.markers > 0) and np.all(y.markers > 0)
    assert np.all((x.covariates >= 0) & (x.covariates <= 1))


def test_t3_noise_law():
    # the sample variance of t3 draws converges too slowly to test directly,
    # so check the distribution of the scaled draws instead
    draws = sim._noise(sim.NoiseFamily.T3, np.random.default_rng(99), 10**5)
    res = kstest(draws, lambda u: stdtr(3, u * math.sqrt(3.0)))
    assert res.pvalue > 1e-3
    e = np.linspace(-4, 4, 9)
    np.testing.assert_allclose(
        [sim._t3_unit_cdf(v) for v in e], stdtr(3, e * math.sqrt(3.0)), rtol=1e-15
    )
    total, _ = quad(lambda v: v * v * sim._t3_unit_pdf(v), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_lognormal_identities():
    sc = SimScenario("lognormal")
    assert sc.f(0.0) == pytest.approx(1.0, abs=1e-15)
    assert sc.v1(0.0) == pytest.approx(EXPM1_THIRD, rel=1e-14)
    z = np.linspace(0, 1, 11)
    np.testing.assert_allclose(np.exp(sc.f0(z) + sc.sigma**2 / 2), sc.f(z), rtol=1e-14)
    np.testing.assert_allclose(sc.v2(z), math.expm1(1 / 3) * sc.g(z) ** 2, rtol=1e-14)


def test_scenario_validation():
    with pytest.raises(ValueError):
        SimScenario("normal", covariate_law=(0.0, 1.0))
    with pytest.raises(ValueError):
        SimScenario("normal", m=0)
    with pytest.raises(ValueError):
        SimScenario("cauchy")


def test_default_grids():
    z = SimScenario("normal").default_z_grid()
    assert z.size == 41 and z[0] == pytest.approx(1.2) and z[-1] == pytest.approx(4.8)
    assert SimScenario("lognormal").ise_grid().size == 101


# ---------------------------------------------------------------------------
# True AUC
# ---------------------------------------------------------------------------


def test_true_auc_model1():
    sc = SimScenario("normal")
    assert true_auc(sc, 0.5) == 0.5
    assert true_auc(sc, 3.0) == pytest.approx(MODEL1_AUC_Z3, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(0.5001, 5.0), family=st.sampled_from(["normal", "t3"]))
def test_true_auc_above_half(z, family):
    assert true_auc(SimScenario(family), z) > 0.5


def test_lognormal_quadrature_matches_closed_form():
    sc = SimScenario("lognormal")
    z = np.linspace(0, 1, 21)
    np.testing.assert_allclose(true_auc(sc, z), lognormal_auc_closed_form(sc, z), atol=1e-6)


def test_t3_quadrature_matches_frozen_monte_carlo():
    assert abs(true_auc(SimScenario("t3"), 3.0) - T3_AUC_Z3_MONTE_CARLO) < 4e-4


def test_t3_quadrature_matches_fresh_monte_carlo():
    sc = SimScenario("t3")
    z = 1.7
    rng = np.random.default_rng(2024)
    n = 10**6
    ex = rng.standard_t(3, n) / math.sqrt(3)
    ey = rng.standard_t(3, n) / math.sqrt(3)
    hits = np.mean(sc.g(z) + math.sqrt(sc.v2(z)) * ey > sc.f(z) + math.sqrt(sc.v1(z)) * ex)
    se = math.sqrt(hits * (1 - hits) / n)
    assert abs(true_auc(sc, z) - hits) < 4 * se


def test_zero_noise_true_auc_is_indicator():
    assert true_auc(SimScenario("normal", noise_scale=0.0), 2.0) == 1.0
    assert true_auc(SimScenario("lognormal", noise_scale=0.0), 0.4) == 1.0


# ---------------------------------------------------------------------------
# MSE study
# ---------------------------------------------------------------------------

FAST = StudySettings(bw_grid=sim.BandwidthGrid.log_spaced(0.1, 1.0, 6))


def test_true_curves_without_noise_give_zero_mse():
    sc = SimScenario("normal", noise_scale=0.0)
    res = run_mse_study(sc, 1, ["normal", "camwe"], policy="true", seed=0)
    np.testing.assert_array_equal(res.mse["camwe"], 0.0)
    np.testing.assert_array_equal(res.mse["normal"], 0.0)


def test_mse_study_deterministic_and_thread_independent():
    sc = SimScenario("normal")
    a = run_mse_study(sc, 4, seed=3, settings=FAST)
    b = run_mse_study(sc, 4, seed=3, settings=FAST, threads=2)
    for k in a.mse:
        np.testing.assert_array_equal(a.mse[k], b.mse[k])
    assert a.to_dict() == b.to_dict()
    assert all(np.all(v >= 0) for v in a.mse.values())
    assert a.runs == 4 and a.seed == 3


def test_mse_study_matches_manual_loop():
    sc = SimScenario("lognormal")
    z = sc.default_z_grid(9)
    res = run_mse_study(sc, 3, ["camwe"], policy="cv", z_grid=z, seed=8, settings=FAST)
    errs = []
    for r in range(3):
        x, y = generate(sc, stream(8, r))
        spec = EstimatorSpec(Estimator.CAMWE, 1, Kernel(), None, FAST.bw_grid).resolve(x, y)
        errs.append((spec.evaluate(x, y, z) - true_auc(sc, z)) ** 2)
    np.testing.assert_allclose(res.mse["camwe"], np.mean(errs, axis=0), rtol=1e-14)


def test_mse_study_aborts_on_failures(monkeypatch):
    real = sim._mse_run

    def flaky(r, *args):
        out = real(r, *args)
        if r % 4 == 0:
            out["normal"] = None
        return out

    monkeypatch.setattr(sim, "_mse_run", flaky)
    with pytest.raises(SimulationFailureError, match="normal"):
        run_mse_study(SimScenario("normal"), 8, ["normal"], policy="true", seed=0)


def test_mse_study_tolerates_few_failures(monkeypatch):
    real = sim._mse_run
    monkeypatch.setattr(
        sim, "_mse_run", lambda r, *a: {**real(r, *a), "camwe": None} if r == 0 else real(r, *a)
    )
    res = run_mse_study(SimScenario("normal"), 21, ["camwe"], policy="true", seed=0)
    assert res.failures == {"camwe": 1}


@pytest.mark.slow
def test_larger_samples_improve_every_estimator():
    lo = run_mse_study(SimScenario("normal", m=40, n=40), 60, seed=1)
    hi = run_mse_study(SimScenario("normal", m=100, n=100), 60, seed=1)
    for k in lo.mse:
        assert hi.integrated_mse(k) < lo.integrated_mse(k)


# ---------------------------------------------------------------------------
# Band study
# ---------------------------------------------------------------------------


def test_zero_noise_bands_nearly_collapse():
    sc = SimScenario("normal", noise_scale=0.0)
    wide = StudySettings(bw_grid=sim.BandwidthGrid.log_spaced(0.5, 1.0, 3))
    res = run_band_study(sc, 3, 20, z_grid=sc.default_z_grid(5), seed=0, settings=wide)
    # smoothing bias leaves the residuals slightly off zero near the boundary;
    # resampling reshuffles those bias-only residuals, so the bootstrap bands
    # stay open below
    for arr in (res.mean_estimate, res.mc_lower):
        assert np.all(arr >= 0.99)
    np.testing.assert_array_equal(res.mc_upper, 1.0)
    np.testing.assert_array_equal(res.boot_upper, 1.0)
    assert np.all(res.mc_variance < 1e-4)
    assert np.all((res.boot_lower > 0.5) & (res.boot_lower <= 1.0))


def test_zero_noise_band_study_fails_loudly_with_narrow_bandwidths():
    # CV picks the narrowest feasible bandwidth, so resamples with repeated
    # covariates leave too few distinct local points
    sc = SimScenario("normal", noise_scale=0.0)
    with pytest.raises(SimulationFailureError, match="3 of 3"):
        run_band_study(sc, 3, 5, z_grid=sc.default_z_grid(5), seed=0)


def test_band_study_hand_trace():
    sc = SimScenario("normal")
    z = sc.default_z_grid(5)
    gauss = StudySettings(kernel=Kernel.from_name("gaussian"))
    res = run_band_study(sc, 2, 2, z_grid=z, seed=6, settings=gauss)
    points, lowers, uppers, variances = [], [], [], []
    for r in range(2):
        x, y = generate(sc, stream(6, r))
        spec = EstimatorSpec(Estimator.CAMWE, 1, gauss.kernel, None, gauss.bw_grid)
        band = bootstrap_auc(x, y, spec, z, BootstrapConfig(2, 0.95, sim._bootstrap_seed(6, r)))
        points.append(band.point_estimates)
        lowers.append(band.lower)
        uppers.append(band.upper)
        variances.append((band.replicate_values[0] - band.replicate_values[1]) ** 2 / 2)
    points = np.array(points)
    lo, hi = percentile_band(points, 0.95)
    np.testing.assert_array_equal(res.mc_lower, lo)
    np.testing.assert_array_equal(res.mc_upper, hi)
    np.testing.assert_allclose(res.mc_variance, (points[0] - points[1]) ** 2 / 2, rtol=1e-12, atol=1e-18)
    np.testing.assert_allclose(res.boot_lower, np.mean(lowers, axis=0), rtol=1e-15)
    np.testing.assert_allclose(res.boot_upper, np.mean(uppers, axis=0), rtol=1e-15)
    np.testing.assert_allclose(res.boot_variance, np.mean(variances, axis=0), rtol=1e-10, atol=1e-18)
    assert res.failed_runs == 0


def test_band_study_validation():
    with pytest.raises(ValueError):
        run_band_study(SimScenario("normal"), 1, 5)
    with pytest.raises(ValueError):
        run_band_study(SimScenario("normal"), 3, 5, policy=BandwidthPolicy.TRUE_CURVES)

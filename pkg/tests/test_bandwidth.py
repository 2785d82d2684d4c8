import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import wls_intercept
from covroc.bandwidth import (
    BandwidthGrid,
    BandwidthSet,
    GridScale,
    SelectionMethod,
    loo_cv_bandwidth,
    loo_cv_scores,
    oracle_ise_auc_bandwidths,
    oracle_ise_bandwidth,
    oracle_ise_scores,
    pick_largest_minimiser,
    select_all,
)
from covroc.errors import InfeasibleBandwidthError
from covroc.estimators import kernel_auc_grid
from covroc.kernels import Kernel
from covroc.locpoly import Population, SamplePairs, default_floor, fit_mean, variance_observations
from covroc.simulation import SimScenario, true_auc

EPA = Kernel()


def brute_force_cv(z, v, p, h, kernel, floor=None) -> float:
    """Refit without point i for every i; +inf if any refit has < p+1 weighted points."""
    total = 0.0
    for i in range(z.size):
        keep = np.arange(z.size) != i
        zk, vk = z[keep], v[keep]
        if np.count_nonzero(kernel((zk - z[i]) / h) > 0) < p + 1:
            return np.inf
        pred = wls_intercept(zk, vk, z[i], p, h, kernel)
        if floor is not None:
            pred = max(pred, floor)
        total += (v[i] - pred) ** 2
    return total


def brute_force_pick(scores, cands):
    best = min(scores)
    if not np.isfinite(best):
        raise InfeasibleBandwidthError("none")
    return max(c for c, s in zip(cands, scores) if s <= best + 1e-12 * abs(best))


# ---------------------------------------------------------------------------
# Grids and sets
# ---------------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        BandwidthGrid(())
    with pytest.raises(ValueError):
        BandwidthGrid((0.2, 0.1))
    with pytest.raises(ValueError):
        BandwidthGrid((0.0, 0.1))


def test_default_grid():
    g = BandwidthGrid.default()
    assert len(g.candidates) == 15
    assert g.candidates[0] == pytest.approx(0.05) and g.candidates[-1] == pytest.approx(1.0)
    assert g.scale is GridScale.FRACTION_OF_RANGE
    np.testing.assert_allclose(g.resolve([1.0, 5.0, 3.0]), 4.0 * np.asarray(g.candidates))
    assert BandwidthGrid((0.5,), "absolute").resolve([0.0, 10.0])[0] == 0.5


def test_bandwidth_set_validation():
    with pytest.raises(ValueError):
        BandwidthSet(1.0, 1.0, -1.0, 1.0)
    s = BandwidthSet(1, 2, 3, 4)
    assert s.as_dict() == {"h1": 1.0, "h2": 2.0, "b1": 3.0, "b2": 4.0}
    assert s.method is SelectionMethod.FIXED


def test_tie_rule_prefers_largest():
    assert pick_largest_minimiser(np.array([1.0, 0.5, 0.5, 2.0]), 1.0) == 2
    assert pick_largest_minimiser(np.array([np.inf, 3.0, np.inf]), 1.0) == 1
    with pytest.raises(InfeasibleBandwidthError):
        pick_largest_minimiser(np.array([np.inf, np.nan]), 1.0)


# ---------------------------------------------------------------------------
# Leave-one-out CV
# ---------------------------------------------------------------------------


def test_exact_line_ties_to_largest():
    z = np.linspace(0, 1, 12)
    data = SamplePairs(z, 1.0 - 2.0 * z)
    sel = loo_cv_bandwidth(data, 1, EPA, BandwidthGrid((0.1, 0.5, 1.0), "absolute"))
    assert sel.bandwidth == 1.0
    assert np.all(sel.scores[np.isfinite(sel.scores)] < 1e-25)


def test_single_feasible_candidate():
    z = np.linspace(0, 1, 12)
    data = SamplePairs(z, np.sin(z))
    sel = loo_cv_bandwidth(data, 1, EPA, BandwidthGrid((0.05, 0.6), "absolute"))
    assert np.isinf(sel.scores[0])  # neighbours are 1/11 apart
    assert sel.bandwidth == 0.6


def test_all_infeasible():
    data = SamplePairs(np.linspace(0, 1, 12), np.arange(12.0))
    with pytest.raises(InfeasibleBandwidthError, match="population x"):
        loo_cv_bandwidth(data, 1, EPA, BandwidthGrid((0.01, 0.02), "absolute"))


def test_needs_p_plus_three_points():
    with pytest.raises(ValueError):
        loo_cv_bandwidth(SamplePairs([0, 1, 2.0], [0, 1, 0.0]), 1)


def test_sinusoid_matches_brute_force():
    rng = np.random.default_rng(40)
    z = np.sort(rng.uniform(0, 2 * np.pi, 40))
    v = np.sin(z) + rng.normal(0, 0.3, 40)
    grid = BandwidthGrid.log_spaced(0.05, 1.0, 15)
    sel = loo_cv_bandwidth(SamplePairs(z, v), 1, EPA, grid)
    cands = grid.resolve(z)
    oracle = [brute_force_cv(z, v, 1, h, EPA) for h in cands]
    np.testing.assert_array_equal(np.isinf(sel.scores), np.isinf(oracle))
    fin = np.isfinite(oracle)
    np.testing.assert_allclose(sel.scores[fin], np.asarray(oracle)[fin], rtol=1e-10)
    assert sel.bandwidth == brute_force_pick(oracle, cands)


@pytest.mark.parametrize("seed", range(10))
def test_matches_brute_force_on_datasets(seed):
    rng = np.random.default_rng(500 + seed)
    n = int(rng.integers(12, 40))
    p = 1 if seed % 3 else 3
    z = rng.uniform(0, 1, n)
    v = np.cos(4 * z) + rng.normal(0, 0.25, n)
    grid = BandwidthGrid.log_spaced(0.08, 1.0, 9)
    sel = loo_cv_bandwidth(SamplePairs(z, v), p, EPA, grid)
    cands = grid.resolve(z)
    oracle = [brute_force_cv(z, v, p, h, EPA) for h in cands]
    assert sel.bandwidth == brute_force_pick(oracle, cands)
    # the returned candidate's score is minimal over the whole grid
    assert np.all(sel.scores[cands == sel.bandwidth][0] <= sel.scores)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(8, 30))
def test_selected_score_is_minimal(seed, n):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0, 1, n)
    v = rng.normal(size=n)
    grid = BandwidthGrid.log_spaced(0.1, 1.0, 6)
    try:
        sel = loo_cv_bandwidth(SamplePairs(z, v), 1, EPA, grid)
    except InfeasibleBandwidthError:
        return
    chosen = sel.scores[list(sel.candidates).index(sel.bandwidth)]
    assert np.all(chosen <= sel.scores)
    again = loo_cv_bandwidth(SamplePairs(z, v), 1, EPA, grid)
    assert again.bandwidth == sel.bandwidth
    np.testing.assert_array_equal(again.scores, sel.scores)


def test_floored_cv_matches_brute_force():
    rng = np.random.default_rng(77)
    z = rng.uniform(0, 1, 25)
    r2 = rng.exponential(1.0, 25) * (1 + 3 * z)
    floor = 0.05
    cands = np.array([0.15, 0.3, 0.6])
    got = loo_cv_scores(SamplePairs(z, r2), 1, EPA, cands, floor)
    oracle = [brute_force_cv(z, r2, 1, h, EPA, floor) for h in cands]
    np.testing.assert_allclose(got, oracle, rtol=1e-10)


# ---------------------------------------------------------------------------
# select_all
# ---------------------------------------------------------------------------


def test_select_all_model1_matches_brute_force(model1_data):
    x, y = model1_data
    grid = BandwidthGrid.log_spaced(0.05, 1.0, 15)
    bws = select_all(x, y, 1, EPA, grid)
    assert bws.method is SelectionMethod.LOO_CV
    for data, hk, bk in ((x, "h1", "b1"), (y, "h2", "b2")):
        z, v = data.covariates, data.markers
        cands = grid.resolve(z)
        mean_scores = [brute_force_cv(z, v, 1, h, EPA) for h in cands]
        h = brute_force_pick(mean_scores, cands)
        assert getattr(bws, hk) == h
        r2 = np.array([(v[i] - wls_intercept(z, v, z[i], 1, h, EPA)) ** 2 for i in range(z.size)])
        var_scores = [brute_force_cv(z, r2, 1, b, EPA, default_floor(v)) for b in cands]
        assert getattr(bws, bk) == brute_force_pick(var_scores, cands)
        stored = dict(bws.cv_scores[hk])
        for c, s in zip(cands, mean_scores):
            if np.isfinite(s):
                assert stored[float(c)] == pytest.approx(s, rel=1e-10)


def test_select_all_symmetric(model1_data):
    x, _ = model1_data
    y = SamplePairs(x.covariates, x.markers, Population.Y)
    bws = select_all(x, y, 1)
    assert bws.h1 == bws.h2 and bws.b1 == bws.b2


def test_select_all_exact_polynomials():
    z = np.linspace(0, 1, 15)
    x = SamplePairs(z, 1 + z, Population.X)
    y = SamplePairs(z, 3 - 2 * z, Population.Y)
    bws = select_all(x, y, 1, EPA, BandwidthGrid((0.2, 0.5, 1.0), "absolute"))
    assert (bws.h1, bws.h2, bws.b1, bws.b2) == (1.0, 1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# Oracle ISE selection
# ---------------------------------------------------------------------------


def test_oracle_ise_exact_polynomial_ties_to_largest():
    z = np.linspace(0, 1, 15)
    data = SamplePairs(z, 2 + z)
    grid = BandwidthGrid((0.2, 0.4, 0.8), "absolute")
    h = oracle_ise_bandwidth(lambda t: 2 + t, data, 1, EPA, grid, np.linspace(0.1, 0.9, 21))
    assert h == 0.8


def test_oracle_ise_single_candidate(model1_data):
    x, _ = model1_data
    sc = SimScenario("normal")
    h = oracle_ise_bandwidth(sc.f, x, 1, EPA, BandwidthGrid((0.7,), "absolute"), sc.ise_grid())
    assert h == 0.7


def test_oracle_ise_matches_scan(model1_data):
    x, _ = model1_data
    sc = SimScenario("normal")
    grid = BandwidthGrid.log_spaced(0.05, 1.0, 15)
    eg = sc.ise_grid()
    cands = grid.resolve(x.covariates)
    scan = []
    for h in cands:
        fit = fit_mean(x, 1, h)
        est, ok, _ = fit.evaluate_raw(eg)
        if not ok.all():
            scan.append(np.inf)
            continue
        err2 = (est - sc.f(eg)) ** 2
        scan.append(float(np.sum(np.diff(eg) * (err2[1:] + err2[:-1]) / 2)))
    np.testing.assert_allclose(oracle_ise_scores(sc.f, x, 1, EPA, cands, eg), scan, rtol=1e-10)
    assert oracle_ise_bandwidth(sc.f, x, 1, EPA, grid, eg) == brute_force_pick(scan, cands)


def test_oracle_ise_required_points_make_candidates_infeasible():
    z = np.linspace(0, 1, 11)
    data = SamplePairs(z, z)
    cands = np.array([0.15, 0.5])
    scores = oracle_ise_scores(lambda t: t, data, 1, EPA, cands, np.linspace(0.2, 0.4, 5),
                               required_points=[3.0])
    assert np.all(np.isinf(scores))


def _ak_scan(x, y, truth, hx_c, hy_c, grid):
    """Direct double-sum estimator over the product grid; ties to largest hx, then hy."""
    ind = (y.markers[None, :] >= x.markers[:, None]).astype(float)
    scores = {}
    for hx in hx_c:
        for hy in hy_c:
            vals = []
            for g in grid:
                w = np.outer(EPA((x.covariates - g) / hx), EPA((y.covariates - g) / hy))
                if w.sum() == 0:
                    break
                vals.append((w * ind).sum() / w.sum())
            else:
                err2 = (np.array(vals) - truth) ** 2
                scores[(hx, hy)] = float(np.sum(np.diff(grid) * (err2[1:] + err2[:-1]) / 2))
    best = min(scores.values())
    return max(k for k, v in scores.items() if v <= best + 1e-12 * best)


def test_oracle_auc_bandwidths_match_scan(model1_data):
    x, y = model1_data
    sc = SimScenario("normal")
    grid = np.linspace(1.5, 4.5, 25)
    t = true_auc(sc, grid)
    cx = np.geomspace(0.4, 4.0, 5)
    cy = np.geomspace(0.4, 4.0, 5)
    got = oracle_ise_auc_bandwidths(
        lambda g: t, lambda hx, hy, g: kernel_auc_grid(x, y, hx, hy, EPA, g), cx, cy, grid
    )
    assert got == _ak_scan(x, y, t, cx, cy, grid)


def test_oracle_auc_ties_prefer_largest():
    rng = np.random.default_rng(1)
    z = rng.uniform(0, 1, 10)
    v = rng.normal(size=10)
    x = SamplePairs(z, v, Population.X)
    y = SamplePairs(z, v, Population.Y)
    grid = np.linspace(0.3, 0.7, 5)
    cand = [0.5, 1.0, 2.0]
    # a constant estimator ties every pair
    est = lambda hx, hy, g: (np.full((3, 3, g.size), 0.5), np.ones((3, 3, g.size), bool))
    assert oracle_ise_auc_bandwidths(lambda g: np.full(g.size, 0.5), est, cand, cand, grid) == (2.0, 2.0)
    got = oracle_ise_auc_bandwidths(
        lambda g: np.full(g.size, 0.5), lambda hx, hy, g: kernel_auc_grid(x, y, hx, hy, EPA, g),
        [5.0], [5.0], grid,
    )
    assert got == (5.0, 5.0)

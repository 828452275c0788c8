"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each test records a one-line verdict that the conftest hook prints in a
final "acceptance criteria" section. Run just this file with
``pytest tests/test_acceptance.py``; the slow criteria take a few minutes.
"""

import hashlib
import math

import numpy as np
import pytest

from conftest import dense_covariance, dense_restricted_nll, random_dataset
from mlmeta import cli
from mlmeta.core import VarianceComponents, block_weight_solve, cochran_q, i_squared_components, reml_fit
from mlmeta.data import Dataset, Study, Trial
from mlmeta.dataset_io import SimFeature, schema_for, simulate_dataset
from mlmeta.regression import encode_features, forward_select, permutation_importance, r_squared
from mlmeta.reporting import summary_table
from mlmeta.special import t_quantile
from mlmeta.transforms import backtransform_ci, benchmark_accuracy, da_inverse, da_inverse_array, da_transform_array

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(record_property):
    """Register the criterion title up front, then attach details."""
    def start(title):
        record_property("acceptance", title)
        return lambda detail: record_property("acceptance_detail", detail)
    return start


def test_ac1_benchmark_formula(verdict):
    detail = verdict("AC1 benchmark accuracy")
    got = (benchmark_accuracy([1, 1]), benchmark_accuracy([1] * 10), benchmark_accuracy([9, 1]))
    want = (0.5, 0.1, 0.82)
    err = max(abs(g - w) for g, w in zip(got, want))
    detail(f"max |error| = {err:.1e} (tol 1e-12)")
    assert err <= 1e-12


def test_ac2_backtransform_headline(verdict):
    detail = verdict("AC2 back-transformed estimate and interval")
    p = da_inverse(2 * 1.2384, 912.66)
    est = backtransform_ci(1.2384, 0.0331 ** 2, 20, alpha=0.05)
    detail(f"p = {p:.4f}, CI = [{est.lcb:.4f}, {est.ucb:.4f}]")
    assert 0.885 <= p <= 0.895
    assert abs(est.lcb - 0.85) <= 0.01
    assert abs(est.ucb - 0.93) <= 0.01


def test_ac3_i_squared_and_r_squared(verdict):
    detail = verdict("AC3 I2 and R2 bookkeeping")
    null = i_squared_components(0.0173, 0.0099, 1e-8)
    feat = i_squared_components(0.0068, 0.0091, 1e-8)
    r2 = r_squared((0.0173, 0.0099), (0.0068, 0.0091))
    detail(f"I2 {null.xi:.3f}/{null.zeta:.3f} and {feat.xi:.3f}/{feat.zeta:.3f}, R2 {r2.xi:.3f}/{r2.zeta:.3f}")
    assert abs(null.xi - 0.64) <= 0.005 and abs(null.zeta - 0.36) <= 0.005
    assert abs(feat.xi - 0.43) <= 0.005 and abs(feat.zeta - 0.57) <= 0.005
    assert abs(r2.xi - 0.61) <= 0.01 and abs(r2.zeta - 0.08) <= 0.01


@pytest.mark.slow
def test_ac4_weight_matrix_oracle(verdict):
    detail = verdict("AC4 weight matrix and weighted-sum oracle")
    rng = np.random.default_rng(4)
    w_dev = mu_dev = var_dev = 0.0
    for _ in range(1000):
        ds = random_dataset(rng, h_max=8, m_max=6)
        comps = VarianceComponents(*rng.uniform(0.0, 0.05, 2))
        W, _ = block_weight_solve(comps, ds, np.eye(ds.m))
        W_dense = np.linalg.inv(dense_covariance(ds, comps.sigma2_xi, comps.sigma2_zeta))
        w_dev = max(w_dev, float(np.abs(W - W_dense).max()))
        fit = reml_fit(ds)
        W_fit = np.linalg.inv(dense_covariance(ds, fit.sigma2_xi, fit.sigma2_zeta))
        mu_dense = W_fit.sum(axis=0) @ ds.theta / W_fit.sum()
        mu_dev = max(mu_dev, abs(fit.mu - mu_dense))
        var_dev = max(var_dev, abs(fit.var_mu - 1.0 / W_fit.sum()))
    detail(f"max |W - W_dense| = {w_dev:.1e}, max |mu - mu_dense| = {mu_dev:.1e}, "
           f"max |Var - 1/sum w| = {var_dev:.1e} (tol 1e-10)")
    assert w_dev <= 1e-10 and mu_dev <= 1e-10 and var_dev <= 1e-10


@pytest.mark.slow
def test_ac5_parameter_recovery(verdict):
    detail = verdict("AC5 REML parameter recovery and CI coverage")
    xi, zeta, hits = [], [], 0
    reps = 100
    for seed in range(reps):
        ds, _ = simulate_dataset(200, 5, 500, mu=1.0, sigma2_xi=0.017, sigma2_zeta=0.010, seed=seed)
        fit = reml_fit(ds)
        xi.append(fit.sigma2_xi)
        zeta.append(fit.sigma2_zeta)
        half = t_quantile(0.975, fit.h - 1) * fit.se_mu
        hits += abs(fit.mu - 1.0) <= half
    rel_xi = abs(np.mean(xi) / 0.017 - 1.0)
    rel_zeta = abs(np.mean(zeta) / 0.010 - 1.0)
    coverage = hits / reps
    detail(f"rel. error xi {rel_xi:.3f}, zeta {rel_zeta:.3f} (tol 0.10); coverage {coverage:.2f} in [0.92, 0.98]")
    assert rel_xi <= 0.10 and rel_zeta <= 0.10
    assert 0.92 <= coverage <= 0.98


def _grid_zoom(theta, v, X):
    """Brute-force minimiser of the two-level restricted likelihood over s2 >= 0."""
    hi = max(10.0 * float(np.var(theta)), 1e-3)
    lo = 0.0
    for _ in range(40):
        grid = np.linspace(lo, hi, 201)
        vals = [dense_restricted_nll(theta, v, s2, X) for s2 in grid]
        i = int(np.argmin(vals))
        step = grid[1] - grid[0]
        lo, hi = max(0.0, grid[i] - 2 * step), grid[i] + 2 * step
        if step < 1e-12:
            break
    return grid[i]


@pytest.mark.slow
def test_ac6_two_level_reduction(verdict):
    detail = verdict("AC6 two-level reduction against a grid search")
    rng = np.random.default_rng(6)
    worst = 0.0
    boundary = 0
    for inst in range(50):
        h = int(rng.integers(5, 31))
        s2 = float(rng.choice([0.0, rng.uniform(0.001, 0.05)]))
        theta_true = rng.normal(1.0, math.sqrt(s2), h) if s2 > 0 else np.full(h, 1.0)
        studies = []
        for j in range(h):
            n = int(rng.integers(30, 1500))
            p = da_inverse(2 * float(np.clip(theta_true[j], 0.05, 1.5)), n)
            studies.append(Study(f"S{j}", [Trial.from_counts(1, int(rng.binomial(n, p)), n)]))
        ds = Dataset(studies)
        fit = reml_fit(ds, fix_sigma2_zeta=0.0)
        oracle = _grid_zoom(ds.theta, ds.v, np.ones((h, 1)))
        worst = max(worst, abs(fit.sigma2_xi - oracle))
        boundary += fit.sigma2_xi == 0.0
    detail(f"max |s2_xi - grid| = {worst:.1e} over 50 instances, {boundary} at the boundary (tol 1e-4)")
    assert worst <= 1e-4


def test_ac7_round_trip_sweep(verdict):
    detail = verdict("AC7 transform round trip")
    worst_excess = -math.inf
    worst_abs = 0.0
    for n in range(10, 5001):
        k = np.arange(n + 1)
        theta, _ = da_transform_array(k, np.full(n + 1, n))
        back = da_inverse_array(2 * theta, float(n))
        dev = np.abs(back - k / n)
        worst_abs = max(worst_abs, float(dev.max()))
        worst_excess = max(worst_excess, float((dev - max(1e-3, 2.0 / n)).max()))
    # the vectorized path must agree with the scalar one it stands in for
    rng = np.random.default_rng(7)
    ns = rng.integers(10, 5001, 300)
    ks = np.array([rng.integers(0, n + 1) for n in ns])
    theta, _ = da_transform_array(ks, ns)
    scalar = np.array([da_inverse(2 * t, float(n)) for t, n in zip(theta, ns)])
    same = float(np.abs(scalar - da_inverse_array(2 * theta, ns.astype(float))).max())
    detail(f"max deviation {worst_abs:.2e}, worst margin to max(1e-3, 2/n) {worst_excess:.2e}; "
           f"scalar vs vector {same:.1e}")
    assert worst_excess <= 0.0
    assert same <= 1e-13


def test_ac8_q_bookkeeping(verdict):
    detail = verdict("AC8 Q degrees of freedom")
    sizes = [1, 2, 3, 4, 5, 6, 7, 8, 8, 7, 6, 5, 4, 3, 2, 1, 4, 4, 3, 3]
    feats = [SimFeature("maxprev", "numeric", effect=0.4335, low=0.142, high=0.995)]
    ds, _ = simulate_dataset(20, n=(100, 2000), mu=0.9796, sigma2_xi=0.0068, sigma2_zeta=0.0091,
                             features=feats, seed=8, study_sizes=sizes)
    null = reml_fit(ds)
    feat = reml_fit(ds, encode_features(ds, schema_for(feats).feature_map, ["maxprev"]))
    _, table = summary_table(null, feat)
    flat = Dataset([Study(f"S{j}", [Trial.from_counts(i, 170, 200) for i in range(m)])
                    for j, m in enumerate(sizes)])
    q0 = cochran_q(flat)
    detail(f"m = {ds.m}, df {null.q_df}/{feat.q_df}; identical effects Q = {q0.q:g}, p = {q0.pvalue:g}")
    assert ds.m == 86 and ds.h == 20
    assert (null.q_df, feat.q_df) == (85, 84)
    assert (table["models"]["meta_analysis"]["df"], table["models"]["meta_regression"]["df"]) == (85, 84)
    assert q0.q == 0.0 and q0.pvalue == 1.0


@pytest.mark.slow
def test_ac9_selection_and_importance(verdict):
    detail = verdict("AC9 selection and PFI on a planted feature")
    feats = [SimFeature("maxprev", "numeric", effect=0.4335, low=0.142, high=0.995)]
    feats += [SimFeature(f"noise{i}", "numeric") for i in (1, 2, 3)]
    specs = schema_for(feats).feature_map
    reps = 100
    only_planted = planted_pfi = noise_ok = 0
    worst_noise = 0.0
    for seed in range(reps):
        ds, _ = simulate_dataset(60, (2, 6), (200, 2000), mu=0.9796, sigma2_xi=0.0068, sigma2_zeta=0.0091,
                                 features=feats, seed=seed)
        path = forward_select(ds, specs, "BIC")
        only_planted += path.selected == ("maxprev",)
        rep = permutation_importance(ds, specs, K=5, B=200, seed=seed)
        planted_pfi += rep.by_name("maxprev").percentiles[2.5] > 1.0
        noise_means = [rep.by_name(f"noise{i}").mean for i in (1, 2, 3)]
        noise_ok += all(0.9 <= x <= 1.1 for x in noise_means)
        worst_noise = max(worst_noise, max(abs(x - 1.0) for x in noise_means))
    detail(f"BIC selects only the planted feature {only_planted}/{reps}; planted 2.5th pct > 1 "
           f"{planted_pfi}/{reps}; noise mean PFI in [0.9, 1.1] {noise_ok}/{reps} (worst |mean-1| {worst_noise:.3f})")
    assert only_planted >= 0.9 * reps
    assert planted_pfi >= 0.9 * reps
    assert noise_ok == reps


def _artifacts(out):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.iterdir()) if p.suffix in (".json", ".svg", ".csv", ".txt")}


def test_ac10_cli_determinism(verdict, tmp_path, capsys):
    detail = verdict("AC10 byte-identical CLI artifacts")
    out = tmp_path / "run"

    def pipeline():
        base = ["--out", str(out)]
        data = ["--input", str(out / "dataset.csv"), "--schema", str(out / "schema.json")]
        assert cli.main(["simulate", *base, "--studies", "20", "--planted-maxprev", "0.4335",
                         "--noise-features", "2", "--seed", "10"]) == 0
        assert cli.main(["analyze", *data, *base]) == 0
        assert cli.main(["regress", *data, *base, "--features", "maxprev"]) == 0
        assert cli.main(["select", *data, *base]) == 0
        assert cli.main(["importance", *data, *base, "--permutations", "20", "--seed", "3"]) == 0
        return _artifacts(out)

    first = pipeline()
    second = pipeline()
    capsys.readouterr()
    n_svg = sum(name.endswith(".svg") for name in first)
    n_json = sum(name.endswith(".json") for name in first)
    detail(f"{len(first)} artifacts ({n_svg} SVG, {n_json} JSON) identical across runs: {first == second}")
    assert n_svg >= 5 and n_json >= 6
    assert first == second

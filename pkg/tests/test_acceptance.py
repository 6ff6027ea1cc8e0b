"""Acceptance suite: ten end-to-end criteria, one test and one verdict line each.

Every test is fully seeded, checks its statistical target at the stated
tolerance, and asserts its own wall-clock budget.  Run with -s to see the
per-criterion verdict lines.
"""

import filecmp
import json
import math
import os
import time
import warnings

import numpy as np
import pytest
import scipy.stats

from _tvhp_sim import block_shuffle, tv_corpus
from hawkeskit import (
    Corpus,
    EventSequence,
    ExponentialKernel,
    HawkesModel,
    LearnConfig,
    Penalty,
    SimConfig,
    branching_matrix,
    cluster_distance,
    cluster_mixture,
    cluster_purity,
    estimation_error,
    fit_ls,
    fit_mle,
    fit_tvhp,
    granger_graph,
    ks_bound,
    load_corpus,
    load_distance_csv,
    load_granger,
    load_granger_dot,
    load_model,
    load_tvhp,
    load_tvhp_csv,
    read_benchmark_csv,
    read_compare_csv,
    rescaling_test,
    save_corpus,
    save_distance_csv,
    save_granger,
    save_model,
    simulate_branch,
    simulate_exact_exp,
    simulate_ogata,
    tvhp_variation,
    write_benchmark_csv,
    write_compare_csv,
)
from hawkeskit._util import read_csv_rows
from hawkeskit.cli import main as cli_main
from hawkeskit.learn import exp_nll_and_grad

_SIMULATORS = (
    ("branch", simulate_branch),
    ("ogata", simulate_ogata),
    ("exact-exp", simulate_exact_exp),
)


def bench2():
    """The dense two-dimensional benchmark model used across criteria."""
    return HawkesModel(
        mu=np.array([0.3, 0.6]),
        kernel=ExponentialKernel(decay=1.0),
        A=np.array([[0.4, 0.1], [0.2, 0.3]]),
    )


def verdict(num: int, text: str) -> None:
    print(f"criterion {num:02d} PASS: {text}")


def test_criterion_01_simulator_cross_agreement():
    t0 = time.monotonic()
    truth = bench2()
    stats = {}
    for name, fn in _SIMULATORS:
        corpus = fn(SimConfig(truth, t_end=500.0, n_sequences=200, rng_seed=1))
        counts = np.array([len(s) for s in corpus], dtype=float)
        stats[name] = (counts.mean(), counts.std(ddof=1) / math.sqrt(len(counts)))
    gaps = []
    names = [n for n, _ in _SIMULATORS]
    for i in range(3):
        for j in range(i + 1, 3):
            (ma, sa), (mb, sb) = stats[names[i]], stats[names[j]]
            gap, limit = abs(ma - mb), 3.0 * math.hypot(sa, sb)
            gaps.append((names[i], names[j], gap, limit))
            assert gap < limit, f"{names[i]} vs {names[j]}: {gap:.2f} >= {limit:.2f}"
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    worst = max(g / l for _, _, g, l in gaps)
    means = [round(float(stats[n][0]), 1) for n in names]
    verdict(1, f"mean counts {means} agree pairwise within 3 SE "
               f"(worst ratio {worst:.2f}); {elapsed:.1f}s")


def test_criterion_02_goodness_of_fit_closure():
    t0 = time.monotonic()
    truth = bench2()
    rates = {}
    for name, fn in _SIMULATORS:
        passed = 0
        for trial in range(100):
            seq = fn(SimConfig(truth, t_end=100.0, n_sequences=1, rng_seed=trial)).sequences[0]
            out = rescaling_test(truth, seq)
            if out["ks_statistic"] < ks_bound(out["n_transformed"]):
                passed += 1
        rates[name] = passed
        assert passed >= 95, f"{name}: only {passed}/100 trials inside the KS bound"
    elapsed = time.monotonic() - t0
    assert elapsed < 180.0
    verdict(2, f"KS-bound pass counts {rates} out of 100 per simulator; {elapsed:.1f}s")


def test_criterion_03_mle_recovery_and_consistency():
    t0 = time.monotonic()
    truth = HawkesModel(
        mu=np.array([0.5]), kernel=ExponentialKernel(decay=1.0), A=np.array([[0.5]])
    )
    cfg = LearnConfig(max_iters=500, tol=1e-9)

    corpus = simulate_branch(SimConfig(truth, t_end=100.0, n_sequences=200, rng_seed=0))
    err = estimation_error(fit_mle(corpus, ExponentialKernel(decay=1.0), cfg).model, truth)
    assert err["mu_relerr"] < 0.05, err
    assert err["kernel_relerr"] < 0.05, err

    sizes = (10, 40, 160, 640)
    errors = np.zeros((10, len(sizes)))
    for s in range(10):
        big = simulate_branch(
            SimConfig(truth, t_end=100.0, n_sequences=640, rng_seed=100 + s)
        )
        for k, n in enumerate(sizes):
            sub = Corpus(big.sequences[:n], big.dim, big.label_map)
            e = estimation_error(fit_mle(sub, ExponentialKernel(decay=1.0), cfg).model, truth)
            errors[s, k] = e["mu_relerr"] + e["kernel_relerr"]
    means = errors.mean(axis=0)
    rho = scipy.stats.spearmanr(sizes, means).statistic
    assert rho < -0.8, f"seed-averaged error {means} not decreasing (rho={rho})"
    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    verdict(3, f"relerr mu={err['mu_relerr']:.4f} kernel={err['kernel_relerr']:.4f}; "
               f"mean error by size {np.round(means, 4).tolist()} rho={rho:.2f}; {elapsed:.1f}s")


def test_criterion_04_em_monotonicity_battery():
    t0 = time.monotonic()
    rng = np.random.default_rng(42)
    worst = -np.inf
    for case in range(50):
        D = int(rng.integers(1, 4))
        mu = rng.uniform(0.1, 0.8, size=D)
        A = rng.uniform(0.0, 1.0, size=(D, D))
        A *= rng.uniform(0.3, 0.75) / max(np.abs(np.linalg.eigvals(A)).max(), 1e-9)
        decay = float(rng.uniform(0.5, 2.0))
        truth = HawkesModel(mu=mu, kernel=ExponentialKernel(decay=decay), A=A)
        corpus = simulate_branch(
            SimConfig(
                truth,
                t_end=float(rng.uniform(20, 40)),
                n_sequences=int(rng.integers(3, 9)),
                rng_seed=case,
            )
        )
        for kind in ("none", "sparse", "group_sparse", "low_rank"):
            weight = float(10 ** rng.uniform(-2, 0.5))
            cfg = LearnConfig(max_iters=40, tol=1e-12, penalty=Penalty(kind, weight))
            trace = np.asarray(
                fit_mle(corpus, ExponentialKernel(decay=decay), cfg).objective_trace
            )
            if trace.size > 1:
                worst = max(worst, float(np.max(np.diff(trace))))
        res = cluster_mixture(
            corpus,
            2,
            ExponentialKernel(decay=decay),
            LearnConfig(max_iters=12, tol=1e-12, rng_seed=case),
        )
        trace = np.asarray(res.objective_trace)
        if trace.size > 1:
            worst = max(worst, float(np.max(np.diff(trace))))
    assert worst <= 1e-10, f"objective trace increased by {worst:.3e}"
    elapsed = time.monotonic() - t0
    assert elapsed < 180.0
    verdict(4, f"50 models x (4 penalties + mixture): largest trace increase "
               f"{worst:.1e} <= 1e-10; {elapsed:.1f}s")


@pytest.mark.filterwarnings("ignore::hawkeskit.StabilityWarning")
def test_criterion_05_gradient_validation():
    t0 = time.monotonic()
    rng = np.random.default_rng(7)
    worst_rel = 0.0
    for point in range(20):
        D = int(rng.integers(1, 3))
        data_model = HawkesModel(
            mu=rng.uniform(0.2, 0.6, size=D),
            kernel=ExponentialKernel(decay=float(rng.uniform(0.8, 1.5))),
            A=np.full((D, D), 0.4 / D),
        )
        corpus = simulate_branch(
            SimConfig(data_model, t_end=30.0, n_sequences=2, rng_seed=point)
        )
        decay = float(rng.uniform(0.5, 2.0))
        mu = rng.uniform(0.1, 1.0, size=D)
        A = rng.uniform(0.05, 0.8 / D, size=(D, D))
        model = HawkesModel(mu=mu, kernel=ExponentialKernel(decay=decay), A=A)
        _, gmu, gA = exp_nll_and_grad(model, corpus)
        analytic = np.concatenate([gmu, gA.ravel()])

        def nll_at(theta):
            m = HawkesModel(
                mu=theta[:D],
                kernel=ExponentialKernel(decay=decay),
                A=theta[D:].reshape(D, D),
            )
            return exp_nll_and_grad(m, corpus)[0]

        theta = np.concatenate([mu, A.ravel()])
        fd = np.empty_like(theta)
        for i in range(theta.size):
            h = 1e-6 * max(1.0, abs(theta[i]))
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (nll_at(up) - nll_at(dn)) / (2 * h)
        rel = float(np.linalg.norm(analytic - fd) / max(1.0, np.linalg.norm(analytic)))
        worst_rel = max(worst_rel, rel)
        assert rel < 1e-5, f"point {point}: FD mismatch {rel:.2e}"

    truth = HawkesModel(
        mu=np.array([0.4, 0.5]),
        kernel=ExponentialKernel(decay=1.0),
        A=np.array([[0.3, 0.1], [0.15, 0.35]]),
    )
    corpus = simulate_branch(SimConfig(truth, t_end=50.0, n_sequences=5, rng_seed=2))
    rep = fit_mle(corpus, ExponentialKernel(decay=1.0), LearnConfig(max_iters=5000, tol=1e-300))
    _, gmu, gA = exp_nll_and_grad(rep.model, corpus)
    gnorm = float(np.sqrt(np.sum(gmu**2) + np.sum(gA**2)))
    assert gnorm < 1e-4, f"gradient norm at convergence {gnorm:.3e}"
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0
    verdict(5, f"20-point FD agreement (worst rel {worst_rel:.1e} < 1e-5); "
               f"converged gradient norm {gnorm:.1e} < 1e-4; {elapsed:.1f}s")


def test_criterion_06_granger_edge_recovery():
    t0 = time.monotonic()
    A = np.array([[0.3, 0.0, 0.3], [0.0, 0.3, 0.0], [0.0, 0.0, 0.3]])
    truth_adj = A > 0.05
    truth = HawkesModel(
        mu=np.array([0.2, 0.2, 0.2]), kernel=ExponentialKernel(decay=1.0), A=A
    )
    exact = 0
    for seed in range(20):
        corpus = simulate_branch(
            SimConfig(truth, t_end=100.0, n_sequences=400, rng_seed=seed)
        )
        cfg = LearnConfig(max_iters=150, tol=1e-7, penalty=Penalty("sparse", 10.0))
        graph = granger_graph(corpus, ExponentialKernel(decay=1.0), cfg, threshold=0.05)
        exact += bool(np.array_equal(graph.adjacency, truth_adj))
    assert exact >= 18, f"exact edge-set recovery in only {exact}/20 seeds"
    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    verdict(6, f"exact 4-edge recovery in {exact}/20 seeds at threshold 0.05; {elapsed:.1f}s")


def test_criterion_07_two_population_clustering():
    t0 = time.monotonic()

    def population(mu, seed):
        model = HawkesModel(
            mu=np.array([mu]), kernel=ExponentialKernel(decay=1.0), A=np.array([[0.5]])
        )
        return simulate_branch(SimConfig(model, t_end=40.0, n_sequences=100, rng_seed=seed))

    quiet, busy = population(0.2, 70), population(2.0, 71)
    seqs = tuple(
        EventSequence(s.times, s.marks, s.t_start, s.t_end, s.dim, f"s{i}")
        for i, s in enumerate(quiet.sequences + busy.sequences)
    )
    corpus = Corpus(seqs, 1)
    labels = np.array([0] * 100 + [1] * 100)

    mix = cluster_mixture(
        corpus, 2, ExponentialKernel(decay=1.0), LearnConfig(max_iters=60, tol=1e-8, rng_seed=0)
    )
    purity_mix = cluster_purity(mix.assignments, labels)
    assert purity_mix >= 0.9, f"mixture purity {purity_mix}"
    med = cluster_distance(corpus, 2, rng_seed=0)
    purity_med = cluster_purity(med.assignments, labels)
    assert purity_med >= 0.9, f"medoid purity {purity_med}"
    elapsed = time.monotonic() - t0
    assert elapsed < 240.0
    verdict(7, f"purity mixture={purity_mix:.3f} distance={purity_med:.3f} on 100+100 "
               f"sequences; {elapsed:.1f}s")


def test_criterion_08_tvhp_drift_and_stationarity():
    t0 = time.monotonic()
    T = 50.0
    grid = [0.0, T / 3, 2 * T / 3, T]
    cfg = LearnConfig(max_iters=400, tol=1e-10)

    ramp = lambda s: 0.2 + 0.6 * np.asarray(s) / T
    corpus = tv_corpus(mu=1.0, decay=1.0, a_at=ramp, t_end=T, n_sequences=150, seed=0)
    nodes = fit_tvhp(corpus, grid, decay=1.0, cfg=cfg, beta=2.0).model.A[:, 0, 0]
    assert np.all(np.diff(nodes) >= -1e-12), f"node estimates not monotone: {nodes}"
    end_err = max(abs(nodes[0] - 0.2), abs(nodes[-1] - 0.8))
    assert end_err < 0.15, f"endpoint error {end_err:.3f}, nodes {nodes}"

    flat = HawkesModel(
        mu=np.array([0.5]), kernel=ExponentialKernel(decay=1.0), A=np.array([[0.5]])
    )
    stationary = simulate_branch(SimConfig(flat, t_end=T, n_sequences=150, rng_seed=0))

    def variation(c):
        return tvhp_variation(fit_tvhp(c, grid, decay=1.0, cfg=cfg, beta=2.0).model)

    observed = variation(stationary)
    rng = np.random.default_rng(1000)
    edges = np.linspace(0.0, T, 11)
    null = np.array(
        [variation(block_shuffle(stationary, edges, rng)) for _ in range(39)]
    )
    p95 = float(np.percentile(null, 95))
    assert observed < p95, f"stationary variation {observed:.4f} >= null 95th pct {p95:.4f}"
    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    verdict(8, f"ramp nodes {np.round(nodes, 3).tolist()} monotone, endpoint err "
               f"{end_err:.3f} < 0.15; stationary stat {observed:.3f} < null p95 "
               f"{p95:.3f}; {elapsed:.1f}s")


def test_criterion_09_least_squares_accuracy():
    t0 = time.monotonic()
    truth = bench2()
    corpus = simulate_branch(SimConfig(truth, t_end=100.0, n_sequences=400, rng_seed=0))
    ls = fit_ls(corpus, 0.25, 20, ridge=1e-3)
    mle = fit_mle(corpus, ExponentialKernel(decay=1.0), LearnConfig(max_iters=400, tol=1e-9))
    B_ls = branching_matrix(ls.model)
    d_truth = float(np.linalg.norm(B_ls - branching_matrix(truth)))
    d_mle = float(np.linalg.norm(B_ls - branching_matrix(mle.model)))
    assert d_truth < 0.1, f"LS vs truth Frobenius {d_truth:.4f}"
    assert d_mle < 0.1, f"LS vs MLE Frobenius {d_mle:.4f}"
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    verdict(9, f"LS branching within {d_truth:.3f} of truth and {d_mle:.3f} of MLE; "
               f"{elapsed:.1f}s")


def test_criterion_10_determinism_and_formats(tmp_path):
    t0 = time.monotonic()

    # byte-identical demo trees
    d1, d2 = str(tmp_path / "run1"), str(tmp_path / "run2")
    assert cli_main(["demo", "--out", d1, "--seed", "0"]) == 0
    assert cli_main(["demo", "--out", d2, "--seed", "0"]) == 0
    names = sorted(os.listdir(d1))
    assert names == sorted(os.listdir(d2))
    match, mismatch, errors = filecmp.cmpfiles(d1, d2, names, shallow=False)
    assert mismatch == [] and errors == [], (mismatch, errors)

    # every output parses, and re-serializing gives back the same bytes
    def rt(name, loader, saver=None):
        path = os.path.join(d1, name)
        obj = loader(path)
        if saver is not None:
            again = str(tmp_path / ("rt_" + name))
            saver(obj, again)
            assert open(again, "rb").read() == open(path, "rb").read(), name
        return obj

    for corpus_name in ("demo_path.json", "demo_train.json", "demo_test.json"):
        rt(corpus_name, load_corpus, save_corpus)
    for model_name in ("truth_model.json", "model_mle.json", "model_ls.json"):
        rt(model_name, load_model, save_model)
    rt("granger.json", load_granger, save_granger)
    rt("benchmark.csv", read_benchmark_csv, write_benchmark_csv)
    rt("compare.csv", read_compare_csv, write_compare_csv)
    ids, mat = load_distance_csv(os.path.join(d1, "distance.csv"))
    again = str(tmp_path / "rt_distance.csv")
    save_distance_csv(mat, ids, again)
    assert open(again).read() == open(os.path.join(d1, "distance.csv")).read()
    tv_model = load_tvhp(os.path.join(d1, "tvhp.json"))
    grid, A = load_tvhp_csv(os.path.join(d1, "tvhp.csv"))
    np.testing.assert_array_equal(grid, tv_model.grid)
    np.testing.assert_array_equal(A, tv_model.A)
    nodes, edges = load_granger_dot(os.path.join(d1, "granger.dot"))
    g = load_granger(os.path.join(d1, "granger.json"))
    assert len(nodes) == g.dim
    assert set(edges) == {
        (str(v), str(u)) for v in range(2) for u in range(2) if g.adjacency[v, u]
    }
    for csv_name, header in (
        ("intensity.csv", ["seq_id", "t", "u", "lambda"]),
        ("kernel_curves.csv", ["lag", "v", "u", "truth", "mle", "ls"]),
        ("consistency.csv", ["n_sequences", "mu_relerr", "kernel_relerr"]),
    ):
        got, rows = read_csv_rows(os.path.join(d1, csv_name))
        assert got == header and rows, csv_name
    manifest = json.load(open(os.path.join(d1, "manifest.json")))
    assert sorted(manifest["panels"]) == list("abcdefgh")

    # exit-code matrix
    model_path = os.path.join(d1, "truth_model.json")
    train_path = os.path.join(d1, "demo_train.json")
    missing = str(tmp_path / "no_such_file.json")
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{")
    bad_cfg = tmp_path / "bad_cfg.json"
    bad_cfg.write_text(json.dumps({"definitely_not_a_flag": 1}))
    out = lambda n: str(tmp_path / n)
    matrix = [
        (["simulate", "--model", model_path, "--t-end", "5", "--out", out("ok.json")], 0),
        (["simulate", "--model", missing, "--t-end", "5", "--out", out("x1.json")], 2),
        (["simulate", "--model", str(garbled), "--t-end", "5", "--out", out("x2.json")], 2),
        (["simulate", "--model", model_path, "--t-end", "-1", "--out", out("x3.json")], 2),
        (["simulate", "--model", model_path, "--t-end", "5",
          "--config", str(bad_cfg), "--out", out("x4.json")], 2),
        (["fit", "--data", train_path, "--learner", "mle", "--kernel", "grid",
          "--out", out("x5.json")], 2),
        (["fit", "--data", train_path, "--learner", "ls", "--kernel", "grid",
          "--penalty", "sparse", "--out", out("x6.json")], 2),
        (["simulate", "--model", model_path, "--t-end", "500", "--max-events", "10",
          "--out", out("x7.json")], 3),
    ]
    for argv, expected in matrix:
        assert cli_main(argv) == expected, argv
    elapsed = time.monotonic() - t0
    assert elapsed < 360.0
    verdict(10, f"demo trees byte-identical, {len(names)} files round-trip, "
                f"{len(matrix)}-case exit-code matrix holds; {elapsed:.1f}s")

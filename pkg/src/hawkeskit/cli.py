"""Batch command-line interface.

Every command reads files, computes, writes files, and exits; outputs are
plot-ready data (CSV/JSON/DOT), never rendered images.  All outputs are
byte-deterministic given --seed: report files carry wall_time_s as 0.0
except `benchmark`, whose point is timing (pass --deterministic-timing
there to pin it too).

Exit codes: 0 success, 2 usage or input validation, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ._util import atomic_write_text, dump_json, load_json
from .analyze import (
    DistanceParams,
    cluster_distance,
    cluster_mixture,
    distance_matrix,
    fit_tvhp,
    granger_graph,
    save_distance_csv,
    save_granger,
    save_granger_dot,
    save_tvhp,
    save_tvhp_csv,
)
from .core import (
    DiscretizedKernel,
    ExponentialKernel,
    GaussianBasisKernel,
    HawkesError,
    HawkesModel,
    UnsupportedKernelError,
    ValidationError,
    intensity_profile,
    kernel_lag_averages,
)
from .data import (
    Corpus,
    FormatError,
    ParseError,
    SchemaError,
    load_corpus,
    load_csv,
    load_model,
    save_corpus,
    save_model,
)
from .evaluate import compare_learners, write_compare_csv
from .learn import LearnConfig, Penalty, estimation_error, fit_ls, fit_mle, fit_mle_ode
from .simulate import (
    SimConfig,
    _METHODS,
    benchmark_simulators,
    simulate_branch,
    write_benchmark_csv,
)

_USAGE_ERRORS = (
    ValidationError,
    SchemaError,
    ParseError,
    FormatError,
    UnsupportedKernelError,
)

_PENALTY_BY_FLAG = {
    "none": "none",
    "sparse": "sparse",
    "group": "group_sparse",
    "lowrank": "low_rank",
}

# Built-in defaults, applied after CLI flags and any --config file.
_COMMON_DEFAULTS = {
    "seed": 0,
    "threads": None,
    "config": None,
}
_KERNEL_DEFAULTS = {
    "kernel": "exp",
    "decay": 1.0,
    "centers": "0.5,1.5,3.0",
    "bandwidth": 0.5,
    "support": 10.0,
    "dt": 0.25,
    "n_lags": 20,
}
_LEARN_DEFAULTS = {
    "penalty": "none",
    "weight": 0.1,
    "max_iters": 200,
    "tol": 1e-6,
}
_DEFAULTS = {
    "simulate": {
        **_COMMON_DEFAULTS,
        "method": "branch",
        "n": 1,
        "max_events": 1_000_000,
        "intensity_grid": None,
        "intensity_out": None,
    },
    "fit": {
        **_COMMON_DEFAULTS,
        **_KERNEL_DEFAULTS,
        **_LEARN_DEFAULTS,
        "learner": "mle",
        "ridge": 0.0,
        "alpha": 10.0,
        "report": None,
    },
    "granger": {
        **_COMMON_DEFAULTS,
        **_KERNEL_DEFAULTS,
        **_LEARN_DEFAULTS,
        "threshold": 0.01,
        "dot": None,
    },
    "cluster": {
        **_COMMON_DEFAULTS,
        **_KERNEL_DEFAULTS,
        **_LEARN_DEFAULTS,
        "method": "mixture",
        "time_cost": 1.0,
        "mark_cost": 1.0,
        "indel_cost": 1.0,
    },
    "distance": {
        **_COMMON_DEFAULTS,
        "time_cost": 1.0,
        "mark_cost": 1.0,
        "indel_cost": 1.0,
    },
    "tvhp": {
        **_COMMON_DEFAULTS,
        "decay": 1.0,
        "beta": 1.0,
        "max_iters": 200,
        "tol": 1e-6,
        "csv": None,
    },
    "eval": {
        **_COMMON_DEFAULTS,
        **_KERNEL_DEFAULTS,
        **_LEARN_DEFAULTS,
        "learners": "mle",
        "ridge": 1e-3,
        "alpha": 10.0,
        "truth": None,
        "real_timing": False,
    },
    "benchmark": {
        **_COMMON_DEFAULTS,
        "methods": "branch,ogata,exact-exp",
        "n": 1,
        "max_events": 1_000_000,
        "deterministic_timing": False,
    },
    "demo": {**_COMMON_DEFAULTS},
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hawkeskit",
        description="Simulate, fit, and analyze mutually exciting event streams.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
        sp.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker cap; defaults to HAWKESKIT_THREADS (recorded, operations are vectorized)",
        )
        sp.add_argument("--config", default=None, help="JSON file of flag defaults")

    def kernel_flags(sp):
        sp.add_argument("--kernel", choices=["exp", "basis", "grid"], default=None)
        sp.add_argument("--decay", type=float, default=None, help="exp kernel decay rate")
        sp.add_argument("--centers", default=None, help="comma list of basis centers")
        sp.add_argument("--bandwidth", type=float, default=None, help="basis width")
        sp.add_argument("--support", type=float, default=None, help="basis truncation lag")
        sp.add_argument("--dt", type=float, default=None, help="grid kernel lag width")
        sp.add_argument("--n-lags", type=int, default=None, help="grid kernel lag count")

    def learn_flags(sp):
        sp.add_argument(
            "--penalty", choices=sorted(_PENALTY_BY_FLAG), default=None
        )
        sp.add_argument("--weight", type=float, default=None, help="penalty weight")
        sp.add_argument("--max-iters", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("simulate", help="draw sequences from a model file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--method", choices=sorted(_METHODS), default=None)
    sp.add_argument("--t-end", type=float, required=True)
    sp.add_argument("--n", type=int, default=None, help="number of sequences")
    sp.add_argument("--max-events", type=int, default=None)
    sp.add_argument("--out", required=True, help="corpus JSON destination")
    sp.add_argument(
        "--intensity-grid",
        type=float,
        default=None,
        help="also sample intensities every STEP time units to CSV",
    )
    sp.add_argument(
        "--intensity-out", default=None, help="intensity CSV path (default OUT.intensity.csv)"
    )
    common(sp)

    sp = sub.add_parser("fit", help="estimate a model from a corpus")
    sp.add_argument("--data", required=True)
    sp.add_argument("--learner", choices=["mle", "mle-ode", "ls"], default=None)
    kernel_flags(sp)
    learn_flags(sp)
    sp.add_argument("--ridge", type=float, default=None, help="ls regularizer")
    sp.add_argument("--alpha", type=float, default=None, help="mle-ode curvature weight")
    sp.add_argument("--out", required=True, help="model JSON destination")
    sp.add_argument("--report", default=None, help="fit report JSON destination")
    common(sp)

    sp = sub.add_parser("granger", help="threshold the fitted branching matrix")
    sp.add_argument("--data", required=True)
    kernel_flags(sp)
    learn_flags(sp)
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--out", required=True, help="graph JSON destination")
    sp.add_argument("--dot", default=None, help="optional DOT destination")
    common(sp)

    sp = sub.add_parser("cluster", help="group sequences by model or by distance")
    sp.add_argument("--data", required=True)
    sp.add_argument("--method", choices=["mixture", "distance"], default=None)
    sp.add_argument("--k", type=int, required=True)
    kernel_flags(sp)
    learn_flags(sp)
    sp.add_argument("--time-cost", type=float, default=None)
    sp.add_argument("--mark-cost", type=float, default=None)
    sp.add_argument("--indel-cost", type=float, default=None)
    sp.add_argument("--out", required=True, help="clustering JSON destination")
    common(sp)

    sp = sub.add_parser("distance", help="pairwise alignment distance matrix")
    sp.add_argument("--data", required=True)
    sp.add_argument("--time-cost", type=float, default=None)
    sp.add_argument("--mark-cost", type=float, default=None)
    sp.add_argument("--indel-cost", type=float, default=None)
    sp.add_argument("--out", required=True, help="distance CSV destination")
    common(sp)

    sp = sub.add_parser("tvhp", help="fit node infectivities over a time grid")
    sp.add_argument("--data", required=True)
    sp.add_argument("--grid", required=True, help="comma list of node times")
    sp.add_argument("--decay", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None, help="drift penalty weight")
    sp.add_argument("--max-iters", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--out", required=True, help="model JSON destination")
    sp.add_argument("--csv", default=None, help="optional long-form CSV destination")
    common(sp)

    sp = sub.add_parser("eval", help="fit on train, score learners on test")
    sp.add_argument("--train", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--learners", default=None, help="comma list from {mle,mle-ode,ls}")
    kernel_flags(sp)
    learn_flags(sp)
    sp.add_argument("--ridge", type=float, default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--truth", default=None, help="reference model JSON for error columns")
    sp.add_argument("--real-timing", action="store_true", default=None)
    sp.add_argument("--out", required=True, help="comparison CSV destination")
    common(sp)

    sp = sub.add_parser("benchmark", help="time each simulator over horizons")
    sp.add_argument("--model", required=True)
    sp.add_argument("--horizons", required=True, help="comma list of end times")
    sp.add_argument("--methods", default=None, help="comma list of simulator names")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--max-events", type=int, default=None)
    sp.add_argument(
        "--deterministic-timing",
        action="store_true",
        default=None,
        help="write 0.0 timings for byte-stable output",
    )
    sp.add_argument("--out", required=True, help="benchmark CSV destination")
    common(sp)

    sp = sub.add_parser("demo", help="run the fixed end-to-end showcase pipeline")
    sp.add_argument("--out", required=True, help="output directory")
    common(sp)

    return p


def _resolve(args: argparse.Namespace) -> dict:
    """Apply precedence CLI flag > config file > built-in default."""
    values = dict(vars(args))
    command = values.pop("command")
    defaults = _DEFAULTS[command]
    config = {}
    if values.get("config"):
        try:
            loaded = load_json(values["config"])
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise FormatError("config file must hold a JSON object")
        config = loaded
    unknown = set(config) - set(values)
    if unknown:
        raise ValidationError(
            f"config keys not recognized for {command!r}: {sorted(unknown)}"
        )
    resolved = {"command": command}
    for key, val in values.items():
        if val is None and key in config:
            val = config[key]
        if val is None and key in defaults:
            val = defaults[key]
        resolved[key] = val
    if resolved.get("threads") is None:
        env = os.environ.get("HAWKESKIT_THREADS")
        resolved["threads"] = int(env) if env else 1
    return resolved


def _echoable(resolved: dict) -> dict:
    return {k: v for k, v in sorted(resolved.items()) if k != "config"}


def _read_corpus(path: str) -> Corpus:
    try:
        if path.endswith(".csv"):
            return load_csv(path)
        return load_corpus(path)
    except OSError as exc:
        raise ValidationError(f"cannot read corpus {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc


def _read_model(path: str) -> HawkesModel:
    try:
        return load_model(path)
    except OSError as exc:
        raise ValidationError(f"cannot read model {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        vals = [float(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"{flag} expects comma-separated numbers: {exc}") from exc
    if not vals:
        raise ValidationError(f"{flag} must list at least one number")
    return vals


def _kernel_from(r: dict):
    kind = r["kernel"]
    if kind == "exp":
        return ExponentialKernel(decay=r["decay"])
    if kind == "basis":
        centers = _parse_float_list(r["centers"], "--centers")
        return GaussianBasisKernel(
            centers=np.asarray(centers), bandwidth=r["bandwidth"], support=r["support"]
        )
    if kind == "grid":
        return DiscretizedKernel(dt=r["dt"], n_lags=r["n_lags"])
    raise ValidationError(f"unknown kernel {kind!r}")


def _learn_cfg(r: dict) -> LearnConfig:
    return LearnConfig(
        max_iters=r["max_iters"],
        tol=r["tol"],
        penalty=Penalty(_PENALTY_BY_FLAG[r["penalty"]], r["weight"]),
        rng_seed=r["seed"],
    )


def _node_labels(corpus: Corpus) -> list[str] | None:
    if corpus.label_map is None:
        return None
    inverse = [""] * corpus.dim
    for name, idx in corpus.label_map.items():
        inverse[idx] = str(name)
    return inverse


def _write_intensity_csv(model: HawkesModel, corpus: Corpus, step: float, path: str):
    if step <= 0:
        raise ValidationError(f"--intensity-grid must be > 0, got {step}")
    lines = ["seq_id,t,u,lambda"]
    for seq in corpus:
        n_steps = int(np.floor((seq.t_end - seq.t_start) / step + 1e-9))
        ts = seq.t_start + step * np.arange(n_steps + 1)
        prof = intensity_profile(model, seq, ts)
        for i, t in enumerate(ts):
            for u in range(model.dim):
                lines.append(f"{seq.id},{float(t)!r},{u},{float(prof[i, u])!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _cmd_simulate(r: dict) -> int:
    if r["method"] not in _METHODS:
        raise ValidationError(
            f"unknown method {r['method']!r}; valid: {sorted(_METHODS)}"
        )
    model = _read_model(r["model"])
    cfg = SimConfig(
        model=model,
        t_end=r["t_end"],
        n_sequences=r["n"],
        rng_seed=r["seed"],
        max_events=r["max_events"],
    )
    corpus = _METHODS[r["method"]](cfg)
    save_corpus(corpus, r["out"])
    if r["intensity_grid"] is not None:
        out = r["intensity_out"] or r["out"] + ".intensity.csv"
        _write_intensity_csv(model, corpus, float(r["intensity_grid"]), out)
    return 0


def _fit_report_doc(report, resolved: dict) -> dict:
    return {
        "converged": bool(report.converged),
        "iterations": int(report.iterations),
        "objective_trace": [float(x) for x in report.objective_trace],
        "wall_time_s": 0.0,
        "details": {k: _json_safe(v) for k, v in report.details.items()},
        "config": _echoable(resolved),
    }


def _json_safe(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _run_fit(r: dict, corpus: Corpus):
    learner = r["learner"]
    if learner == "mle":
        if r["kernel"] == "grid":
            raise ValidationError(
                "direct EM needs --kernel exp or basis; "
                "use --learner mle-ode or ls for grid kernels"
            )
        return fit_mle(corpus, _kernel_from(r), _learn_cfg(r))
    if learner == "mle-ode":
        if r["kernel"] not in (None, "grid"):
            raise ValidationError("mle-ode fits a lag-grid kernel; pass --kernel grid")
        cfg = LearnConfig(max_iters=r["max_iters"], tol=r["tol"], rng_seed=r["seed"])
        if r["penalty"] != "none":
            raise ValidationError(
                "mle-ode has its own curvature penalty (--alpha); --penalty must be none"
            )
        return fit_mle_ode(corpus, r["dt"], r["n_lags"], cfg, alpha=r["alpha"])
    if learner == "ls":
        if r["kernel"] not in (None, "grid"):
            raise ValidationError("ls fits a lag-grid kernel; pass --kernel grid")
        cfg = LearnConfig(max_iters=r["max_iters"], tol=r["tol"], rng_seed=r["seed"])
        if r["penalty"] != "none":
            raise ValidationError("ls supports only --ridge; --penalty must be none")
        return fit_ls(corpus, r["dt"], r["n_lags"], ridge=r["ridge"], cfg=cfg)
    raise ValidationError(f"unknown learner {learner!r}")


def _cmd_fit(r: dict) -> int:
    corpus = _read_corpus(r["data"])
    report = _run_fit(r, corpus)
    save_model(report.model, r["out"])
    if r["report"]:
        dump_json(_fit_report_doc(report, r), r["report"])
    return 0


def _cmd_granger(r: dict) -> int:
    corpus = _read_corpus(r["data"])
    graph = granger_graph(
        corpus, _kernel_from(r), _learn_cfg(r), threshold=r["threshold"]
    )
    save_granger(graph, r["out"])
    if r["dot"]:
        save_granger_dot(graph, r["dot"], labels=_node_labels(corpus))
    return 0


def _distance_params(r: dict) -> DistanceParams:
    return DistanceParams(
        time_cost=r["time_cost"],
        mark_mismatch_cost=r["mark_cost"],
        indel_cost=r["indel_cost"],
    )


def _cmd_cluster(r: dict) -> int:
    corpus = _read_corpus(r["data"])
    if r["method"] == "mixture":
        res = cluster_mixture(corpus, r["k"], _kernel_from(r), _learn_cfg(r))
    else:
        res = cluster_distance(
            corpus, r["k"], _distance_params(r), rng_seed=r["seed"]
        )
    doc = {
        "method": r["method"],
        "K": int(res.K),
        "assignments": [int(x) for x in res.assignments],
        "mixing": [float(x) for x in res.mixing],
        "responsibilities": [[float(x) for x in row] for row in res.responsibilities],
        "medoids": None if res.medoids is None else [int(i) for i in res.medoids],
        "objective_trace": [float(x) for x in res.objective_trace],
        "sequence_ids": [seq.id for seq in corpus],
        "config": _echoable(r),
    }
    dump_json(doc, r["out"])
    return 0


def _cmd_distance(r: dict) -> int:
    corpus = _read_corpus(r["data"])
    mat = distance_matrix(corpus, _distance_params(r))
    save_distance_csv(mat, [seq.id for seq in corpus], r["out"])
    return 0


def _cmd_tvhp(r: dict) -> int:
    corpus = _read_corpus(r["data"])
    grid = _parse_float_list(r["grid"], "--grid")
    cfg = LearnConfig(max_iters=r["max_iters"], tol=r["tol"], rng_seed=r["seed"])
    fit = fit_tvhp(corpus, grid, decay=r["decay"], cfg=cfg, beta=r["beta"])
    save_tvhp(fit.model, r["out"])
    if r["csv"]:
        save_tvhp_csv(fit.model, r["csv"])
    return 0


def _eval_specs(r: dict):
    specs = []
    for name in str(r["learners"]).split(","):
        name = name.strip()
        if name == "mle":
            kernel = _kernel_from({**r, "kernel": "exp" if r["kernel"] == "grid" else r["kernel"]})
            cfg = _learn_cfg(r)
            specs.append((name, lambda c, k=kernel, g=cfg: fit_mle(c, k, g)))
        elif name == "mle-ode":
            cfg = LearnConfig(max_iters=r["max_iters"], tol=r["tol"], rng_seed=r["seed"])
            specs.append(
                (name, lambda c, g=cfg: fit_mle_ode(c, r["dt"], r["n_lags"], g, alpha=r["alpha"]))
            )
        elif name == "ls":
            cfg = LearnConfig(max_iters=r["max_iters"], tol=r["tol"], rng_seed=r["seed"])
            specs.append(
                (name, lambda c, g=cfg: fit_ls(c, r["dt"], r["n_lags"], ridge=r["ridge"], cfg=g))
            )
        else:
            raise ValidationError(f"unknown learner {name!r} in --learners")
    if not specs:
        raise ValidationError("--learners must name at least one learner")
    return specs


def _cmd_eval(r: dict) -> int:
    train = _read_corpus(r["train"])
    test = _read_corpus(r["test"])
    truth = _read_model(r["truth"]) if r["truth"] else None
    rows = compare_learners(
        train, test, _eval_specs(r), truth=truth, real_timing=bool(r["real_timing"])
    )
    write_compare_csv(rows, r["out"])
    return 0


def _cmd_benchmark(r: dict) -> int:
    model = _read_model(r["model"])
    horizons = _parse_float_list(r["horizons"], "--horizons")
    methods = tuple(m.strip() for m in str(r["methods"]).split(",") if m.strip())
    rows = benchmark_simulators(
        model,
        horizons,
        rng_seed=r["seed"],
        n_sequences=r["n"],
        max_events=r["max_events"],
        methods=methods,
        real_timing=not bool(r["deterministic_timing"]),
    )
    write_benchmark_csv(rows, r["out"])
    return 0


def _cmd_demo(r: dict) -> int:
    echo = {k: v for k, v in _echoable(r).items() if k != "out"}
    run_demo(r["out"], r["seed"], echo)
    return 0


def run_demo(out_dir: str, seed: int, config_echo: dict | None = None) -> dict:
    """Fixed showcase pipeline; returns the manifest that was written.

    Eight plot-data panels: (a) intensity paths, (b) simulator scaling,
    (c) kernel curves, (d) error vs corpus size, (e) learner comparison,
    (f) excitation graph, (g) drifting infectivity, (h) pairwise distances.
    Deterministic given seed; every timing field is pinned to 0.0.
    """
    os.makedirs(out_dir, exist_ok=True)
    join = lambda name: os.path.join(out_dir, name)

    truth = HawkesModel(
        mu=np.array([0.3, 0.6]),
        kernel=ExponentialKernel(decay=1.0),
        A=np.array([[0.4, 0.1], [0.2, 0.3]]),
    )
    save_model(truth, join("truth_model.json"))

    # (a) one path plus its intensity samples
    show = simulate_branch(SimConfig(truth, t_end=40.0, n_sequences=1, rng_seed=seed))
    save_corpus(show, join("demo_path.json"))
    _write_intensity_csv(truth, show, 0.25, join("intensity.csv"))

    # (b) simulator scaling table (timings pinned for byte-stable output)
    rows = benchmark_simulators(
        truth, [25.0, 50.0, 100.0], rng_seed=seed, real_timing=False
    )
    write_benchmark_csv(rows, join("benchmark.csv"))

    # training corpus shared by the learner panels
    train = simulate_branch(
        SimConfig(truth, t_end=50.0, n_sequences=60, rng_seed=seed + 1)
    )
    save_corpus(train, join("demo_train.json"))
    test = simulate_branch(
        SimConfig(truth, t_end=50.0, n_sequences=20, rng_seed=seed + 2)
    )
    save_corpus(test, join("demo_test.json"))

    cfg = LearnConfig(max_iters=150, tol=1e-7, rng_seed=seed)
    mle_report = fit_mle(train, ExponentialKernel(decay=1.0), cfg)
    save_model(mle_report.model, join("model_mle.json"))
    ls_report = fit_ls(train, 0.25, 20, ridge=1e-3, cfg=cfg)
    save_model(ls_report.model, join("model_ls.json"))

    # (c) per-bin kernel averages: truth vs both fitted shapes
    lag_dt, lag_n = 0.25, 20
    curves = {
        "truth": kernel_lag_averages(truth, lag_dt, lag_n),
        "mle": kernel_lag_averages(mle_report.model, lag_dt, lag_n),
        "ls": kernel_lag_averages(ls_report.model, lag_dt, lag_n),
    }
    lines = ["lag,v,u,truth,mle,ls"]
    for k in range(lag_n):
        lag = (k + 0.5) * lag_dt
        for v in range(2):
            for u in range(2):
                lines.append(
                    f"{lag!r},{v},{u},"
                    f"{float(curves['truth'][k, v, u])!r},"
                    f"{float(curves['mle'][k, v, u])!r},"
                    f"{float(curves['ls'][k, v, u])!r}"
                )
    atomic_write_text(join("kernel_curves.csv"), "\n".join(lines) + "\n")

    # (d) estimation error shrinking with corpus size
    lines = ["n_sequences,mu_relerr,kernel_relerr"]
    for n_seq in (10, 20, 40):
        sub = Corpus(train.sequences[:n_seq], train.dim, train.label_map)
        rep = fit_mle(sub, ExponentialKernel(decay=1.0), cfg)
        err = estimation_error(rep.model, truth)
        lines.append(
            f"{n_seq},{err['mu_relerr']:.12g},{err['kernel_relerr']:.12g}"
        )
    atomic_write_text(join("consistency.csv"), "\n".join(lines) + "\n")

    # (e) learners side by side on held-out data
    specs = [
        ("mle", lambda c: fit_mle(c, ExponentialKernel(decay=1.0), cfg)),
        ("mle-ode", lambda c: fit_mle_ode(c, 0.25, 20, cfg, alpha=10.0)),
        ("ls", lambda c: fit_ls(c, 0.25, 20, ridge=1e-3, cfg=cfg)),
    ]
    rows = compare_learners(train, test, specs, truth=truth, real_timing=False)
    write_compare_csv(rows, join("compare.csv"))

    # (f) excitation graph from a sparse fit
    graph = granger_graph(
        train,
        ExponentialKernel(decay=1.0),
        LearnConfig(max_iters=150, tol=1e-7, penalty=Penalty("sparse", 1.0), rng_seed=seed),
        threshold=0.01,
    )
    save_granger(graph, join("granger.json"))
    save_granger_dot(graph, join("granger.dot"))

    # (g) infectivity drift over the observation window
    tv = fit_tvhp(
        train,
        [0.0, 12.5, 25.0, 37.5, 50.0],
        decay=1.0,
        cfg=LearnConfig(max_iters=60, tol=1e-7, rng_seed=seed),
        beta=2.0,
    )
    save_tvhp(tv.model, join("tvhp.json"))
    save_tvhp_csv(tv.model, join("tvhp.csv"))

    # (h) alignment distances + a distance-based clustering
    small = Corpus(train.sequences[:25], train.dim, train.label_map)
    mat = distance_matrix(small)
    save_distance_csv(mat, [seq.id for seq in small], join("distance.csv"))
    clus = cluster_distance(small, 2, rng_seed=seed)
    dump_json(
        {
            "method": "distance",
            "K": 2,
            "assignments": [int(x) for x in clus.assignments],
            "mixing": [float(x) for x in clus.mixing],
            "medoids": [int(i) for i in clus.medoids],
            "sequence_ids": [seq.id for seq in small],
        },
        join("cluster.json"),
    )

    manifest = {
        "seed": int(seed),
        "panels": {
            "a": "intensity.csv",
            "b": "benchmark.csv",
            "c": "kernel_curves.csv",
            "d": "consistency.csv",
            "e": "compare.csv",
            "f": "granger.dot",
            "g": "tvhp.csv",
            "h": "distance.csv",
        },
        "config": config_echo or {},
    }
    dump_json(manifest, join("manifest.json"))
    return manifest


_DISPATCH = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "granger": _cmd_granger,
    "cluster": _cmd_cluster,
    "distance": _cmd_distance,
    "tvhp": _cmd_tvhp,
    "eval": _cmd_eval,
    "benchmark": _cmd_benchmark,
    "demo": _cmd_demo,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = _resolve(args)
        return _DISPATCH[resolved["command"]](resolved)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HawkesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # no other exit codes: everything else is a 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

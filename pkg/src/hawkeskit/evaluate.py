"""Model assessment: held-out likelihood, residual goodness of fit, and
side-by-side learner comparison tables.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ._util import atomic_write_text, read_csv_rows
from .core import (
    EventSequence,
    HawkesError,
    HawkesModel,
    ValidationError,
    compensator,
    log_likelihood,
)
from .data import Corpus
from .learn import estimation_error


def heldout_loglik(model: HawkesModel, corpus: Corpus) -> dict:
    """Exact log-likelihood of held-out data under a fitted model.

    per_event divides by the total event count; a sequence containing an
    event the model gives zero intensity sends the total to -inf and flips
    the undefined flag.
    """
    per_seq = tuple(log_likelihood(model, seq) for seq in corpus)
    total = math.fsum(per_seq) if per_seq else 0.0
    n_events = corpus.n_events
    per_event = total / n_events if n_events else 0.0
    return {
        "total": total,
        "per_event": per_event,
        "per_sequence": per_seq,
        "undefined": not math.isfinite(total),
    }


def _ks_exp1(x: np.ndarray) -> float:
    """Exact one-sample Kolmogorov statistic of x against the unit exponential."""
    n = x.size
    z = np.sort(1.0 - np.exp(-x))
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - z))
    d_minus = float(np.max(z - (grid - 1.0 / n)))
    return max(d_plus, d_minus, 0.0)


def rescaling_test(model: HawkesModel, seq: EventSequence) -> dict:
    """Time-rescaling residual test.

    For each dimension, integrated-intensity increments between that
    dimension's consecutive events are unit exponential when the model is
    the true generator.  Increments are pooled across dimensions and
    compared to Exp(1) with the exact KS statistic.
    """
    if model.dim != seq.dim:
        raise ValidationError(f"model dim {model.dim} != sequence dim {seq.dim}")
    increments = []
    for u in range(model.dim):
        t_u = seq.times[seq.marks == u]
        prev = seq.t_start
        for t in t_u:
            increments.append(compensator(model, seq, u, prev, float(t)))
            prev = float(t)
    n = len(increments)
    if n == 0:
        return {"ks_statistic": 0.0, "n_transformed": 0}
    return {
        "ks_statistic": _ks_exp1(np.asarray(increments)),
        "n_transformed": n,
    }


def ks_bound(n: int) -> float:
    """Acceptance envelope for the pooled residual KS statistic."""
    if n <= 0:
        return float("inf")
    return 1.36 / math.sqrt(n) + 0.01


_COMPARE_HEADER = [
    "name",
    "per_event_ll",
    "mu_relerr",
    "kernel_relerr",
    "wall_time_s",
    "iterations",
    "error",
]


def compare_learners(
    corpus_train: Corpus,
    corpus_test: Corpus,
    specs,
    truth: HawkesModel | None = None,
    real_timing: bool = False,
) -> list[dict]:
    """Fit each (name, fit_fn) pair on train, score on test, one row per pair.

    fit_fn takes the training corpus and returns a FitReport.  A learner
    raising a package error gets its name in the error column and the run
    continues; other exceptions propagate.  With real_timing=False the
    timing column is fixed at 0.0 so emitted tables are byte-stable.
    """
    rows = []
    for name, fit_fn in specs:
        row = {
            "name": name,
            "per_event_ll": None,
            "mu_relerr": None,
            "kernel_relerr": None,
            "wall_time_s": 0.0,
            "iterations": None,
            "error": "",
        }
        start = time.perf_counter()
        try:
            report = fit_fn(corpus_train)
        except HawkesError as exc:
            row["error"] = type(exc).__name__
            rows.append(row)
            continue
        if real_timing:
            row["wall_time_s"] = time.perf_counter() - start
        row["iterations"] = report.iterations
        row["per_event_ll"] = heldout_loglik(report.model, corpus_test)["per_event"]
        if truth is not None:
            err = estimation_error(report.model, truth)
            row["mu_relerr"] = err["mu_relerr"]
            row["kernel_relerr"] = err["kernel_relerr"]
        rows.append(row)
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_compare_csv(rows: list[dict], path: str) -> None:
    lines = [",".join(_COMPARE_HEADER)]
    for r in rows:
        lines.append(",".join(_cell(r[k]) for k in _COMPARE_HEADER))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_compare_csv(path: str) -> list[dict]:
    header, raw = read_csv_rows(path)
    if header != _COMPARE_HEADER:
        raise ValidationError(f"{path}: unexpected comparison header {header}")
    rows = []
    for cells in raw:
        rec = dict(zip(header, cells))
        for key in ("per_event_ll", "mu_relerr", "kernel_relerr", "wall_time_s"):
            rec[key] = float(rec[key]) if rec[key] != "" else None
        rec["iterations"] = int(rec["iterations"]) if rec["iterations"] != "" else None
        rows.append(rec)
    return rows

"""Analysis tools: excitation-graph extraction, sequence clustering by
mixture models and by pairwise alignment distance, and a model whose
infectivity drifts along the observation axis.
"""

from __future__ import annotations

import math
import re
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._util import atomic_write_text, dump_json, load_json, make_rng
from .core import (
    DiscretizedKernel,
    EventSequence,
    ExponentialKernel,
    HawkesModel,
    KernelSpec,
    ValidationError,
    branching_matrix,
    exp_weighted_excitation,
)
from .data import Corpus, FormatError
from .learn import (
    LearnConfig,
    _Converge,
    _EmStats,
    _fit_from_stats,
    _first_diff_gram,
    _penalized_newton,
    _penalty_value,
    _stable_sum,
    fit_mle,
    fit_mle_ode,
)


@dataclass(frozen=True, eq=False)
class GrangerGraph:
    """Thresholded excitation structure: edge v->u iff infectivity exceeds it."""

    infectivity: np.ndarray
    adjacency: np.ndarray
    threshold: float

    def __post_init__(self):
        inf = np.asarray(self.infectivity, dtype=np.float64)
        adj = np.asarray(self.adjacency, dtype=bool)
        inf.setflags(write=False)
        adj.setflags(write=False)
        object.__setattr__(self, "infectivity", inf)
        object.__setattr__(self, "adjacency", adj)
        if inf.ndim != 2 or inf.shape[0] != inf.shape[1]:
            raise ValidationError("infectivity must be a square matrix")
        if adj.shape != inf.shape:
            raise ValidationError("adjacency shape must match infectivity")
        if np.any(inf < 0):
            raise ValidationError("infectivity entries must be >= 0")
        if not np.array_equal(adj, inf > self.threshold):
            raise ValidationError("adjacency must equal infectivity > threshold")

    @property
    def dim(self) -> int:
        return int(self.infectivity.shape[0])


def granger_graph(
    corpus: Corpus,
    kernel_template: KernelSpec,
    cfg: LearnConfig | None = None,
    threshold: float = 0.01,
) -> GrangerGraph:
    """Fit the configured learner and threshold the branching matrix.

    Discretized templates go through the grid learner; continuous templates
    through direct EM with whatever penalty cfg carries.
    """
    if isinstance(kernel_template, DiscretizedKernel):
        base = cfg or LearnConfig()
        report = fit_mle_ode(
            corpus, kernel_template.dt, kernel_template.n_lags,
            LearnConfig(base.max_iters, base.tol, rng_seed=base.rng_seed),
        )
    else:
        report = fit_mle(corpus, kernel_template, cfg)
    phi = branching_matrix(report.model)
    return GrangerGraph(phi, phi > threshold, float(threshold))


def save_granger(graph: GrangerGraph, path: str) -> None:
    dump_json(
        {
            "threshold": graph.threshold,
            "infectivity": graph.infectivity.tolist(),
            "adjacency": graph.adjacency.tolist(),
        },
        path,
    )


def load_granger(path: str) -> GrangerGraph:
    doc = load_json(path)
    try:
        return GrangerGraph(
            np.asarray(doc["infectivity"], dtype=np.float64),
            np.asarray(doc["adjacency"], dtype=bool),
            float(doc["threshold"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed graph document ({exc})") from exc


def granger_to_dot(graph: GrangerGraph, labels: list[str] | None = None) -> str:
    """DOT digraph with one edge per adjacency entry, labeled to 3 decimals."""
    D = graph.dim
    if labels is None:
        labels = [str(u) for u in range(D)]
    if len(labels) != D:
        raise ValidationError(f"need {D} labels, got {len(labels)}")
    lines = ["digraph granger {"]
    for u in range(D):
        lines.append(f'  "{labels[u]}";')
    for v in range(D):
        for u in range(D):
            if graph.adjacency[v, u]:
                lines.append(
                    f'  "{labels[v]}" -> "{labels[u]}" '
                    f'[label="{graph.infectivity[v, u]:.3f}"];'
                )
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_granger_dot(graph: GrangerGraph, path: str, labels=None) -> None:
    atomic_write_text(path, granger_to_dot(graph, labels))


_DOT_EDGE = re.compile(r'^\s*"(.*)" -> "(.*)" \[label="([0-9.]+)"\];$')
_DOT_NODE = re.compile(r'^\s*"(.*)";$')


def load_granger_dot(path: str) -> tuple[list[str], dict[tuple[str, str], float]]:
    """Parse a digraph we emitted back into (node labels, edge -> weight)."""
    nodes: list[str] = []
    edges: dict[tuple[str, str], float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        body = fh.read()
    if not body.startswith("digraph"):
        raise FormatError(f"{path}: not a digraph file")
    for line in body.splitlines()[1:]:
        if line.strip() == "}":
            break
        m = _DOT_EDGE.match(line)
        if m:
            edges[(m.group(1), m.group(2))] = float(m.group(3))
            continue
        m = _DOT_NODE.match(line)
        if m:
            nodes.append(m.group(1))
            continue
        raise FormatError(f"{path}: unrecognized line {line!r}")
    return nodes, edges


# ---------------------------------------------------------------------------
# clustering


@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Soft or hard partition of a corpus into K groups.

    ``models`` is empty for the distance route; ``medoids`` is None for the
    mixture route.  ``objective_trace`` follows the minimization convention
    (negative penalized mixture log-likelihood), so it is nonincreasing.
    """

    K: int
    responsibilities: np.ndarray
    assignments: np.ndarray
    models: tuple[HawkesModel, ...]
    mixing: np.ndarray
    medoids: tuple[int, ...] | None = None
    objective_trace: tuple[float, ...] = ()

    def __post_init__(self):
        resp = np.asarray(self.responsibilities, dtype=np.float64)
        assign = np.asarray(self.assignments, dtype=np.int64)
        mixing = np.asarray(self.mixing, dtype=np.float64)
        for arr in (resp, assign, mixing):
            arr.setflags(write=False)
        object.__setattr__(self, "responsibilities", resp)
        object.__setattr__(self, "assignments", assign)
        object.__setattr__(self, "mixing", mixing)
        n, k = resp.shape
        if k != self.K or mixing.shape != (self.K,) or assign.shape != (n,):
            raise ValidationError("cluster result shapes are inconsistent")
        if n and np.max(np.abs(resp.sum(axis=1) - 1.0)) > 1e-9:
            raise ValidationError("responsibility rows must sum to 1")
        if abs(float(mixing.sum()) - 1.0) > 1e-9:
            raise ValidationError("mixing must sum to 1")
        if n and not np.array_equal(assign, np.argmax(resp, axis=1)):
            raise ValidationError("assignments must be the responsibility argmax")


def cluster_mixture(
    corpus: Corpus,
    K: int,
    kernel_template: KernelSpec,
    cfg: LearnConfig | None = None,
    inner_iters: int = 3,
) -> ClusterResult:
    """Mixture of models over sequences, fitted by generalized EM.

    Each round reweights every sequence by its cluster responsibility,
    advances each cluster's fit a few warm-started iterations, then
    recomputes responsibilities with log-sum-exp normalization.  A cluster
    whose total responsibility collapses is reseeded from the sequence the
    current mixture explains worst.
    """
    cfg = cfg or LearnConfig()
    n_seq = len(corpus)
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    if n_seq < K:
        raise ValidationError(f"corpus has {n_seq} sequences, fewer than K={K}")
    stats = _EmStats(corpus, kernel_template)
    rng = make_rng(cfg.rng_seed)
    resp = rng.uniform(0.5, 1.0, size=(n_seq, K))
    resp /= resp.sum(axis=1, keepdims=True)

    params: list[tuple | None] = [None] * K
    trace: list[float] = []
    checker = _Converge(cfg.tol)
    converged = False
    obj_prev = None
    for _ in range(cfg.max_iters):
        for k in range(K):
            mu_k, A_k, _, _ = _fit_from_stats(
                stats, cfg, weights=resp[:, k], init=params[k],
                max_iters=inner_iters,
            )
            params[k] = (mu_k, A_k)
        mixing = resp.mean(axis=0)
        ll = np.stack(
            [stats.per_seq_loglik(mu_k, A_k) for (mu_k, A_k) in params], axis=1
        )
        logw = np.log(np.maximum(mixing, 1e-300))[None, :] + ll
        lse = logsumexp(logw, axis=1)
        resp = np.exp(logw - lse[:, None])
        pen_total = math.fsum(
            _penalty_value(cfg.penalty, A_k) for (_, A_k) in params
        )
        obj = -_stable_sum(lse) + pen_total
        trace.append(obj)
        col = resp.sum(axis=0)
        if np.any(col < 1e-12):
            k_dead = int(np.argmin(col))
            worst = int(np.argmin(lse))
            warnings.warn(
                f"cluster {k_dead} collapsed; reseeding from sequence "
                f"{corpus[worst].id!r}",
                stacklevel=2,
            )
            resp[worst] = 0.0
            resp[worst, k_dead] = 1.0
            checker.streak = 0
            obj_prev = None
            continue
        if obj_prev is not None and checker.step(obj_prev, obj):
            converged = True
            break
        obj_prev = obj

    assignments = np.argmax(resp, axis=1) if n_seq else np.empty(0, np.int64)
    models = []
    for mu_k, A_k in params:
        A_m = A_k[0] if isinstance(kernel_template, ExponentialKernel) else A_k
        models.append(HawkesModel(mu=mu_k, kernel=kernel_template, A=A_m))
    return ClusterResult(
        K=K,
        responsibilities=resp,
        assignments=assignments,
        models=tuple(models),
        mixing=resp.mean(axis=0) / max(float(resp.mean(axis=0).sum()), 1e-300),
        objective_trace=tuple(trace),
    )


def cluster_purity(assignments: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of points whose cluster's dominant true label matches theirs."""
    assignments = np.asarray(assignments)
    labels = np.asarray(labels)
    if assignments.shape != labels.shape or assignments.size == 0:
        raise ValidationError("assignments and labels must be equal-length, nonempty")
    hit = 0
    for k in np.unique(assignments):
        sub = labels[assignments == k]
        hit += int(np.bincount(sub).max())
    return hit / labels.size


# ---------------------------------------------------------------------------
# alignment distance


@dataclass(frozen=True)
class DistanceParams:
    time_cost: float = 1.0
    mark_mismatch_cost: float = 1.0
    indel_cost: float = 1.0

    def __post_init__(self):
        for name in ("time_cost", "mark_mismatch_cost", "indel_cost"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")


def _dp_distance(ta, ma, tb, mb, params: DistanceParams) -> float:
    n, m = ta.size, tb.size
    ind = params.indel_cost
    col = ind * np.arange(m + 1, dtype=np.float64)
    prev = col.copy()
    ladder = ind * np.arange(m + 1, dtype=np.float64)
    for i in range(1, n + 1):
        match = params.time_cost * np.abs(ta[i - 1] - tb) + (
            params.mark_mismatch_cost * (ma[i - 1] != mb)
        )
        x = np.minimum(prev[1:] + ind, prev[:-1] + match)
        cand = np.concatenate(([i * ind], x))
        run = np.minimum.accumulate(cand - ladder)
        prev = run + ladder
    return float(prev[m])


def sequence_distance(
    seq_a: EventSequence, seq_b: EventSequence, params: DistanceParams = DistanceParams()
) -> float:
    """Minimal-cost monotone alignment between two event sequences.

    Matching two events costs time_cost times their time gap plus a mark
    mismatch charge; every unmatched event costs indel_cost.  Because both
    inputs are time-sorted, the optimal alignment is order-preserving and
    exact dynamic programming applies.  Arguments are canonicalized first so
    the result is symmetric to the last bit.
    """
    if seq_a.dim != seq_b.dim:
        raise ValidationError(
            f"cannot compare sequences of dim {seq_a.dim} and {seq_b.dim}"
        )
    ka = (len(seq_a), seq_a.times.tobytes(), seq_a.marks.tobytes())
    kb = (len(seq_b), seq_b.times.tobytes(), seq_b.marks.tobytes())
    if kb < ka:
        seq_a, seq_b = seq_b, seq_a
    return _dp_distance(seq_a.times, seq_a.marks, seq_b.times, seq_b.marks, params)


def distance_matrix(corpus: Corpus, params: DistanceParams = DistanceParams()) -> np.ndarray:
    n = len(corpus)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = sequence_distance(corpus[i], corpus[j], params)
    return out


def save_distance_csv(matrix: np.ndarray, ids: list[str], path: str) -> None:
    n = matrix.shape[0]
    if len(ids) != n:
        raise ValidationError("one id per matrix row required")
    lines = ["," + ",".join(ids)]
    for i in range(n):
        lines.append(ids[i] + "," + ",".join(repr(float(x)) for x in matrix[i]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_distance_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    header = lines[0].split(",")
    if header[0] != "":
        raise FormatError(f"{path}: expected empty corner cell")
    ids = header[1:]
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        rows.append([float(c) for c in cells[1:]])
    mat = np.asarray(rows, dtype=np.float64)
    if mat.shape != (len(ids), len(ids)):
        raise FormatError(f"{path}: matrix shape does not match id count")
    return ids, mat


def cluster_distance(
    corpus: Corpus,
    K: int,
    params: DistanceParams = DistanceParams(),
    rng_seed: int = 0,
    max_iters: int = 100,
) -> ClusterResult:
    """k-medoids over the pairwise alignment distances.

    Seeding follows the usual spread-out rule (next medoid drawn with
    probability proportional to squared distance from the chosen set), then
    alternates nearest-medoid assignment with per-cluster medoid refresh.
    """
    n = len(corpus)
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    if K > n:
        raise ValidationError(f"K={K} exceeds corpus size {n}")
    dm = distance_matrix(corpus, params)
    rng = make_rng(rng_seed)
    medoids = [int(rng.integers(n))]
    while len(medoids) < K:
        dmin = dm[:, medoids].min(axis=1)
        w = dmin * dmin
        w[medoids] = 0.0
        total = float(w.sum())
        if total <= 0.0:
            remaining = [i for i in range(n) if i not in medoids]
            medoids.append(remaining[int(rng.integers(len(remaining)))])
        else:
            medoids.append(int(rng.choice(n, p=w / total)))
    med = np.array(sorted(medoids), dtype=np.int64)
    for _ in range(max_iters):
        assign = np.argmin(dm[:, med], axis=1)
        new_med = med.copy()
        for k in range(K):
            members = np.flatnonzero(assign == k)
            if members.size:
                inner = dm[np.ix_(members, members)].sum(axis=0)
                new_med[k] = members[int(np.argmin(inner))]
        if np.array_equal(new_med, med):
            break
        med = new_med
    assign = np.argmin(dm[:, med], axis=1)
    resp = np.zeros((n, K))
    resp[np.arange(n), assign] = 1.0
    mixing = np.bincount(assign, minlength=K).astype(np.float64) / n
    cost = float(dm[np.arange(n), med[assign]].sum())
    return ClusterResult(
        K=K,
        responsibilities=resp,
        assignments=assign,
        models=(),
        mixing=mixing,
        medoids=tuple(int(i) for i in med),
        objective_trace=(cost,),
    )


# ---------------------------------------------------------------------------
# drifting infectivity


@dataclass(frozen=True, eq=False)
class TvhpModel:
    """Exponential-decay model whose infectivity interpolates over a grid.

    ``A[g]`` is the matrix in force for parents at grid time ``grid[g]``;
    between nodes it varies linearly in the parent's event time.
    """

    mu: np.ndarray
    grid: np.ndarray
    A: np.ndarray
    decay: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        grid = np.asarray(self.grid, dtype=np.float64)
        A = np.asarray(self.A, dtype=np.float64)
        for arr in (mu, grid, A):
            arr.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "A", A)
        D = mu.size
        if grid.ndim != 1 or grid.size < 2:
            raise ValidationError("grid must hold at least 2 nodes")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must be strictly increasing")
        if A.shape != (grid.size, D, D):
            raise ValidationError(
                f"node coefficients must have shape {(grid.size, D, D)}, got {A.shape}"
            )
        if np.any(A < 0) or np.any(mu < 0):
            raise ValidationError("mu and node coefficients must be >= 0")
        if self.decay <= 0:
            raise ValidationError(f"decay must be > 0, got {self.decay}")

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    @property
    def n_nodes(self) -> int:
        return int(self.grid.size)


@dataclass
class TvhpFit:
    model: TvhpModel
    objective_trace: tuple[float, ...]
    converged: bool
    iterations: int
    wall_time: float
    details: dict


class _TvhpStats:
    """Interpolation-weighted excitation features, fixed across iterations."""

    def __init__(self, corpus: Corpus, grid: np.ndarray, decay: float):
        if len(corpus) == 0:
            raise ValidationError("corpus is empty")
        grid = np.asarray(grid, dtype=np.float64)
        D = corpus.dim
        G = grid.size
        n_seq = len(corpus)
        F_parts, marks_parts, idx_parts = [], [], []
        E_s = np.zeros((n_seq, G, D))
        T_s = np.zeros(n_seq)
        counts_s = np.zeros((n_seq, D))
        for s_i, seq in enumerate(corpus):
            if len(seq) and (
                seq.times[0] < grid[0] or seq.times[-1] > grid[-1]
            ):
                raise ValidationError(
                    f"sequence {seq.id!r} has events outside the grid span "
                    f"[{grid[0]:g}, {grid[-1]:g}]"
                )
            n = len(seq)
            T_s[s_i] = seq.duration
            counts_s[s_i] = np.bincount(seq.marks, minlength=D)
            marks_parts.append(seq.marks)
            idx_parts.append(np.full(n, s_i, dtype=np.int64))
            pos = np.clip(
                np.searchsorted(grid, seq.times, side="right") - 1, 0, G - 2
            )
            frac = (seq.times - grid[pos]) / (grid[pos + 1] - grid[pos])
            W = np.zeros((n, G, D))
            rows = np.arange(n)
            W[rows, pos, seq.marks] += 1.0 - frac
            W[rows, pos + 1, seq.marks] += frac
            Wf = W.reshape(n, G * D)
            F = exp_weighted_excitation(seq.times, Wf, decay).reshape(n, G, D)
            F_parts.append(F)
            decay_mass = 1.0 - np.exp(-decay * (seq.t_end - seq.times))
            E_s[s_i] = np.einsum("ngv,n->gv", W, decay_mass)
        self.marks = np.concatenate(marks_parts)
        self.seq_idx = np.concatenate(idx_parts)
        self.F = (
            np.concatenate(F_parts, axis=0) if F_parts else np.zeros((0, G, D))
        )
        self.E_s = E_s
        self.T_s = T_s
        self.counts_s = counts_s
        self.n = self.marks.size
        self.dim = D
        self.G = G

    def rates(self, mu, A):
        if self.n == 0:
            return np.empty(0)
        E = np.einsum("jgv,gvu->ju", self.F, A)
        return mu[self.marks] + E[np.arange(self.n), self.marks]


def fit_tvhp(
    corpus: Corpus,
    grid,
    decay: float,
    cfg: LearnConfig | None = None,
    beta: float = 1.0,
) -> TvhpFit:
    """EM for node infectivities with a squared-difference drift penalty.

    Each event's excitation evidence lands on the two grid nodes bracketing
    its PARENT's time with linear weights; node updates solve small chain
    systems by damped Newton, keeping the penalized objective nonincreasing.
    Large beta ties all nodes together and recovers the stationary fit.
    """
    cfg = cfg or LearnConfig()
    if cfg.penalty.kind != "none":
        raise ValidationError("structural penalties are not supported here")
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    if decay <= 0:
        raise ValidationError(f"decay must be > 0, got {decay}")
    start = time.perf_counter()
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing with >= 2 nodes")
    stats = _TvhpStats(corpus, grid, decay)
    D, G = stats.dim, stats.G
    T_w = float(stats.T_s.sum())
    counts = stats.counts_s.sum(axis=0)
    E = stats.E_s.sum(axis=0)  # (G, D)
    P = 2.0 * beta * _first_diff_gram(G)

    mu = 0.5 * counts / max(T_w, 1e-300)
    rng = make_rng(cfg.rng_seed)
    A = rng.uniform(0.0, 0.1 / D, size=(G, D, D))

    def objective(mu_, A_, lam_):
        log_term = _stable_sum(np.log(np.maximum(lam_, 1e-300))) if stats.n else 0.0
        comp = T_w * float(mu_.sum()) + float(np.einsum("gvu,gv->", A_, E))
        smooth = 0.5 * float(np.einsum("gvu,gk,kvu->", A_, P, A_))
        return -log_term + comp + smooth

    lam = stats.rates(mu, A)
    obj = objective(mu, A, lam)
    trace = [obj]
    clamp_total = 0
    checker = _Converge(cfg.tol)
    converged = False
    for _ in range(cfg.max_iters):
        inv = 1.0 / np.maximum(lam, 1e-300)
        base = np.bincount(stats.marks, weights=mu[stats.marks] * inv, minlength=D)
        onehot = (stats.marks[:, None] == np.arange(D)[None, :]).astype(np.float64)
        S = np.einsum("jgv,j,ju->gvu", stats.F, inv, onehot)
        N = A * S
        mu = base / T_w
        for v in range(D):
            for u in range(D):
                A_vu, clamps = _penalized_newton(N[:, v, u], E[:, v], P, A[:, v, u])
                A[:, v, u] = A_vu
                clamp_total += clamps
        lam = stats.rates(mu, A)
        obj_new = objective(mu, A, lam)
        trace.append(obj_new)
        if checker.step(obj, obj_new):
            converged = True
            break
        obj = obj_new
    model = TvhpModel(mu=mu, grid=grid, A=A, decay=decay)
    return TvhpFit(
        model=model,
        objective_trace=tuple(trace),
        converged=converged,
        iterations=len(trace) - 1,
        wall_time=time.perf_counter() - start,
        details={"clamp_count": clamp_total, "beta": beta},
    )


def tvhp_log_likelihood(model: TvhpModel, corpus: Corpus) -> float:
    """Exact log-likelihood of a corpus under interpolated node infectivities."""
    stats = _TvhpStats(corpus, model.grid, model.decay)
    lam = stats.rates(model.mu, model.A)
    if np.any(lam <= 0):
        return float("-inf")
    E = stats.E_s.sum(axis=0)
    comp = float(stats.T_s.sum()) * float(model.mu.sum()) + float(
        np.einsum("gvu,gv->", model.A, E)
    )
    return _stable_sum(np.log(lam)) - comp


def tvhp_variation(model: TvhpModel) -> float:
    """Largest Frobenius deviation of any node matrix from the first node."""
    diffs = model.A - model.A[0]
    return float(np.sqrt((diffs * diffs).sum(axis=(1, 2))).max())


def save_tvhp(model: TvhpModel, path: str) -> None:
    dump_json(
        {
            "dim": model.dim,
            "decay": model.decay,
            "mu": model.mu.tolist(),
            "grid": model.grid.tolist(),
            "A": model.A.tolist(),
        },
        path,
    )


def load_tvhp(path: str) -> TvhpModel:
    doc = load_json(path)
    try:
        model = TvhpModel(
            mu=np.asarray(doc["mu"], dtype=np.float64),
            grid=np.asarray(doc["grid"], dtype=np.float64),
            A=np.asarray(doc["A"], dtype=np.float64),
            decay=float(doc["decay"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed document ({exc})") from exc
    if model.dim != int(doc["dim"]):
        raise FormatError(f"{path}: dim field does not match mu length")
    return model


def save_tvhp_csv(model: TvhpModel, path: str) -> None:
    """Long-form node table (s, v, u, a), one row per node and pair."""
    lines = ["s,v,u,a"]
    for g in range(model.n_nodes):
        for v in range(model.dim):
            for u in range(model.dim):
                lines.append(
                    f"{float(model.grid[g])!r},{v},{u},{float(model.A[g, v, u])!r}"
                )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_tvhp_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild (grid, node coefficients) from the long-form table."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if lines[0] != "s,v,u,a":
        raise FormatError(f"{path}: expected header s,v,u,a")
    recs = []
    for ln in lines[1:]:
        s, v, u, a = ln.split(",")
        recs.append((float(s), int(v), int(u), float(a)))
    grid = sorted({r[0] for r in recs})
    D = 1 + max(max(r[1], r[2]) for r in recs)
    A = np.zeros((len(grid), D, D))
    pos = {s: g for g, s in enumerate(grid)}
    for s, v, u, a in recs:
        A[pos[s], v, u] = a
    return np.asarray(grid), A

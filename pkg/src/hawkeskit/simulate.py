"""Event-sequence simulators.

Three samplers for the same model family:

* ``simulate_branch``: cluster expansion, Poisson immigrants first, then
  offspring generation by generation, each parent spawning children from its
  window-truncated kernel mass.  Requires a subcritical model.
* ``simulate_ogata``: thinning against an adaptive upper bound on the total
  intensity, refreshed after every proposal.  Works for every kernel.
* ``simulate_exact_exp``: rejection-free interarrival inversion for
  exponential kernels, using the Markov decay of the excitation state.

All samplers derive one child seed per sequence from the config seed, so
corpora are reproducible and sequences are independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ._util import atomic_write_text, read_csv_rows, spawn_rngs
from .core import (
    DiscretizedKernel,
    EventSequence,
    ExponentialKernel,
    GaussianBasisKernel,
    HawkesError,
    HawkesModel,
    UnsupportedKernelError,
    ValidationError,
    branching_matrix,
    spectral_radius,
)
from .data import Corpus


class SimulationOverflowError(HawkesError):
    """A sequence hit the max_events cap; ``partial`` holds what was kept."""

    def __init__(self, message: str, partial: EventSequence | None = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SimConfig:
    model: HawkesModel
    t_end: float
    n_sequences: int = 1
    rng_seed: int = 0
    max_events: int = 1_000_000

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValidationError(f"t_end must be > 0, got {self.t_end}")
        if self.n_sequences < 0:
            raise ValidationError(f"n_sequences must be >= 0, got {self.n_sequences}")
        if self.max_events < 1:
            raise ValidationError(f"max_events must be >= 1, got {self.max_events}")


def _finish(times_parts, marks_parts, T, dim, sid) -> EventSequence:
    times = np.concatenate(times_parts) if times_parts else np.empty(0)
    marks = np.concatenate(marks_parts) if marks_parts else np.empty(0, dtype=np.int64)
    idx = np.argsort(times, kind="stable")
    return EventSequence(times[idx], marks[idx].astype(np.int64), 0.0, T, dim, sid)


def _overflow(times_parts, marks_parts, T, dim, sid, cap) -> SimulationOverflowError:
    seq = _finish(times_parts, marks_parts, T, dim, sid)
    trunc = EventSequence(seq.times[:cap], seq.marks[:cap], 0.0, T, dim, sid)
    return SimulationOverflowError(
        f"sequence {sid!r} exceeded max_events={cap}", partial=trunc
    )


def simulate_branch(cfg: SimConfig) -> Corpus:
    """Sample sequences by the immigrant/offspring cluster construction."""
    model = cfg.model
    rho = spectral_radius(branching_matrix(model))
    if rho >= 1.0:
        raise ValidationError(
            f"branch sampler requires spectral radius < 1, got {rho:.4f}: "
            "offspring cascade may not terminate"
        )
    rngs = spawn_rngs(cfg.rng_seed, cfg.n_sequences)
    seqs = tuple(
        _branch_one(model, cfg.t_end, rng, cfg.max_events, f"s{i}")
        for i, rng in enumerate(rngs)
    )
    return Corpus(seqs, model.dim)


def _branch_one(model, T, rng, max_events, sid) -> EventSequence:
    D = model.dim
    times_parts: list[np.ndarray] = []
    marks_parts: list[np.ndarray] = []
    total = 0

    imm_t, imm_m = [], []
    for u in range(D):
        n = int(rng.poisson(model.mu[u] * T))
        imm_t.append(rng.uniform(0.0, T, size=n))
        imm_m.append(np.full(n, u, dtype=np.int64))
    cur_t = np.concatenate(imm_t)
    cur_m = np.concatenate(imm_m)

    while cur_t.size:
        times_parts.append(cur_t)
        marks_parts.append(cur_m)
        total += cur_t.size
        if total > max_events:
            raise _overflow(times_parts, marks_parts, T, D, sid, max_events)
        cur_t, cur_m = _offspring(model, cur_t, cur_m, T, rng)
    return _finish(times_parts, marks_parts, T, D, sid)


def _offspring(model, pt, pm, T, rng):
    """One generation of children for parents at times pt with marks pm."""
    kern = model.kernel
    if isinstance(kern, ExponentialKernel):
        mass = 1.0 - np.exp(-kern.decay * (T - pt))  # (n,)
        means = model.A[pm, :] * mass[:, None]  # (n, D)
        counts = rng.poisson(means)
        k = counts.sum()
        if k == 0:
            return np.empty(0), np.empty(0, dtype=np.int64)
        flat = np.repeat(np.arange(counts.size), counts.ravel())
        parent = flat // model.dim
        marks = flat % model.dim
        u01 = rng.random(k)
        offs = -np.log1p(-u01 * mass[parent]) / kern.decay
        return pt[parent] + offs, marks

    if isinstance(kern, GaussianBasisKernel):
        w = kern.mass(T - pt)  # (M, n) window-truncated basis mass
        means = model.A[:, pm, :] * w[:, :, None]  # (M, n, D)
        counts = rng.poisson(means)
        k = counts.sum()
        if k == 0:
            return np.empty(0), np.empty(0, dtype=np.int64)
        n, D = pt.size, model.dim
        flat = np.repeat(np.arange(counts.size), counts.ravel())
        m_idx = flat // (n * D)
        parent = (flat // D) % n
        marks = flat % D
        c = kern.centers[m_idx]
        s = kern.bandwidth
        b = np.minimum(kern.support, T - pt[parent])
        lo = ndtr(-c / s)
        hi = ndtr((b - c) / s)
        u01 = rng.random(k)
        offs = c + s * ndtri(lo + u01 * (hi - lo))
        offs = np.clip(offs, 0.0, b)
        return pt[parent] + offs, marks

    if isinstance(kern, DiscretizedKernel):
        L, dt = kern.n_lags, kern.dt
        rem = T - pt  # (n,)
        width = np.clip(rem[None, :] - np.arange(L)[:, None] * dt, 0.0, dt)  # (L, n)
        means = model.A[:, pm, :] * width[:, :, None]  # (L, n, D)
        counts = rng.poisson(means)
        k = counts.sum()
        if k == 0:
            return np.empty(0), np.empty(0, dtype=np.int64)
        n, D = pt.size, model.dim
        flat = np.repeat(np.arange(counts.size), counts.ravel())
        k_idx = flat // (n * D)
        parent = (flat // D) % n
        marks = flat % D
        u01 = rng.random(k)
        offs = k_idx * dt + u01 * width[k_idx, parent]
        return pt[parent] + offs, marks

    raise UnsupportedKernelError(f"unknown kernel type {type(kern).__name__}")


def simulate_ogata(cfg: SimConfig) -> Corpus:
    """Sample by thinning with a per-proposal refreshed intensity bound."""
    model = cfg.model
    rngs = spawn_rngs(cfg.rng_seed, cfg.n_sequences)
    seqs = tuple(
        _ogata_one(model, cfg.t_end, rng, cfg.max_events, f"s{i}")
        for i, rng in enumerate(rngs)
    )
    return Corpus(seqs, model.dim)


def _ogata_one(model, T, rng, max_events, sid) -> EventSequence:
    D = model.dim
    mu = model.mu
    mu_total = float(mu.sum())
    kern = model.kernel
    times: list[float] = []
    marks: list[int] = []
    t = 0.0

    if isinstance(kern, ExponentialKernel):
        omega = kern.decay
        R = np.zeros(D)  # per-source excitation state at current t
        AT = model.A.T  # (u, v) for fast lam = mu + AT @ R
        while True:
            lam_now = mu + AT @ R
            lbar = float(lam_now.sum())
            if lbar <= 0.0:
                break
            dt = rng.exponential(1.0 / lbar)
            t_new = t + dt
            if t_new > T:
                break
            R = R * np.exp(-omega * dt)
            lam = mu + AT @ R
            total = float(lam.sum())
            v01 = rng.random()
            if v01 * lbar < total:
                u = int(np.searchsorted(np.cumsum(lam), v01 * lbar, side="right"))
                u = min(u, D - 1)
                times.append(t_new)
                marks.append(u)
                R[u] += omega
                if len(times) > max_events:
                    raise _overflow(
                        [np.array(times)], [np.array(marks, dtype=np.int64)],
                        T, D, sid, max_events,
                    )
            t = t_new
        return EventSequence(
            np.array(times), np.array(marks, dtype=np.int64), 0.0, T, D, sid
        )

    if isinstance(kern, GaussianBasisKernel):
        support = kern.support
        s = kern.bandwidth
        # sup of each renormalized basis over lags >= x: peak if x below the
        # center, the decreasing tail value otherwise
        peak = 1.0 / (s * np.sqrt(2.0 * np.pi) * kern._norms)  # (M,)
        row_sum = model.A.sum(axis=2)  # (M, D): total outgoing weight per basis/source
        bound_contrib = _basis_bound_factory(kern, row_sum, peak)
    elif isinstance(kern, DiscretizedKernel):
        support = kern.support
        # suffix max over lag bins, summed over targets: bound per source dim
        suf = np.maximum.accumulate(model.A[::-1], axis=0)[::-1]  # (L, D, D)
        bound_tbl = suf.sum(axis=2)  # (L, D)
        bound_contrib = _disc_bound_factory(kern, bound_tbl)
    else:
        raise UnsupportedKernelError(f"unknown kernel type {type(kern).__name__}")

    ts_arr = np.empty(0)
    ms_arr = np.empty(0, dtype=np.int64)
    w0 = 0  # history window start: events older than `support` are spent
    while True:
        n = ts_arr.size
        while w0 < n and ts_arr[w0] <= t - support:
            w0 += 1
        lbar = mu_total + bound_contrib(t - ts_arr[w0:], ms_arr[w0:])
        if lbar <= 0.0:
            break
        dt = rng.exponential(1.0 / lbar)
        t_new = t + dt
        if t_new > T:
            break
        while w0 < n and ts_arr[w0] <= t_new - support:
            w0 += 1
        lam = _windowed_intensities(model, ts_arr[w0:], ms_arr[w0:], t_new)
        total = float(lam.sum())
        v01 = rng.random()
        if v01 * lbar < total:
            u = int(np.searchsorted(np.cumsum(lam), v01 * lbar, side="right"))
            u = min(u, D - 1)
            times.append(t_new)
            marks.append(u)
            ts_arr = np.array(times)
            ms_arr = np.array(marks, dtype=np.int64)
            if len(times) > max_events:
                raise _overflow([ts_arr], [ms_arr], T, D, sid, max_events)
        t = t_new
    return EventSequence(
        np.array(times), np.array(marks, dtype=np.int64), 0.0, T, D, sid
    )


def _basis_bound_factory(kern, row_sum, peak):
    def contrib(lags, src_marks):
        if lags.size == 0:
            return 0.0
        sup = np.where(
            lags[None, :] <= kern.centers[:, None],
            peak[:, None],
            kern.density(lags),
        )  # (M, W)
        sup = np.where(lags[None, :] < kern.support, sup, 0.0)
        return float((sup * row_sum[:, src_marks]).sum())

    return contrib


def _disc_bound_factory(kern, bound_tbl):
    def contrib(lags, src_marks):
        if lags.size == 0:
            return 0.0
        k = np.minimum((lags / kern.dt).astype(np.int64), kern.n_lags - 1)
        inside = lags < kern.support
        return float((bound_tbl[k, src_marks] * inside).sum())

    return contrib


def _windowed_intensities(model, hist_t, hist_m, t) -> np.ndarray:
    """Intensity vector at t using only the supplied (already windowed) history."""
    lam = model.mu.astype(np.float64).copy()
    if hist_t.size == 0:
        return lam
    dts = t - hist_t
    keep = dts > 0
    dts = dts[keep]
    hm = hist_m[keep]
    kern = model.kernel
    if isinstance(kern, GaussianBasisKernel):
        dens = kern.density(dts)  # (M, W)
        lam += np.einsum("mi,miu->u", dens, model.A[:, hm, :])
    else:
        k = (dts / kern.dt).astype(np.int64)
        inside = k < kern.n_lags
        if inside.any():
            lam += model.A[k[inside], hm[inside], :].sum(axis=0)
    return lam


def simulate_exact_exp(cfg: SimConfig) -> Corpus:
    """Sample exponential-kernel models without rejection.

    Per dimension the next-arrival time splits into a baseline part
    (exponential at rate mu[u]) and an excited part sampled by inverting the
    decaying-intensity survival function, which has a defect: with
    probability exp(-g_u / decay) the excitation never fires.  The earliest
    candidate across dimensions is the next event; the excitation state then
    updates in O(D) with no history scan.
    """
    model = cfg.model
    if not isinstance(model.kernel, ExponentialKernel):
        raise UnsupportedKernelError(
            "exact sampler requires an exponential kernel; "
            "use simulate_ogata or simulate_branch for other kernels"
        )
    rngs = spawn_rngs(cfg.rng_seed, cfg.n_sequences)
    one = _exact_exp_one_scalar if model.dim == 1 else _exact_exp_one
    seqs = tuple(
        one(model, cfg.t_end, rng, cfg.max_events, f"s{i}")
        for i, rng in enumerate(rngs)
    )
    return Corpus(seqs, model.dim)


def _exact_exp_one(model, T, rng, max_events, sid) -> EventSequence:
    D = model.dim
    omega = model.kernel.decay
    mu = model.mu
    mu_pos = mu > 0
    safe_mu = np.where(mu_pos, mu, 1.0)
    g = np.zeros(D)  # excited intensity per target dim
    t = 0.0
    times: list[float] = []
    marks: list[int] = []
    while True:
        w_base = np.where(mu_pos, rng.exponential(1.0, D) / safe_mu, np.inf)
        u01 = rng.random(D)
        defect = np.exp(-g / omega)
        live = u01 > defect
        w_exc = np.full(D, np.inf)
        if live.any():
            w_exc[live] = -np.log1p(omega * np.log(u01[live]) / g[live]) / omega
        w = np.minimum(w_base, w_exc)
        u = int(np.argmin(w))
        wu = float(w[u])
        if not np.isfinite(wu) or t + wu > T:
            break
        t += wu
        g = g * np.exp(-omega * wu) + omega * model.A[u, :]
        times.append(t)
        marks.append(u)
        if len(times) > max_events:
            raise _overflow(
                [np.array(times)], [np.array(marks, dtype=np.int64)],
                T, D, sid, max_events,
            )
    return EventSequence(
        np.array(times), np.array(marks, dtype=np.int64), 0.0, T, D, sid
    )


_BLOCK = 8192


def _exact_exp_one_scalar(model, T, rng, max_events, sid) -> EventSequence:
    # 1-d fast path: plain floats and block-drawn randoms, same construction
    import math

    omega = float(model.kernel.decay)
    mu = float(model.mu[0])
    a = float(model.A[0, 0])
    g = 0.0
    t = 0.0
    times: list[float] = []
    exc = np.empty(0)
    uni = np.empty(0)
    i = _BLOCK  # force refill on first use
    while True:
        if i >= exc.size:
            exc = rng.exponential(1.0, _BLOCK)
            uni = rng.random(_BLOCK)
            i = 0
        w_base = exc[i] / mu if mu > 0 else math.inf
        u01 = uni[i]
        i += 1
        if g > 0 and u01 > math.exp(-g / omega):
            w_exc = -math.log1p(omega * math.log(u01) / g) / omega
        else:
            w_exc = math.inf
        w = w_base if w_base < w_exc else w_exc
        if w == math.inf or t + w > T:
            break
        t += w
        g = g * math.exp(-omega * w) + omega * a
        times.append(t)
        if len(times) > max_events:
            raise _overflow(
                [np.array(times)], [np.zeros(len(times), dtype=np.int64)],
                T, 1, sid, max_events,
            )
    return EventSequence(
        np.array(times), np.zeros(len(times), dtype=np.int64), 0.0, T, 1, sid
    )


_METHODS = {
    "branch": simulate_branch,
    "ogata": simulate_ogata,
    "exact-exp": simulate_exact_exp,
}


def benchmark_simulators(
    model: HawkesModel,
    horizons,
    rng_seed: int = 0,
    n_sequences: int = 1,
    max_events: int = 1_000_000,
    methods: tuple[str, ...] = ("branch", "ogata", "exact-exp"),
    real_timing: bool = True,
) -> list[dict]:
    """Run each simulator over a horizon grid; one result row per (method, t_end).

    With real_timing=False the wall_time_s column is fixed at 0.0 so output
    files are byte-stable across runs.
    """
    rows = []
    for method in methods:
        if method not in _METHODS:
            raise ValidationError(
                f"unknown method {method!r}; valid: {sorted(_METHODS)}"
            )
        fn = _METHODS[method]
        for t_end in horizons:
            cfg = SimConfig(model, float(t_end), n_sequences, rng_seed, max_events)
            row = {
                "method": method,
                "t_end": float(t_end),
                "seed": rng_seed,
                "wall_time_s": 0.0,
                "event_count": "n/a",
            }
            start = time.perf_counter()
            try:
                corpus = fn(cfg)
                row["event_count"] = corpus.n_events
            except UnsupportedKernelError:
                pass  # stays n/a
            except HawkesError as exc:
                row["event_count"] = f"error:{type(exc).__name__}"
            if real_timing:
                row["wall_time_s"] = time.perf_counter() - start
            rows.append(row)
    return rows


def write_benchmark_csv(rows: list[dict], path: str) -> None:
    lines = ["method,t_end,seed,wall_time_s,event_count"]
    for r in rows:
        lines.append(
            f"{r['method']},{r['t_end']:g},{r['seed']},"
            f"{r['wall_time_s']:.6f},{r['event_count']}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_benchmark_csv(path: str) -> list[dict]:
    header, raw = read_csv_rows(path)
    if header != ["method", "t_end", "seed", "wall_time_s", "event_count"]:
        raise ValidationError(f"{path}: unexpected benchmark header {header}")
    rows = []
    for cells in raw:
        count: object = cells[4]
        if count not in ("n/a",) and not str(count).startswith("error:"):
            count = int(count)
        rows.append(
            {
                "method": cells[0],
                "t_end": float(cells[1]),
                "seed": int(cells[2]),
                "wall_time_s": float(cells[3]),
                "event_count": count,
            }
        )
    return rows

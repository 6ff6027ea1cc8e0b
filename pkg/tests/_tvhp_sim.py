"""Test-only harness: branching simulation with time-dependent offspring rates.

The package's branch simulator draws offspring with a fixed coefficient
array; the drift-recovery experiments need the coefficient evaluated at
each parent's own event time.  One dimension only, which is all the
experiments use.
"""

import numpy as np

from hawkeskit import Corpus, EventSequence


def simulate_tv_branch(mu, decay, a_at, t_end, rng, seq_id="s0", max_events=1_000_000):
    """One D=1 path whose offspring mean follows a_at(parent event time).

    a_at maps an array of times to coefficient values.  An event at time s
    leaves Poisson(a_at(s) * (1 - exp(-decay*(t_end-s)))) children at
    truncated-exponential lags, so the excitation an estimator sees is
    a_at(t_i) * decay * exp(-decay*(t - t_i)) summed over past events.
    """
    n_imm = rng.poisson(mu * t_end)
    current = np.sort(rng.uniform(0.0, t_end, size=n_imm))
    parts = [current]
    total = int(n_imm)
    while current.size:
        tail = t_end - current
        defect = -np.expm1(-decay * tail)
        counts = rng.poisson(np.asarray(a_at(current), dtype=float) * defect)
        total += int(counts.sum())
        if total > max_events:
            raise RuntimeError("runaway cascade in tv harness")
        parents = np.repeat(current, counts)
        if parents.size == 0:
            break
        d = np.repeat(defect, counts)
        lags = -np.log1p(-rng.uniform(size=parents.size) * d) / decay
        current = np.sort(parents + lags)
        parts.append(current)
    times = np.sort(np.concatenate(parts))
    marks = np.zeros(times.size, dtype=np.int64)
    return EventSequence(times, marks, 0.0, float(t_end), 1, seq_id)


def tv_corpus(mu, decay, a_at, t_end, n_sequences, seed):
    rng = np.random.default_rng(seed)
    seqs = tuple(
        simulate_tv_branch(mu, decay, a_at, t_end, rng, seq_id=f"s{i}")
        for i in range(n_sequences)
    )
    return Corpus(seqs, 1)


def block_shuffle(corpus, edges, rng):
    """Permute whole equal-width time blocks of each sequence.

    Events keep their offset inside their block, so local clustering
    survives while any slow drift across the window is destroyed.  The
    same block permutation is applied to every sequence of the corpus so
    one draw is one coherent null sample.
    """
    edges = np.asarray(edges, dtype=float)
    widths = np.diff(edges)
    if not np.allclose(widths, widths[0]):
        raise ValueError("block_shuffle needs equal-width blocks")
    n_blocks = widths.size
    perm = rng.permutation(n_blocks)
    shuffled = []
    for seq in corpus:
        blk = np.clip(np.searchsorted(edges, seq.times, side="right") - 1, 0, n_blocks - 1)
        new_times = edges[perm[blk]] + (seq.times - edges[blk])
        order = np.argsort(new_times, kind="stable")
        shuffled.append(
            EventSequence(
                new_times[order],
                seq.marks[order],
                seq.t_start,
                seq.t_end,
                seq.dim,
                seq.id,
            )
        )
    return Corpus(tuple(shuffled), corpus.dim, corpus.label_map)

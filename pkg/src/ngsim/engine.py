"""Compiled fast path for the naming-game run loop.

The numba kernel advances a SimState between observation targets. It draws
from the same np.random.Generator as dynamics.step with the identical draw
discipline, so reference and compiled runs produce the same states, samples
and convergence times bit for bit (numba's Generator methods reproduce
NumPy's stream). Tests assert that equivalence exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import observables
from .dynamics import (
    BROADCAST,
    MODES,
    PAIRWISE,
    RunResult,
    SimState,
    first_step_at_or_after,
    steps_at_or_below,
)
from .topology import Graph

# slots of the scalar-state vector shared with the kernel
_STEPS, _INVENTIONS, _NW, _ND, _SUCC, _LIS = range(6)


@njit(cache=True)
def _advance(rng, n, indptr, indices, vocab, vlen, refcount, sc, pairwise,
             target_steps):
    """Run speaker events until target_steps or consensus, whichever first.

    Returns (vocab, consensus_step); vocab may be reallocated when a node
    outgrows its row, consensus_step is -1 if agreement was not reached.
    Success/listener totals accumulate into sc for the caller's bin average.
    """
    steps = sc[_STEPS]
    inventions = sc[_INVENTIONS]
    nw = sc[_NW]
    nd = sc[_ND]
    succ_sum = sc[_SUCC]
    lis_sum = sc[_LIS]
    cap = vocab.shape[1]
    consensus_step = np.int64(-1)

    while steps < target_steps:
        speaker = rng.integers(0, n)
        row_start = indptr[speaker]
        deg = indptr[speaker + 1] - row_start

        listener = np.int64(-1)
        if pairwise and deg > 0:
            if deg > 1:
                listener = np.int64(indices[row_start + rng.integers(0, deg)])
            else:
                listener = np.int64(indices[row_start])

        m = vlen[speaker]
        if m == 0:
            w = inventions
            inventions += 1
            vocab[speaker, 0] = w
            vlen[speaker] = 1
            m = 1
            nw += 1
            refcount[w] += 1
            if refcount[w] == 1:
                nd += 1
        if m > 1:
            w = vocab[speaker, rng.integers(0, m)]
        else:
            w = vocab[speaker, 0]

        succ = np.int64(0)
        if pairwise:
            if listener >= 0:
                lm = vlen[listener]
                found = False
                for k in range(lm):
                    if vocab[listener, k] == w:
                        found = True
                        break
                if found:
                    succ = 1
                    if lm > 1:
                        nw -= lm - 1
                        for k in range(lm):
                            tok = vocab[listener, k]
                            refcount[tok] -= 1
                            if refcount[tok] == 0:
                                nd -= 1
                        vocab[listener, 0] = w
                        vlen[listener] = 1
                        refcount[w] += 1
                        if refcount[w] == 1:
                            nd += 1
                else:
                    if lm == cap:
                        cap = cap * 2
                        bigger = np.zeros((n, cap), dtype=np.int64)
                        bigger[:, :vocab.shape[1]] = vocab
                        vocab = bigger
                    vocab[listener, lm] = w
                    vlen[listener] = lm + 1
                    nw += 1
                    refcount[w] += 1
                    if refcount[w] == 1:
                        nd += 1
                lis_sum += 1
                succ_sum += succ
        else:
            for j in range(row_start, row_start + deg):
                lis = indices[j]
                lm = vlen[lis]
                found = False
                for k in range(lm):
                    if vocab[lis, k] == w:
                        found = True
                        break
                if found:
                    succ += 1
                    if lm > 1:
                        nw -= lm - 1
                        for k in range(lm):
                            tok = vocab[lis, k]
                            refcount[tok] -= 1
                            if refcount[tok] == 0:
                                nd -= 1
                        vocab[lis, 0] = w
                        vlen[lis] = 1
                        refcount[w] += 1
                        if refcount[w] == 1:
                            nd += 1
                else:
                    if lm == cap:
                        cap = cap * 2
                        bigger = np.zeros((n, cap), dtype=np.int64)
                        bigger[:, :vocab.shape[1]] = vocab
                        vocab = bigger
                    vocab[lis, lm] = w
                    vlen[lis] = lm + 1
                    nw += 1
                    refcount[w] += 1
                    if refcount[w] == 1:
                        nd += 1
            lis_sum += deg
            succ_sum += succ

        if succ > 0 and vlen[speaker] > 1:
            sm = vlen[speaker]
            nw -= sm - 1
            for k in range(sm):
                tok = vocab[speaker, k]
                refcount[tok] -= 1
                if refcount[tok] == 0:
                    nd -= 1
            vocab[speaker, 0] = w
            vlen[speaker] = 1
            refcount[w] += 1
            if refcount[w] == 1:
                nd += 1

        steps += 1
        if nd == 1 and nw == n:
            consensus_step = steps
            break

    sc[_STEPS] = steps
    sc[_INVENTIONS] = inventions
    sc[_NW] = nw
    sc[_ND] = nd
    sc[_SUCC] = succ_sum
    sc[_LIS] = lis_sum
    return vocab, consensus_step


class _KernelDriver:
    """Owns the scalar-state vector and syncs it with a SimState."""

    def __init__(self, state: SimState, g: Graph, mode: str, rng: np.random.Generator):
        if mode not in MODES:
            raise ValueError(f"unknown interaction mode {mode!r}")
        self.state = state
        self.g = g
        self.pairwise = mode == PAIRWISE
        self.rng = rng
        self.sc = np.zeros(6, dtype=np.int64)
        self.consensus_step = -1

    def advance_to(self, target_steps: int) -> None:
        """Advance to target_steps (no-op past consensus)."""
        if self.consensus_step >= 0:
            return
        st = self.state
        self.sc[_STEPS] = st.steps
        self.sc[_INVENTIONS] = st.inventions
        self.sc[_NW] = st.total_words
        self.sc[_ND] = st.distinct_words
        vocab, consensus = _advance(
            self.rng, st.n, self.g.indptr, self.g.indices,
            st._vocab, st._vlen, st._refcount, self.sc,
            self.pairwise, target_steps)
        st._vocab = vocab
        st.steps = int(self.sc[_STEPS])
        st.inventions = int(self.sc[_INVENTIONS])
        st.total_words = int(self.sc[_NW])
        st.distinct_words = int(self.sc[_ND])
        if consensus >= 0:
            self.consensus_step = int(consensus)

    def take_bin(self) -> tuple[int, int]:
        succ, lis = int(self.sc[_SUCC]), int(self.sc[_LIS])
        self.sc[_SUCC] = 0
        self.sc[_LIS] = 0
        return succ, lis


@dataclass
class Snapshot:
    """Node contents at (the first event at or after) a requested time."""

    t_requested: float
    t_actual: float
    vocab_sizes: np.ndarray
    words: np.ndarray  # per-node word, -1 unless the node holds exactly one


def run_fast(g: Graph, mode: str, rng: np.random.Generator, max_time: float,
             schedule: observables.SampleSchedule | None = None,
             snapshot_times: tuple[float, ...] = ()) -> tuple[
                 RunResult, observables.RunSeries | None, list[Snapshot]]:
    """Compiled equivalent of dynamics.run plus grid sampling and snapshots.

    Emits the same series a Recorder fed by dynamics.run would produce:
    instantaneous N_w/N_d at each grid time, listener-weighted success rate
    per bin, absorbing values (n, 1, 1.0) after convergence. Snapshots are
    taken at the first event at or after each requested time (at consensus
    state if the run ends earlier).
    """
    if max_time <= 0:
        raise ValueError(f"max_time must be positive, got {max_time}")
    n = g.n
    state = SimState.empty(n)
    driver = _KernelDriver(state, g, mode, rng)
    max_steps = steps_at_or_below(max_time, n)

    # observation targets in step space, processed in order
    grid = schedule.grid if schedule is not None else np.empty(0)
    grid_targets = [steps_at_or_below(t, n) for t in grid]
    snap_targets = sorted(
        (first_step_at_or_after(t, n), float(t)) for t in snapshot_times)

    snapshots: list[Snapshot] = []
    points_nw = np.zeros(grid.size, dtype=np.int64)
    points_nd = np.zeros(grid.size, dtype=np.int64)
    points_s = np.full(grid.size, np.nan)

    def take_snapshot(t_req: float) -> None:
        snapshots.append(Snapshot(
            t_requested=t_req,
            t_actual=state.t,
            vocab_sizes=state.vocab_sizes(),
            words=state.single_word_or_sentinel(),
        ))

    gi = 0
    si = 0
    prev_steps = 0
    while gi < grid.size or si < len(snap_targets):
        if si < len(snap_targets) and (
                gi >= grid.size or snap_targets[si][0] <= grid_targets[gi]):
            target, t_req = snap_targets[si]
            driver.advance_to(min(target, max_steps))
            take_snapshot(t_req)
            si += 1
            continue
        target = min(grid_targets[gi], max_steps)
        driver.advance_to(target)
        effective = (min(driver.consensus_step, target)
                     if driver.consensus_step >= 0 else target)
        events_in_bin = max(effective - prev_steps, 0)
        succ, lis = driver.take_bin()
        if events_in_bin > 0:
            points_nw[gi] = state.total_words
            points_nd[gi] = state.distinct_words
            if lis > 0:
                points_s[gi] = succ / lis
        elif driver.consensus_step >= 0:
            points_nw[gi] = n
            points_nd[gi] = 1
            points_s[gi] = 1.0
        else:
            points_nw[gi] = state.total_words
            points_nd[gi] = state.distinct_words
        prev_steps = max(effective, prev_steps)
        gi += 1

    if driver.consensus_step < 0:
        driver.advance_to(max_steps)

    converged = driver.consensus_step >= 0
    t_c = driver.consensus_step / n if converged else None
    result = RunResult(converged=converged, t_c=t_c, final_state=state)
    series = None
    if schedule is not None:
        series = observables.RunSeries(
            grid=grid.copy(), n_w=points_nw, n_d=points_nd, s=points_s,
            t_c=t_c, converged=converged)
    return result, series, snapshots

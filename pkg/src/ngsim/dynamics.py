"""Naming-game dynamics over a fixed graph.

Two interaction modes share the invention/transmission rules:

broadcast
    A uniformly chosen speaker sends one word to all neighbors at once. A
    listener that holds the word collapses its vocabulary to exactly that word
    (an individual success); one that does not appends the word. If at least
    one listener succeeded, the speaker also collapses to the transmitted word.

pairwise
    One listener is chosen uniformly among the speaker's neighbors; on success
    both sides collapse, on failure the listener appends.

Words are opaque integer tokens issued by a per-run monotone counter, so every
invention is distinct and runs are reproducible. A vocabulary is a node's
duplicate-free, insertion-ordered word list. Time is measured in sweeps:
t = steps / n, one unit per n speaker events.

The random-draw discipline per event is fixed and shared with the compiled
engine (see engine.py), which consumes the identical Generator stream:

    1. speaker index                         always one draw
    2. listener index (pairwise, degree > 1) one draw
    3. invention                             no draw (counter)
    4. transmitted word (vocabulary size > 1) one draw
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import Graph

BROADCAST = "broadcast"
PAIRWISE = "pairwise"
MODES = (BROADCAST, PAIRWISE)

_INITIAL_CAPACITY = 4


@dataclass
class SimState:
    """Per-node vocabularies plus run counters.

    Vocabularies live in a fixed-width int array (``_vocab``/``_vlen``) that
    grows on demand; ``_refcount[token]`` counts holders of each token, which
    keeps ``total_words`` (N_w) and ``distinct_words`` (N_d) O(1) per event.
    Token ids are bounded by n: a node invents at most once, because a
    non-empty vocabulary never empties again.
    """

    n: int
    steps: int = 0
    inventions: int = 0
    total_words: int = 0
    distinct_words: int = 0
    _vocab: np.ndarray = field(repr=False, default=None)
    _vlen: np.ndarray = field(repr=False, default=None)
    _refcount: np.ndarray = field(repr=False, default=None)

    @classmethod
    def empty(cls, n: int) -> "SimState":
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return cls(
            n=n,
            _vocab=np.zeros((n, _INITIAL_CAPACITY), dtype=np.int64),
            _vlen=np.zeros(n, dtype=np.int64),
            _refcount=np.zeros(n, dtype=np.int64),
        )

    @property
    def t(self) -> float:
        return self.steps / self.n

    def vocabulary(self, node: int) -> list[int]:
        return [int(w) for w in self._vocab[node, :self._vlen[node]]]

    @property
    def vocabularies(self) -> list[list[int]]:
        return [self.vocabulary(i) for i in range(self.n)]

    def vocab_sizes(self) -> np.ndarray:
        return self._vlen.copy()

    def single_word_or_sentinel(self) -> np.ndarray:
        """Per node: its word when it holds exactly one, else -1."""
        out = np.where(self._vlen == 1, self._vocab[:, 0], -1)
        return out.astype(np.int64)

    def _grow(self) -> None:
        cap = self._vocab.shape[1]
        bigger = np.zeros((self.n, cap * 2), dtype=np.int64)
        bigger[:, :cap] = self._vocab
        self._vocab = bigger

    def _collapse(self, node: int, word: int) -> None:
        m = int(self._vlen[node])
        self.total_words -= m - 1
        for k in range(m):
            tok = self._vocab[node, k]
            self._refcount[tok] -= 1
            if self._refcount[tok] == 0:
                self.distinct_words -= 1
        self._vocab[node, 0] = word
        self._vlen[node] = 1
        self._refcount[word] += 1
        if self._refcount[word] == 1:
            self.distinct_words += 1

    def _append(self, node: int, word: int) -> None:
        m = int(self._vlen[node])
        if m == self._vocab.shape[1]:
            self._grow()
        self._vocab[node, m] = word
        self._vlen[node] = m + 1
        self.total_words += 1
        self._refcount[word] += 1
        if self._refcount[word] == 1:
            self.distinct_words += 1


@dataclass(frozen=True)
class StepOutcome:
    speaker: int
    transmitted: int
    listener_count: int
    success_count: int
    invented: bool


@dataclass
class RunResult:
    converged: bool
    t_c: float | None
    final_state: SimState


def invent_word(state: SimState) -> int:
    """Issue a token never seen in this run (monotone counter)."""
    token = state.inventions
    state.inventions += 1
    return token


def is_consensus(state: SimState) -> bool:
    """True iff every node holds exactly one word and all words agree.

    Equivalent to N_d = 1 and N_w = n: vocabularies are duplicate-free, so a
    single distinct token with n total words forces one word per node.
    """
    return state.distinct_words == 1 and state.total_words == state.n


def step(state: SimState, g: Graph, mode: str, rng: np.random.Generator) -> StepOutcome:
    """One speaker event; reference implementation of the game rules."""
    n = state.n
    speaker = int(rng.integers(0, n))
    deg = g.degree(speaker)

    listener = -1
    if mode == PAIRWISE and deg > 0:
        if deg > 1:
            listener = int(g.indices[g.indptr[speaker] + rng.integers(0, deg)])
        else:
            listener = int(g.indices[g.indptr[speaker]])

    invented = False
    if state._vlen[speaker] == 0:
        word = invent_word(state)
        state._append(speaker, word)
        invented = True

    m = int(state._vlen[speaker])
    if m > 1:
        word = int(state._vocab[speaker, rng.integers(0, m)])
    else:
        word = int(state._vocab[speaker, 0])

    success = 0
    if mode == BROADCAST:
        listener_count = deg
        for v in g.neighbors(speaker):
            v = int(v)
            row = state._vocab[v]
            lm = int(state._vlen[v])
            if any(row[k] == word for k in range(lm)):
                success += 1
                if lm > 1:
                    state._collapse(v, word)
            else:
                state._append(v, word)
    elif mode == PAIRWISE:
        listener_count = 1 if listener >= 0 else 0
        if listener >= 0:
            row = state._vocab[listener]
            lm = int(state._vlen[listener])
            if any(row[k] == word for k in range(lm)):
                success = 1
                if lm > 1:
                    state._collapse(listener, word)
            else:
                state._append(listener, word)
    else:
        raise ValueError(f"unknown interaction mode {mode!r}")

    if success > 0 and state._vlen[speaker] > 1:
        state._collapse(speaker, word)
    state.steps += 1
    return StepOutcome(speaker, word, listener_count, success, invented)


def steps_at_or_below(t: float, n: int) -> int:
    """Largest step count s with s / n <= t, matching float division exactly."""
    s = int(t * n)
    while (s + 1) / n <= t:
        s += 1
    while s > 0 and s / n > t:
        s -= 1
    return s


def first_step_at_or_after(t: float, n: int) -> int:
    """Smallest step count s with s / n >= t."""
    s = max(steps_at_or_below(t, n), 1)
    if s / n < t:
        s += 1
    return s


def run(g: Graph, mode: str, rng: np.random.Generator, recorder,
        max_time: float) -> RunResult:
    """Step until global agreement or ``max_time`` sweeps, recording as we go.

    The recorder (see observables.Recorder) receives every outcome together
    with the post-event time and word counters; pass None to skip recording.
    Non-convergence is reported through the result, not raised.
    """
    if max_time <= 0:
        raise ValueError(f"max_time must be positive, got {max_time}")
    if mode not in MODES:
        raise ValueError(f"unknown interaction mode {mode!r}")
    state = SimState.empty(g.n)
    max_steps = steps_at_or_below(max_time, g.n)
    while state.steps < max_steps:
        outcome = step(state, g, mode, rng)
        if recorder is not None:
            recorder.record(state.t, state.total_words, state.distinct_words, outcome)
        if is_consensus(state):
            t_c = state.steps / state.n
            if recorder is not None:
                recorder.finalize(converged=True, n=state.n, t_c=t_c)
            return RunResult(converged=True, t_c=t_c, final_state=state)
    if recorder is not None:
        recorder.finalize(converged=False, n=state.n, t_c=None)
    return RunResult(converged=False, t_c=None, final_state=state)

"""Exact Markov-chain expectation for the pairwise game on the triangle K3.

Built independently of the simulation code: states are explicit vocabulary
triples, transitions enumerate speaker (1/3), listener (1/2) and word
(1/|vocab|) choices, and the expected absorption step count is solved in
exact rational arithmetic. Word labels are interchangeable, so states are
canonicalized over label permutations to keep the chain finite (18 states).
"""

import itertools
from fractions import Fraction


def canonical(state):
    """Lexicographically smallest relabeling of the words present."""
    words = sorted({w for vocab in state for w in vocab})
    best = None
    for perm in itertools.permutations(words):
        relabel = dict(zip(words, perm))
        cand = tuple(tuple(sorted(relabel[w] for w in vocab)) for vocab in state)
        if best is None or cand < best:
            best = cand
    return best


def transitions(state):
    """(probability, next_state) pairs for one speaker event."""
    for speaker in range(3):
        for listener in (v for v in range(3) if v != speaker):
            vocab = state[speaker]
            if not vocab:
                fresh = max((w for v in state for w in v), default=-1) + 1
                vocab = (fresh,)
            for word in vocab:
                prob = Fraction(1, 6) * Fraction(1, len(vocab))
                nxt = [set(v) for v in state]
                nxt[speaker] = set(vocab)
                if word in state[listener]:
                    nxt[listener] = {word}
                    nxt[speaker] = {word}
                else:
                    nxt[listener] = set(state[listener]) | {word}
                yield prob, canonical(tuple(tuple(sorted(v)) for v in nxt))


def is_absorbing(state):
    return all(len(v) == 1 for v in state) and len({v[0] for v in state}) == 1


def _solve(matrix, rhs):
    """Gaussian elimination over Fractions."""
    m = len(rhs)
    a = [row[:] for row in matrix]
    b = rhs[:]
    for col in range(m):
        pivot = next(r for r in range(col, m) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        b[col] *= inv
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return b


def expected_consensus_time():
    """Exact mean t_c (in sweeps, steps/3) from the all-empty start."""
    start = canonical(((), (), ()))
    states = [start]
    index = {start: 0}
    outgoing = []
    i = 0
    while i < len(states):
        s = states[i]
        row = {}
        if not is_absorbing(s):
            for p, nxt in transitions(s):
                if nxt not in index:
                    index[nxt] = len(states)
                    states.append(nxt)
                row[nxt] = row.get(nxt, Fraction(0)) + p
        outgoing.append(row)
        i += 1

    transient = [s for s in states if not is_absorbing(s)]
    tindex = {s: k for k, s in enumerate(transient)}
    m = len(transient)
    a = [[Fraction(0)] * m for _ in range(m)]
    b = [Fraction(1)] * m
    for s in transient:
        k = tindex[s]
        a[k][k] += 1
        for nxt, p in outgoing[index[s]].items():
            if nxt in tindex:
                a[k][tindex[nxt]] -= p
    steps = _solve(a, b)
    return steps[tindex[start]] / 3

from fractions import Fraction

import numpy as np
import pytest

from ngsim.dynamics import (
    BROADCAST,
    PAIRWISE,
    SimState,
    first_step_at_or_after,
    invent_word,
    is_consensus,
    run,
    step,
    steps_at_or_below,
)
from ngsim.engine import run_fast
from ngsim.topology import RggConfig, generate_complete, generate_lattice_2d, generate_rgg

from markov_oracle import expected_consensus_time


class ScriptedRng:
    """Stands in for a Generator in forced-step tests."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, low, high):
        v = self.values.pop(0)
        assert low <= v < high, f"scripted draw {v} outside [{low}, {high})"
        return v


def force_vocab(state: SimState, node: int, words: list[int]) -> None:
    """Test helper: install a vocabulary, keeping counters consistent.

    Tokens must stay below n, like in any reachable state (a node invents at
    most once, so a run never issues more than n tokens).
    """
    assert state._vlen[node] == 0
    for w in words:
        assert 0 <= w < state.n
        state.inventions = max(state.inventions, w + 1)
        state._append(node, w)


class TestStepBroadcast:
    def test_empty_pair_invention(self):
        g = generate_complete(2)
        state = SimState.empty(2)
        out = step(state, g, BROADCAST, ScriptedRng([0]))
        assert out.invented is True
        assert out.listener_count == 1
        assert out.success_count == 0
        assert state.vocabulary(0) == [out.transmitted]
        assert state.vocabulary(1) == [out.transmitted]
        assert state.total_words == 2 and state.distinct_words == 1

    def test_listener_collapse_on_match(self):
        g = generate_complete(2)
        state = SimState.empty(2)
        force_vocab(state, 0, [0])
        force_vocab(state, 1, [0, 1])
        out = step(state, g, BROADCAST, ScriptedRng([0]))
        assert out.success_count == 1 and out.listener_count == 1
        assert out.transmitted == 0
        assert state.vocabulary(1) == [0]
        assert state.vocabulary(0) == [0]

    def test_complete_graph_one_step_consensus(self):
        for n in (2, 5, 16):
            g = generate_complete(n)
            state = SimState.empty(n)
            out = step(state, g, BROADCAST, np.random.default_rng(n))
            assert out.invented and out.success_count == 0
            assert is_consensus(state)

    def test_failure_appends_without_deletion(self):
        g = generate_complete(2)
        state = SimState.empty(2)
        force_vocab(state, 0, [0])
        force_vocab(state, 1, [1])
        out = step(state, g, BROADCAST, ScriptedRng([0]))
        assert out.success_count == 0
        assert state.vocabulary(1) == [1, 0]
        assert state.vocabulary(0) == [0]

    def test_speaker_collapses_only_on_some_success(self):
        # node 0 talks to 1 and 2; only node 1 knows the transmitted word
        g = generate_complete(3)
        state = SimState.empty(3)
        force_vocab(state, 0, [0, 1])
        force_vocab(state, 1, [0])
        force_vocab(state, 2, [2])
        out = step(state, g, BROADCAST, ScriptedRng([0, 0]))  # speaker 0, word index 0
        assert out.transmitted == 0
        assert out.success_count == 1
        assert state.vocabulary(0) == [0]
        assert state.vocabulary(2) == [2, 0]


class TestStepPairwise:
    def test_success_collapses_both(self):
        g = generate_complete(3)
        state = SimState.empty(3)
        force_vocab(state, 0, [0, 1])
        force_vocab(state, 1, [1, 2])
        # draws: speaker 0, listener index 0 (node 1), word index 1 (word 1)
        out = step(state, g, PAIRWISE, ScriptedRng([0, 0, 1]))
        assert out.transmitted == 1
        assert out.success_count == 1 and out.listener_count == 1
        assert state.vocabulary(0) == [1]
        assert state.vocabulary(1) == [1]

    def test_failure_appends_to_listener_only(self):
        g = generate_complete(3)
        state = SimState.empty(3)
        force_vocab(state, 0, [0, 1])
        force_vocab(state, 1, [2])
        out = step(state, g, PAIRWISE, ScriptedRng([0, 0, 0]))
        assert out.success_count == 0
        assert state.vocabulary(0) == [0, 1]
        assert state.vocabulary(1) == [2, 0]

    def test_isolated_speaker_is_null_event_with_invention(self):
        cfg = RggConfig(n=3, box_length=100.0, radius=0.001)
        g = generate_rgg(cfg, np.random.default_rng(0))
        assert g.edge_count == 0
        state = SimState.empty(3)
        out = step(state, g, PAIRWISE, ScriptedRng([1]))
        assert out.listener_count == 0 and out.success_count == 0
        assert out.invented
        assert state.steps == 1
        assert state.vocabulary(1) == [out.transmitted]


class TestInventWord:
    def test_counter_tokens(self):
        state = SimState.empty(4)
        assert invent_word(state) == 0
        assert invent_word(state) == 1
        assert invent_word(state) == 2

    def test_inventions_distinct_in_run(self):
        g = generate_complete(6)
        state = SimState.empty(6)
        rng = np.random.default_rng(3)
        seen = []
        for _ in range(50):
            out = step(state, g, PAIRWISE, rng)
            if out.invented:
                seen.append(out.transmitted)
        assert len(seen) == len(set(seen))


class TestIsConsensus:
    def test_all_same_single_word(self):
        state = SimState.empty(3)
        for node in range(3):
            force_vocab(state, node, [0])
        assert is_consensus(state)

    def test_extra_word_blocks(self):
        state = SimState.empty(3)
        force_vocab(state, 0, [0, 1])
        force_vocab(state, 1, [0])
        force_vocab(state, 2, [0])
        assert not is_consensus(state)

    def test_two_camps_block(self):
        state = SimState.empty(2)
        force_vocab(state, 0, [0])
        force_vocab(state, 1, [1])
        assert not is_consensus(state)


class TestRun:
    def test_two_node_path_exact_tc(self):
        g = generate_complete(2)
        result = run(g, BROADCAST, np.random.default_rng(0), None, max_time=10.0)
        assert result.converged
        assert result.t_c == 0.5

    @pytest.mark.parametrize("n", [2, 4, 16, 64])
    def test_complete_broadcast_one_step(self, n):
        g = generate_complete(n)
        result = run(g, BROADCAST, np.random.default_rng(n), None, max_time=10.0)
        assert result.converged
        assert result.t_c == 1 / n

    def test_max_time_exhaustion_reports_not_raises(self):
        cfg = RggConfig(n=8, box_length=100.0, radius=0.001)
        g = generate_rgg(cfg, np.random.default_rng(0))  # edgeless, can't agree
        result = run(g, BROADCAST, np.random.default_rng(1), None, max_time=5.0)
        assert not result.converged
        assert result.t_c is None
        assert result.final_state.steps == 5 * 8

    def test_k3_pairwise_matches_markov_oracle(self):
        exact = float(expected_consensus_time())
        assert exact == pytest.approx(float(Fraction(191, 108)), abs=1e-12)
        g = generate_complete(3)
        runs = 100_000
        tcs = np.empty(runs)
        for i in range(runs):
            res, _, _ = run_fast(g, PAIRWISE, np.random.default_rng(500_000 + i), 1000.0)
            tcs[i] = res.t_c
        se = tcs.std(ddof=1) / np.sqrt(runs)
        assert abs(tcs.mean() - exact) <= 3 * se


class TestInvariants:
    @pytest.mark.parametrize("mode", [BROADCAST, PAIRWISE])
    def test_absorbing_state(self, mode):
        cfg = RggConfig(n=24, box_length=5.0, target_avg_degree=8.0)
        g = generate_rgg(cfg, np.random.default_rng(12))
        rng = np.random.default_rng(34)
        result = run(g, mode, rng, None, max_time=5000.0)
        assert result.converged
        state = result.final_state
        frozen = state.vocabularies
        for _ in range(1000):
            out = step(state, g, mode, rng)
            assert out.success_count == out.listener_count
            assert not out.invented
        assert state.vocabularies == frozen
        assert is_consensus(state)

    def test_speaker_collapse_after_success(self):
        cfg = RggConfig(n=40, box_length=6.0, target_avg_degree=9.0)
        g = generate_rgg(cfg, np.random.default_rng(5))
        state = SimState.empty(40)
        rng = np.random.default_rng(6)
        for _ in range(3000):
            out = step(state, g, BROADCAST, rng)
            if out.success_count >= 1:
                assert state._vlen[out.speaker] == 1
                assert state.vocabulary(out.speaker) == [out.transmitted]

    @pytest.mark.parametrize("mode", [BROADCAST, PAIRWISE])
    def test_no_duplicates_and_invention_bounds(self, mode):
        cfg = RggConfig(n=30, box_length=6.0, target_avg_degree=7.0)
        g = generate_rgg(cfg, np.random.default_rng(21))
        state = SimState.empty(30)
        rng = np.random.default_rng(22)
        words_seen = set()
        for _ in range(2000):
            out = step(state, g, mode, rng)
            words_seen.add(out.transmitted)
            vocab = state.vocabulary(out.speaker)
            assert len(vocab) == len(set(vocab))
        for node in range(30):
            vocab = state.vocabulary(node)
            assert len(vocab) == len(set(vocab))
            # words never appear from nowhere: all tokens are counter-issued
            assert all(0 <= w < state.inventions for w in vocab)
        assert state.distinct_words <= state.inventions <= state.steps

    def test_counter_consistency_against_full_scan(self):
        cfg = RggConfig(n=25, box_length=5.0, target_avg_degree=6.0)
        g = generate_rgg(cfg, np.random.default_rng(8))
        state = SimState.empty(25)
        rng = np.random.default_rng(9)
        for i in range(500):
            step(state, g, BROADCAST, rng)
            if i % 50 == 0:
                vocabs = state.vocabularies
                assert state.total_words == sum(len(v) for v in vocabs)
                assert state.distinct_words == len({w for v in vocabs for w in v})

    def test_early_invention_count_decreases_with_degree(self):
        # after one sweep (t=1), invention count shrinks as degree grows
        n, box = 512, float(np.sqrt(512))
        means = []
        for kbar in (12.0, 50.0):
            counts = []
            for seed in range(30):
                cfg = RggConfig(n=n, box_length=box, target_avg_degree=kbar)
                rng = np.random.default_rng(1000 + seed)
                g = generate_rgg(cfg, rng)
                state = SimState.empty(n)
                for _ in range(n):
                    step(state, g, BROADCAST, rng)
                assert 1 <= state.inventions <= n
                counts.append(state.inventions)
            means.append(np.mean(counts))
        assert means[1] < means[0]

    @pytest.mark.parametrize("mode", [BROADCAST, PAIRWISE])
    def test_determinism_same_seed_same_outcomes(self, mode):
        cfg = RggConfig(n=20, box_length=4.0, target_avg_degree=6.0)
        g = generate_rgg(cfg, np.random.default_rng(77))
        sequences = []
        for _ in range(2):
            state = SimState.empty(20)
            rng = np.random.default_rng(88)
            sequences.append([step(state, g, mode, rng) for _ in range(400)])
        assert sequences[0] == sequences[1]


class TestStepTimeHelpers:
    def test_steps_at_or_below_exact_boundaries(self):
        for n in (3, 7, 16, 1000):
            for s in (0, 1, 5, n, 3 * n + 1):
                t = s / n
                assert steps_at_or_below(t, n) == s
        assert steps_at_or_below(0.0999, 10) == 0
        assert steps_at_or_below(0.1, 10) == 1

    def test_first_step_at_or_after(self):
        assert first_step_at_or_after(0.5, 2) == 1
        assert first_step_at_or_after(1.0, 2) == 2
        assert first_step_at_or_after(1.01, 2) == 3
        for n in (3, 7, 1000):
            for s in (1, 2, n):
                assert first_step_at_or_after(s / n, n) == s

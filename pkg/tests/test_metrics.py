import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import naive
from hubobench.metrics import (
    INFINITE,
    SuccessCriterion,
    aggregate_throughput,
    best_so_far_at,
    closeness_curve,
    compute_tts,
    estimate_p_hit,
    geometric_mean_tts,
    speedup_table,
    throughput,
    tts_from_results,
)
from hubobench.solvers.base import RunResult


def result(energy, elapsed=1.0, flips=100):
    return RunResult("X", energy, np.ones(2, np.int8), [(elapsed, energy)], flips, 0, elapsed)


class TestTTS:
    def test_p_equals_target(self):
        assert compute_tts(1.0, 0.99).tts == 1.0

    def test_half(self):
        # ln(0.01) / ln(0.5) runs of one second
        assert compute_tts(1.0, 0.5).tts == pytest.approx(6.6439, abs=1e-4)
        assert compute_tts(1.0, 0.5).tts == pytest.approx(math.log(0.01) / math.log(0.5), rel=1e-12)

    def test_zero_is_infinite(self):
        r = compute_tts(2.0, 0.0)
        assert r.tts == INFINITE and not r.finite

    def test_certain_success(self):
        assert compute_tts(3.0, 1.0).tts == 3.0

    def test_high_probability_below_one_run(self):
        assert compute_tts(1.0, 0.999).tts < 1.0

    @pytest.mark.parametrize("args", [(1.0, -0.1), (1.0, 1.1), (0.0, 0.5), (math.inf, 0.5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            compute_tts(*args)

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            compute_tts(1.0, 0.5, p_target=1.0)

    def test_from_results(self):
        runs = [result(-10.0, 2.0)] * 5 + [result(-9.0, 4.0)] * 5
        r = tts_from_results(runs, SuccessCriterion(-10.0))
        assert (r.n_hits, r.n_runs, r.p_hit, r.t_run) == (5, 10, 0.5, 3.0)


class TestPHit:
    def test_half(self):
        crit = SuccessCriterion(-10.0)
        p, counts = estimate_p_hit([-10.0, -9.0], crit)
        assert p == 0.5 and counts == (1, 2)

    def test_epsilon_boundary(self):
        crit = SuccessCriterion(-10.0, epsilon=1e-4)
        energies = [-10.0 + 1e-4] * 37 + [-10.0 + 2e-4] * 63
        p, counts = estimate_p_hit(energies, crit)
        assert p == 0.37 and counts == (37, 100)

    def test_empty(self):
        with pytest.raises(ValueError):
            estimate_p_hit([], SuccessCriterion(-1.0))

    @pytest.mark.parametrize("kw", [{"e_target": math.nan}, {"e_target": 0.0, "epsilon": -1.0},
                                    {"e_target": 0.0, "p_target": 1.0}])
    def test_invalid_criterion(self, kw):
        with pytest.raises(ValueError):
            SuccessCriterion(**kw)


class TestCloseness:
    def test_constant_one_at_target(self):
        c = closeness_curve({"a": [[(0.1, -5.0)]]}, {"a": -5.0}, grid=[0.1, 1.0])
        np.testing.assert_array_equal(c.mean, [1.0, 1.0])

    def test_below_target_exceeds_one(self):
        c = closeness_curve({"a": [[(0.1, -6.0)]]}, {"a": -5.0}, grid=[0.5])
        assert c.mean[0] > 1

    def test_two_instance_mean_and_population_sigma(self):
        c = closeness_curve({"a": [[(0.1, -9.0)]], "b": [[(0.1, -11.0)]]},
                            {"a": -10.0, "b": -10.0}, grid=[1.0])
        assert c.mean[0] == pytest.approx(1.0)
        assert c.sigma[0] == pytest.approx(0.1)

    def test_nan_before_first_sample(self):
        c = closeness_curve({"a": [[(0.5, -1.0)]]}, {"a": -2.0}, grid=[0.1, 0.5, 0.9])
        assert math.isnan(c.mean[0])
        np.testing.assert_array_equal(c.mean[1:], [0.5, 0.5])
        assert c.count.tolist() == [0, 1, 1]

    def test_min_over_trials(self):
        traces = {"a": [[(0.1, -1.0), (1.0, -3.0)], [(0.5, -2.0)]]}
        c = closeness_curve(traces, {"a": -4.0}, grid=[0.2, 0.6, 2.0])
        np.testing.assert_allclose(c.per_instance["a"], [0.25, 0.5, 0.75])

    def test_requires_negative_target(self):
        with pytest.raises(ValueError, match="negative target"):
            closeness_curve({"a": [[(0.1, 1.0)]]}, {"a": 0.0}, grid=[1.0])

    def test_missing_target_or_trace(self):
        with pytest.raises(ValueError):
            closeness_curve({"a": [[(0.1, -1.0)]]}, {}, grid=[1.0])
        with pytest.raises(ValueError):
            closeness_curve({"a": [[]]}, {"a": -1.0}, grid=[1.0])

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            closeness_curve({"a": [[(0.1, -1.0)]]}, {"a": -1.0}, grid=[1.0, 0.5])

    def test_default_grid_spans_samples(self):
        c = closeness_curve({"a": [[(0.01, -1.0), (2.0, -2.0)]]}, {"a": -2.0})
        assert c.grid[0] == pytest.approx(0.01) and c.grid[-1] == pytest.approx(2.0)
        assert c.mean[-1] == pytest.approx(1.0)

    @given(st.lists(st.tuples(st.floats(0.001, 10), st.floats(-100, -0.01)), min_size=1, max_size=20))
    def test_monotone_in_time(self, samples):
        samples = sorted(samples)
        trace, seen = [], set()
        for t, e in samples:
            if t not in seen:
                trace.append((t, e))
                seen.add(t)
        grid = np.linspace(0.001, 11, 50)
        c = closeness_curve({"a": [trace]}, {"a": -100.0}, grid=grid)
        m = c.mean[~np.isnan(c.mean)]
        assert np.all(np.diff(m) >= 0)

    @given(st.floats(0.01, 100), st.floats(0.1, 10))
    def test_energy_scale_invariant(self, scale, t):
        trace = [(0.1, -3.0), (t + 0.2, -7.0)]
        grid = [0.05, 0.15, t + 0.3]
        a = closeness_curve({"a": [trace]}, {"a": -8.0}, grid=grid)
        b = closeness_curve({"a": [[(x, e * scale) for x, e in trace]]}, {"a": -8.0 * scale},
                            grid=grid)
        np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12)


def test_best_so_far_is_step_function():
    got = best_so_far_at([(1.0, -1.0), (2.0, -3.0)], [0.5, 1.0, 1.5, 2.0, 9.0])
    np.testing.assert_array_equal(got[1:], [-1.0, -1.0, -3.0, -3.0])
    assert math.isnan(got[0])


class TestGeometricMean:
    def test_plain(self):
        assert geometric_mean_tts([1.0, 100.0]) == (pytest.approx(10.0), 0)

    def test_infinite_excluded_and_flagged(self):
        value, n_inf = geometric_mean_tts([2.0, 8.0, INFINITE])
        assert value == pytest.approx(4.0) and n_inf == 1

    def test_all_infinite(self):
        assert geometric_mean_tts([INFINITE, INFINITE]) == (None, 2)

    def test_invalid(self):
        with pytest.raises(ValueError):
            geometric_mean_tts([])
        with pytest.raises(ValueError):
            geometric_mean_tts([0.0])

    @given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=30))
    def test_matches_naive(self, values):
        value, _ = geometric_mean_tts(values)
        assert value == pytest.approx(naive.geometric_mean(values), rel=1e-9)
        assert min(values) * (1 - 1e-12) <= value <= max(values) * (1 + 1e-12)

    @given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=10), st.floats(0.01, 100))
    def test_scale_equivariant(self, values, k):
        a, _ = geometric_mean_tts(values)
        b, _ = geometric_mean_tts([v * k for v in values])
        assert b == pytest.approx(a * k, rel=1e-9)


class TestTTSProperties:
    @given(st.floats(0.01, 0.98), st.floats(0.01, 0.98))
    def test_monotone_in_p(self, p, q):
        lo, hi = sorted((p, q))
        assert compute_tts(1.0, lo).tts >= compute_tts(1.0, hi).tts

    @given(st.floats(1e-3, 1e3), st.floats(0.01, 0.999))
    def test_linear_in_t_run(self, t, p):
        assert compute_tts(t, p).tts == pytest.approx(t * compute_tts(1.0, p).tts, rel=1e-12)


class TestThroughput:
    def test_single(self):
        assert throughput(result(-1.0, 2.0, 1000)) == 500.0

    def test_aggregate(self):
        assert aggregate_throughput([result(-1.0, 1.0, 100), result(-1.0, 3.0, 700)]) == 200.0

    def test_zero_time(self):
        with pytest.raises(ValueError):
            throughput(result(-1.0, 0.0))


class TestSpeedup:
    def test_ratios_and_wins(self):
        t = speedup_table({"a": 1.0, "b": 4.0}, {"a": 2.0, "b": 2.0})
        assert t.ratios == {"a": 2.0, "b": 0.5}
        assert (t.wins_a, t.wins_b) == (1, 1)

    def test_infinite_loses(self):
        t = speedup_table({"a": 1.0, "b": INFINITE, "c": INFINITE}, {"a": INFINITE, "b": 1.0, "c": INFINITE})
        assert t.ratios["a"] == INFINITE and t.ratios["b"] == 0.0 and math.isnan(t.ratios["c"])
        assert (t.wins_a, t.wins_b) == (1, 1)

    def test_key_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            speedup_table({"a": 1.0}, {"b": 1.0})

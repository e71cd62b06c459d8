# tests/test_changepoint.py
import itertools
import math
import unittest

import numpy as np
from scipy import stats

from engine.errors import DomainError, PartitionExtensionRequired
from engine.mixture import AtomStore, BaselineSpec, KernelSpec
from engine.random_stream import RandomStream
from engine.weights import overlap_statistic, sup_weight_diff
from models.changepoint import (
    ChangepointModel, GapRate, Partition, extend_partition, generate_data, indicator_weights, locate,
    overlap_exact, same_component_prob, sample_partition,
)


class TestPartition(unittest.TestCase):

    def setUp(self):
        self.partition = Partition((1.0, 2.0, 3.0), 3.0)

    def test_count_oracle(self):
        rng = RandomStream(1)
        counts = [sample_partition(GapRate(1.0), 10.0, rng.substream(i)).count_in(0.0, 10.0) for i in range(10000)]
        self.assertLess(abs(np.mean(counts) - 10.0), 4 * math.sqrt(10.0 / 10000))

    def test_tiny_horizon(self):
        partition = sample_partition(GapRate(1.0), 1e-9, RandomStream(2))
        self.assertEqual(len(partition.taus), 1)
        self.assertGreaterEqual(partition.taus[0], 1e-9)

    def test_gaps(self):
        np.testing.assert_allclose(self.partition.gaps, [1.0, 1.0, 1.0])

    def test_rejects_unsorted(self):
        with self.assertRaises(DomainError):
            Partition((2.0, 1.0), 1.0)

    def test_rejects_uncovered_horizon(self):
        with self.assertRaises(DomainError):
            Partition((1.0,), 5.0)

    def test_extension_keeps_prefix(self):
        base = sample_partition(GapRate(2.0), 3.0, RandomStream(3))
        longer = extend_partition(base, 20.0, RandomStream(4), GapRate(2.0))
        self.assertEqual(longer.taus[: len(base.taus)], base.taus)
        self.assertGreaterEqual(longer.taus[-1], 20.0)
        self.assertIs(extend_partition(longer, 5.0, RandomStream(4), GapRate(2.0)), longer)


class TestLocate(unittest.TestCase):

    def setUp(self):
        self.partition = Partition((1.0, 2.0, 3.0), 3.0)

    def test_first_interval(self):
        self.assertEqual(locate(self.partition, 0.5), 1)

    def test_boundary_belongs_left(self):
        self.assertEqual(locate(self.partition, 1.0), 1)

    def test_just_past_boundary(self):
        self.assertEqual(locate(self.partition, 1.000001), 2)

    def test_beyond_horizon(self):
        with self.assertRaises(PartitionExtensionRequired) as ctx:
            locate(self.partition, 3.5)
        self.assertEqual(ctx.exception.last_tau, 3.0)


class TestIndicatorWeights(unittest.TestCase):

    def setUp(self):
        self.partition = Partition((1.0, 2.0, 3.0, 4.0, 5.0), 5.0)

    def test_first_interval(self):
        np.testing.assert_array_equal(indicator_weights(self.partition, 0.3, 4).weights, [1, 0, 0, 0])

    def test_middle(self):
        w = indicator_weights(Partition((1.0, 2.0), 2.0), 1.5, 3)
        np.testing.assert_array_equal(w.weights, [0, 1, 0])
        self.assertEqual(w.tail_mass, 0.0)

    def test_beyond_K_in_tail(self):
        with self.assertLogs("models.changepoint", level="WARNING"):
            w = indicator_weights(self.partition, 4.5, 3)
        self.assertEqual(w.tail_mass, 1.0)

    def test_generic_statistics_agree_with_exact(self):
        rng = RandomStream(5)
        for i in range(300):
            partition = sample_partition(GapRate(1.0), 4.0, rng.substream(i))
            w_t, w_th = indicator_weights(partition, 1.0, 50), indicator_weights(partition, 1.7, 50)
            exact = overlap_exact(partition, 1.0, 0.7)
            self.assertEqual(overlap_statistic(w_t, w_th).value, exact)
            self.assertEqual(sup_weight_diff(w_t, w_th).value, 1 - exact)


class TestOverlap(unittest.TestCase):

    def test_zero_lag(self):
        self.assertEqual(overlap_exact(Partition((1.0,), 1.0), 0.5, 0.0), 1)

    def test_change_inside_lag(self):
        self.assertEqual(overlap_exact(Partition((1.0, 2.0), 2.0), 0.5, 1.0), 0)

    def test_monte_carlo_law(self):
        n = 20000
        for k, (rate, h) in enumerate(itertools.product((1.0, 2.0), (1.0, 0.1, 0.01, 0.001))):
            rng = RandomStream(600 + k)
            hits = [overlap_exact(sample_partition(GapRate(rate), 1.0 + h, rng.substream(i)), 1.0, h)
                    for i in range(n)]
            p = same_component_prob(GapRate(rate), h)
            self.assertAlmostEqual(p, math.exp(-rate * h), places=15)
            self.assertLess(abs(np.mean(hits) - p), 4 * math.sqrt(p * (1 - p) / n), f"rate={rate} h={h}")

    def test_residual_gap_is_memoryless(self):
        # the wait from an arbitrary t to the next change point is again Exponential(rate)
        rate, t = 1.5, 2.7
        rng = RandomStream(7)
        residuals = []
        for i in range(5000):
            partition = sample_partition(GapRate(rate), t, rng.substream(i))
            residuals.append(partition.taus[locate(partition, t) - 1] - t)
        self.assertGreater(stats.kstest(residuals, "expon", args=(0.0, 1.0 / rate)).pvalue, 1e-3)
        gaps = sample_partition(GapRate(rate), 4000.0, RandomStream(8)).gaps
        self.assertGreater(stats.kstest(gaps, "expon", args=(0.0, 1.0 / rate)).pvalue, 1e-3)

    def test_same_component_prob(self):
        self.assertEqual(same_component_prob(GapRate(1.0), 0.0), 1.0)
        self.assertAlmostEqual(same_component_prob(GapRate(1.0), 0.1), 0.904837, places=6)
        self.assertAlmostEqual(same_component_prob(GapRate(2.0), 0.5), math.exp(-1.0), places=15)
        self.assertGreater(same_component_prob(GapRate(1.0), 1e-6), 1.0 - 2e-6)

    def test_rejects_negative_lag(self):
        with self.assertRaises(DomainError):
            same_component_prob(GapRate(1.0), -0.1)


class TestGenerateData(unittest.TestCase):

    def test_single_segment_moments(self):
        atoms = AtomStore(BaselineSpec(), RandomStream(7), initial=[(0.0, 1.0)])
        times = np.arange(1, 10001) / 1000.0
        data = generate_data(Partition((11.0,), 10.0), atoms, KernelSpec(), times, RandomStream(8))
        self.assertLess(abs(data.values.mean()), 4.0 / 100.0)
        self.assertLess(abs(data.values.var(ddof=1) - 1.0), 4 * math.sqrt(2.0 / 10000))

    def test_two_segments(self):
        atoms = AtomStore(BaselineSpec(), RandomStream(7), initial=[(0.0, 0.25), (3.0, 0.25)])
        times = np.round(np.arange(1, 101) * 0.1, 10)
        data = generate_data(Partition((5.0, 20.0), 10.0), atoms, KernelSpec(), times, RandomStream(9))
        left, right = data.values[times <= 5.0], data.values[times > 5.0]
        self.assertLess(abs(left.mean()), 4 * 0.5 / math.sqrt(left.size))
        self.assertLess(abs(right.mean() - 3.0), 4 * 0.5 / math.sqrt(right.size))

    def test_rejects_unsorted_times(self):
        atoms = AtomStore(BaselineSpec(), RandomStream(7))
        with self.assertRaises(DomainError):
            generate_data(Partition((5.0,), 5.0), atoms, KernelSpec(), [2.0, 1.0], RandomStream(9))


class TestModel(unittest.TestCase):

    def test_analytic(self):
        self.assertAlmostEqual(ChangepointModel(rate=2.0).analytic_expected_overlap(0.5), math.exp(-1.0))

    def test_zero_lag_overlap_is_one(self):
        model = ChangepointModel()
        self.assertTrue(all(model.sample_overlap(3.0, 0.0, RandomStream(10).substream(i))[0] == 1.0
                            for i in range(100)))

    def test_weight_trace(self):
        trace = ChangepointModel().sample_weights([0.5, 1.0, 2.0], 10, RandomStream(11))
        self.assertEqual(len(trace), 3)
        self.assertTrue(all(math.fsum(w.weights) + w.tail_mass == 1.0 for w in trace))


if __name__ == '__main__':
    unittest.main()

# tests/test_inference.py
import math
import unittest

import numpy as np
from scipy import integrate, stats

from engine.errors import DataError, DomainError, UnsupportedModelError
from engine.mixture import BaselineSpec, KernelSpec
from engine.random_stream import RandomStream
from inference.marginal import SegmentStatistics, nig_posterior, segment_marginal_likelihood
from inference.sampler import (
    ChangepointSampler, InferenceConfig, PosteriorDraws, birth_probability, death_probability, merge_draws,
    run_chains, run_sampler,
)
from inference.summary import change_probability, count_distribution, mean_function, posterior_summary
from models.changepoint import Dataset
from utils.estimators import batch_means_se


def student_t_logpdf(y, baseline, n=0, total=0.0, sumsq=0.0):
    """Posterior predictive of the next observation after n centred observations."""
    post = nig_posterior(n, total, sumsq, baseline)
    scale = math.sqrt(post.scale * (post.kappa + 1.0) / (post.shape * post.kappa))
    return stats.t.logpdf(y, df=2.0 * post.shape, loc=post.mean, scale=scale)


def one_change_dataset(seed=0):
    gen = np.random.default_rng(seed)
    times = np.round(np.arange(1, 101) * 0.1, 10)
    values = np.where(times <= 5.0, 0.0, 3.0) + gen.normal(0.0, 0.5, size=times.size)
    return Dataset(times, values)


class TestMarginal(unittest.TestCase):
    """Closed-form segment marginal of the normal / normal-inverse-gamma pair."""

    def setUp(self):
        self.baseline = BaselineSpec()
        self.kernel = KernelSpec()

    def test_empty_segment(self):
        self.assertEqual(segment_marginal_likelihood([], self.baseline, self.kernel), 0.0)

    def test_single_observation_is_student_t(self):
        for y in (-2.0, 0.0, 0.3, 4.5):
            self.assertAlmostEqual(segment_marginal_likelihood([y], self.baseline, self.kernel),
                                   student_t_logpdf(y, self.baseline), delta=1e-9)

    def test_chain_rule_of_predictives(self):
        baseline = BaselineSpec(mean0=1.0, kappa0=0.5, shape0=3.0, scale0=2.0)
        y = [0.4, 1.7, -0.2]
        expected = 0.0
        for i, value in enumerate(y):
            shifted = np.asarray(y[:i]) - baseline.mean0
            expected += student_t_logpdf(value, baseline, i, float(shifted.sum()), float((shifted ** 2).sum()))
        self.assertAlmostEqual(segment_marginal_likelihood(y, baseline, self.kernel), expected, delta=1e-9)

    def test_matches_quadrature_on_random_slices(self):
        # integrate the mean out in closed form, then the variance numerically on a log scale
        baseline = BaselineSpec(mean0=0.5, kappa0=0.3, shape0=2.5, scale0=1.5)
        gen = np.random.default_rng(17)
        values = gen.normal(1.0, 2.0, size=60)
        for _ in range(50):
            lo = int(gen.integers(0, 59))
            hi = int(gen.integers(lo + 1, min(lo + 15, 60) + 1))
            y = values[lo:hi]
            corr = np.eye(y.size) + 1.0 / baseline.kappa0

            def log_integrand(u):
                v = math.exp(u)
                return (stats.multivariate_normal.logpdf(y, mean=np.full(y.size, baseline.mean0), cov=v * corr)
                        + stats.invgamma.logpdf(v, baseline.shape0, scale=baseline.scale0) + u)

            grid = np.linspace(-15.0, 15.0, 301)
            peak_u = grid[int(np.argmax([log_integrand(u) for u in grid]))]
            peak = log_integrand(peak_u)
            value, _ = integrate.quad(lambda u: math.exp(log_integrand(u) - peak), peak_u - 40.0, peak_u + 40.0,
                                      points=[peak_u], epsabs=0.0, epsrel=1e-10, limit=400)
            self.assertAlmostEqual(segment_marginal_likelihood(y, baseline, self.kernel), peak + math.log(value),
                                   delta=1e-6)

    def test_prefix_sums_match_direct(self):
        values = np.random.default_rng(3).normal(size=50)
        segments = SegmentStatistics(values, self.baseline)
        self.assertAlmostEqual(segments.log_marginal(10, 35),
                               segment_marginal_likelihood(values[10:35], self.baseline, self.kernel), delta=1e-9)

    def test_dataset_slice_accepted(self):
        data = Dataset([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
        self.assertAlmostEqual(segment_marginal_likelihood(data.slice(0, 2), self.baseline, self.kernel),
                               segment_marginal_likelihood([1.0, 2.0], self.baseline, self.kernel))

    def test_variance_floor_is_not_conjugate(self):
        with self.assertRaises(UnsupportedModelError):
            segment_marginal_likelihood([1.0], self.baseline, KernelSpec(variance_floor=0.1))


class TestSamplerMechanics(unittest.TestCase):

    def test_move_probabilities(self):
        self.assertEqual(birth_probability(0), 1.0)
        self.assertEqual(death_probability(0), 0.0)
        self.assertEqual(birth_probability(3) + death_probability(3), 1.0)

    def test_burnin_must_be_shorter(self):
        with self.assertRaises(DomainError):
            InferenceConfig(n_iterations=100, n_burnin=100)

    def test_rejects_single_observation(self):
        with self.assertRaises(DataError):
            ChangepointSampler(Dataset([1.0], [0.0]), InferenceConfig(), RandomStream(1))

    def test_rejects_time_zero(self):
        with self.assertRaises(DataError) as ctx:
            ChangepointSampler(Dataset([0.0, 1.0], [0.0, 0.0]), InferenceConfig(), RandomStream(1))
        self.assertEqual(ctx.exception.row, 1)

    def test_non_positive_times_report_their_row(self):
        data = Dataset([-2.0, -1.0, 0.0, 1.0, 2.0], [0.0] * 5)
        with self.assertRaises(DataError) as ctx:
            ChangepointSampler(data, InferenceConfig(), RandomStream(1))
        self.assertEqual(ctx.exception.row, 3)
        self.assertIn("3 are not", str(ctx.exception))

    def test_deterministic_given_stream(self):
        config = InferenceConfig(n_iterations=300, n_burnin=100)
        a = run_sampler(one_change_dataset(), config, RandomStream(4))
        b = run_sampler(one_change_dataset(), config, RandomStream(4))
        self.assertEqual(a.to_records(), b.to_records())

    def test_chains_are_merged_in_order(self):
        config = InferenceConfig(n_iterations=200, n_burnin=50, draw_theta=False)
        draws = run_chains(one_change_dataset(), config, RandomStream(5), n_chains=3)
        self.assertEqual(len(draws), 450)
        self.assertEqual(draws.chains[:150], [0] * 150)
        self.assertEqual(draws.chains[-1], 2)
        self.assertEqual(draws.iterations[0], 50)


class TestPriorRecovery(unittest.TestCase):
    """Without the likelihood the chain must reproduce the prior."""

    def setUp(self):
        times = np.linspace(0.1, 10.0, 100)
        self.data = Dataset(times, np.zeros(times.size))

    def test_count_is_poisson(self):
        config = InferenceConfig(n_iterations=21000, n_burnin=1000, proposal_scale=1.0,
                                 use_likelihood=False, fixed_rate=1.0, draw_theta=False)
        counts = run_sampler(self.data, config, RandomStream(6)).counts.astype(float)
        self.assertLess(abs(counts.mean() - 10.0), 4 * batch_means_se(counts))

    def test_rate_is_gamma(self):
        config = InferenceConfig(rate_shape=2.0, rate_rate=1.0, n_iterations=41000, n_burnin=1000,
                                 use_likelihood=False, draw_theta=False)
        rates = np.asarray(run_sampler(self.data, config, RandomStream(7)).rates)
        self.assertLess(abs(rates.mean() - 2.0), 4 * batch_means_se(rates))


class TestSyntheticRecovery(unittest.TestCase):

    def test_no_change(self):
        gen = np.random.default_rng(1)
        times = np.linspace(0.05, 10.0, 200)
        data = Dataset(times, gen.normal(0.0, 0.1, size=times.size))
        draws = run_sampler(data, InferenceConfig(n_iterations=3000, n_burnin=500), RandomStream(8))
        self.assertGreater(count_distribution(draws).get(0, 0.0), 0.9)

    def test_one_change(self):
        draws = run_chains(one_change_dataset(), InferenceConfig(n_iterations=4000, n_burnin=1000),
                           RandomStream(9), n_chains=2)
        summary = posterior_summary(draws)
        self.assertEqual(summary["modal_count"], 1)
        self.assertLess(abs(summary["location_medians"][0] - 5.0), 0.5)
        self.assertEqual(set(summary["chain_means"]), {"0", "1"})

    def test_mean_function_tracks_levels(self):
        draws = run_sampler(one_change_dataset(), InferenceConfig(n_iterations=3000, n_burnin=1000),
                            RandomStream(10))
        left, right = mean_function(draws, [2.0, 8.0])
        self.assertLess(abs(left), 0.5)
        self.assertLess(abs(right - 3.0), 0.5)


class TestStability(unittest.TestCase):
    """Doubling the chain length leaves posterior means within Monte Carlo error."""

    def test_doubling_iterations(self):
        data = one_change_dataset()
        short = run_sampler(data, InferenceConfig(n_iterations=4000, n_burnin=1000, draw_theta=False),
                            RandomStream(31))
        long = run_sampler(data, InferenceConfig(n_iterations=8000, n_burnin=1000, draw_theta=False),
                           RandomStream(32))
        for name, extract in (("lambda", lambda d: np.asarray(d.rates, dtype=float)),
                              ("first change point", lambda d: np.asarray([t[0] for t in d.taus if t]))):
            a, b = extract(short), extract(long)
            tolerance = 4.0 * math.hypot(batch_means_se(a), batch_means_se(b))
            self.assertLess(abs(a.mean() - b.mean()), tolerance, name)


class TestEnumeratedPosterior(unittest.TestCase):
    """Three observations at t = 1, 2, 3 with a fixed rate.

    The likelihood only sees whether some change point falls in [1, 2) and
    whether one falls in [2, 3), so the posterior over those two splits can be
    enumerated exactly from independent Poisson counts per unit interval.
    """

    def setUp(self):
        self.rate = 0.7
        self.data = Dataset([1.0, 2.0, 3.0], [0.0, 1.5, -0.5])
        self.baseline = BaselineSpec()
        self.kernel = KernelSpec()

    def exact_split_posterior(self):
        y = self.data.values.tolist()
        segments = {
            (0, 0): [y],
            (1, 0): [y[:1], y[1:]],
            (0, 1): [y[:2], y[2:]],
            (1, 1): [y[:1], y[1:2], y[2:]],
        }
        p_split = -math.expm1(-self.rate)
        weights = {}
        for (s1, s2), parts in segments.items():
            prior = (p_split if s1 else 1.0 - p_split) * (p_split if s2 else 1.0 - p_split)
            log_lik = math.fsum(segment_marginal_likelihood(part, self.baseline, self.kernel) for part in parts)
            weights[(s1, s2)] = prior * math.exp(log_lik)
        total = math.fsum(weights.values())
        return {key: w / total for key, w in weights.items()}

    def test_sampler_matches_enumeration(self):
        config = InferenceConfig(n_iterations=61000, n_burnin=1000, fixed_rate=self.rate, draw_theta=False)
        draws = run_sampler(self.data, config, RandomStream(21))
        freq = dict.fromkeys(((0, 0), (1, 0), (0, 1), (1, 1)), 0)
        for taus in draws.taus:
            blocks = set(np.searchsorted(self.data.times, taus, side="right").tolist())
            freq[(int(1 in blocks), int(2 in blocks))] += 1
        exact = self.exact_split_posterior()
        tv = 0.5 * sum(abs(freq[key] / len(draws) - exact[key]) for key in exact)
        self.assertLess(tv, 0.02, f"sampler {freq} vs exact {exact}")


class TestSummary(unittest.TestCase):

    def test_constant_draws(self):
        draws = PosteriorDraws(taus=[(5.0,)] * 4, rates=[2.0] * 4, window=10.0)
        summary = posterior_summary(draws)
        self.assertEqual(summary["lambda"]["lower"], summary["lambda"]["upper"])
        self.assertEqual(summary["lambda"]["std"], 0.0)
        self.assertEqual(summary["count_distribution"], {"1": 1.0})

    def test_alternating_rates(self):
        draws = PosteriorDraws(taus=[()] * 6, rates=[1.0, 3.0] * 3, window=10.0)
        self.assertAlmostEqual(posterior_summary(draws)["lambda"]["mean"], 2.0)

    def test_change_probability(self):
        draws = PosteriorDraws(taus=[(5.0,), (5.0,), (), (2.5,)], rates=[1.0] * 4, window=10.0)
        np.testing.assert_allclose(change_probability(draws, [0.0, 2.0, 4.0, 6.0, 8.0]), [0, 0.25, 0.5, 0, 0])

    def test_merge_averages_acceptance(self):
        a = PosteriorDraws(taus=[()], rates=[1.0], window=1.0, acceptance={"shift": 0.2, "birth": 0.1, "death": 0.0})
        b = PosteriorDraws(taus=[()], rates=[2.0], window=1.0, acceptance={"shift": 0.4, "birth": 0.3, "death": 0.2})
        merged = merge_draws([a, b])
        self.assertEqual(len(merged), 2)
        self.assertAlmostEqual(merged.acceptance["shift"], 0.3)

    def test_rejects_out_of_window(self):
        with self.assertRaises(DomainError):
            PosteriorDraws(taus=[(11.0,)], rates=[1.0], window=10.0)


if __name__ == '__main__':
    unittest.main()

# tests/test_experiments.py
import math
import statistics
import unittest
from unittest import mock

from controllers import validation_controller
from controllers.experiment_controller import (
    CONFIRMED, LOW_POWER, PASS, build_convergent_grid, dichotomy_report, estimate_coincidence_probability,
    estimate_expected_overlap, figure1_run,
)
from controllers.validation_controller import (
    check_changepoint_oracle_equivalence, check_changepoint_overlap_law, check_convergent_grid,
    check_geometric_jump_pmf, check_marginal_likelihood, check_nrm_decay_invariance,
    check_nrm_expectation_below_one, check_overlap_upper_bound, run_checks,
)
from engine.errors import DomainError, NoActiveJumpError
from engine.random_stream import RandomStream
from models.changepoint import ChangepointModel
from models.geometric import DiffusionParams, GeometricModel
from models.nrm import NrmModel
from utils.worker_pool import SERIAL, WorkerPool


class TestConvergentGrid(unittest.TestCase):

    def test_first_points(self):
        self.assertEqual(build_convergent_grid(1).times, (1.0,))
        self.assertEqual(build_convergent_grid(2).times, (1.0, 1.25))

    def test_limit(self):
        grid = build_convergent_grid(1000)
        self.assertEqual(grid.L, 1000)
        self.assertAlmostEqual(grid.final, math.fsum(1.0 / (l * l) for l in range(1, 1001)), places=14)
        self.assertEqual(f"{grid.final:.5g}", "1.6439")

    def test_rejects_empty(self):
        with self.assertRaises(DomainError):
            build_convergent_grid(0)


class TestFigure1(unittest.TestCase):

    def test_traces(self):
        params = [DiffusionParams(1.0, b, 1.0) for b in (1.0, 50.0)]
        traces = figure1_run(params, 50, RandomStream(1))
        self.assertEqual([t.b for t in traces], [1.0, 50.0])
        for trace in traces:
            self.assertEqual(len(trace.z), 50)
            self.assertTrue(all(z >= 1 for z in trace.z))
            self.assertEqual(trace.log_z[0], math.log(trace.z[0]))

    def test_grid_shared_and_seed_sensitive(self):
        params = [DiffusionParams(1.0, 30.0, 1.0)]
        a = figure1_run(params, 200, RandomStream(1))[0]
        b = figure1_run(params, 200, RandomStream(2))[0]
        self.assertEqual(a.times, b.times)
        self.assertNotEqual(a.z, b.z)

    def test_late_trace_keeps_switching(self):
        rng = RandomStream(11)
        params = [DiffusionParams(1.0, 1.0, 1.0)]
        freqs = []
        for run in range(100):
            z = figure1_run(params, 1000, rng.substream(run))[0].z[-101:]
            freqs.append(sum(a != b for a, b in zip(z, z[1:])) / 100.0)
        self.assertGreater(sum(freqs) / len(freqs), 0.05)

    def test_larger_b_gives_larger_indices(self):
        rng = RandomStream(12)
        params = [DiffusionParams(1.0, b, 1.0) for b in (1.0, 50.0)]
        means = {1.0: [], 50.0: []}
        for run in range(100):
            for trace in figure1_run(params, 100, rng.substream(run)):
                means[trace.b].append(sum(trace.z) / len(trace.z))
        # E[1/lambda] is infinite when a = 1, so compare medians of the trace means
        self.assertGreater(statistics.median(means[50.0]), statistics.median(means[1.0]))


class TestEstimators(unittest.TestCase):

    def test_changepoint_zero_lag_is_exactly_one(self):
        est = estimate_expected_overlap(ChangepointModel(1.0), 10.0, 0.0, 200, RandomStream(1))
        self.assertEqual(est.mean, 1.0)
        self.assertEqual(est.std_error, 0.0)
        self.assertEqual(est.diagnostics["analytic"], 1.0)

    def test_changepoint_law(self):
        est = estimate_expected_overlap(ChangepointModel(1.0), 10.0, 0.1, 20000, RandomStream(2))
        p = math.exp(-0.1)
        self.assertLess(abs(est.mean - p), 4 * math.sqrt(p * (1 - p) / 20000))

    def test_geometric_small_lag(self):
        est = estimate_expected_overlap(GeometricModel(1.0, 1.0, 1.0), 10.0, 1e-6, 20000, RandomStream(3))
        self.assertLess(abs(est.mean - (2.0 * math.log(2.0) - 1.0)), 4 * est.std_error)

    def test_standard_error_is_calibrated(self):
        # over independent replications the standardized error should have unit spread
        rng = RandomStream(9)
        target = math.exp(-0.5)
        z = []
        for r in range(50):
            est = estimate_expected_overlap(ChangepointModel(1.0), 1.0, 0.5, 400, rng.substream(r))
            z.append((est.mean - target) / est.std_error)
        self.assertTrue(0.7 <= statistics.stdev(z) <= 1.4, statistics.stdev(z))

    def test_thread_count_does_not_change_result(self):
        model = GeometricModel(1.0, 2.0, 1.0)
        serial = estimate_expected_overlap(model, 1.0, 0.5, 300, RandomStream(4), pool=SERIAL)
        threaded = estimate_expected_overlap(model, 1.0, 0.5, 300, RandomStream(4), pool=WorkerPool(4))
        self.assertEqual(serial.mean, threaded.mean)
        self.assertEqual(serial.std_error, threaded.std_error)

    def test_min_reps(self):
        with self.assertRaises(DomainError):
            estimate_expected_overlap(ChangepointModel(1.0), 1.0, 0.1, 50, RandomStream(1))

    def test_negative_lag(self):
        with self.assertRaises(DomainError):
            estimate_expected_overlap(ChangepointModel(1.0), 1.0, -0.1, 100, RandomStream(1))

    def test_coincidence_matches_overlap(self):
        model = ChangepointModel(2.0)
        overlap = estimate_expected_overlap(model, 1.0, 0.5, 10000, RandomStream(5))
        coincidence = estimate_coincidence_probability(model, 1.0, 0.5, 10000, RandomStream(6))
        self.assertLess(abs(overlap.mean - coincidence.mean), 4 * math.hypot(overlap.std_error, coincidence.std_error))

    def test_geometric_coincidence(self):
        model = GeometricModel(1.0, 1.0, 1.0)
        overlap = estimate_expected_overlap(model, 1.0, 0.2, 10000, RandomStream(7))
        coincidence = estimate_coincidence_probability(model, 1.0, 0.2, 10000, RandomStream(8))
        self.assertLess(abs(overlap.mean - coincidence.mean), 4 * math.hypot(overlap.std_error, coincidence.std_error))


class TestDichotomyReport(unittest.TestCase):

    def setUp(self):
        self.models = {"geometric": GeometricModel(), "nrm": NrmModel(), "changepoint": ChangepointModel(1.0)}

    def test_flags(self):
        report = dichotomy_report((1.0, 0.1), self.models, 2000, RandomStream(1), t=10.0)
        flags = {m.model: m.flag for m in report.models}
        self.assertEqual(flags, {"geometric": CONFIRMED, "nrm": CONFIRMED, "changepoint": PASS})
        self.assertTrue(report.all_passed)
        self.assertEqual(len(report.rows()), 6)
        geometric = report.models[0]
        self.assertAlmostEqual(geometric.limit_h0, 2.0 * math.log(2.0) - 1.0, places=9)

    def test_changepoint_column(self):
        report = dichotomy_report((1.0, 0.1, 0.01, 0.001), {"changepoint": ChangepointModel(1.0)}, 5000,
                                  RandomStream(2))
        changepoint = report.models[0]
        analytic = [e.diagnostics["analytic"] for e in changepoint.estimates]
        for value, expected in zip(analytic, (0.3679, 0.9048, 0.9900, 0.9990)):
            self.assertAlmostEqual(value, expected, places=4)
        for est in changepoint.estimates:
            p = math.exp(-est.h)
            self.assertLess(abs(est.mean - p), 4 * max(math.sqrt(p * (1 - p) / 5000), est.std_error))
        self.assertEqual(changepoint.flag, PASS)
        self.assertTrue(all(changepoint.row_flags))
        self.assertTrue(report.all_passed)

    def test_small_lag_overlap_is_near_one(self):
        est = estimate_expected_overlap(ChangepointModel(1.0), 1.0, 0.001, 40000, RandomStream(6))
        self.assertGreater(est.mean, 0.998)

    def test_other_models_stay_well_below_one(self):
        models = {"geometric": GeometricModel(), "nrm": NrmModel()}
        report = dichotomy_report((1.0, 0.1, 0.01, 0.001), models, 1000, RandomStream(7))
        for m in report.models:
            self.assertEqual(m.flag, CONFIRMED)
            self.assertLess(m.estimates[-1].mean, 0.95, m.model)

    def test_low_power(self):
        report = dichotomy_report((0.1,), {"changepoint": ChangepointModel(1.0)}, 10, RandomStream(3))
        self.assertEqual(report.models[0].flag, LOW_POWER)
        self.assertFalse(report.all_passed)
        self.assertTrue(report.to_dict()["settings"]["low_power"])

    def test_zero_lag_entry(self):
        report = dichotomy_report((0.0,), {"changepoint": ChangepointModel(1.0)}, 100, RandomStream(4))
        self.assertEqual(report.models[0].estimates[0].mean, 1.0)
        self.assertEqual(report.models[0].flag, PASS)

    def test_grid_must_descend(self):
        with self.assertRaises(DomainError):
            dichotomy_report((0.1, 1.0), self.models, 100, RandomStream(5))


class TestValidationChecks(unittest.TestCase):
    """The cheap deterministic checks of the property suite."""

    def test_deterministic_checks_pass(self):
        for check in (check_changepoint_oracle_equivalence, check_convergent_grid, check_geometric_jump_pmf,
                      check_marginal_likelihood, check_nrm_decay_invariance, check_overlap_upper_bound):
            passed, details = check(200, RandomStream(1), SERIAL)
            self.assertTrue(passed, f"{check.__name__}: {details}")

    def test_replicate_budget_is_used_in_full(self):
        for check in (check_changepoint_oracle_equivalence, check_overlap_upper_bound):
            passed, details = check(1500, RandomStream(2), SERIAL)
            self.assertTrue(passed, f"{check.__name__}: {details}")
            self.assertEqual(details["replicates"], 1500)

    def test_changepoint_law_covers_lag_grid(self):
        passed, details = check_changepoint_overlap_law(2000, RandomStream(3), SERIAL)
        self.assertTrue(passed, details)
        self.assertEqual([row["h"] for row in details["lags"]], [1.0, 0.1, 0.01, 0.001])

    def test_nrm_below_one_covers_lag_grid(self):
        passed, details = check_nrm_expectation_below_one(200, RandomStream(4), SERIAL)
        self.assertTrue(passed, details)
        self.assertEqual([row["h"] for row in details["lags"]], [0.01, 0.1, 1.0])
        self.assertTrue(all(row["passed"] for row in details["lags"]))

    def test_errors_count_as_failures(self):
        def failing(n_reps, rng, pool):
            raise NoActiveJumpError("[tests] no jump")

        checks = [("ok", lambda n, r, p: (True, {})), ("broken", failing)]
        with mock.patch.object(validation_controller, "CHECKS", checks):
            results = run_checks(100, RandomStream(1))
        self.assertEqual([r.passed for r in results], [True, False])
        self.assertIn("no jump", results[1].details["error"])


if __name__ == '__main__':
    unittest.main()

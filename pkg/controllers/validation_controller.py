# controllers/validation_controller.py
"""Property suite run by the ``validate`` command.

Each check gets its own substream and a replicate budget and returns whether
the property held plus the numbers behind the verdict.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import stats

from controllers.base_controller import BaseController
from controllers.experiment_controller import (
    build_convergent_grid, estimate_coincidence_probability, estimate_expected_overlap,
)
from engine.errors import LabError, PropertyCheckFailure
from engine.mixture import BaselineSpec, KernelSpec
from engine.random_stream import RandomStream
from engine.weights import overlap_statistic, overlap_upper_bound, sup_weight_diff
from inference.marginal import segment_marginal_likelihood
from inference.sampler import InferenceConfig, run_sampler
from models.changepoint import (
    ChangepointModel, Dataset, GapRate, indicator_weights, locate, overlap_exact, sample_partition,
)
from models.geometric import (
    DiffusionParams, GeometricModel, geometric_weights, jump_pmf, stationary_sample, stationary_self_overlap,
    transition_sample,
)
from models.nrm import JumpSet, NrmModel, nrm_weight_array
from utils.estimators import batch_means_se, binomial_se, within_se
from utils.worker_pool import SERIAL, WorkerPool

logger = logging.getLogger(__name__)

CheckOutcome = Tuple[bool, Dict]

LAW_LAGS = (1.0, 0.1, 0.01, 0.001)
NRM_LAGS = (0.01, 0.1, 1.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def check_changepoint_overlap_law(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    """Mean overlap is e^{-h} at rate 1 on every lag of the grid, within 4 binomial SE."""
    model = ChangepointModel(rate=1.0)
    ok, rows = True, []
    for k, h in enumerate(LAW_LAGS):
        est = estimate_expected_overlap(model, 1.0, h, n_reps, rng.substream(k), pool=pool)
        target = math.exp(-h)
        se = binomial_se(target, n_reps)
        passed = within_se(est.mean, target, se)
        ok = ok and passed
        rows.append({"h": h, "mean": est.mean, "std_error": se, "target": target, "passed": passed})
    return ok, {"lags": rows}


def _oracle_replicate(rng: RandomStream) -> bool:
    partition = sample_partition(GapRate(1.0), 3.0, rng)
    j_t, j_th = locate(partition, 1.0), locate(partition, 1.5)
    exact = overlap_exact(partition, 1.0, 0.5)
    # K covers both indices so nothing falls in the tail
    K = max(j_t, j_th)
    w_t, w_th = indicator_weights(partition, 1.0, K), indicator_weights(partition, 1.5, K)
    return (exact == int(j_t == j_th)
            and overlap_statistic(w_t, w_th).value == exact
            and sup_weight_diff(w_t, w_th).value == 1 - exact)


def check_changepoint_oracle_equivalence(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    """Generic overlap and sup-difference on indicator weights agree with the exact overlap."""
    agreed = pool.map(lambda i: _oracle_replicate(rng.substream(i)), range(n_reps))
    mismatches = n_reps - sum(agreed)
    return mismatches == 0, {"replicates": n_reps, "mismatches": mismatches}


def check_coincidence_matches_overlap(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    model = ChangepointModel(rate=2.0)
    overlap = estimate_expected_overlap(model, 1.0, 0.5, n_reps, rng.substream(0), pool=pool)
    coincidence = estimate_coincidence_probability(model, 1.0, 0.5, n_reps, rng.substream(1), pool=pool)
    combined = math.hypot(overlap.std_error, coincidence.std_error)
    return within_se(overlap.mean, coincidence.mean, combined), {
        "overlap": overlap.mean, "coincidence": coincidence.mean, "combined_se": combined,
    }


def check_geometric_small_lag_limit(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    est = estimate_expected_overlap(GeometricModel(1.0, 1.0, 1.0), 10.0, 1e-6, n_reps, rng, pool=pool)
    target = 2.0 * math.log(2.0) - 1.0
    quadrature = stationary_self_overlap(1.0, 1.0)
    ok = within_se(est.mean, target, est.std_error) and abs(quadrature - target) < 1e-8
    return ok, {"mean": est.mean, "std_error": est.std_error, "target": target, "quadrature": quadrature}


def check_geometric_jump_pmf(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    params = DiffusionParams(1.0, 1.0, 1.0)
    m = np.arange(20000)
    total = math.fsum(jump_pmf(params, 0.1, m))
    mean = math.fsum(m * jump_pmf(params, 0.1, m))
    # negative binomial mean (a + b) e^{-ch} / (1 - e^{-ch})
    expected = 2.0 * math.exp(-0.1) / -math.expm1(-0.1)
    return abs(total - 1.0) < 1e-10 and abs(mean - expected) < 1e-8, {"total": total, "mean": mean}


def _upper_bound_violated(params: DiffusionParams, rng: RandomStream) -> bool:
    start = stationary_sample(params, rng)
    end = transition_sample(params, start, 0.05, rng)
    w_t, w_th = geometric_weights(start.lam, 400), geometric_weights(end.lam, 400)
    return overlap_statistic(w_t, w_th).value > overlap_upper_bound(w_t, w_th) + 1e-12


def check_overlap_upper_bound(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    params = DiffusionParams(1.0, 3.0, 1.0)
    violations = sum(pool.map(lambda i: _upper_bound_violated(params, rng.substream(i)), range(n_reps)))
    return violations == 0, {"replicates": n_reps, "violations": violations}


def check_nrm_decay_invariance(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    """With no births in (t, t+h] the weight vector is unchanged."""
    gen = rng.generator
    taus = np.sort(gen.uniform(0.0, 5.0, size=50))
    jumps = JumpSet(taus, gen.gamma(0.5, 1.0, size=50) + 1e-3, (0.0, 10.0))
    before = nrm_weight_array(jumps, 5.0, 1.0)
    after = nrm_weight_array(jumps, 9.0, 1.0)
    return bool(np.array_equal(before, after)), {"max_abs_diff": float(np.max(np.abs(after - before)))}


def check_nrm_expectation_below_one(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    """E{D(h)} stays more than 5 SE below 1 on every lag; the lags share one window end."""
    model = NrmModel()
    ok, rows = True, []
    for h in NRM_LAGS:
        est = estimate_expected_overlap(model, 10.0, h, n_reps, rng, horizon=10.0 + max(NRM_LAGS), pool=pool)
        passed = est.mean < 1.0 - 5.0 * est.std_error
        ok = ok and passed
        rows.append({"h": h, "mean": est.mean, "std_error": est.std_error, "passed": passed, **est.diagnostics})
    return ok, {"lags": rows}


def check_convergent_grid(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    grid = build_convergent_grid(1000)
    oracle = math.fsum(1.0 / (l * l) for l in range(1, 1001))
    ok = abs(grid.final - oracle) < 1e-12 and abs(grid.final - 1.64394) < 1e-5 and grid.final < math.pi ** 2 / 6
    return ok, {"t_L": grid.final, "oracle": oracle}


def check_marginal_likelihood(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    """Single-observation marginal equals the Student-t predictive density."""
    baseline, kernel = BaselineSpec(), KernelSpec()
    gen = rng.generator
    worst = 0.0
    scale = math.sqrt(baseline.scale0 * (baseline.kappa0 + 1.0) / (baseline.shape0 * baseline.kappa0))
    for y in gen.normal(0.0, 3.0, size=50):
        closed = segment_marginal_likelihood([y], baseline, kernel)
        predictive = stats.t.logpdf(y, df=2.0 * baseline.shape0, loc=baseline.mean0, scale=scale)
        worst = max(worst, abs(closed - predictive))
    return worst < 1e-6, {"max_abs_diff": worst}


def check_prior_recovery(n_reps: int, rng: RandomStream, pool: WorkerPool) -> CheckOutcome:
    """Without the likelihood the change-point count is Poisson(rate * window)."""
    times = np.linspace(0.1, 10.0, 100)
    data = Dataset(times, np.zeros(times.size))
    config = InferenceConfig(n_iterations=n_reps + 1000, n_burnin=1000, use_likelihood=False, fixed_rate=1.0,
                             draw_theta=False, proposal_scale=1.0)
    draws = run_sampler(data, config, rng)
    counts = draws.counts.astype(float)
    mean = math.fsum(counts) / counts.size
    se = batch_means_se(counts)
    return within_se(mean, 10.0, se), {"mean_count": mean, "mcse": se, "target": 10.0}


CHECKS: List[Tuple[str, Callable[[int, RandomStream, WorkerPool], CheckOutcome]]] = [
    ("changepoint_overlap_law", check_changepoint_overlap_law),
    ("changepoint_oracle_equivalence", check_changepoint_oracle_equivalence),
    ("coincidence_matches_overlap", check_coincidence_matches_overlap),
    ("geometric_small_lag_limit", check_geometric_small_lag_limit),
    ("geometric_jump_pmf", check_geometric_jump_pmf),
    ("overlap_upper_bound", check_overlap_upper_bound),
    ("nrm_decay_invariance", check_nrm_decay_invariance),
    ("nrm_expectation_below_one", check_nrm_expectation_below_one),
    ("convergent_grid", check_convergent_grid),
    ("marginal_likelihood", check_marginal_likelihood),
    ("prior_recovery", check_prior_recovery),
]


def run_checks(n_reps: int, rng: RandomStream, pool: WorkerPool = SERIAL) -> List[CheckResult]:
    """Run every check on its own substream; an error inside a check counts as a failure."""
    results = []
    for k, (name, check) in enumerate(CHECKS):
        try:
            passed, details = check(n_reps, rng.substream(k), pool)
        except LabError as e:
            passed, details = False, {"error": str(e)}
        results.append(CheckResult(name, bool(passed), details))
        log = logger.info if passed else logger.warning
        log("%s: %s", name, "ok" if passed else "FAILED")
    return results


class ValidationController(BaseController):
    """Runs the property suite and writes the report; any failed check raises PropertyCheckFailure."""

    command = "validate"

    def run(self) -> int:
        results = run_checks(self.config["n_reps"], self.rng, self.pool)
        failed = [r.name for r in results if not r.passed]
        self.output.write_json(self.config["output"], {
            "passed": not failed,
            "checks": [r.to_dict() for r in results],
        })
        if failed:
            raise PropertyCheckFailure(f"[controllers/validation_controller.py] failed checks: {', '.join(failed)}")
        return 0

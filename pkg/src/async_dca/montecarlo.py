"""Monte Carlo experiment harness and canned qualitative replays.

An experiment runs T independent trials of K asynchronous updates and
aggregates, per step count k, the empirical tail probabilities
``P(Delta(x) >= eps)`` and ``P(lambda(product) >= eps)``.  Consensus is
declared at the horizon when the discrepancy drops below ``eps``
(default 1e-6).  Non-convergence claims use coarser thresholds: 1e-3 on
per-trial discrepancies (``NONCONVERGENCE_EPSILON``) and 0.05 on the
median final discrepancy in the replays (``NONCONSENSUS_DELTA``).  All of
these are desk-scale stand-ins for asymptotic statements, chosen so each
canned experiment finishes in seconds; replay reports carry a note saying
which threshold they operationalise.

Trials derive their random streams from ``(seed, trial_index)``, are merged
in trial order, and may fan out over threads (``ASYNC_DCA_THREADS``)
without changing any result bit.
"""
from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np

from . import _kernels
from .datasets import bundled_matrix
from .engine import run_script
from .errors import DimensionError, ValidationError
from .graphs import is_sia
from .matrices import StochasticMatrix, max_discrepancy
from .rng import DEFAULT_SEED, stream
from .schedulers import (
    GlobalClockScheduler,
    MarkovScheduler,
    Scheduler,
    SupportSequenceScheduler,
    check_conditions,
    check_strongly_aperiodic,
)

CONSENSUS_EPSILON = 1e-6
NONCONVERGENCE_EPSILON = 1e-3
NONCONSENSUS_DELTA = 0.05

_THRESHOLD_NOTE = (
    "desk-scale operationalisation: the asymptotic claim is replaced by "
    f"'median final discrepancy > {NONCONSENSUS_DELTA}' at the given horizon"
)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    matrix: StochasticMatrix
    scheduler: Scheduler
    trials: int
    horizon: int
    epsilon: float = CONSENSUS_EPSILON
    seed: int = DEFAULT_SEED
    init: object = "uniform"
    track_lambda: bool = True

    def __post_init__(self):
        if self.trials < 1 or self.horizon < 1:
            raise ValidationError("need trials >= 1 and horizon >= 1")
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.scheduler.n != self.matrix.n:
            raise DimensionError(
                f"scheduler has n={self.scheduler.n} but matrix is {self.matrix.n}x{self.matrix.n}"
            )
        if not isinstance(self.init, str):
            arr = np.asarray(self.init, dtype=np.float64)
            if arr.shape != (self.matrix.n,):
                raise DimensionError(f"fixed init must have length {self.matrix.n}")
            object.__setattr__(self, "init", arr)
        elif self.init != "uniform":
            raise ValidationError(f"init must be 'uniform' or a vector, got {self.init!r}")


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    trials: int
    horizon: int
    epsilon: float
    seed: int
    backend: str
    delta_tail: np.ndarray
    lambda_tail: np.ndarray
    consensus_fraction: float
    final_deltas: np.ndarray
    delta_quantiles: dict
    max_contraction_violation: float
    max_lambda_increase: float
    max_product_row_error: float

    def to_json(self, include_series: bool = False) -> dict:
        """Summary dict; the per-k tail series are included only on request
        (they are what the CSV output carries)."""
        out = {
            "trials": self.trials,
            "horizon": self.horizon,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "backend": self.backend,
            "consensus_fraction": self.consensus_fraction,
            "delta_quantiles": self.delta_quantiles,
            "max_contraction_violation": self.max_contraction_violation,
            "max_lambda_increase": self.max_lambda_increase,
            "max_product_row_error": self.max_product_row_error,
        }
        if include_series:
            out["delta_tail"] = [float(v) for v in self.delta_tail]
            out["lambda_tail"] = [float(v) for v in self.lambda_tail]
        return out


def _threads() -> int:
    raw = os.environ.get("ASYNC_DCA_THREADS", "1").strip() or "1"
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ValidationError(f"ASYNC_DCA_THREADS={raw!r} is not an integer") from exc


def _draw_trial_inputs(cfg: ExperimentConfig):
    """Per-trial initial states and update masks, one substream per trial.

    Draw order inside a trial's stream is fixed: the initial state first
    (when random), then the schedule.
    """
    n = cfg.matrix.n
    x0 = np.empty((cfg.trials, n))
    masks = np.empty((cfg.trials, cfg.horizon, n), dtype=bool)
    for t in range(cfg.trials):
        rng = stream(cfg.seed, t)
        if isinstance(cfg.init, str):
            x0[t] = rng.uniform(-1.0, 1.0, n)
        else:
            x0[t] = cfg.init
        masks[t] = cfg.scheduler.sample_masks(cfg.horizon, rng)
    return x0, masks


def _run_batch(cfg: ExperimentConfig):
    x0, masks = _draw_trial_inputs(cfg)
    A = cfg.matrix.entries
    workers = min(_threads(), cfg.trials)
    if workers == 1:
        return _kernels.trajectory_batch(A, masks, x0, cfg.track_lambda)
    bounds = np.linspace(0, cfg.trials, workers + 1).astype(int)
    chunks = [(masks[a:b], x0[a:b]) for a, b in zip(bounds, bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda ch: _kernels.trajectory_batch(A, ch[0], ch[1], cfg.track_lambda), chunks
        ))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(6))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """T seeded trials of K updates; all statistics deterministic in the seed."""
    deltas, lams, _, viol_c, viol_m, row_err = _run_batch(cfg)
    final = deltas[:, -1]
    qs = np.quantile(final, [0.0, 0.25, 0.5, 0.75, 1.0])
    return ExperimentResult(
        trials=cfg.trials,
        horizon=cfg.horizon,
        epsilon=cfg.epsilon,
        seed=cfg.seed,
        backend=_kernels.backend_name(),
        delta_tail=(deltas >= cfg.epsilon).mean(axis=0),
        lambda_tail=(lams >= cfg.epsilon).mean(axis=0),
        consensus_fraction=float((final < cfg.epsilon).mean()),
        final_deltas=final,
        delta_quantiles={
            "min": float(qs[0]), "q25": float(qs[1]), "median": float(qs[2]),
            "q75": float(qs[3]), "max": float(qs[4]),
        },
        max_contraction_violation=float(viol_c.max()),
        max_lambda_increase=float(viol_m.max()),
        max_product_row_error=float(row_err.max()),
    )


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple:
    """Wilson score interval for a binomial proportion.

    At the boundaries the interval endpoints are exactly 0 and 1; they are
    pinned to avoid returning 1 - ulp.
    """
    if n < 1:
        raise ValidationError("need at least one observation")
    phat = successes / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return (lo, hi)


@dataclass(frozen=True)
class ScramblingHitRate:
    m: int
    trials: int
    rate: float
    interval: tuple

    def to_json(self) -> dict:
        return {"m": self.m, "trials": self.trials, "rate": self.rate,
                "interval": [self.interval[0], self.interval[1]]}


def scrambling_hit_rate(cfg: ExperimentConfig, m: int) -> ScramblingHitRate:
    """Fraction of trials whose accumulated product is scrambling at step m."""
    if not 1 <= m <= cfg.horizon:
        raise ValidationError(f"need 1 <= m <= horizon, got m={m}")
    cfg = dataclasses.replace(cfg, track_lambda=True)
    _, lams, _, _, _, _ = _run_batch(cfg)
    hits = int((lams[:, m] < 1.0 - 1e-12).sum())
    return ScramblingHitRate(
        m=m, trials=cfg.trials, rate=hits / cfg.trials,
        interval=wilson_interval(hits, cfg.trials),
    )


# ---------------------------------------------------------------------------
# canned replays
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayReport:
    case: str
    ok: bool
    failures: tuple
    details: dict

    def to_json(self) -> dict:
        return {"case": self.case, "ok": self.ok,
                "failures": list(self.failures), "details": self.details}


class _Checks:
    def __init__(self):
        self.failures = []

    def expect(self, name: str, condition: bool) -> None:
        if not condition:
            self.failures.append(name)


def _replay_example2(trials, horizon, seed):
    A = bundled_matrix("five_node_shift")
    checks = _Checks()
    checks.expect("base matrix is SIA", is_sia(A))
    state = run_script(A, [5, 4, 1, 2, 3], np.arange(5, dtype=float))
    expected = np.array([
        [0, 0, 0, 1, 0],
        [0, 0, 0, 1, 0],
        [0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
        [0, 0, 0, 1, 0],
    ], dtype=float)
    checks.expect("five-factor product matches the expected matrix",
                  np.array_equal(state.product.entries, expected))
    checks.expect("five-factor product is not SIA", not is_sia(state.product))
    details = {"product": state.product.entries.tolist()}
    return checks, details


def _replay_example3(trials, horizon, seed):
    A = bundled_matrix("two_node_swap")
    checks = _Checks()
    checks.expect("base matrix is not SIA", not is_sia(A))
    state = run_script(A, [2, 1], np.array([0.25, -0.75]))
    checks.expect("two-step product is the rank-one copier",
                  np.array_equal(state.product.entries, np.array([[1.0, 0.0], [1.0, 0.0]])))
    checks.expect("two-step product is SIA", is_sia(state.product))
    checks.expect("consensus after two steps", max_discrepancy(state.x) == 0.0)
    details = {"product": state.product.entries.tolist(), "delta": max_discrepancy(state.x)}
    return checks, details


def _vanishing_alpha_scheduler() -> MarkovScheduler:
    def law(k):
        return np.array([[1.0 - 1.0 / k, 0.0, 1.0],
                         [1.0 / k, 0.0, 0.0],
                         [0.0, 1.0, 0.0]])

    return MarkovScheduler(3, states=[{1}, {2}, {3}], initial={1}, matrix_fn=law)


def _replay_markov_vanishing_alpha(trials, horizon, seed):
    A = bundled_matrix("three_node_lazy_cycle")
    scheduler = _vanishing_alpha_scheduler()
    checks = _Checks()
    report = check_conditions(scheduler, A)
    checks.expect("no positive probability floor exists",
                  not report["positive_probability"].passed)
    cfg = ExperimentConfig(A, scheduler, trials=trials or 200, horizon=horizon or 300,
                           seed=seed, track_lambda=False)
    result = run_experiment(cfg)
    median = result.delta_quantiles["median"]
    checks.expect(f"median final discrepancy stays above {NONCONSENSUS_DELTA}",
                  median > NONCONSENSUS_DELTA)
    details = {"median_final_delta": median, "conditions": report.to_json(),
               "threshold_note": _THRESHOLD_NOTE}
    return checks, details


def _coverage_violation_scheduler() -> SupportSequenceScheduler:
    return SupportSequenceScheduler(4, [
        [({1, 3}, 1.0)],
        [({1}, 0.5), ({3}, 0.5)],
        [({2, 4}, 1.0)],
        [({2}, 0.5), ({4}, 0.5)],
    ])


def _replay_coverage_violation(trials, horizon, seed):
    A = bundled_matrix("four_node_ring")
    checks = _Checks()
    state = run_script(A, [{1, 3}, {2, 4}], np.arange(4, dtype=float))
    expected = np.array([
        [0, 0, 0, 1],
        [0, 0, 0, 1],
        [0, 1, 0, 0],
        [0, 1, 0, 0],
    ], dtype=float)
    checks.expect("pair product matches the expected matrix",
                  np.array_equal(state.product.entries, expected))
    checks.expect("pair product is not SIA", not is_sia(state.product))
    scheduler = _coverage_violation_scheduler()
    report = check_conditions(scheduler, A)
    for name in ("rooted", "positive_probability", "history_independent", "joint_coverage"):
        checks.expect(f"condition {name} passes", report[name].passed)
    qs = report["quasi_singleton"]
    checks.expect("quasi-singleton condition fails", not qs.passed)
    violations = qs.witness.get("violations", [])
    checks.expect("first witness intersection is {1, 3}",
                  bool(violations) and violations[0].get("intersection") == [1, 3])
    cfg = ExperimentConfig(A, scheduler, trials=trials or 50, horizon=horizon or 201,
                           seed=seed, track_lambda=False)
    result = run_experiment(cfg)
    median = result.delta_quantiles["median"]
    checks.expect(f"median final discrepancy stays above {NONCONSENSUS_DELTA}",
                  median > NONCONSENSUS_DELTA)
    details = {
        "product": state.product.entries.tolist(),
        "median_final_delta": median,
        "conditions": report.to_json(),
        "threshold_note": _THRESHOLD_NOTE,
    }
    return checks, details


def _replay_period3_markov(trials, horizon, seed):
    A = bundled_matrix("three_node_cycle")
    checks = _Checks()
    state = run_script(A, [3, 2, 1], np.arange(3, dtype=float))
    expected = np.array([[0, 1, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    checks.expect("period product matches the expected matrix",
                  np.array_equal(state.product.entries, expected))
    checks.expect("period product is not SIA", not is_sia(state.product))
    scheduler = MarkovScheduler(
        3, states=[{1}, {2}, {3}], initial={3},
        matrix=[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    )
    report = check_conditions(scheduler, A)
    checks.expect("history independence fails for the markov law",
                  not report["history_independent"].passed)
    cfg = ExperimentConfig(A, scheduler, trials=trials or 50, horizon=horizon or 300,
                           seed=seed, track_lambda=False)
    result = run_experiment(cfg)
    median = result.delta_quantiles["median"]
    checks.expect(f"median final discrepancy stays above {NONCONSENSUS_DELTA}",
                  median > NONCONSENSUS_DELTA)
    details = {
        "period_product": state.product.entries.tolist(),
        "median_final_delta": median,
        "conditions": report.to_json(),
        "threshold_note": _THRESHOLD_NOTE,
    }
    return checks, details


def _replay_strongly_aperiodic(trials, horizon, seed):
    A = bundled_matrix("four_node_rooted")
    scheduler = GlobalClockScheduler([0.25, 0.25, 0.25, 0.25])
    checks = _Checks()
    report = check_conditions(scheduler, A)
    checks.expect("all consensus conditions pass", report.passed)
    apc = check_strongly_aperiodic(scheduler, A, 1, 2)
    checks.expect("lhs expectation is exactly 0", apc.lhs == 0.0)
    checks.expect("rhs expectation is exactly 1/4", apc.rhs == 0.25)
    checks.expect("strong aperiodicity fails", not apc.holds)
    details = {"check": apc.to_json(), "conditions": report.to_json()}
    return checks, details


_CASES = {
    "example2": _replay_example2,
    "example3": _replay_example3,
    "markov_vanishing_alpha": _replay_markov_vanishing_alpha,
    "coverage_violation": _replay_coverage_violation,
    "period3_markov": _replay_period3_markov,
    "strongly_aperiodic": _replay_strongly_aperiodic,
}

REPLAY_CASES = tuple(_CASES)


def replay(case_id: str, trials: int | None = None, horizon: int | None = None,
           seed: int = DEFAULT_SEED) -> ReplayReport:
    """Run one canned scenario and assert its qualitative conclusion.

    Exact matrix identities are asserted bitwise; statistical conclusions
    use the documented desk-scale thresholds and the given seed.  Trial
    counts and horizons can be overridden.
    """
    if case_id not in _CASES:
        raise ValidationError(
            f"unknown replay case {case_id!r}; available: {', '.join(REPLAY_CASES)}"
        )
    checks, details = _CASES[case_id](trials, horizon, seed)
    return ReplayReport(
        case=case_id,
        ok=not checks.failures,
        failures=tuple(checks.failures),
        details=details,
    )

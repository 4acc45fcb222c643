"""Uniform-random-search baseline and multi-seed convergence statistics.

Both the baseline and the Bayesian optimizer are charged one evaluation per
trajectory (initialization samples included), so convergence curves from
``compare`` are directly comparable at every evaluation index.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bayesopt import LapTimeEvaluator, OptConfig, run
from .errors import DegeneratePathError, InfeasibleStartError, RacelineError, ValidationError
from .speed import VehicleParams
from .track import CenterLine

logger = logging.getLogger(__name__)

METHODS = ("random", "ei", "nei")


@dataclass(frozen=True)
class ConvergenceCurve:
    """Best lap time seen after each evaluation of one run."""

    best_so_far: np.ndarray
    seed: int

    def __post_init__(self):
        if np.any(np.diff(self.best_so_far) > 0.0):
            raise ValidationError("best-so-far curve must be nonincreasing")


@dataclass(frozen=True)
class MethodCurves:
    """Pointwise statistics over the repeat runs of one method."""

    method: str
    mean: np.ndarray
    lower: np.ndarray    # 95% normal-approximation band
    upper: np.ndarray
    runs: tuple[ConvergenceCurve, ...]
    excluded: int


@dataclass(frozen=True)
class ComparisonReport:
    curves: tuple[MethodCurves, ...]
    n_runs: int
    n_evals: int

    def final_best(self) -> dict[str, float]:
        return {c.method: float(c.mean[-1]) for c in self.curves}


def random_search(center: CenterLine, params: VehicleParams, n_evals: int, seed: int,
                  n_nodes: int, resample_k: int = 100, v0: float = 0.0) -> ConvergenceCurve:
    """Sample offset vectors uniformly in the box and track the running best.

    Infeasible draws still consume budget; they just cannot improve the best.
    """
    if n_evals < 1:
        raise ValidationError("n_evals must be at least 1")
    evaluator = LapTimeEvaluator(center, params, n_nodes, resample_k, v0)
    rng = np.random.default_rng([seed, 0])

    best = np.inf
    curve = np.empty(n_evals)
    for i in range(n_evals):
        x = rng.uniform(-1.0, 1.0, evaluator.dim)
        try:
            tau = evaluator.lap_time(evaluator.denormalize(x))
            best = min(best, tau)
        except (DegeneratePathError, InfeasibleStartError):
            logger.warning("random draw %d infeasible, counted against budget", i)
        curve[i] = best
    return ConvergenceCurve(best_so_far=curve, seed=seed)


def _bayesopt_curve(center: CenterLine, params: VehicleParams, acquisition: str,
                    n_evals: int, seed: int, base: OptConfig,
                    n_nodes: int, resample_k: int, v0: float) -> ConvergenceCurve:
    """Best-so-far curve of one optimizer run on the shared evaluation budget."""
    if n_evals <= base.n_init:
        raise ValidationError(
            f"evaluation budget {n_evals} must exceed the {base.n_init} initialization samples"
        )
    config = OptConfig(
        n_init=base.n_init,
        budget=n_evals - base.n_init,
        acquisition=acquisition,
        nei_fantasies=base.nei_fantasies,
        acq_restarts=base.acq_restarts,
        acq_candidates=base.acq_candidates,
        rng_seed=seed,
        convergence_mode="fixed_budget",
    )
    result = run(center, params, config, n_nodes, resample_k, v0)

    init_taus = result.state.dataset.outputs[: config.n_init]
    curve = np.concatenate([
        np.minimum.accumulate(init_taus),
        [rec.best_lap_time for rec in result.history],
    ])
    return ConvergenceCurve(best_so_far=curve, seed=seed)


def _one_run(args) -> tuple[str, int, ConvergenceCurve | None]:
    (method, center, params, n_evals, seed, base, n_nodes, resample_k, v0) = args
    try:
        if method == "random":
            curve = random_search(center, params, n_evals, seed, n_nodes, resample_k, v0)
        else:
            curve = _bayesopt_curve(center, params, method, n_evals, seed, base,
                                    n_nodes, resample_k, v0)
        return method, seed, curve
    except RacelineError as exc:
        logger.warning("%s run with seed %d failed: %s", method, seed, exc)
        return method, seed, None


def compare(center: CenterLine, params: VehicleParams, methods: list[str], n_runs: int,
            n_evals: int, base_seed: int, n_nodes: int, resample_k: int = 100,
            v0: float = 0.0, config: OptConfig | None = None,
            jobs: int = 1) -> ComparisonReport:
    """Run each method n_runs times on the same budget and band the curves.

    Bands are mean +/- 1.96 * std / sqrt(runs), pointwise. Failed runs are
    excluded with a warning and noted in the report.
    """
    if n_runs < 2:
        raise ValidationError("n_runs must be at least 2 for a confidence band")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValidationError(f"unknown methods {unknown}; valid: {list(METHODS)}")
    base = config if config is not None else OptConfig()

    tasks = [
        (method, center, params, n_evals, base_seed + i, base, n_nodes, resample_k, v0)
        for method in methods
        for i in range(n_runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_one_run, tasks))
    else:
        outcomes = [_one_run(t) for t in tasks]

    curves = []
    for method in methods:
        done = [c for m, _s, c in outcomes if m == method and c is not None]
        excluded = n_runs - len(done)
        if excluded:
            logger.warning("%s: excluded %d failed runs from the report", method, excluded)
        if not done:
            raise RacelineError(f"all {n_runs} runs of method '{method}' failed")
        stack = np.vstack([c.best_so_far for c in done])
        mean = stack.mean(axis=0)
        half = 1.96 * stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0]) if stack.shape[0] > 1 \
            else np.zeros_like(mean)
        curves.append(MethodCurves(
            method=method,
            mean=mean,
            lower=mean - half,
            upper=mean + half,
            runs=tuple(done),
            excluded=excluded,
        ))
    return ComparisonReport(curves=tuple(curves), n_runs=n_runs, n_evals=n_evals)


def write_comparison_csv(report: ComparisonReport, path) -> None:
    """Per-evaluation rows per method: mean and 95% band of the best lap time."""
    with open(path, "w", newline="") as fh:
        fh.write("method,eval,tau_best_mean_s,tau_best_lower_s,tau_best_upper_s\n")
        for c in report.curves:
            for i in range(c.mean.shape[0]):
                fh.write(f"{c.method},{i + 1},{float(c.mean[i])!r},"
                         f"{float(c.lower[i])!r},{float(c.upper[i])!r}\n")


def comparison_plot_data(report: ComparisonReport) -> dict:
    """JSON-ready convergence curves for the plot emitter."""
    return {
        "n_runs": report.n_runs,
        "n_evals": report.n_evals,
        "methods": [
            {
                "name": c.method,
                "mean": c.mean.tolist(),
                "lower": c.lower.tolist(),
                "upper": c.upper.tolist(),
                "excluded": c.excluded,
            }
            for c in report.curves
        ],
    }


def write_comparison_json(report: ComparisonReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(comparison_plot_data(report), fh, indent=2)

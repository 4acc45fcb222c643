"""Bayesian optimization of lap time over the lateral-offset box.

The loop seeds a GP surrogate with uniformly sampled trajectories, then
repeatedly maximizes an acquisition function (expected improvement, or its
Monte-Carlo fantasy variant for noisy observations) inside the per-node
half-width box, evaluates the proposed trajectory through the spline +
speed-solver pipeline, and refits the surrogate. Everything is deterministic
for a fixed seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import ndtr
from scipy.stats import qmc

from . import gp
from .errors import (
    DegeneratePathError,
    InfeasibleStartError,
    InitializationError,
    ValidationError,
)
from .speed import SpeedProfile, VehicleParams, solve_speed_profile
from .track import CenterLine, NodeSet, SampledPath, fit_and_resample, offsets_to_waypoints, select_nodes

logger = logging.getLogger(__name__)

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_STEP_FLOOR = 1e-4    # coordinate-ascent step floor, as a fraction of the box
_MAX_ROUNDS = 40


@dataclass(frozen=True)
class OptConfig:
    """Knobs for the optimization loop; defaults follow the evaluation setup."""

    n_init: int = 10
    budget: int = 50
    acquisition: str = "ei"          # "ei" or "nei"
    nei_fantasies: int = 32
    acq_restarts: int = 16
    acq_candidates: int = 2048
    rng_seed: int = 0
    convergence_mode: str = "fixed_budget"   # or "no_improvement"
    patience: int = 15
    min_delta: float = 0.01                  # seconds

    def __post_init__(self):
        if self.n_init < 2:
            raise ValidationError("n_init must be at least 2")
        if self.budget < 0:
            raise ValidationError("budget must be nonnegative")
        if self.acquisition not in ("ei", "nei"):
            raise ValidationError(f"unknown acquisition '{self.acquisition}'")
        if self.acquisition == "nei" and self.nei_fantasies < 8:
            raise ValidationError("nei_fantasies must be at least 8")
        if self.acq_restarts < 1 or self.acq_candidates < self.acq_restarts:
            raise ValidationError("need acq_candidates >= acq_restarts >= 1")
        if self.convergence_mode not in ("fixed_budget", "no_improvement"):
            raise ValidationError(f"unknown convergence mode '{self.convergence_mode}'")


class LapTimeEvaluator:
    """Lap-time oracle for offset vectors on one track with one vehicle.

    Bundles the node set, spline resampling, and the speed solver; offsets are
    handled in raw meters here, with helpers to map to the normalized
    [-1, 1] box the surrogate works in.
    """

    def __init__(self, center: CenterLine, params: VehicleParams, n_nodes: int,
                 resample_k: int = 100, v0: float = 0.0):
        self.nodes: NodeSet = select_nodes(center, n_nodes)
        self.params = params
        self.closed = center.closed
        self.resample_k = resample_k
        self.v0 = v0

    @property
    def dim(self) -> int:
        return self.nodes.node_count

    @property
    def half_widths(self) -> np.ndarray:
        return self.nodes.half_widths

    def normalize(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w, dtype=float) / self.half_widths

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.half_widths

    def path_for(self, w: np.ndarray) -> SampledPath:
        waypoints = offsets_to_waypoints(self.nodes, w)
        return fit_and_resample(waypoints, self.closed, self.resample_k)

    def profile_for(self, w: np.ndarray) -> tuple[SampledPath, SpeedProfile]:
        path = self.path_for(w)
        return path, solve_speed_profile(path, self.params, self.v0)

    def lap_time(self, w: np.ndarray) -> float:
        return self.profile_for(w)[1].lap_time


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    offsets: np.ndarray      # raw meters
    lap_time: float
    best_lap_time: float
    acquisition_value: float


@dataclass(frozen=True)
class OptState:
    """Everything the loop carries between steps."""

    evaluator: LapTimeEvaluator
    dataset: gp.GPDataset        # normalized inputs
    model: gp.FittedGP
    tau_best: float
    w_best: np.ndarray           # raw meters
    history: tuple[HistoryRecord, ...] = field(default_factory=tuple)


def expected_improvement(mean, variance, tau_best):
    """Closed-form expected improvement below tau_best; accepts arrays.

    (tau_best - mu) * Phi(z) + sigma * phi(z) with z = (tau_best - mu)/sigma;
    degenerates to max(tau_best - mu, 0) at zero variance.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(variance, dtype=float)
    sigma = np.sqrt(np.maximum(var, 0.0))
    improve = tau_best - mean

    safe_sigma = np.where(sigma > 0.0, sigma, 1.0)
    z = improve / safe_sigma
    pdf = np.exp(-0.5 * z * z) / _SQRT_2PI
    ei = np.where(sigma > 0.0, improve * ndtr(z) + sigma * pdf, np.maximum(improve, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


class _FantasyEI:
    """Monte-Carlo noisy EI: average EI over joint posterior draws at the data.

    Each fantasy conditions a noiseless copy of the surrogate on one draw of
    the latent function values at the observed inputs and takes the best of
    that draw as its incumbent; the reported value averages the fantasies.
    """

    def __init__(self, model: gp.FittedGP, n_fantasies: int, rng: np.random.Generator):
        h = model.hyperparams
        x = model.dataset.inputs
        n = model.dataset.size
        self._model = model
        self._h = h

        kf = gp.kernel_matrix(x, x, h)
        # Latent posterior at the observed inputs (standardized units).
        half = solve_triangular(model.chol, kf, lower=True)
        mean_f = h.prior_mean + kf @ model.weights
        cov_f = kf - half.T @ half
        jitter = 1e-12 * h.signal_variance
        l_cov = cholesky(cov_f + jitter * np.eye(n), lower=True)
        draws = mean_f[:, None] + l_cov @ rng.standard_normal((n, n_fantasies))

        # Noiseless conditioning on each fantasy reuses one factorization.
        l_fant = cholesky(kf + 1e-8 * h.signal_variance * np.eye(n), lower=True)
        rhs = draws - h.prior_mean
        self._fantasy_weights = solve_triangular(
            l_fant.T, solve_triangular(l_fant, rhs, lower=True), lower=False
        )
        self._l_fant = l_fant
        self._fantasy_best = model.y_mean + model.y_std * np.min(draws, axis=0)

    def __call__(self, queries: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(queries)
        model, h = self._model, self._h
        k_star = gp.kernel_matrix(q, model.dataset.inputs, h)
        means_std = h.prior_mean + k_star @ self._fantasy_weights      # (M, F)
        v = solve_triangular(self._l_fant, k_star.T, lower=True)
        var_std = np.maximum(h.signal_variance - np.sum(v * v, axis=0), 0.0)

        means = model.y_mean + model.y_std * means_std
        var = model.y_std**2 * var_std
        ei = expected_improvement(means, var[:, None], self._fantasy_best[None, :])
        return np.mean(ei, axis=1)


def noisy_expected_improvement(model: gp.FittedGP, query: np.ndarray, config: OptConfig,
                               rng: np.random.Generator | None = None) -> float:
    """Fantasy-averaged EI at one query; deterministic for a fixed seed."""
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    fantasy = _FantasyEI(model, config.nei_fantasies, rng)
    return float(fantasy(np.asarray(query, dtype=float).reshape(1, -1))[0])


def _make_acquisition(model: gp.FittedGP, config: OptConfig, rng: np.random.Generator):
    if config.acquisition == "nei":
        return _FantasyEI(model, config.nei_fantasies, rng)
    tau_best = float(np.min(model.dataset.outputs))

    def acq(queries: np.ndarray) -> np.ndarray:
        mean, var = gp.predict_batch(model, queries)
        return np.atleast_1d(expected_improvement(mean, var, tau_best))

    return acq


def _maximize(model: gp.FittedGP, bounds: np.ndarray, config: OptConfig,
              rng: np.random.Generator):
    """Quasi-random sweep plus box-projected coordinate ascent; returns (x, value)."""
    lo = np.asarray(bounds, dtype=float)[:, 0]
    hi = np.asarray(bounds, dtype=float)[:, 1]
    dim = lo.shape[0]
    if dim != model.dataset.dim:
        raise ValidationError("bounds dimension does not match the surrogate")
    acq = _make_acquisition(model, config, rng)

    sobol = qmc.Sobol(d=dim, scramble=True, seed=rng)
    cand = lo + sobol.random(config.acq_candidates) * (hi - lo)
    vals = acq(cand)

    order = np.argsort(-vals)[: config.acq_restarts]
    pts = cand[order].copy()
    best_vals = vals[order].copy()

    span = hi - lo
    steps = np.full(pts.shape[0], 0.25)
    for _ in range(_MAX_ROUNDS):
        active = steps >= _STEP_FLOOR
        if not np.any(active):
            break
        improved = np.zeros(pts.shape[0], dtype=bool)
        for d in range(dim):
            delta = steps[:, None] * span[d]
            trials = np.vstack([pts, pts])
            trials[: pts.shape[0], d] += delta[:, 0]
            trials[pts.shape[0]:, d] -= delta[:, 0]
            np.clip(trials[:, d], lo[d], hi[d], out=trials[:, d])
            tvals = acq(trials)
            up, down = tvals[: pts.shape[0]], tvals[pts.shape[0]:]
            take_up = up > np.maximum(best_vals, down)
            take_down = ~take_up & (down > best_vals)
            pts[take_up, d] = trials[: pts.shape[0]][take_up, d]
            pts[take_down, d] = trials[pts.shape[0]:][take_down, d]
            best_vals = np.maximum(best_vals, np.maximum(up, down))
            improved |= take_up | take_down
        steps[~improved] *= 0.5

    best = int(np.argmax(best_vals))
    x = pts[best]
    eps = 1e-12 * span
    x = np.clip(x, lo + eps, hi - eps)
    return x, float(best_vals[best])


def maximize_acquisition(model: gp.FittedGP, bounds: np.ndarray, config: OptConfig,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Best found maximizer of the acquisition inside the box (normalized units)."""
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    x, _ = _maximize(model, bounds, config, rng)
    return x


def initialize(evaluator: LapTimeEvaluator, config: OptConfig) -> OptState:
    """Evaluate n_init uniform random trajectories and fit the first surrogate.

    Infeasible draws (degenerate paths) are resampled up to 5 times each;
    failing more often than succeeding aborts with a hint to reduce nodes.
    """
    rng = np.random.default_rng([config.rng_seed, 0])
    dim = evaluator.dim
    xs: list[np.ndarray] = []
    taus: list[float] = []
    failures = 0

    for _ in range(config.n_init):
        for _attempt in range(6):
            x = rng.uniform(-1.0, 1.0, dim)
            try:
                tau = evaluator.lap_time(evaluator.denormalize(x))
                break
            except (DegeneratePathError, InfeasibleStartError):
                failures += 1
        else:
            raise InitializationError(
                "could not find a feasible initial trajectory after 6 attempts; "
                "try fewer nodes or a narrower offset box"
            )
        xs.append(x)
        taus.append(tau)

    if failures > (config.n_init + failures) / 2:
        raise InitializationError(
            f"{failures} of {config.n_init + failures} initial samples were infeasible; "
            "try fewer nodes or a narrower offset box"
        )

    dataset = gp.GPDataset(np.asarray(xs), np.asarray(taus))
    model = gp.fit(dataset)
    best = int(np.argmin(dataset.outputs))
    return OptState(
        evaluator=evaluator,
        dataset=dataset,
        model=model,
        tau_best=float(dataset.outputs[best]),
        w_best=evaluator.denormalize(dataset.inputs[best]),
        history=(),
    )


def step(state: OptState, config: OptConfig) -> OptState:
    """One acquisition maximization, evaluation, and surrogate refit.

    A solver failure on the proposal is recorded as twice the worst observed
    lap time so the surrogate learns to avoid the region.
    """
    evaluator = state.evaluator
    iteration = state.dataset.size - config.n_init + 1
    rng = np.random.default_rng([config.rng_seed, iteration])

    bounds = np.column_stack([-np.ones(evaluator.dim), np.ones(evaluator.dim)])
    x_star, acq_value = _maximize(state.model, bounds, config, rng)
    w_star = evaluator.denormalize(x_star)

    try:
        tau = evaluator.lap_time(w_star)
    except (DegeneratePathError, InfeasibleStartError):
        tau = 2.0 * float(np.max(state.dataset.outputs))
        logger.warning("iteration %d: proposal infeasible, recording penalty %.3f s",
                       iteration, tau)

    dataset = gp.GPDataset(
        np.vstack([state.dataset.inputs, x_star]),
        np.concatenate([state.dataset.outputs, [tau]]),
    )
    model = gp.fit(dataset)

    if tau < state.tau_best:
        tau_best, w_best = tau, w_star
    else:
        tau_best, w_best = state.tau_best, state.w_best

    record = HistoryRecord(
        iteration=iteration,
        offsets=w_star,
        lap_time=tau,
        best_lap_time=tau_best,
        acquisition_value=acq_value,
    )
    return OptState(
        evaluator=evaluator,
        dataset=dataset,
        model=model,
        tau_best=tau_best,
        w_best=w_best,
        history=state.history + (record,),
    )


@dataclass(frozen=True)
class RunResult:
    """Final racing line plus the data needed for convergence plots."""

    w_best: np.ndarray           # raw meters
    waypoints: np.ndarray        # (n, 2) displaced nodes of the racing line
    path: SampledPath
    profile: SpeedProfile
    history: tuple[HistoryRecord, ...]
    state: OptState


def run(center: CenterLine, params: VehicleParams, config: OptConfig,
        n_nodes: int, resample_k: int = 100, v0: float = 0.0) -> RunResult:
    """Full optimization: initialize, iterate to budget/convergence, re-evaluate.

    The returned profile is recomputed from ``w_best`` at the end, so its lap
    time matches a fresh evaluation exactly.
    """
    evaluator = LapTimeEvaluator(center, params, n_nodes, resample_k, v0)
    state = initialize(evaluator, config)

    stall = 0
    reference = state.tau_best
    for _ in range(config.budget):
        state = step(state, config)
        if config.convergence_mode == "no_improvement":
            if reference - state.tau_best >= config.min_delta:
                reference = state.tau_best
                stall = 0
            else:
                stall += 1
                if stall >= config.patience:
                    break

    path, profile = evaluator.profile_for(state.w_best)
    waypoints = offsets_to_waypoints(evaluator.nodes, state.w_best)
    return RunResult(
        w_best=state.w_best,
        waypoints=waypoints,
        path=path,
        profile=profile,
        history=state.history,
        state=state,
    )


def write_history_csv(history: tuple[HistoryRecord, ...], path, dim: int | None = None) -> None:
    """Write per-iteration records: iter, lap time, best so far, raw offsets."""
    if history:
        dim = history[0].offsets.shape[0]
    elif dim is None:
        raise ValidationError("empty history needs an explicit offset dimension")
    header = "iter,tau_s,tau_best_s," + ",".join(f"w_{i}" for i in range(dim))
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for rec in history:
            cells = [str(rec.iteration), repr(float(rec.lap_time)), repr(float(rec.best_lap_time))]
            cells += [repr(float(v)) for v in rec.offsets]
            fh.write(",".join(cells) + "\n")

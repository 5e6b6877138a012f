"""The QS-BO loop and the Random Search baseline."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rank_transform as rt
from .acquisition import AcquisitionSpec, select_next
from .errors import EvaluationError, InvalidInputError, NumericalError, RunError
from .surrogate import KERNEL_FAMILIES, fit

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box given as one ``(lower, upper)`` pair per dimension."""

    bounds: tuple

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise InvalidInputError("domain needs at least one dimension")
        for lo, hi in bounds:
            if not lo < hi:
                raise InvalidInputError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "bounds", bounds)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` points drawn uniformly from the box, shape ``(n, dim)``."""
        return self.lower + (self.upper - self.lower) * rng.random((n, self.dim))


@dataclass(frozen=True)
class OptimizerConfig:
    n_init: int = 5
    n_iter: int = 30
    n_candidates: int = 5000
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    kernel: str = "se"
    clip_epsilon: float = rt.CLIP_EPSILON
    phi_floor: float = rt.PHI_FLOOR
    seed: int = 0

    def __post_init__(self):
        if self.n_init < 1 or self.n_iter < 0 or self.n_candidates < 1:
            raise InvalidInputError("need n_init >= 1, n_iter >= 0, n_candidates >= 1")
        if self.kernel not in KERNEL_FAMILIES:
            raise InvalidInputError(f"unknown kernel family {self.kernel!r}")
        if not 0.0 < self.clip_epsilon < 0.5 or not self.phi_floor > 0.0:
            raise InvalidInputError("clip_epsilon must be in (0, 0.5), phi_floor positive")
        if self.seed < 0:
            raise InvalidInputError("seed must be a nonnegative integer")

    @property
    def budget(self) -> int:
        return self.n_init + self.n_iter


@dataclass(frozen=True)
class TrialRecord:
    """One evaluated point.

    ``rank``, ``z`` and ``noise_variance`` reflect the ranking over all trials
    of the run as it finished.
    """

    x: tuple
    value: float
    rank: int
    z: float
    noise_variance: float


@dataclass(frozen=True)
class RunResult:
    method: str
    seed: int
    trials: tuple
    best_curve: tuple

    @property
    def n_evaluations(self) -> int:
        return len(self.trials)

    @property
    def final_best(self) -> float:
        return self.best_curve[-1]

    @property
    def final_best_input(self) -> tuple:
        values = [t.value for t in self.trials]
        return self.trials[int(np.argmin(values))].x

    @property
    def inputs(self) -> np.ndarray:
        return np.array([t.x for t in self.trials])

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "final_best": self.final_best if self.trials else None,
            "final_best_input": list(self.final_best_input) if self.trials else None,
            "best_curve": list(self.best_curve),
            "trials": [
                {
                    "x": list(t.x),
                    "value": t.value,
                    "rank": t.rank,
                    "z": t.z,
                    "noise_variance": t.noise_variance,
                }
                for t in self.trials
            ],
        }


def _streams(seed: int):
    """Independent generators for initial design, candidates and GP restarts."""
    init, cand, hyper = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(init), np.random.default_rng(cand),
            np.random.default_rng(hyper))


def _result(method, seed, xs, ys, clip_epsilon=rt.CLIP_EPSILON, phi_floor=rt.PHI_FLOOR):
    if ys:
        latent = rt.build_latent_targets(ys, clip_epsilon, phi_floor)
    else:
        latent = []
    trials = tuple(
        TrialRecord(tuple(float(v) for v in x), float(y), t.rank, t.z, t.variance)
        for x, y, t in zip(xs, ys, latent)
    )
    curve = tuple(float(v) for v in np.minimum.accumulate(ys)) if ys else ()
    return RunResult(method=method, seed=seed, trials=trials, best_curve=curve)


def _evaluate(objective: Objective, x: np.ndarray, partial) -> float:
    y = float(objective(x.copy()))
    if not math.isfinite(y):
        raise EvaluationError(f"objective returned {y!r} at {x.tolist()}", partial())
    return y


def random_search_run(objective: Objective, domain: Domain, budget: int, seed: int = 0) -> RunResult:
    """Evaluate ``budget`` uniform random points and track the best value."""
    if budget < 1:
        raise InvalidInputError("budget must be at least 1")
    init_rng, _, _ = _streams(seed)
    xs, ys = [], []
    for x in domain.sample(init_rng, budget):
        ys.append(_evaluate(objective, x, lambda: _result("random", seed, xs, ys)))
        xs.append(x)
    return _result("random", seed, xs, ys)


def qsbo_run(
    objective: Objective,
    domain: Domain,
    config: Optional[OptimizerConfig] = None,
) -> RunResult:
    """Minimize ``objective`` over ``domain`` using only the ranks of its values.

    Each iteration re-ranks every evaluation so far, rebuilds the latent
    targets and noise, refits the GP, and evaluates the best of a fresh batch of
    uniform candidates under the acquisition function.
    """
    config = config or OptimizerConfig()
    init_rng, cand_rng, hyper_rng = _streams(config.seed)
    xs, ys = [], []

    def partial():
        return _result("qsbo", config.seed, xs, ys, config.clip_epsilon, config.phi_floor)

    for x in domain.sample(init_rng, config.n_init):
        ys.append(_evaluate(objective, x, partial))
        xs.append(x)

    for it in range(config.n_iter):
        latent = rt.build_latent_targets(ys, config.clip_epsilon, config.phi_floor)
        z = np.array([t.z for t in latent])
        noise = np.array([t.variance for t in latent])
        try:
            model = fit(
                np.array(xs), z, noise, domain.lower, domain.upper,
                family=config.kernel, rng=hyper_rng,
            )
        except NumericalError as exc:
            raise RunError(f"surrogate fit failed at iteration {it}: {exc}", partial()) from exc
        candidates = domain.sample(cand_rng, config.n_candidates)
        idx = select_next(model, candidates, config.acquisition, float(z.min()))
        x = candidates[idx]
        ys.append(_evaluate(objective, x, partial))
        xs.append(x)
        log.debug("iteration %d: f=%.6g best=%.6g", it, ys[-1], min(ys))

    return partial()

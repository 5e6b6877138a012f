"""Acquisition functions on the latent (probit) scale, minimization convention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InvalidInputError
from .surrogate import SurrogateModel, predict_batch

ACQUISITIONS = ("ei", "pi", "lcb")

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "ei"
    kappa: float = 2.0
    s_floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in ACQUISITIONS:
            raise InvalidInputError(f"unknown acquisition {self.kind!r}")
        if not self.kappa > 0.0 or not self.s_floor > 0.0:
            raise InvalidInputError("kappa and s_floor must be positive")


def _unwrap(out, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(out)
    return out


def expected_improvement(mean, sd, best_z, s_floor: float = 1e-12):
    """Expected improvement below ``best_z`` under N(mean, sd^2).

    Candidates whose sd falls below ``s_floor`` score exactly zero.
    """
    mean_a = np.asarray(mean, dtype=float)
    sd_a = np.asarray(sd, dtype=float)
    ok = sd_a >= s_floor
    safe_sd = np.where(ok, sd_a, 1.0)
    gamma = (best_z - mean_a) / safe_sd
    ei = safe_sd * (_INV_SQRT_2PI * np.exp(-0.5 * gamma * gamma) + gamma * ndtr(gamma))
    ei = np.where(ok, np.maximum(ei, 0.0), 0.0)
    return _unwrap(ei, mean, sd, best_z)


def probability_of_improvement(mean, sd, best_z, s_floor: float = 1e-12):
    mean_a = np.asarray(mean, dtype=float)
    sd_a = np.asarray(sd, dtype=float)
    ok = sd_a >= s_floor
    safe_sd = np.where(ok, sd_a, 1.0)
    pi = np.where(ok, ndtr((best_z - mean_a) / safe_sd), (mean_a < best_z).astype(float))
    return _unwrap(pi, mean, sd, best_z)


def lower_confidence_bound(mean, sd, kappa: float = 2.0):
    """``mean - kappa * sd``; smaller is better."""
    out = np.asarray(mean, dtype=float) - kappa * np.asarray(sd, dtype=float)
    return _unwrap(out, mean, sd)


def acquisition_scores(mean, sd, spec: AcquisitionSpec, best_z: float) -> np.ndarray:
    """Scores where larger is better, whatever the acquisition kind."""
    if spec.kind == "ei":
        return np.asarray(expected_improvement(mean, sd, best_z, spec.s_floor))
    if spec.kind == "pi":
        return np.asarray(probability_of_improvement(mean, sd, best_z, spec.s_floor))
    return -np.asarray(lower_confidence_bound(mean, sd, spec.kappa))


def select_next(
    model: SurrogateModel, candidates, spec: AcquisitionSpec, best_z: float
) -> int:
    """Index of the best-scoring candidate; ties go to the lowest index."""
    cand = np.asarray(candidates, dtype=float)
    if cand.ndim == 1:
        cand = cand[:, None] if model.kernel.dim == 1 else cand[None, :]
    if cand.shape[0] < 1:
        raise InvalidInputError("candidate set is empty")
    mean, var = predict_batch(model, cand)
    scores = acquisition_scores(mean, np.sqrt(var), spec, best_z)
    return int(np.argmax(scores))

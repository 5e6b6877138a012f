"""Exact GP regression with a per-point (heteroscedastic) noise diagonal.

The prior mean is zero.  Inputs are affinely mapped onto the unit cube before
the kernel sees them whenever the model carries domain bounds, so lengthscales
are expressed in normalized units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from .errors import InvalidInputError, NumericalError

KERNEL_FAMILIES = ("se", "matern52")

LOG_LENGTHSCALE_BOUNDS = (math.log(0.01), math.log(10.0))
LOG_SIGNAL_BOUNDS = (math.log(0.01), math.log(100.0))
N_STARTS = 8
N_SWEEPS = 3
GOLDEN_XTOL = 1e-2

JITTER_START = 1e-10
JITTER_MAX = 1e-4

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT5 = math.sqrt(5.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class KernelSpec:
    """Stationary ARD covariance function.

    ``family`` is ``"se"`` (squared exponential) or ``"matern52"``.
    """

    family: str
    lengthscales: tuple
    signal_variance: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InvalidInputError(f"unknown kernel family {self.family!r}")
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        if not ls or min(ls) <= 0.0:
            raise InvalidInputError("lengthscales must be positive")
        if not self.signal_variance > 0.0:
            raise InvalidInputError("signal_variance must be positive")
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))

    @property
    def dim(self) -> int:
        return len(self.lengthscales)


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    """A conditioned GP.

    ``chol_factor`` is the lower Cholesky factor of ``K + diag(noise) + jitter*I``
    and ``alpha_vector`` solves that system against ``targets``.  ``lower`` and
    ``upper`` give the box used for input normalization; when absent, inputs
    reach the kernel unscaled.
    """

    kernel: KernelSpec
    train_inputs: np.ndarray
    targets: np.ndarray
    noise_diag: np.ndarray
    chol_factor: np.ndarray
    alpha_vector: np.ndarray
    jitter: float
    log_likelihood: float
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    _scaled_inputs: np.ndarray = field(default=None, repr=False)

    def scale(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.lower is None:
            return x
        return (x - self.lower) / (self.upper - self.lower)


def _as_inputs(x, dim=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if dim == 1 or dim is None else x[None, :]
    if x.ndim != 2:
        raise InvalidInputError("inputs must be a vector or a 2-D array")
    if dim is not None and x.shape[1] != dim:
        raise InvalidInputError(f"expected inputs of dimension {dim}, got {x.shape[1]}")
    return x


def _from_sq_dist(family: str, sq: np.ndarray, signal_variance: float) -> np.ndarray:
    if family == "se":
        return signal_variance * np.exp(-0.5 * sq)
    r = _SQRT5 * np.sqrt(sq)
    return signal_variance * (1.0 + r + r * r / 3.0) * np.exp(-r)


def kernel_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """Cross-covariance matrix between the rows of ``a`` and ``b``."""
    a = _as_inputs(a, spec.dim)
    b = _as_inputs(b, spec.dim)
    ls = np.asarray(spec.lengthscales)
    diff = (a / ls)[:, None, :] - (b / ls)[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return _from_sq_dist(spec.family, sq, spec.signal_variance)


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (spec.dim,) or b.shape != (spec.dim,):
        raise InvalidInputError(
            f"kernel arguments must have dimension {spec.dim}, got {a.shape} and {b.shape}"
        )
    sq = float(np.sum(((a - b) / np.asarray(spec.lengthscales)) ** 2))
    return float(_from_sq_dist(spec.family, np.asarray(sq), spec.signal_variance))


def _cholesky(matrix: np.ndarray):
    """Cholesky with escalating diagonal jitter; returns ``(L, jitter)`` or None.

    The unjittered matrix is tried first, then jitter of 1e-10 up to 1e-4 times
    the mean diagonal, growing tenfold per failure.
    """
    chol, info = lapack.dpotrf(matrix, lower=1, clean=1)
    if info == 0:
        return chol, 0.0
    scale = float(np.mean(np.diag(matrix)))
    rel = JITTER_START
    while rel <= JITTER_MAX * (1.0 + 1e-9):
        jitter = rel * scale
        work = matrix.copy()
        work.flat[:: work.shape[0] + 1] += jitter
        chol, info = lapack.dpotrf(work, lower=1, clean=1, overwrite_a=1)
        if info == 0:
            return chol, jitter
        rel *= 10.0
    return None


def _lml_terms(chol: np.ndarray, targets: np.ndarray):
    alpha, info = lapack.dpotrs(chol, targets, lower=1)
    n = targets.shape[0]
    lml = (
        -0.5 * float(targets @ alpha)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * n * _LOG_2PI
    )
    return alpha, lml


def _check_training(train_inputs, targets, noise_diag, dim=None):
    x = _as_inputs(train_inputs, dim)
    z = np.asarray(targets, dtype=float).ravel()
    noise = np.asarray(noise_diag, dtype=float).ravel()
    if x.shape[0] < 1:
        raise InvalidInputError("at least one training point is required")
    if z.shape[0] != x.shape[0] or noise.shape[0] != x.shape[0]:
        raise InvalidInputError("inputs, targets and noise_diag must have equal length")
    if np.any(noise < 0.0) or not np.all(np.isfinite(noise)):
        raise InvalidInputError("noise_diag must be finite and nonnegative")
    if not np.all(np.isfinite(z)) or not np.all(np.isfinite(x)):
        raise InvalidInputError("inputs and targets must be finite")
    return x, z, noise


def log_marginal_likelihood(train_inputs, targets, noise_diag, spec: KernelSpec) -> float:
    """Log evidence of ``targets`` under GP(0, k) with diagonal noise.

    Inputs are passed to the kernel as given (no normalization).
    """
    x, z, noise = _check_training(train_inputs, targets, noise_diag, spec.dim)
    cov = kernel_matrix(spec, x, x)
    cov.flat[:: cov.shape[0] + 1] += noise
    factor = _cholesky(cov)
    if factor is None:
        raise NumericalError("covariance is not positive definite after jitter escalation")
    return _lml_terms(factor[0], z)[1]


def condition(
    spec: KernelSpec,
    train_inputs,
    targets,
    noise_diag,
    lower=None,
    upper=None,
) -> SurrogateModel:
    """Condition a GP with fixed hyperparameters on data."""
    x, z, noise = _check_training(train_inputs, targets, noise_diag, spec.dim)
    if lower is not None:
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        scaled = (x - lower) / (upper - lower)
    else:
        scaled = x
    cov = kernel_matrix(spec, scaled, scaled)
    cov.flat[:: cov.shape[0] + 1] += noise
    factor = _cholesky(cov)
    if factor is None:
        raise NumericalError("covariance is not positive definite after jitter escalation")
    chol, jitter = factor
    alpha, lml = _lml_terms(chol, z)
    for arr in (x, z, noise, chol, alpha, scaled):
        arr.flags.writeable = False
    return SurrogateModel(
        kernel=spec,
        train_inputs=x,
        targets=z,
        noise_diag=noise,
        chol_factor=chol,
        alpha_vector=alpha,
        jitter=jitter,
        log_likelihood=lml,
        lower=lower,
        upper=upper,
        _scaled_inputs=scaled,
    )


class _Evidence:
    """Negative log evidence as a function of log-hyperparameters.

    Pairwise squared differences are cached per dimension, so each evaluation
    costs one kernel assembly and one Cholesky factorization.
    """

    def __init__(self, family, scaled_inputs, targets, noise):
        self.family = family
        diff = scaled_inputs[:, None, :] - scaled_inputs[None, :, :]
        self.sq_diff = np.moveaxis(diff * diff, 2, 0).copy()
        self.targets = targets
        self.noise = noise
        self.n = targets.shape[0]

    def __call__(self, theta: np.ndarray) -> float:
        d = self.sq_diff.shape[0]
        inv_ls2 = np.exp(-2.0 * theta[:d])
        sq = np.tensordot(inv_ls2, self.sq_diff, axes=1)
        cov = _from_sq_dist(self.family, sq, math.exp(theta[d]))
        cov.flat[:: self.n + 1] += self.noise
        factor = _cholesky(cov)
        if factor is None:
            return math.inf
        return -_lml_terms(factor[0], self.targets)[1]


def _golden_section(f, lo: float, hi: float, xtol: float):
    """Minimize a scalar function on ``[lo, hi]``; endpoints are also checked."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    for edge in (lo, hi):
        fe = f(edge)
        if fe < best_f:
            best_x, best_f = edge, fe
    return best_x, best_f


def _coordinate_search(objective, theta0, bounds, sweeps, xtol):
    theta = np.array(theta0, dtype=float)
    value = objective(theta)
    for _ in range(sweeps):
        for j, (lo, hi) in enumerate(bounds):
            def along(t, j=j):
                trial = theta.copy()
                trial[j] = t
                return objective(trial)

            t_best, f_best = _golden_section(along, lo, hi, xtol)
            if f_best < value:
                theta[j] = t_best
                value = f_best
    return theta, value


def fit(
    train_inputs,
    targets,
    noise_diag,
    lower=None,
    upper=None,
    family: str = "se",
    rng=None,
    n_starts: int = N_STARTS,
    sweeps: int = N_SWEEPS,
) -> SurrogateModel:
    """Fit kernel hyperparameters by maximizing the log evidence.

    Parameters
    ----------
    train_inputs : array_like, shape (n, d)
        Evaluated points.
    targets, noise_diag : array_like, shape (n,)
        Latent targets and their per-point noise variances.
    lower, upper : array_like, shape (d,), optional
        Domain box; inputs are rescaled to the unit cube before fitting.
    family : {"se", "matern52"}
        Kernel family.
    rng : numpy.random.Generator or int, optional
        Source of the random restarts.
    n_starts : int
        Number of restarts; the first starts at unit lengthscales and unit
        signal variance, the rest are drawn uniformly in log-space.
    sweeps : int
        Coordinate-search sweeps per restart.

    Returns
    -------
    SurrogateModel
        Model conditioned with the best hyperparameters found.
    """
    if family not in KERNEL_FAMILIES:
        raise InvalidInputError(f"unknown kernel family {family!r}")
    x, z, noise = _check_training(train_inputs, targets, noise_diag)
    dim = x.shape[1]
    if lower is not None:
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        scaled = (x - lower) / (upper - lower)
    else:
        scaled = x
    rng = np.random.default_rng(rng)

    bounds = [LOG_LENGTHSCALE_BOUNDS] * dim + [LOG_SIGNAL_BOUNDS]
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    starts = [np.zeros(dim + 1)]
    starts += [lo + (hi - lo) * rng.random(dim + 1) for _ in range(n_starts - 1)]

    objective = _Evidence(family, scaled, z, noise)
    best_theta, best_value = None, math.inf
    for theta0 in starts:
        theta, value = _coordinate_search(objective, theta0, bounds, sweeps, GOLDEN_XTOL)
        if value < best_value:
            best_theta, best_value = theta, value
    if best_theta is None:
        raise NumericalError("every restart failed to factorize the covariance")

    spec = KernelSpec(
        family=family,
        lengthscales=tuple(np.exp(best_theta[:dim])),
        signal_variance=float(np.exp(best_theta[dim])),
    )
    return condition(spec, x, z, noise, lower, upper)


def predict_batch(model: SurrogateModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at each row of ``x``."""
    pts = model.scale(_as_inputs(x, model.kernel.dim))
    cross = kernel_matrix(model.kernel, pts, model._scaled_inputs)
    mean = cross @ model.alpha_vector
    v, info = lapack.dtrtrs(model.chol_factor, cross.T, lower=1)
    var = model.kernel.signal_variance - np.sum(v * v, axis=0)
    return mean, np.maximum(var, 0.0)


def predict(model: SurrogateModel, x) -> Prediction:
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.shape != (model.kernel.dim,):
        raise InvalidInputError(f"expected a point of dimension {model.kernel.dim}")
    mean, var = predict_batch(model, pt[None, :])
    return Prediction(mean=float(mean[0]), variance=float(var[0]))

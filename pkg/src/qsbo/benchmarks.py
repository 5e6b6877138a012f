"""Synthetic test functions and the registry used by the experiment runner."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidInputError
from .optimizer import Domain

BRANIN_MINIMIZERS = ((-math.pi, 12.275), (math.pi, 2.275), (9.42478, 2.475))


def _check_interval(x: float, lo: float, hi: float, name: str) -> float:
    x = float(x)
    if not lo <= x <= hi:
        raise InvalidInputError(f"{name}: {x!r} outside [{lo}, {hi}]")
    return x


def sinusoidal_quadratic(x: float) -> float:
    """sin(3x) + x^2 - 0.7x on [-2, 2]."""
    x = _check_interval(x, -2.0, 2.0, "sinusoidal_quadratic")
    return math.sin(3.0 * x) + x * x - 0.7 * x


def forrester(x: float) -> float:
    """(6x - 2)^2 sin(12x - 4) on [0, 1]."""
    x = _check_interval(x, 0.0, 1.0, "forrester")
    return (6.0 * x - 2.0) ** 2 * math.sin(12.0 * x - 4.0)


def branin(x1: float, x2: float) -> float:
    """Branin-Hoo on [-5, 10] x [0, 15]; three global minima near 0.397887."""
    x1 = _check_interval(x1, -5.0, 10.0, "branin")
    x2 = _check_interval(x2, 0.0, 15.0, "branin")
    a, b, c = 1.0, 5.1 / (4.0 * math.pi ** 2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * math.pi)
    return a * (x2 - b * x1 * x1 + c * x1 - r) ** 2 + s * (1.0 - t) * math.cos(x1) + s


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    domain: Domain
    function: Callable[..., float]

    @property
    def dimension(self) -> int:
        return self.domain.dim

    def evaluate(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise InvalidInputError(f"{self.name} expects a {self.dimension}-vector")
        return self.function(*x)

    __call__ = evaluate

    def grid_minimum(self, points_per_dim: int | None = None):
        """Brute-force minimum over a uniform grid covering the domain.

        Defaults to 10**4 points in 1-D and 500 x 500 in 2-D.
        """
        if points_per_dim is None:
            points_per_dim = 10_000 if self.dimension == 1 else 500
        axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in self.domain.bounds]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dimension)
        values = np.array([self.evaluate(p) for p in mesh])
        i = int(np.argmin(values))
        return mesh[i], float(values[i])

    @cached_property
    def known_optimum(self):
        """(input, value) of the global minimum: dense grid, then a bounded polish."""
        x0, f0 = self.grid_minimum()
        res = minimize(
            self.evaluate, x0, method="L-BFGS-B", bounds=self.domain.bounds,
            options={"ftol": 1e-15, "gtol": 1e-12},
        )
        if res.fun < f0:
            return np.asarray(res.x), float(res.fun)
        return x0, f0


BENCHMARKS = {
    "sinq1d": BenchmarkFunction("sinq1d", Domain([(-2.0, 2.0)]), sinusoidal_quadratic),
    "forrester": BenchmarkFunction("forrester", Domain([(0.0, 1.0)]), forrester),
    "branin": BenchmarkFunction("branin", Domain([(-5.0, 10.0), (0.0, 15.0)]), branin),
}


def get_benchmark(name: str) -> BenchmarkFunction:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown function {name!r}; choose from {sorted(BENCHMARKS)}"
        ) from None

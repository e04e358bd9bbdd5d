"""Standardized error laws for the simulation study.

Every law is shifted and scaled by its closed-form mean and standard
deviation so that draws have mean 0 and sd 1 before they are multiplied by
a cell's sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

CONCRETE_LAWS = (
    "normal", "laplace", "logistic", "uniform",
    "lognormal", "chi2_3", "chi2_10", "exponential",
)

# cell order (11, 12, 21, 22)
MIXED_LAWS = {
    "mixed_symmetric": ("normal", "laplace", "logistic", "uniform"),
    "mixed_skewed": ("exponential", "lognormal", "chi2_3", "chi2_10"),
}

LAWS = CONCRETE_LAWS + tuple(MIXED_LAWS)

# the eight error distributions of the null study
NULL_STUDY_LAWS = (
    "normal", "laplace", "logistic", "mixed_symmetric",
    "lognormal", "chi2_3", "chi2_10", "mixed_skewed",
)
POWER_STUDY_LAWS = ("normal", "laplace", "lognormal", "exponential")


def raw_moments(law: str) -> tuple[float, float]:
    """(mean, sd) of the unstandardized base law."""
    if law in MIXED_LAWS:
        raise InvalidInputError(f"{law} is a per-cell mixture; resolve the cell's law first")
    if law == "normal":
        return 0.0, 1.0
    if law == "laplace":
        return 0.0, math.sqrt(2.0)
    if law == "logistic":
        return 0.0, math.pi / math.sqrt(3.0)
    if law == "uniform":
        return 0.5, 1.0 / math.sqrt(12.0)
    if law == "exponential":
        return 1.0, 1.0
    if law == "lognormal":
        e = math.e
        return math.sqrt(e), math.sqrt((e - 1.0) * e)
    if law.startswith("chi2_"):
        k = int(law[5:])
        return float(k), math.sqrt(2.0 * k)
    raise InvalidInputError(f"unknown error law {law!r}")


@dataclass(frozen=True)
class DistributionSpec:
    law: str

    def __post_init__(self):
        if self.law not in LAWS:
            raise InvalidInputError(f"unknown error law {self.law!r}; choose from {', '.join(LAWS)}")

    def cell_law(self, cell: int) -> str:
        """Concrete law used in cell index 0..3."""
        return MIXED_LAWS[self.law][cell] if self.law in MIXED_LAWS else self.law

    @property
    def raw_mean(self) -> float:
        return raw_moments(self.cell_law(0))[0]

    @property
    def raw_sd(self) -> float:
        return raw_moments(self.cell_law(0))[1]


def _raw_draws(law: str, size, rng: np.random.Generator) -> np.ndarray:
    if law == "normal":
        return rng.standard_normal(size)
    if law == "laplace":
        return rng.laplace(0.0, 1.0, size)
    if law == "logistic":
        return rng.logistic(0.0, 1.0, size)
    if law == "uniform":
        return rng.random(size)
    if law == "exponential":
        return rng.standard_exponential(size)
    if law == "lognormal":
        return np.exp(rng.standard_normal(size))
    if law.startswith("chi2_"):
        return rng.chisquare(int(law[5:]), size)
    raise InvalidInputError(f"unknown error law {law!r}")


def standardized(law: str, size, rng: np.random.Generator) -> np.ndarray:
    mean, sd = raw_moments(law)
    return (_raw_draws(law, size, rng) - mean) / sd


def sample_errors(spec: DistributionSpec, cell: int, sigma: float, size: int, rng) -> np.ndarray:
    """``size`` errors for cell index ``cell`` (0..3) with sd ``sigma``."""
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    return sigma * standardized(spec.cell_law(cell), size, rng)


def sample_error(spec: DistributionSpec, cell, sigma: float, rng) -> float:
    """A single standardized error scaled by ``sigma``.

    ``cell`` is an index 0..3 or an (i, j) pair with i, j in {1, 2}.
    """
    if isinstance(cell, tuple):
        cell = 2 * (cell[0] - 1) + (cell[1] - 1)
    return float(sample_errors(spec, cell, sigma, 1, rng)[0])

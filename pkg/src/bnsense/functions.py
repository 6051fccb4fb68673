"""Value types for analysis results: rational-linear and multilinear functions.

A one-way sensitivity function is a quotient of two lines in one parameter;
an n-way function of the evidence probability is multilinear, held as one
coefficient per subset of the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UndefinedPointError
from .network import ParameterRef


@dataclass(frozen=True)
class LinearCoeffs:
    """A line c(x) = slope * x + intercept."""

    slope: float
    intercept: float

    def at(self, x: float) -> float:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class SensitivityFunction:
    """A posterior as a function of one parameter: numerator / denominator lines."""

    parameter: ParameterRef
    numerator: LinearCoeffs
    denominator: LinearCoeffs

    def coefficients(self) -> tuple[float, float, float, float]:
        """(numerator slope, numerator intercept, denominator slope, denominator intercept)."""
        return (self.numerator.slope, self.numerator.intercept,
                self.denominator.slope, self.denominator.intercept)


def evaluate(sf: SensitivityFunction, x: float) -> float:
    """Value of the function at x; requires a strictly positive denominator."""
    den = sf.denominator.at(x)
    if not den > 0:
        raise UndefinedPointError(f"denominator {den!r} at x={x!r} is not positive")
    return sf.numerator.at(x) / den


def derivative(sf: SensitivityFunction, x: float) -> float:
    """First derivative at x (quotient rule on the two lines)."""
    den = sf.denominator.at(x)
    if not den > 0:
        raise UndefinedPointError(f"denominator {den!r} at x={x!r} is not positive")
    num = (sf.numerator.slope * sf.denominator.intercept
           - sf.numerator.intercept * sf.denominator.slope)
    return num / (den * den)


@dataclass(frozen=True)
class MultilinearFunction:
    """p(e) over a parameter tuple: one coefficient per subset (bitmask keyed).

    coefficients[0] is the constant term; bit i of a mask refers to params[i].
    """

    params: tuple[ParameterRef, ...]
    coefficients: dict[int, float]

    def coefficient(self, subset: tuple[int, ...]) -> float:
        mask = 0
        for i in subset:
            mask |= 1 << i
        return self.coefficients[mask]


def evaluate_multilinear(mf: MultilinearFunction, values) -> float:
    """Value of the multilinear function at a full vector of parameter values."""
    values = tuple(values)
    if len(values) != len(mf.params):
        raise ValueError(
            f"expected {len(mf.params)} parameter values, got {len(values)}")
    total = 0.0
    for mask, coeff in mf.coefficients.items():
        term = coeff
        i = 0
        m = mask
        while m:
            if m & 1:
                term *= values[i]
            m >>= 1
            i += 1
        total += term
    return total

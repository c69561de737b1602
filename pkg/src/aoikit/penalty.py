"""Age penalty functions and their closed-form antiderivatives.

Each penalty f is non-negative and non-decreasing on [0, inf) with a shape
parameter alpha > 0. F is the antiderivative with F(0) = 0; average penalties
are evaluated through F differences, never by quadrature. f and F accept
scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINEAR = "linear"
EXPONENTIAL = "exponential"
LOGARITHMIC = "logarithmic"

_KINDS = (LINEAR, EXPONENTIAL, LOGARITHMIC)


class PenaltyDomainError(ValueError):
    """Argument fell outside the domain of the penalty antiderivative."""


@dataclass(frozen=True)
class PenaltyFunction:
    """One of the standard penalty families: linear a*t, exponential
    exp(a*t)-1, logarithmic ln(a*t+1) (natural log)."""

    kind: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def f(self, t):
        a = self.alpha
        if self.kind == LINEAR:
            return a * np.asarray(t, dtype=float) + 0.0
        if self.kind == EXPONENTIAL:
            return np.exp(a * np.asarray(t, dtype=float)) - 1.0
        x = a * np.asarray(t, dtype=float) + 1.0
        if np.any(x <= 0):
            raise PenaltyDomainError("bias outside penalty domain")
        return np.log(x)

    def F(self, t):
        """Antiderivative of f with F(0) = 0."""
        a = self.alpha
        t = np.asarray(t, dtype=float)
        if self.kind == LINEAR:
            return a * t * t / 2.0
        if self.kind == EXPONENTIAL:
            return (np.exp(a * t) - 1.0) / a - t
        x = a * t + 1.0
        if np.any(x <= 0):
            raise PenaltyDomainError("bias outside penalty domain")
        return (x * np.log(x) - a * t) / a


def linear(alpha: float = 1.0) -> PenaltyFunction:
    return PenaltyFunction(LINEAR, alpha)


def exponential(alpha: float = 1.0) -> PenaltyFunction:
    return PenaltyFunction(EXPONENTIAL, alpha)


def logarithmic(alpha: float = 1.0) -> PenaltyFunction:
    return PenaltyFunction(LOGARITHMIC, alpha)


def from_name(name: str, alpha: float = 1.0) -> PenaltyFunction:
    """Map CLI-style names (linear|exp|log) to a PenaltyFunction."""
    aliases = {
        "linear": LINEAR,
        "exp": EXPONENTIAL,
        "exponential": EXPONENTIAL,
        "log": LOGARITHMIC,
        "logarithmic": LOGARITHMIC,
    }
    if name not in aliases:
        raise ValueError(f"unknown penalty {name!r}")
    return PenaltyFunction(aliases[name], alpha)

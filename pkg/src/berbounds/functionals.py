"""Plug-in functional families phi(t) evaluated at likelihood ratios t = f1/f2.

Averaging phi over class-2 evaluation points approximates the integral of
phi(f1/f2) f2, and an affine post-transform (post_offset + post_scale * value)
maps the average onto the quantity used in the Bayes-error bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ChernoffCoefficient",
    "HpDivergenceRational",
    "HpDivergenceVariational",
    "SoftminLowerBound",
    "Functional",
    "phi_eval",
    "bound_from_dphi",
]

SOFTMIN_LOG_SWITCH = 30.0


def _check_prior(prior1: float) -> tuple[float, float]:
    if not 0.0 < prior1 < 1.0:
        raise ValueError(f"prior1 must lie in (0, 1), got {prior1}")
    return float(prior1), 1.0 - float(prior1)


def _check_ratios(t) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty ratio array")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("likelihood ratios must be positive and finite")
    return arr


@dataclass(frozen=True)
class ChernoffCoefficient:
    """phi(t) = t**alpha; the average estimates integral f1^a f2^(1-a)."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"Chernoff alpha must lie in (0, 1), got {self.alpha}")

    post_offset = 0.0
    post_scale = 1.0

    def phi(self, t) -> np.ndarray:
        return _check_ratios(t) ** self.alpha


@dataclass(frozen=True)
class HpDivergenceRational:
    """phi(t) = 4 q1 q2 t / (q1 t + q2).

    The divergence is one minus the average, so phi stays bounded by 4*q2 and
    the plug-in estimate is insensitive to overestimated ratios.
    """

    prior1: float

    def __post_init__(self):
        _check_prior(self.prior1)

    post_offset = 1.0
    post_scale = -1.0

    def phi(self, t) -> np.ndarray:
        t = _check_ratios(t)
        q1, q2 = self.prior1, 1.0 - self.prior1
        return 4.0 * q1 * q2 * t / (q1 * t + q2)


@dataclass(frozen=True)
class HpDivergenceVariational:
    """phi(t) = (q1 t - q2)^2 / (q1 t + q2); the average is the divergence.

    Grows linearly in t, so ratio noise propagates unbounded. Kept for the
    accuracy comparison against the rational form; not used by default.
    """

    prior1: float

    def __post_init__(self):
        _check_prior(self.prior1)

    post_offset = 0.0
    post_scale = 1.0

    def phi(self, t) -> np.ndarray:
        t = _check_ratios(t)
        q1, q2 = self.prior1, 1.0 - self.prior1
        return (q1 * t - q2) ** 2 / (q1 * t + q2)


@dataclass(frozen=True)
class SoftminLowerBound:
    """Soft-min of the class posteriors, averaged against the mixture.

    phi(t) = (q1 t + q2) * ln[(1 + e^-a) / (e^(-a u1) + e^(-a u2))] with
    posteriors u1 = q1 t / (q1 t + q2) and u2 = q2 / (q1 t + q2). Dividing the
    average by ``alpha`` lower-bounds the Bayes error, arbitrarily tightly as
    ``alpha`` grows. The mixture factor (q1 t + q2) turns the class-2 sample
    average into a mixture average.

    ``log_stable`` switches to a factored log-sum-exp evaluation wherever
    alpha * max(u1, u2) > 30, which keeps large-alpha values finite.
    """

    alpha: float
    prior1: float
    log_stable: bool = True

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"softmin alpha must be positive, got {self.alpha}")
        _check_prior(self.prior1)

    post_offset = 0.0

    @property
    def post_scale(self) -> float:
        return 1.0 / self.alpha

    def phi(self, t) -> np.ndarray:
        t = _check_ratios(t)
        q1, q2 = self.prior1, 1.0 - self.prior1
        a = self.alpha
        mix = q1 * t + q2
        u1 = q1 * t / mix
        u2 = q2 / mix
        log_num = np.log1p(np.exp(-a))
        u_min = np.minimum(u1, u2)
        u_max = np.maximum(u1, u2)
        # The two log terms are both O(e^-a); differencing them before adding
        # a*u_min keeps the tiny a*u_min contribution from being absorbed.
        stable = mix * (
            a * u_min + (log_num - np.log1p(np.exp(-a * (u_max - u_min))))
        )
        if not self.log_stable:
            with np.errstate(divide="ignore"):
                return mix * (log_num - np.log(np.exp(-a * u1) + np.exp(-a * u2)))
        with np.errstate(divide="ignore"):
            direct = mix * (log_num - np.log(np.exp(-a * u1) + np.exp(-a * u2)))
        return np.where(a * u_max > SOFTMIN_LOG_SWITCH, stable, direct)


Functional = Union[
    ChernoffCoefficient,
    HpDivergenceRational,
    HpDivergenceVariational,
    SoftminLowerBound,
]


def phi_eval(functional: Functional, t):
    """Evaluate phi at a scalar or an array of likelihood ratios."""
    out = functional.phi(t)
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(out)
    return out


def bound_from_dphi(functional: Functional, dphi: float) -> float:
    """Map an averaged functional value onto its bound quantity."""
    dphi = float(dphi)
    if not np.isfinite(dphi):
        raise ValueError(f"non-finite functional value {dphi}")
    return functional.post_offset + functional.post_scale * dphi

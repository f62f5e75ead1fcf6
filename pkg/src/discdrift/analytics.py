"""Closed-form quantities for two-region drifts switching at zero.

Everything here assumes unit noise unless a ``sigma`` argument says
otherwise. For other diffusion constants rescale space first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, log_ndtr

from .errors import ParameterError


@dataclass(frozen=True)
class InvariantDensity:
    """Stationary law of ``dX = (alpha1 1{X<0} + alpha2 1{X>=0}) dt + dW``."""

    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (self.alpha1 > 0 > self.alpha2):
            raise ParameterError(
                f"inward drift needs alpha1 > 0 > alpha2, got {self.alpha1}, {self.alpha2}"
            )

    @property
    def c(self) -> float:
        a1, a2 = self.alpha1, -self.alpha2
        return 2.0 * a1 * a2 / (a1 + a2)

    @property
    def mass_left(self) -> float:
        return self.c / (2.0 * self.alpha1)

    def second_moment(self) -> float:
        return self.c / (4.0 * self.alpha1**3) + self.c / (4.0 * (-self.alpha2) ** 3)


def invariant_pdf(d: InvariantDensity, x):
    x = np.asarray(x, dtype=float)
    # clip the exponents so the unused branch of np.where cannot overflow
    right = d.c * np.exp(2.0 * d.alpha2 * np.maximum(x, 0.0))
    left = d.c * np.exp(2.0 * d.alpha1 * np.minimum(x, 0.0))
    out = np.where(x >= 0, right, left)
    return out[()] if out.ndim == 0 else out


def invariant_cdf(d: InvariantDensity, y):
    y = np.asarray(y, dtype=float)
    left = d.mass_left * np.exp(2.0 * d.alpha1 * np.minimum(y, 0.0))
    right = d.mass_left - d.c / (2.0 * -d.alpha2) * np.expm1(2.0 * d.alpha2 * np.maximum(y, 0.0))
    out = np.where(y >= 0, right, left)
    return out[()] if out.ndim == 0 else out


def normal_cdf(x):
    """Standard normal distribution function via erfc."""
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def folded_mgf(mu, nu, tau):
    """``E exp(tau |mu + nu Z|)`` for standard normal Z.

    Each tail probability ``1 - Phi(.)`` is combined with its exponential
    prefactor in log space, so large arguments neither overflow nor cancel.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(nu <= 0):
        raise ParameterError("nu must be positive")
    half = 0.5 * nu**2 * tau**2
    # 1 - Phi(-u) = Phi(u)
    plus = np.exp(half + mu * tau + log_ndtr(mu / nu + nu * tau))
    minus = np.exp(half - mu * tau + log_ndtr(-mu / nu + nu * tau))
    out = plus + minus
    return out[()] if out.ndim == 0 else out


def _check_inward(alpha1, alpha2):
    if not (alpha1 > 0 > alpha2):
        raise ParameterError(f"need alpha1 > 0 > alpha2, got {alpha1}, {alpha2}")


def lyapunov_bound(alpha1, alpha2, dt, tau):
    """Constants ``(C, gamma)`` of ``E[V(x_next) | x] <= C + gamma V(x)`` for ``V = exp(tau |x|)``."""
    _check_inward(alpha1, alpha2)
    if not dt > 0:
        raise ParameterError(f"step size must be positive, got {dt}")
    lo, hi = min(abs(alpha1), abs(alpha2)), max(abs(alpha1), abs(alpha2))
    if not (0 < tau < 2 * lo):
        raise ParameterError(f"tau must lie in (0, {2 * lo}), got {tau}")
    big = math.exp(dt * tau * (tau / 2 + hi))
    gamma = math.exp(dt * tau * (tau / 2 - lo))
    return big, gamma


def lyapunov_expectation(alpha1, alpha2, dt, tau, x):
    """Exact ``E[exp(tau |x_next|) | x_k = x]`` for one unit-noise Euler step."""
    _check_inward(alpha1, alpha2)
    x = np.asarray(x, dtype=float)
    a = np.where(x < 0, alpha1, alpha2)
    return folded_mgf(x + a * dt, math.sqrt(dt), tau)


def crossing_probability(xi, theta, dt, sigma=1.0):
    """Chance that a Brownian bridge from ``xi`` to ``theta`` over ``dt`` dips below zero."""
    if not (xi > 0 and theta >= 0 and dt > 0 and sigma > 0):
        raise ParameterError(f"need xi > 0, theta >= 0, dt > 0, got {xi}, {theta}, {dt}")
    return math.exp(-2.0 * xi * theta / (sigma**2 * dt))


def no_crossing_probability(alpha1, alpha2, xi):
    """``P(inf_t |X_t| > 0)`` for the outward drift ``alpha1 < 0 < alpha2`` and unit noise."""
    if not (alpha1 < 0 < alpha2):
        raise ParameterError(f"outward drift needs alpha1 < 0 < alpha2, got {alpha1}, {alpha2}")
    if xi == 0:
        raise ParameterError("xi must be non-zero")
    pos, neg = max(xi, 0.0), max(-xi, 0.0)
    return -math.expm1(2.0 * alpha1 * neg - 2.0 * alpha2 * pos)

"""Quantised normal (ordered probit) rating distribution.

A rating is a draw from Normal(mu, sigma), censored to [1, 5] and rounded to
the nearest integer. Category probabilities follow from evaluating the normal
CDF at the cut points 1.5, 2.5, 3.5 and 4.5.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CATEGORIES, DomainError
from .stats import normal_cdf

CUT_POINTS = np.array([1.5, 2.5, 3.5, 4.5])


@dataclass(frozen=True)
class QNormParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")


def _cut_cdf(mu, sigma):
    """Normal CDF at the four cut points; broadcasts over ``mu``."""
    mu = np.asarray(mu, dtype=float)
    return normal_cdf((CUT_POINTS - mu[..., None]) / sigma)


def pmf(params: QNormParams) -> np.ndarray:
    """Probabilities of categories 1..5."""
    return pmf_array(params.mu, params.sigma)


def pmf_array(mu, sigma: float) -> np.ndarray:
    """Vectorised pmf: returns shape ``mu.shape + (5,)``.

    ``sigma == 0`` yields the point mass at ``round(clip(mu, 1, 5))``.
    """
    mu = np.asarray(mu, dtype=float)
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        # ties at a cut point round half up, so the latent value belongs above it
        cdf = (mu[..., None] < CUT_POINTS).astype(float)
    else:
        cdf = _cut_cdf(mu, sigma)
    lower = np.concatenate([np.zeros(mu.shape + (1,)), cdf], axis=-1)
    upper = np.concatenate([cdf, np.ones(mu.shape + (1,))], axis=-1)
    return np.clip(upper - lower, 0.0, 1.0)


def moments(params: QNormParams) -> tuple[float, float]:
    """Expected rating and its standard deviation."""
    e, v = moments_array(params.mu, params.sigma)
    return float(e), float(np.sqrt(v))


_erf = np.vectorize(math.erf, otypes=[float])


def moments_array(mu, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Expected rating and rating *variance*, vectorised over ``mu``.

    The mean is ``3 - sum(erf(z_c / sqrt 2)) / 2`` over the cut points, with
    the outer and inner cut points summed in pairs so that a mean of 3 comes
    out exactly 3 whatever ``sigma`` is.
    """
    p = pmf_array(mu, sigma)
    e2 = p @ (CATEGORIES**2)
    if sigma == 0:
        e = p @ CATEGORIES
    else:
        mu = np.asarray(mu, dtype=float)
        r = _erf((CUT_POINTS - mu[..., None]) / (sigma * math.sqrt(2.0)))
        e = 3.0 - 0.5 * ((r[..., 0] + r[..., 3]) + (r[..., 1] + r[..., 2]))
    return e, np.maximum(e2 - e * e, 0.0)


def sample(params: QNormParams, rng: np.random.Generator, size=None):
    """Draw ratings.

    Each rating consumes one uniform ``u``: the latent value
    ``mu + sigma * Phi^-1(u)`` is censored to [1, 5] and rounded half up,
    which is the same as counting the cut points whose CDF value is ``<= u``.
    """
    u = rng.random(size)
    cdf = _cut_cdf(params.mu, params.sigma)
    q = 1 + (np.asarray(u)[..., None] >= cdf).sum(axis=-1)
    return int(q) if size is None else q


def sample_grid(mu: np.ndarray, sigma: float, u: np.ndarray) -> np.ndarray:
    """Ratings for a matrix of latent means, given matching uniforms ``u``."""
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    mu = np.asarray(mu, dtype=float)
    levels, inverse = np.unique(mu, return_inverse=True)
    cdf = _cut_cdf(levels, sigma)[inverse.reshape(mu.shape)]
    return 1 + (u[..., None] >= cdf).sum(axis=-1)


def mean_generated_std(
    sigma: float,
    mu_grid: Sequence[float],
    p: float = 1.0,
    bias_magnitude: float = 0.5,
) -> float:
    """Mean over stimuli of the standard deviation of generated ratings.

    With ``p < 1`` each rating comes from the mixed symmetric bias mixture:
    no bias with probability ``p`` and a shift of ``+-bias_magnitude`` with
    probability ``(1 - p) / 2`` each.
    """
    mu = np.asarray(mu_grid, dtype=float)
    if mu.size == 0:
        raise DomainError("mu_grid must be nonempty")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    probs = p * pmf_array(mu, sigma)
    if p < 1.0:
        side = (1.0 - p) / 2.0
        probs = probs + side * (pmf_array(mu - bias_magnitude, sigma) + pmf_array(mu + bias_magnitude, sigma))
    e = probs @ CATEGORIES
    v = np.maximum(probs @ CATEGORIES**2 - e * e, 0.0)
    return float(np.sqrt(v).mean())


def sigma_to_sos_a(sigma: float, mu_grid: Sequence[float] | None = None, method: str = "ratio") -> float:
    """SOS parameter ``a`` implied by unbiased users with uncertainty ``sigma``.

    Uses exact QNorm means ``m`` and variances ``v`` per stimulus. With
    ``method="ratio"`` (default) the result is the mean of ``v / w`` over
    stimuli with ``1 < m < 5``, where ``w = (5 - m)(m - 1)``. With
    ``method="ols"`` it is the least-squares slope of ``v`` on ``w``.
    Defaults to 21 equidistant means on [1, 5].
    """
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if method not in ("ratio", "ols"):
        raise ValueError(f"method must be 'ratio' or 'ols', got {method!r}")
    mu = np.linspace(1.0, 5.0, 21) if mu_grid is None else np.asarray(mu_grid, dtype=float)
    if sigma == 0:
        return 0.0
    m, v = moments_array(mu, sigma)
    w = (5.0 - m) * (m - 1.0)
    if method == "ols":
        return float((w * v).sum() / (w * w).sum())
    interior = w > 1e-12
    if not interior.any():
        raise DomainError("no stimulus with 1 < E[Q] < 5")
    return float((v[interior] / w[interior]).mean())

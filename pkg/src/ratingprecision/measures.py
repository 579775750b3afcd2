"""Experiment precision measures ``a``, ``g`` and ``l``.

``a``
    SOS parameter, the least-squares slope of rating variance on
    ``(5 - m)(m - 1)``. Higher means less precise.
``g``
    Mean per-stimulus rho of the generalised score distribution, estimated
    here by the method of moments. Higher means more precise.
``l``
    Mean per-subject inconsistency of the Gaussian bias/inconsistency model
    ``u_ij ~ N(psi_j + delta_i, upsilon_i^2)``. Lower means more precise.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DomainError,
    MeasureEstimate,
    RatingMatrix,
    StimulusSummary,
    UndefinedEstimatorError,
    summarize_stimuli,
)
from .stats import student_t_ppf

log = logging.getLogger(__name__)

UPSILON_FLOOR = 1e-3
FIT_TOL = 1e-6
FIT_MAX_SWEEPS = 5000
_ENDPOINT_TOL = 1e-12


# ---------------------------------------------------------------------------
# a: SOS hypothesis
# ---------------------------------------------------------------------------

def sos_weights(mos) -> np.ndarray:
    mos = np.asarray(mos, dtype=float)
    return (5.0 - mos) * (mos - 1.0)


def sos_a_from_moments(mos, variance) -> MeasureEstimate:
    """SOS parameter from per-stimulus MOS and rating variances.

    The standard error is ``sqrt(nu / K)`` where ``nu`` is the inverse of the
    summed squared weights, so that a Welch test between two experiments
    uses the same quantities as their reported standard errors.
    """
    mos = np.asarray(mos, dtype=float)
    variance = np.asarray(variance, dtype=float)
    w = sos_weights(mos)
    denom = float((w * w).sum())
    if denom <= 0.0:
        raise UndefinedEstimatorError("SOS parameter undefined: every MOS lies at a scale endpoint")
    a = float((w * variance).sum()) / denom
    nu = 1.0 / denom
    k = mos.size
    return MeasureEstimate(kind="a", value=a, se=math.sqrt(nu / k), basis_size=k, nu=nu)


def sos_a(m: RatingMatrix | StimulusSummary) -> MeasureEstimate:
    s = m if isinstance(m, StimulusSummary) else summarize_stimuli(m)
    return sos_a_from_moments(s.mos, s.variance)


# ---------------------------------------------------------------------------
# g: generalised score distribution rho
# ---------------------------------------------------------------------------

def _variance_bounds(mos):
    mos = np.asarray(mos, dtype=float)
    vmax = (5.0 - mos) * (mos - 1.0)
    vmin = (np.ceil(mos) - mos) * (mos - np.floor(mos))
    return vmax, vmin


def gsd_rho_hat(mos, variance):
    """Moment estimate of rho from a MOS and a population variance.

    The GSD variance interpolates linearly between the smallest variance
    attainable at that mean (``rho = 1``) and the largest (``rho = 0``);
    inverting that line and clamping to [0, 1] gives the estimate. At the
    scale endpoints both bounds vanish and the estimate is 1 for zero
    variance, 0 otherwise. Accepts scalars or arrays.
    """
    mos = np.asarray(mos, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if ((mos < 1.0 - _ENDPOINT_TOL) | (mos > 5.0 + _ENDPOINT_TOL)).any():
        raise DomainError("MOS must lie in [1, 5]")
    if (variance < 0).any():
        raise DomainError("variance must be >= 0")
    vmax, vmin = _variance_bounds(mos)
    span = vmax - vmin
    flat = span <= _ENDPOINT_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(flat, 0.0, (vmax - variance) / np.where(flat, 1.0, span))
    rho = np.where(flat, (variance <= _ENDPOINT_TOL).astype(float), rho)
    rho = np.clip(rho, 0.0, 1.0)
    return float(rho) if rho.ndim == 0 else rho


def g_from_summary(s: StimulusSummary) -> MeasureEstimate:
    pop_var = s.variance * (s.counts - 1) / s.counts
    rho = gsd_rho_hat(s.mos, pop_var)
    k = rho.size
    if k < 2:
        raise UndefinedEstimatorError("g needs at least 2 stimuli")
    return MeasureEstimate(
        kind="g",
        value=float(rho.mean()),
        se=float(rho.std() / math.sqrt(k - 1)),
        basis_size=k,
        unit_vector=rho,
    )


def g_measure(m: RatingMatrix) -> MeasureEstimate:
    """Mean rho estimate over stimuli; SE is ``std(rho) / sqrt(K - 1)``."""
    return g_from_summary(summarize_stimuli(m))


# ---------------------------------------------------------------------------
# l: subject bias / inconsistency model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Li2020Fit:
    psi: np.ndarray
    delta: np.ndarray
    upsilon: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    floored: np.ndarray
    log_likelihood_trace: tuple = ()


def _log_likelihood(resid2, present, upsilon):
    var = upsilon**2
    per_subject = present.sum(axis=1)
    return float(
        -0.5 * (per_subject * np.log(2.0 * np.pi * var)).sum()
        - 0.5 * (resid2.sum(axis=1) / var).sum()
    )


def fit_li2020(
    m: RatingMatrix | np.ndarray,
    tol: float = FIT_TOL,
    max_sweeps: int = FIT_MAX_SWEEPS,
    floor: float = UPSILON_FLOOR,
    check_monotone: bool = False,
    keep_trace: bool = False,
) -> Li2020Fit:
    """Maximum-likelihood fit of ``u_ij ~ N(psi_j + delta_i, upsilon_i^2)``.

    Coordinate ascent with closed-form block updates (psi, then delta, then
    upsilon), followed by re-centring so that the deltas sum to zero.
    Ratings are treated as continuous observations; absent ratings are
    skipped.

    Parameters
    ----------
    m : RatingMatrix or ndarray
        A plain 2-D array is taken as continuous observations with ``NaN``
        for absent entries.
    check_monotone : bool
        Raise ``AssertionError`` if the log-likelihood ever decreases.
    keep_trace : bool
        Store the log-likelihood after every sweep.
    """
    obs = m.ratings if isinstance(m, RatingMatrix) else np.asarray(m, dtype=float)
    if obs.ndim != 2:
        raise DomainError(f"observations must be 2-D, got shape {obs.shape}")
    n_subjects, n_stimuli = obs.shape
    if n_subjects < 3 or n_stimuli < 3:
        raise UndefinedEstimatorError("the model needs at least 3 subjects and 3 stimuli")
    present = ~np.isnan(obs)
    u = np.where(present, obs, 0.0)
    pf = present.astype(float)
    n_per_subject = pf.sum(axis=1)
    n_per_stimulus = pf.sum(axis=0)
    if (n_per_subject == 0).any() or (n_per_stimulus == 0).any():
        raise UndefinedEstimatorError("every subject and stimulus needs at least one observation")

    grand = u.sum() / pf.sum()
    psi = u.sum(axis=0) / n_per_stimulus
    delta = u.sum(axis=1) / n_per_subject - grand
    ups = np.ones(n_subjects)
    floor2 = floor * floor

    trace = []
    ll_prev = -math.inf
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        w = 1.0 / ups**2
        wp = pf * w[:, None]
        psi_new = (wp * (u - delta[:, None])).sum(axis=0) / wp.sum(axis=0)
        delta_new = (pf * (u - psi_new[None, :])).sum(axis=1) / n_per_subject
        resid = pf * (u - psi_new[None, :] - delta_new[:, None])
        resid2 = resid**2
        ups_new = np.sqrt(np.maximum(resid2.sum(axis=1) / n_per_subject, floor2))
        shift = delta_new.mean()
        delta_new = delta_new - shift
        psi_new = psi_new + shift

        change = max(
            np.abs(psi_new - psi).max(),
            np.abs(delta_new - delta).max(),
            np.abs(ups_new - ups).max(),
        )
        psi, delta, ups = psi_new, delta_new, ups_new
        if check_monotone or keep_trace:
            ll = _log_likelihood(resid2, present, ups)
            if check_monotone:
                assert ll >= ll_prev - 1e-9 * max(1.0, abs(ll_prev)), (
                    f"log-likelihood decreased at sweep {sweeps}: {ll_prev} -> {ll}"
                )
            ll_prev = ll
            if keep_trace:
                trace.append(ll)
        if change < tol:
            converged = True
            break

    resid2 = (pf * (u - psi[None, :] - delta[:, None])) ** 2
    ll = _log_likelihood(resid2, present, ups)
    floored = ups <= floor * (1 + 1e-12)
    if not converged:
        msg = f"coordinate ascent did not converge within {max_sweeps} sweeps"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
    return Li2020Fit(
        psi=psi,
        delta=delta,
        upsilon=ups,
        log_likelihood=ll,
        iterations=sweeps,
        converged=converged,
        floored=floored,
        log_likelihood_trace=tuple(trace),
    )


def l_from_fit(fit: Li2020Fit) -> MeasureEstimate:
    ups = fit.upsilon
    n = ups.size
    return MeasureEstimate(
        kind="l",
        value=float(ups.mean()),
        se=float(ups.std() / math.sqrt(n - 1)),
        basis_size=n,
        unit_vector=ups,
    )


def l_measure(m: RatingMatrix, **fit_kwargs) -> MeasureEstimate:
    """Mean fitted subject inconsistency; SE is ``std(upsilon) / sqrt(N - 1)``."""
    return l_from_fit(fit_li2020(m, **fit_kwargs))


# ---------------------------------------------------------------------------
# confidence intervals over repeated runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    alpha: float = 0.05

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width


def measure_ci(per_run_estimates: Sequence[MeasureEstimate], alpha: float = 0.05) -> ConfidenceInterval:
    """Confidence interval for a measure averaged over repeated runs.

    The centre is the mean value; the half width is the t critical value at
    ``K - 1`` degrees of freedom times the mean per-run standard error, so it
    does not shrink with the number of runs.
    """
    est = list(per_run_estimates)
    if not est:
        raise DomainError("need at least one estimate")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    kinds = {e.kind for e in est}
    sizes = {e.basis_size for e in est}
    if len(kinds) != 1 or len(sizes) != 1:
        raise DomainError("all estimates must share kind and basis size")
    k = sizes.pop()
    center = float(np.mean([e.value for e in est]))
    mean_se = float(np.mean([e.se for e in est]))
    t_crit = student_t_ppf(1.0 - alpha / 2.0, k - 1)
    return ConfidenceInterval(center=center, half_width=t_crit * mean_se, alpha=alpha)

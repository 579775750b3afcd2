"""Pairwise comparison of experiment precision.

Four methods, each returning a :class:`ComparisonOutcome`:

* ``a``  Welch t-test on two SOS parameters and their estimator variances.
* ``g``  Welch t-test on the two per-stimulus rho vectors.
* ``l``  Welch t-test on the two per-subject inconsistency vectors.
* ``pv`` paired variances: F-tests on matched MOS regions, Holm-adjusted.

The ``*_estimates`` / ``*_summaries`` variants work on precomputed
quantities; the simulation study uses them to avoid refitting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ComparisonOutcome,
    MeasureEstimate,
    MethodUnavailableError,
    RatingMatrix,
    StimulusSummary,
    UndefinedEstimatorError,
    summarize_stimuli,
)
from .measures import g_measure, l_measure, sos_a, sos_a_from_moments
from .stats import f_sf, holm_adjust, welch_t_test

DEFAULT_ALPHA = 0.05
MERGE_THRESHOLD = 0.2
ZERO_VARIANCE_THRESHOLD = 0.1
_MERGE_SLACK = 1e-9


def _outcome(method, res, alpha) -> ComparisonOutcome:
    return ComparisonOutcome(
        method=method,
        statistic=res.statistic,
        df=res.df,
        p_value=res.p_value,
        significant=res.p_value <= alpha,
        alpha=alpha,
    )


def compare_a_estimates(e1: MeasureEstimate, e2: MeasureEstimate, alpha=DEFAULT_ALPHA) -> ComparisonOutcome:
    res = welch_t_test(e1.value, e1.nu, e1.basis_size, e2.value, e2.nu, e2.basis_size)
    return _outcome("a", res, alpha)


def compare_unit_vectors(method: str, v1, v2, alpha=DEFAULT_ALPHA) -> ComparisonOutcome:
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    res = welch_t_test(
        float(v1.mean()), float(v1.var(ddof=1)), v1.size,
        float(v2.mean()), float(v2.var(ddof=1)), v2.size,
    )
    return _outcome(method, res, alpha)


def compare_a(m1: RatingMatrix, m2: RatingMatrix, alpha=DEFAULT_ALPHA) -> ComparisonOutcome:
    return compare_a_estimates(sos_a(m1), sos_a(m2), alpha)


def compare_g(m1: RatingMatrix, m2: RatingMatrix, alpha=DEFAULT_ALPHA) -> ComparisonOutcome:
    return compare_unit_vectors("g", g_measure(m1).unit_vector, g_measure(m2).unit_vector, alpha)


def compare_l(m1: RatingMatrix, m2: RatingMatrix, alpha=DEFAULT_ALPHA) -> ComparisonOutcome:
    return compare_unit_vectors("l", l_measure(m1).unit_vector, l_measure(m2).unit_vector, alpha)


# ---------------------------------------------------------------------------
# paired variances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MosRegion:
    """One MOS region with the response variance seen in each experiment.

    A ``synthesized`` side had no stimuli in this region; its variance comes
    from that experiment's fitted SOS curve and its count is the
    experiment's mean per-stimulus response count, rounded down.
    """

    center: float
    variance_1: float
    variance_2: float
    count_1: int
    count_2: int
    synthesized_1: bool = False
    synthesized_2: bool = False


@dataclass(frozen=True)
class _Pool:
    center: float
    variance: float
    count: int


@dataclass(frozen=True)
class RegionTest:
    region: MosRegion
    f_statistic: float
    p_value: float
    p_adjusted: float


def _pool_regions(s: StimulusSummary, threshold: float) -> list:
    """Single-linkage clustering of stimuli on sorted MOS.

    Responses of the stimuli in a cluster are pooled; the pooled mean and
    variance follow exactly from the per-stimulus counts, means and
    variances.
    """
    order = np.argsort(s.mos, kind="stable")
    groups = []
    current = [order[0]]
    for prev, idx in zip(order[:-1], order[1:]):
        if s.mos[idx] - s.mos[prev] <= threshold + _MERGE_SLACK:
            current.append(idx)
        else:
            groups.append(current)
            current = [idx]
    groups.append(current)

    pools = []
    for g in groups:
        c = s.counts[g]
        mu = s.mos[g]
        total = c.sum()
        center = float((c * mu).sum() / total)
        ss = ((c - 1) * s.variance[g]).sum() + (c * (mu - center) ** 2).sum()
        pools.append(_Pool(center=center, variance=float(ss / (total - 1)), count=int(total)))
    return pools


def _sos_curve(s: StimulusSummary) -> float:
    interior = (s.mos > 1.0) & (s.mos < 5.0)
    if interior.sum() < 2:
        raise MethodUnavailableError("need at least 2 stimuli with 1 < MOS < 5 to fit the SOS curve")
    try:
        return sos_a_from_moments(s.mos, s.variance).value
    except UndefinedEstimatorError as exc:
        raise MethodUnavailableError(str(exc)) from exc


def build_mos_regions_from_summaries(
    s1: StimulusSummary,
    s2: StimulusSummary,
    threshold: float = MERGE_THRESHOLD,
) -> list:
    """Match pooled MOS regions across two experiments.

    Regions are paired greedily by increasing center distance (at most
    ``threshold``); the shared center is the midpoint. Unpaired regions get
    the other side filled in from that experiment's SOS curve.
    """
    a1 = _sos_curve(s1)
    a2 = _sos_curve(s2)
    return match_regions(
        _pool_regions(s1, threshold), _pool_regions(s2, threshold), a1, a2,
        int(math.floor(s1.counts.mean())), int(math.floor(s2.counts.mean())), threshold,
    )


def match_regions(pools1, pools2, a1, a2, fill_count_1, fill_count_2, threshold=MERGE_THRESHOLD) -> list:
    # the center sum breaks distance ties the same way whichever experiment comes first
    candidates = sorted(
        (abs(x.center - y.center), x.center + y.center, i, j)
        for i, x in enumerate(pools1)
        for j, y in enumerate(pools2)
        if abs(x.center - y.center) <= threshold + _MERGE_SLACK
    )
    used1, used2 = set(), set()
    regions = []
    for _, _, i, j in candidates:
        if i in used1 or j in used2:
            continue
        used1.add(i)
        used2.add(j)
        x, y = pools1[i], pools2[j]
        regions.append(MosRegion(
            center=0.5 * (x.center + y.center),
            variance_1=x.variance, variance_2=y.variance,
            count_1=x.count, count_2=y.count,
        ))
    for i, x in enumerate(pools1):
        if i not in used1:
            regions.append(MosRegion(
                center=x.center,
                variance_1=x.variance, variance_2=a2 * (5 - x.center) * (x.center - 1),
                count_1=x.count, count_2=fill_count_2, synthesized_2=True,
            ))
    for j, y in enumerate(pools2):
        if j not in used2:
            regions.append(MosRegion(
                center=y.center,
                variance_1=a1 * (5 - y.center) * (y.center - 1), variance_2=y.variance,
                count_1=fill_count_1, count_2=y.count, synthesized_1=True,
            ))
    regions.sort(key=lambda r: (r.center, r.synthesized_1, r.synthesized_2))
    return regions


def build_mos_regions(m1: RatingMatrix, m2: RatingMatrix, threshold: float = MERGE_THRESHOLD) -> list:
    return build_mos_regions_from_summaries(summarize_stimuli(m1), summarize_stimuli(m2), threshold)


def region_f_test(region: MosRegion) -> tuple[float, float]:
    """(F statistic, two-sided p) for one region.

    The larger variance goes in the numerator. If one side has zero
    variance the pair counts as different only when the other exceeds the
    zero-variance threshold.
    """
    v1, v2 = region.variance_1, region.variance_2
    if v1 >= v2:
        hi, lo, n_hi, n_lo = v1, v2, region.count_1, region.count_2
    else:
        hi, lo, n_hi, n_lo = v2, v1, region.count_2, region.count_1
    if lo <= 0.0:
        return math.inf if hi > 0 else 1.0, (0.0 if hi > ZERO_VARIANCE_THRESHOLD else 1.0)
    f = hi / lo
    return f, min(1.0, 2.0 * f_sf(f, n_hi - 1, n_lo - 1))


def paired_variance_from_regions(
    regions: list,
    alpha: float = DEFAULT_ALPHA,
    adjustment: str = "holm",
) -> ComparisonOutcome:
    if not regions:
        raise MethodUnavailableError("no MOS regions to compare")
    tests = [region_f_test(r) for r in regions]
    raw = np.array([p for _, p in tests])
    adj = holm_adjust(raw, method=adjustment)
    detail = tuple(
        RegionTest(region=r, f_statistic=f, p_value=float(p), p_adjusted=float(q))
        for r, (f, p), q in zip(regions, tests, adj)
    )
    p_min = float(adj.min())
    return ComparisonOutcome(
        method="pv",
        statistic=p_min,
        df=float(len(regions)),
        p_value=p_min,
        significant=p_min <= alpha,
        alpha=alpha,
        per_region_detail=detail,
    )


def paired_variance_summaries(
    s1: StimulusSummary,
    s2: StimulusSummary,
    alpha: float = DEFAULT_ALPHA,
    adjustment: str = "holm",
) -> ComparisonOutcome:
    return paired_variance_from_regions(build_mos_regions_from_summaries(s1, s2), alpha, adjustment)


def paired_variance_compare(
    m1: RatingMatrix,
    m2: RatingMatrix,
    alpha: float = DEFAULT_ALPHA,
    adjustment: str = "holm",
) -> ComparisonOutcome:
    return paired_variance_summaries(summarize_stimuli(m1), summarize_stimuli(m2), alpha, adjustment)


_MATRIX_METHODS = {
    "a": compare_a,
    "g": compare_g,
    "l": compare_l,
    "pv": paired_variance_compare,
}


def compare(m1: RatingMatrix, m2: RatingMatrix, method: str, alpha: float = DEFAULT_ALPHA) -> ComparisonOutcome:
    try:
        fn = _MATRIX_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_MATRIX_METHODS)}") from None
    return fn(m1, m2, alpha=alpha)


def compare_estimates(
    method: str,
    est1: dict,
    est2: dict,
    summary1: Optional[StimulusSummary] = None,
    summary2: Optional[StimulusSummary] = None,
    alpha: float = DEFAULT_ALPHA,
) -> ComparisonOutcome:
    """Compare two experiments from stored estimates (keyed by measure kind)."""
    if method == "a":
        return compare_a_estimates(est1["a"], est2["a"], alpha)
    if method in ("g", "l"):
        return compare_unit_vectors(method, est1[method].unit_vector, est2[method].unit_vector, alpha)
    if method == "pv":
        return paired_variance_summaries(summary1, summary2, alpha)
    raise ValueError(f"unknown method {method!r}")

"""Simulation study: measure curves, rejection-ratio heat maps, MAE scoring.

A study simulates every (sigma, p) cell ``r`` times, fits all three
measures on each simulated experiment and keeps the fitted estimates plus
per-stimulus summaries in a :class:`StudyArchive`. Heat maps are then built
by resampling archived runs; nothing is refitted.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .compare import (
    DEFAULT_ALPHA,
    MERGE_THRESHOLD,
    _pool_regions,
    _sos_curve,
    compare_a_estimates,
    compare_unit_vectors,
    match_regions,
    paired_variance_from_regions,
)
from .core import DomainError, HeatMap, MethodUnavailableError, StimulusSummary, summarize_stimuli
from .generator import (
    DEFAULT_REPETITIONS,
    TABLE_I_K,
    TABLE_I_N,
    TABLE_I_PS,
    TABLE_I_SIGMAS,
    BiasScenario,
    derive_seed,
    scenario_ps,
    simulate_experiment,
    study_grid,
)
from .measures import fit_li2020, g_from_summary, l_from_fit, measure_ci, sos_a_from_moments

log = logging.getLogger(__name__)

METHODS = ("l", "g", "a", "pv")
DEFAULT_PAIRS = 2000
IDEAL_DIAGONAL = 0.05
IDEAL_OFF_DIAGONAL = 1.0


@dataclass(frozen=True)
class Preset:
    sigmas: tuple
    ps: tuple
    r: int
    pairs: int


PRESETS = {
    "full": Preset(sigmas=TABLE_I_SIGMAS, ps=TABLE_I_PS, r=DEFAULT_REPETITIONS, pairs=DEFAULT_PAIRS),
    "reduced": Preset(
        sigmas=tuple(round(0.4 + 0.1 * i, 2) for i in range(9)),
        ps=TABLE_I_PS,
        r=50,
        pairs=500,
    ),
}


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Fitted measures of one simulated experiment."""

    sigma_index: int
    p_index: int
    repetition: int
    seed: int
    estimates: dict
    summary: StimulusSummary
    converged: bool = True
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return (
            (self.sigma_index, self.p_index, self.repetition, self.seed, self.converged, self.error)
            == (other.sigma_index, other.p_index, other.repetition, other.seed, other.converged, other.error)
            and self.estimates == other.estimates
            and self.summary == other.summary
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class StudyArchive:
    scenario: BiasScenario
    sigmas: tuple
    ps: tuple
    r: int
    master_seed: int
    k: int = TABLE_I_K
    n: int = TABLE_I_N
    runs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.r < 1:
            raise DomainError("an archive needs r >= 1")
        expected = len(self.sigmas) * len(self.ps) * self.r
        if len(self.runs) != expected:
            raise DomainError(f"archive has {len(self.runs)} runs, grid needs {expected}")

    def cell(self, sigma_index: int, p_index: int) -> list:
        start = (sigma_index * len(self.ps) + p_index) * self.r
        return list(self.runs[start:start + self.r])

    def sigma_pool(self, sigma_index: int) -> list:
        """Successful runs at one sigma, pooled over every p."""
        out = []
        for j in range(len(self.ps)):
            out.extend(run for run in self.cell(sigma_index, j) if run.ok)
        return out

    @property
    def failures(self) -> list:
        return [run for run in self.runs if not run.ok]

    def __eq__(self, other):
        if not isinstance(other, StudyArchive):
            return NotImplemented
        return (
            (self.scenario, tuple(self.sigmas), tuple(self.ps), self.r, self.master_seed, self.k, self.n)
            == (other.scenario, tuple(other.sigmas), tuple(other.ps), other.r, other.master_seed, other.k, other.n)
            and tuple(self.runs) == tuple(other.runs)
        )

    __hash__ = None


def fit_all(ratings) -> tuple[dict, StimulusSummary, bool]:
    summary = summarize_stimuli(ratings)
    fit = fit_li2020(ratings)
    estimates = {
        "g": g_from_summary(summary),
        "a": sos_a_from_moments(summary.mos, summary.variance),
        "l": l_from_fit(fit),
    }
    return estimates, summary, fit.converged


def _run_one(task) -> RunRecord:
    i, j, config = task
    exp = simulate_experiment(config)
    try:
        estimates, summary, converged = fit_all(exp.ratings)
        return RunRecord(i, j, config.repetition, config.seed, estimates, summary, converged)
    except (ValueError, ArithmeticError) as exc:
        log.warning("fit failed for sigma=%s p=%s rep=%s: %s", config.sigma, config.p, config.repetition, exc)
        return RunRecord(
            i, j, config.repetition, config.seed, {}, summarize_stimuli(exp.ratings),
            converged=False, error=f"{type(exc).__name__}: {exc}",
        )


def _map(fn, tasks, jobs: int, chunksize: int = 32):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=chunksize))


def run_study(
    scenario: BiasScenario,
    sigmas=TABLE_I_SIGMAS,
    ps=TABLE_I_PS,
    r: int = DEFAULT_REPETITIONS,
    master_seed: int = 0,
    jobs: int = 1,
    k: int = TABLE_I_K,
    n: int = TABLE_I_N,
) -> StudyArchive:
    """Simulate and fit every grid cell ``r`` times.

    Output depends only on the arguments other than ``jobs``; results are
    stored by grid index regardless of completion order.
    """
    sigmas = tuple(float(s) for s in sigmas)
    eff_ps = scenario_ps(scenario, ps)
    configs = study_grid(scenario, sigmas, ps, r, master_seed, k, n)
    n_p = len(eff_ps)
    tasks = [(idx // (n_p * r), (idx // r) % n_p, c) for idx, c in enumerate(configs)]
    runs = _map(_run_one, tasks, jobs)
    return StudyArchive(
        scenario=scenario, sigmas=sigmas, ps=tuple(eff_ps), r=r,
        master_seed=int(master_seed), k=k, n=n, runs=tuple(runs),
    )


def curves(archive: StudyArchive, alpha: float = DEFAULT_ALPHA) -> list:
    """Mean measure and mean CI half width per (measure, sigma, p)."""
    rows = []
    for kind in ("g", "a", "l"):
        for i, s in enumerate(archive.sigmas):
            for j, p in enumerate(archive.ps):
                est = [run.estimates[kind] for run in archive.cell(i, j) if run.ok]
                if not est:
                    continue
                ci = measure_ci(est, alpha)
                rows.append({
                    "measure": kind, "sigma": s, "p": p,
                    "mean": ci.center, "ci_half_width": ci.half_width, "runs": len(est),
                })
    return rows


class _PairComparer:
    """Memoised comparisons between archived runs."""

    def __init__(self, method: str, alpha: float):
        self.method = method
        self.alpha = alpha
        self._pv_cache = {}

    def _pv_prep(self, run: RunRecord):
        key = id(run)
        if key not in self._pv_cache:
            s = run.summary
            try:
                a = _sos_curve(s)
            except MethodUnavailableError:
                a = None
            self._pv_cache[key] = (a, _pool_regions(s, MERGE_THRESHOLD), int(np.floor(s.counts.mean())))
        return self._pv_cache[key]

    def p_value(self, r1: RunRecord, r2: RunRecord) -> float:
        m = self.method
        if m == "a":
            return compare_a_estimates(r1.estimates["a"], r2.estimates["a"], self.alpha).p_value
        if m in ("g", "l"):
            return compare_unit_vectors(m, r1.estimates[m].unit_vector, r2.estimates[m].unit_vector, self.alpha).p_value
        a1, p1, c1 = self._pv_prep(r1)
        a2, p2, c2 = self._pv_prep(r2)
        if a1 is None or a2 is None:
            return 1.0
        regions = match_regions(p1, p2, a1, a2, c1, c2)
        return paired_variance_from_regions(regions, self.alpha).p_value


_WORKER_STATE = {}


def _heat_cell(task) -> float:
    i, j = task
    st = _WORKER_STATE
    pools, pairs, seed, comparer = st["pools"], st["pairs"], st["seed"], st["comparer"]
    rng = np.random.default_rng(derive_seed(seed, i, j))
    a, b = pools[i], pools[j]
    idx1 = rng.integers(0, len(a), size=pairs)
    idx2 = rng.integers(0, len(b), size=pairs)
    memo = {}
    hits = 0
    for x, y in zip(idx1.tolist(), idx2.tolist()):
        key = (x, y)
        if key not in memo:
            memo[key] = comparer.p_value(a[x], b[y])
        hits += memo[key] <= comparer.alpha
    return hits / pairs


def _init_worker(pools, pairs, seed, method, alpha):
    _WORKER_STATE.update(
        pools=pools, pairs=pairs, seed=seed, comparer=_PairComparer(method, alpha)
    )


def heatmap(
    archive: StudyArchive,
    method: str,
    pairs_per_cell: int = DEFAULT_PAIRS,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    jobs: int = 1,
) -> HeatMap:
    """Rejection ratio for every ordered pair of sigma values.

    Cell ``(i, j)`` draws ``pairs_per_cell`` runs with replacement from each
    of the two sigma pools (pooled over p) and records the fraction of pairs
    whose comparison p-value is at most ``alpha``.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    if pairs_per_cell < 1:
        raise DomainError("pairs_per_cell must be >= 1")
    pools = [archive.sigma_pool(i) for i in range(len(archive.sigmas))]
    if any(not p for p in pools):
        raise DomainError("every sigma needs at least one successful run")
    size = len(pools)
    tasks = [(i, j) for i in range(size) for j in range(size)]
    init_args = (pools, pairs_per_cell, seed, method, alpha)
    if jobs <= 1:
        _init_worker(*init_args)
        ratios = [_heat_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=init_args) as ex:
            ratios = list(ex.map(_heat_cell, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return HeatMap(
        sigma_grid=np.array(archive.sigmas),
        ratios=np.array(ratios).reshape(size, size),
        method=method,
        scenario=archive.scenario.kind,
        pairs_per_cell=pairs_per_cell,
    )


def ideal_heatmap(size: int) -> np.ndarray:
    ideal = np.full((size, size), IDEAL_OFF_DIAGONAL)
    np.fill_diagonal(ideal, IDEAL_DIAGONAL)
    return ideal


def mae_vs_ideal(h: HeatMap) -> float:
    """Mean absolute distance to 0.05 on the diagonal and 1 elsewhere."""
    r = h.ratios
    return float(np.abs(r - ideal_heatmap(r.shape[0])).mean())

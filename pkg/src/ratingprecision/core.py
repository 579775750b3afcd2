"""Shared domain types and per-stimulus statistics.

Ratings live on the 5-point ACR scale. A :class:`RatingMatrix` stores them as
an ``(n_subjects, n_stimuli)`` float array with ``NaN`` marking an absent
rating, so incomplete real-world data and full simulated matrices share one
representation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SCALE_MIN = 1
SCALE_MAX = 5
CATEGORIES = np.arange(SCALE_MIN, SCALE_MAX + 1)

MEASURE_KINDS = ("g", "a", "l")
COMPARISON_METHODS = ("a", "g", "l", "pv")


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class InsufficientDataError(ValueError):
    """Too few ratings to compute a statistic."""


class UndefinedEstimatorError(ValueError):
    """An estimator has no defined value for the given data."""


class MethodUnavailableError(ValueError):
    """A comparison method cannot be applied to the given pair."""


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """Discrete 1-5 ratings of ``n_subjects`` subjects on ``n_stimuli`` stimuli.

    Parameters
    ----------
    ratings : array_like, shape (n_subjects, n_stimuli)
        Integer ratings in ``{1..5}``; ``NaN`` marks an absent rating.
    subject_labels, stimulus_labels : sequence of str, optional
        Defaults to ``"0", "1", ...``.

    The stored array is read-only.
    """

    ratings: np.ndarray
    subject_labels: tuple = ()
    stimulus_labels: tuple = ()

    def __post_init__(self):
        arr = np.array(self.ratings, dtype=float)
        if arr.ndim != 2:
            raise DomainError(f"ratings must be 2-D, got shape {arr.shape}")
        n, k = arr.shape
        if n < 2:
            raise InsufficientDataError(f"need at least 2 subjects, got {n}")
        if k < 1:
            raise InsufficientDataError("need at least 1 stimulus")
        present = ~np.isnan(arr)
        vals = arr[present]
        bad = (vals != np.round(vals)) | (vals < SCALE_MIN) | (vals > SCALE_MAX)
        if bad.any():
            raise DomainError(f"rating {vals[bad][0]!r} is not an integer in 1..5")
        subj = tuple(str(s) for s in self.subject_labels) or tuple(str(i) for i in range(n))
        stim = tuple(str(s) for s in self.stimulus_labels) or tuple(str(j) for j in range(k))
        if len(subj) != n or len(stim) != k:
            raise DomainError("label counts do not match the ratings shape")
        counts = present.sum(axis=0)
        if (counts < 2).any():
            j = int(np.argmax(counts < 2))
            raise InsufficientDataError(
                f"stimulus {stim[j]!r} has {counts[j]} rating(s); at least 2 are required"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "ratings", arr)
        object.__setattr__(self, "subject_labels", subj)
        object.__setattr__(self, "stimulus_labels", stim)

    @property
    def n_subjects(self) -> int:
        return self.ratings.shape[0]

    @property
    def n_stimuli(self) -> int:
        return self.ratings.shape[1]

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.ratings)

    @property
    def is_complete(self) -> bool:
        return bool(self.present.all())

    def rating(self, subject: int, stimulus: int) -> Optional[int]:
        v = self.ratings[subject, stimulus]
        return None if np.isnan(v) else int(v)

    def __eq__(self, other):
        if not isinstance(other, RatingMatrix):
            return NotImplemented
        return (
            self.ratings.shape == other.ratings.shape
            and np.array_equal(self.ratings, other.ratings, equal_nan=True)
            and self.subject_labels == other.subject_labels
            and self.stimulus_labels == other.stimulus_labels
        )

    __hash__ = None


def stimulus_moments(m: RatingMatrix, x: int) -> tuple[float, float, int]:
    """MOS, unbiased variance and rating count of stimulus ``x``."""
    col = m.ratings[:, x]
    col = col[~np.isnan(col)]
    if col.size < 2:
        raise InsufficientDataError(
            f"stimulus {m.stimulus_labels[x]!r} has {col.size} rating(s); at least 2 are required"
        )
    return float(col.mean()), float(col.var(ddof=1)), int(col.size)


@dataclass(frozen=True, eq=False)
class StimulusSummary:
    """Per-stimulus counts, MOS and unbiased variances of one experiment."""

    counts: np.ndarray
    mos: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        for name in ("counts", "mos", "variance"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_stimuli(self) -> int:
        return self.mos.size

    def __eq__(self, other):
        if not isinstance(other, StimulusSummary):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("counts", "mos", "variance")
        )

    __hash__ = None


def summarize_stimuli(m: RatingMatrix) -> StimulusSummary:
    """Vectorised :func:`stimulus_moments` over every stimulus."""
    r = m.ratings
    present = m.present
    counts = present.sum(axis=0)
    filled = np.where(present, r, 0.0)
    mos = filled.sum(axis=0) / counts
    dev = np.where(present, r - mos, 0.0)
    var = (dev**2).sum(axis=0) / (counts - 1)
    return StimulusSummary(counts=counts, mos=mos, variance=var)


@dataclass(frozen=True, eq=False)
class MeasureEstimate:
    """One precision measure computed on one experiment.

    ``unit_vector`` holds the per-stimulus rho estimates (kind ``g``) or the
    per-subject inconsistencies (kind ``l``); it is empty for kind ``a``,
    which instead carries the estimator variance ``nu``.
    """

    kind: str
    value: float
    se: float
    basis_size: int
    unit_vector: np.ndarray = field(default_factory=lambda: np.empty(0))
    nu: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise DomainError(f"unknown measure kind {self.kind!r}")
        if not self.se >= 0:
            raise DomainError(f"standard error must be >= 0, got {self.se}")
        if self.basis_size < 1:
            raise DomainError(f"basis_size must be >= 1, got {self.basis_size}")
        uv = np.array(self.unit_vector, dtype=float)
        uv.setflags(write=False)
        object.__setattr__(self, "unit_vector", uv)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "se", float(self.se))
        object.__setattr__(self, "basis_size", int(self.basis_size))
        if self.nu is not None:
            object.__setattr__(self, "nu", float(self.nu))

    def __eq__(self, other):
        if not isinstance(other, MeasureEstimate):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.value == other.value
            and self.se == other.se
            and self.basis_size == other.basis_size
            and np.array_equal(self.unit_vector, other.unit_vector)
            and self.nu == other.nu
        )

    __hash__ = None


@dataclass(frozen=True)
class ComparisonOutcome:
    """Result of comparing the precision of two experiments.

    For the paired-variance method ``statistic`` is the smallest adjusted
    p-value, ``df`` the number of tested MOS regions and
    ``per_region_detail`` lists the individual F-tests.
    """

    method: str
    statistic: float
    df: float
    p_value: float
    significant: bool
    alpha: float = 0.05
    per_region_detail: Optional[tuple] = None

    def __post_init__(self):
        if self.method not in COMPARISON_METHODS:
            raise DomainError(f"unknown comparison method {self.method!r}")
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"p-value {self.p_value} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class HeatMap:
    """Rejection ratios for every ordered pair of sigma values."""

    sigma_grid: np.ndarray
    ratios: np.ndarray
    method: str
    scenario: str
    pairs_per_cell: int

    def __post_init__(self):
        s = np.array(self.sigma_grid, dtype=float)
        r = np.array(self.ratios, dtype=float)
        if r.shape != (s.size, s.size):
            raise DomainError(f"ratios shape {r.shape} does not match grid of {s.size}")
        if ((r < 0) | (r > 1)).any():
            raise DomainError("rejection ratios must lie in [0, 1]")
        s.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "sigma_grid", s)
        object.__setattr__(self, "ratios", r)

    def __eq__(self, other):
        if not isinstance(other, HeatMap):
            return NotImplemented
        return (
            np.array_equal(self.sigma_grid, other.sigma_grid)
            and np.array_equal(self.ratios, other.ratios)
            and (self.method, self.scenario, self.pairs_per_cell)
            == (other.method, other.scenario, other.pairs_per_cell)
        )

    __hash__ = None


def as_rating_matrix(data: "RatingMatrix | Sequence") -> RatingMatrix:
    return data if isinstance(data, RatingMatrix) else RatingMatrix(np.asarray(data, dtype=float))

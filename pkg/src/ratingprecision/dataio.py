"""Rating CSV ingestion, study archive persistence and report tables.

Ratings CSV
    UTF-8, header ``subject_id,stimulus_id,rating``, one row per rating.
Archive
    A directory holding ``manifest.json`` plus one ``cell_<i>_<j>.json``
    per grid cell (sigma index, p index). Floats are written as ``repr``
    strings so they survive a round trip bit for bit.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .compare import compare
from .core import (
    DomainError,
    MeasureEstimate,
    RatingMatrix,
    StimulusSummary,
    summarize_stimuli,
)
from .generator import BiasScenario
from .measures import g_from_summary, l_measure, sos_a_from_moments

log = logging.getLogger(__name__)

RATINGS_HEADER = ("subject_id", "stimulus_id", "rating")
SCHEMA_VERSION = 1
MANIFEST = "manifest.json"


class RatingsFormatError(ValueError):
    """Malformed ratings file."""


class ArchiveError(ValueError):
    """Unreadable or incompatible study archive."""


# ---------------------------------------------------------------------------
# ratings CSV
# ---------------------------------------------------------------------------

def read_ratings_csv(path) -> RatingMatrix:
    """Load a long-format ratings file into a :class:`RatingMatrix`.

    Subjects and stimuli keep their order of first appearance. Cells with
    no row are absent ratings.
    """
    path = Path(path)
    subjects: dict = {}
    stimuli: dict = {}
    cells: dict = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RATINGS_HEADER:
            raise RatingsFormatError(f"{path}:1: expected header {','.join(RATINGS_HEADER)}, got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 3:
                raise RatingsFormatError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            subj, stim, raw = (f.strip() for f in row)
            if not subj or not stim:
                raise RatingsFormatError(f"{path}:{line}: empty subject or stimulus id")
            try:
                rating = int(raw)
            except ValueError:
                raise RatingsFormatError(f"{path}:{line}: rating {raw!r} is not an integer") from None
            if not 1 <= rating <= 5:
                raise RatingsFormatError(f"{path}:{line}: rating {rating} outside 1..5")
            key = (subjects.setdefault(subj, len(subjects)), stimuli.setdefault(stim, len(stimuli)))
            if key in cells:
                raise RatingsFormatError(f"{path}:{line}: duplicate rating for subject {subj!r}, stimulus {stim!r}")
            cells[key] = rating
    if not cells:
        raise RatingsFormatError(f"{path}: no ratings")
    arr = np.full((len(subjects), len(stimuli)), np.nan)
    for (i, j), v in cells.items():
        arr[i, j] = v
    return RatingMatrix(arr, tuple(subjects), tuple(stimuli))


def write_ratings_csv(m: RatingMatrix, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATINGS_HEADER)
        for i, subj in enumerate(m.subject_labels):
            for j, stim in enumerate(m.stimulus_labels):
                v = m.rating(i, j)
                if v is not None:
                    w.writerow((subj, stim, v))


# ---------------------------------------------------------------------------
# study archives
# ---------------------------------------------------------------------------

def _f(x: float) -> str:
    return repr(float(x))


def _vec(a) -> list:
    return [_f(x) for x in np.asarray(a, dtype=float)]


def _unf(s) -> float:
    return float(s)


def _estimate_to_json(e: MeasureEstimate) -> dict:
    out = {
        "kind": e.kind,
        "value": _f(e.value),
        "se": _f(e.se),
        "basis_size": e.basis_size,
        "unit_vector": _vec(e.unit_vector),
    }
    if e.nu is not None:
        out["nu"] = _f(e.nu)
    return out


def _estimate_from_json(d: dict) -> MeasureEstimate:
    return MeasureEstimate(
        kind=d["kind"],
        value=_unf(d["value"]),
        se=_unf(d["se"]),
        basis_size=int(d["basis_size"]),
        unit_vector=np.array([_unf(x) for x in d["unit_vector"]]),
        nu=_unf(d["nu"]) if "nu" in d else None,
    )


def _run_to_json(run) -> dict:
    return {
        "repetition": run.repetition,
        "seed": str(run.seed),
        "converged": run.converged,
        "error": run.error,
        "estimates": {k: _estimate_to_json(v) for k, v in sorted(run.estimates.items())},
        "summary": {
            "counts": [int(c) for c in run.summary.counts],
            "mos": _vec(run.summary.mos),
            "variance": _vec(run.summary.variance),
        },
    }


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _cell_name(i: int, j: int) -> str:
    return f"cell_{i:03d}_{j:03d}.json"


def write_archive(archive, directory) -> Path:
    """Persist a :class:`~ratingprecision.sim.StudyArchive` to ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "scenario": archive.scenario.kind,
        "bias_magnitude": _f(archive.scenario.magnitude),
        "sigmas": _vec(archive.sigmas),
        "ps": _vec(archive.ps),
        "r": archive.r,
        "master_seed": str(archive.master_seed),
        "k": archive.k,
        "n": archive.n,
        "cells": [],
    }
    for i in range(len(archive.sigmas)):
        for j in range(len(archive.ps)):
            name = _cell_name(i, j)
            manifest["cells"].append(name)
            _dump(
                {
                    "sigma_index": i,
                    "p_index": j,
                    "sigma": _f(archive.sigmas[i]),
                    "p": _f(archive.ps[j]),
                    "runs": [_run_to_json(run) for run in archive.cell(i, j)],
                },
                d / name,
            )
    _dump(manifest, d / MANIFEST)
    return d


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArchiveError(f"{path}: missing archive file") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ArchiveError(f"{path}: cannot parse archive file ({exc})") from None


def read_archive(directory):
    """Load an archive written by :func:`write_archive`."""
    from .sim import RunRecord, StudyArchive

    d = Path(directory)
    man = _load_json(d / MANIFEST)
    version = man.get("schema_version") if isinstance(man, dict) else None
    if version != SCHEMA_VERSION:
        raise ArchiveError(f"{d / MANIFEST}: schema version {version!r}, this reader supports {SCHEMA_VERSION}")
    try:
        sigmas = tuple(_unf(s) for s in man["sigmas"])
        ps = tuple(_unf(p) for p in man["ps"])
        runs = []
        for name in man["cells"]:
            path = d / name
            cell = _load_json(path)
            i, j = int(cell["sigma_index"]), int(cell["p_index"])
            for rj in cell["runs"]:
                s = rj["summary"]
                runs.append(RunRecord(
                    sigma_index=i,
                    p_index=j,
                    repetition=int(rj["repetition"]),
                    seed=int(rj["seed"]),
                    estimates={k: _estimate_from_json(v) for k, v in rj["estimates"].items()},
                    summary=StimulusSummary(
                        counts=np.array(s["counts"], dtype=float),
                        mos=np.array([_unf(x) for x in s["mos"]]),
                        variance=np.array([_unf(x) for x in s["variance"]]),
                    ),
                    converged=bool(rj["converged"]),
                    error=rj["error"],
                ))
        return StudyArchive(
            scenario=BiasScenario(man["scenario"], _unf(man["bias_magnitude"])),
            sigmas=sigmas,
            ps=ps,
            r=int(man["r"]),
            master_seed=int(man["master_seed"]),
            k=int(man["k"]),
            n=int(man["n"]),
            runs=tuple(runs),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ArchiveError):
            raise
        raise ArchiveError(f"{d}: malformed archive ({type(exc).__name__}: {exc})") from None


# ---------------------------------------------------------------------------
# plot-ready tables
# ---------------------------------------------------------------------------

def heatmap_to_csv(h) -> str:
    """Square matrix with sigma labels in the first row and column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    labels = [f"{s:g}" for s in h.sigma_grid]
    w.writerow(["sigma"] + labels)
    for lab, row in zip(labels, h.ratios):
        w.writerow([lab] + [repr(float(x)) for x in row])
    return buf.getvalue()


def write_heatmap_csv(h, path) -> None:
    Path(path).write_text(heatmap_to_csv(h), encoding="utf-8")


def read_heatmap_csv(path, method: str = "", scenario: str = "", pairs_per_cell: int = 0):
    from .core import HeatMap

    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    sigmas = [float(x) for x in rows[0][1:]]
    ratios = [[float(x) for x in r[1:]] for r in rows[1:]]
    return HeatMap(np.array(sigmas), np.array(ratios), method, scenario, pairs_per_cell)


def curves_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["measure", "sigma", "p", "mean", "ci_half_width", "runs"])
    for r in rows:
        w.writerow([r["measure"], f"{r['sigma']:g}", f"{r['p']:g}", repr(r["mean"]), repr(r["ci_half_width"]), r["runs"]])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# precision report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    path: Path
    expected_subjects: Optional[int] = None
    expected_stimuli: Optional[int] = None

    def __post_init__(self):
        if not self.name:
            raise DomainError("dataset name must be nonempty")
        object.__setattr__(self, "path", Path(self.path))


@dataclass(frozen=True)
class PrecisionRow:
    name: str
    l: MeasureEstimate
    g: MeasureEstimate
    a: MeasureEstimate


@dataclass(frozen=True)
class ComparisonRow:
    exp1: str
    exp2: str
    method: str
    p_value: float
    significant: bool


@dataclass(frozen=True)
class PrecisionReport:
    measures: tuple
    comparisons: tuple
    errors: tuple

    def measures_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "l", "se_l", "g", "se_g", "a", "se_a", "n_subjects", "n_stimuli"])
        for r in self.measures:
            w.writerow([
                r.name, _fmt3(r.l.value), _fmt_se(r.l.se), _fmt3(r.g.value), _fmt_se(r.g.se),
                _fmt3(r.a.value), _fmt_se(r.a.se), r.l.basis_size, r.g.basis_size,
            ])
        return buf.getvalue()

    def comparisons_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["exp1", "exp2", "method", "p_value", "significant"])
        for c in self.comparisons:
            w.writerow([c.exp1, c.exp2, c.method, _fmt_p(c.p_value), int(c.significant)])
        return buf.getvalue()

    def text(self) -> str:
        head = ["Exp.", "l", "SE(l)", "g", "SE(g)", "a", "SE(a)"]
        body = [
            [r.name, _fmt3(r.l.value), _fmt_se(r.l.se), _fmt3(r.g.value), _fmt_se(r.g.se), _fmt3(r.a.value), _fmt_se(r.a.se)]
            for r in self.measures
        ]
        parts = ["Precision measures (sorted by l)", _align([head] + body)]
        if self.comparisons:
            pairs: dict = {}
            for c in self.comparisons:
                pairs.setdefault((c.exp1, c.exp2), {})[c.method] = c
            methods = sorted({c.method for c in self.comparisons}, key=["l", "g", "a", "pv"].index)
            head2 = ["Exp. 1", "Exp. 2"] + [f"{m} p-value" for m in methods]
            body2 = [
                [e1, e2] + [_fmt_p(cs[m].p_value) + ("*" if cs[m].significant else "") for m in methods]
                for (e1, e2), cs in pairs.items()
            ]
            parts += ["", "Pairwise comparisons (* significant)", _align([head2] + body2)]
        for name, err in self.errors:
            parts.append(f"! {name}: {err}")
        return "\n".join(parts) + "\n"


def _fmt3(x: float) -> str:
    return f"{x:.3f}"


def _fmt_se(x: float) -> str:
    return f"{x:.4f}"


def _fmt_p(x: float) -> str:
    return f"{x:.2E}"


def _align(rows) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows)


def measure_all(m: RatingMatrix) -> dict:
    s = summarize_stimuli(m)
    return {"l": l_measure(m), "g": g_from_summary(s), "a": sos_a_from_moments(s.mos, s.variance)}


def precision_report(
    datasets: Sequence[DatasetDescriptor],
    methods: Sequence[str] = ("l", "g", "a"),
    alpha: float = 0.05,
) -> PrecisionReport:
    """Measures per dataset (ascending by l) and all pairwise comparisons.

    A dataset that fails to load or fit is listed under ``errors`` and
    skipped; the rest are still processed.
    """
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise DomainError("dataset names must be unique")
    loaded = []
    errors = []
    for d in datasets:
        try:
            m = read_ratings_csv(d.path)
            if d.expected_subjects is not None and m.n_subjects != d.expected_subjects:
                raise DomainError(f"expected {d.expected_subjects} subjects, found {m.n_subjects}")
            if d.expected_stimuli is not None and m.n_stimuli != d.expected_stimuli:
                raise DomainError(f"expected {d.expected_stimuli} stimuli, found {m.n_stimuli}")
            loaded.append((d.name, m, measure_all(m)))
        except (OSError, ValueError) as exc:
            log.warning("dataset %s skipped: %s", d.name, exc)
            errors.append((d.name, str(exc)))
    loaded.sort(key=lambda t: t[2]["l"].value)
    rows = tuple(PrecisionRow(name, e["l"], e["g"], e["a"]) for name, _, e in loaded)
    comps = []
    for (n1, m1, _), (n2, m2, _) in itertools.combinations(loaded, 2):
        for method in methods:
            try:
                out = compare(m1, m2, method, alpha)
            except ValueError as exc:
                errors.append((f"{n1} vs {n2} ({method})", str(exc)))
                continue
            comps.append(ComparisonRow(n1, n2, method, out.p_value, out.significant))
    return PrecisionReport(measures=rows, comparisons=tuple(comps), errors=tuple(errors))


def write_report(report: PrecisionReport, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "measures.csv").write_text(report.measures_csv(), encoding="utf-8")
    (d / "comparisons.csv").write_text(report.comparisons_csv(), encoding="utf-8")
    (d / "report.txt").write_text(report.text(), encoding="utf-8")
    return d

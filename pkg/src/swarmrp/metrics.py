"""Pd / Pfa accounting for range-profile detectors.

Target bins count as positives.  A non-target bin is an eligible negative
only when it is farther than ``exclusion_window`` bins from every target;
bins close to a target are ignored because their detector response is
correlated with that target.  Bins a detector cannot evaluate (outside its
validity mask) count nowhere.
"""

import csv
import io
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .datagen import Dataset, ProfileKind

__all__ = [
    "DetectionCounts",
    "SubsetFilter",
    "score_profile",
    "score_batch",
    "aggregate",
    "filter_subset",
    "table_filters",
    "format_ratio",
    "report_table",
]


@dataclass
class DetectionCounts:
    true_detections: int = 0
    missed: int = 0
    false_alarms: int = 0
    eligible_negatives: int = 0
    excluded_bins: int = 0

    def __add__(self, other: "DetectionCounts") -> "DetectionCounts":
        return DetectionCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    @property
    def targets(self) -> int:
        return self.true_detections + self.missed


def _eligible_mask(target_bins: np.ndarray, m: int, exclusion_window: int) -> np.ndarray:
    near = np.zeros(m + 1, dtype=np.int64)
    for b in target_bins:
        near[max(b - exclusion_window, 0)] += 1
        near[min(b + exclusion_window + 1, m)] -= 1
    return np.cumsum(near[:m]) == 0


def score_profile(detections: np.ndarray, labels: np.ndarray, target_bins: Sequence[int] | None = None,
                  exclusion_window: int = 199, valid: np.ndarray | None = None) -> DetectionCounts:
    """Count hits, misses and false alarms for one profile.

    ``valid`` masks out bins the detector cannot evaluate; masked target
    bins contribute neither to hits nor misses.
    """
    detections = np.asarray(detections, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if detections.shape != labels.shape or (valid is not None and np.shape(valid) != labels.shape):
        raise ValueError("detections, labels and validity mask must have equal lengths")
    m = labels.size
    valid = np.ones(m, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    bins = np.flatnonzero(labels) if target_bins is None else np.asarray(target_bins, dtype=np.int64)

    targets = np.zeros(m, dtype=bool)
    targets[bins] = True
    counted_targets = targets & valid
    eligible = _eligible_mask(bins, m, exclusion_window) & valid & ~targets
    td = int(np.count_nonzero(detections & counted_targets))
    return DetectionCounts(
        true_detections=td,
        missed=int(np.count_nonzero(counted_targets)) - td,
        false_alarms=int(np.count_nonzero(detections & eligible)),
        eligible_negatives=int(np.count_nonzero(eligible)),
        excluded_bins=m - int(np.count_nonzero(counted_targets)) - int(np.count_nonzero(eligible)),
    )


def score_batch(detections: np.ndarray, ds: Dataset, exclusion_window: int = 199,
                valid: np.ndarray | None = None) -> list[DetectionCounts]:
    detections = np.atleast_2d(detections)
    if valid is not None:
        valid = np.broadcast_to(valid, detections.shape)
    return [score_profile(detections[i], ds.labels[i], ds.target_bins[i], exclusion_window,
                          None if valid is None else valid[i])
            for i in range(len(ds))]


def aggregate(counts: Iterable[DetectionCounts]) -> tuple[float | None, float | None]:
    """Pooled ``(Pd, Pfa)``; a ratio with an empty denominator is ``None``."""
    total = sum(counts, DetectionCounts())
    pd = total.true_detections / total.targets if total.targets else None
    pfa = total.false_alarms / total.eligible_negatives if total.eligible_negatives else None
    return pd, pfa


@dataclass(frozen=True)
class SubsetFilter:
    reflection_coeff: float | None = None
    noise_std: float | None = None
    bandwidth_hz: float | None = None
    kind: ProfileKind | None = None

    def mask(self, ds: Dataset) -> np.ndarray:
        keep = np.ones(len(ds), dtype=bool)
        for name in ("reflection_coeff", "noise_std", "bandwidth_hz"):
            value = getattr(self, name)
            if value is not None:
                keep &= np.isclose(getattr(ds, name), value, rtol=1e-9, atol=0.0)
        if self.kind is not None:
            keep &= ds.kind == int(self.kind)
        return keep


def filter_subset(ds: Dataset, f: SubsetFilter) -> Dataset:
    return ds.subset(f.mask(ds))


def _fmt_value(v: float) -> str:
    return f"{v:g}"


def table_filters(ds: Dataset) -> dict[str, SubsetFilter]:
    """The 'All RPs' row plus one row per distinct reflection, noise and bandwidth value."""
    rows = {"All RPs": SubsetFilter()}
    for r in np.unique(ds.reflection_coeff):
        rows[f"Refl coeff = {_fmt_value(r)}"] = SubsetFilter(reflection_coeff=float(r))
    for s in np.unique(ds.noise_std):
        rows[f"Noise std = {_fmt_value(s)}"] = SubsetFilter(noise_std=float(s))
    for b in np.unique(ds.bandwidth_hz)[::-1]:
        rows[f"LFM {_fmt_value(b / 1e6)} MHz"] = SubsetFilter(bandwidth_hz=float(b))
    return rows


def format_ratio(v: float | None) -> str:
    return "n/a" if v is None else f"{v:.4g}"


def report_table(results: Mapping, style: str = "csv") -> str:
    """Render ``{subset: (pd, pfa)}`` or ``{subset: {detector: (pd, pfa)}}``.

    ``style="csv"`` gives ``subset,detector,pd,pfa`` rows (``subset,pd,pfa``
    for the single-detector form); ``style="text"`` gives an aligned table
    with one ``Pd / Pfa`` column per detector.
    """
    nested = any(isinstance(v, Mapping) for v in results.values())
    if style == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if nested:
            writer.writerow(["subset", "detector", "pd", "pfa"])
            for subset, per_det in results.items():
                for det, (pd, pfa) in per_det.items():
                    writer.writerow([subset, det, format_ratio(pd), format_ratio(pfa)])
        else:
            for subset, (pd, pfa) in results.items():
                writer.writerow([subset, format_ratio(pd), format_ratio(pfa)])
        return buf.getvalue()
    if style != "text":
        raise ValueError(f"unknown report style {style!r}")

    if not nested:
        results = {k: {"": v} for k, v in results.items()}
    detectors = list(dict.fromkeys(d for per in results.values() for d in per))
    cells = [["Subset filter"] + detectors]
    for subset, per_det in results.items():
        row = [subset]
        for d in detectors:
            pd, pfa = per_det.get(d, (None, None))
            row.append(f"{format_ratio(pd)} / {format_ratio(pfa)}")
        cells.append(row)
    widths = [max(len(r[j]) for r in cells) for j in range(len(cells[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells) + "\n"

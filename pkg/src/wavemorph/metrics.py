"""Presentation-attack detection error rates from labeled scores.

Morphed is the positive class; a sample is called morphed when its
score is >= the decision threshold.  Under that rule APCER (morphs
called bona fide) is non-decreasing in the threshold and BPCER (bona
fide called morphed) is non-increasing.

All threshold metrics sweep the same candidate set: the sorted distinct
scores plus one sentinel above the maximum (+inf, the all-bona-fide
operating point).  A threshold at or below the minimum score already
classifies everything as morphed, so no lower sentinel is needed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .features import BONAFIDE, MORPHED

SCORES_CSV_COLUMNS = ("image_id", "label", "score")
DET_CSV_COLUMNS = ("threshold", "apcer", "bpcer")


@dataclass
class ScoreSet:
    """Labeled detection scores; higher means more morph-like."""

    image_ids: list[str]
    labels: np.ndarray  # bool, True = morphed
    scores: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=bool)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if len(self.image_ids) != self.labels.size or self.labels.size != self.scores.size:
            raise ValueError("image_ids, labels, and scores must have equal length")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")

    @classmethod
    def from_entries(cls, entries) -> "ScoreSet":
        """Build from (image_id, label, score) triples with string labels."""
        ids, labels, scores = [], [], []
        for image_id, label, score in entries:
            if label not in (BONAFIDE, MORPHED):
                raise ValueError(f"label must be {BONAFIDE!r} or {MORPHED!r}, got {label!r}")
            ids.append(image_id)
            labels.append(label == MORPHED)
            scores.append(score)
        return cls(ids, np.array(labels, dtype=bool), np.array(scores, dtype=np.float64))

    @property
    def morphed_scores(self) -> np.ndarray:
        return self.scores[self.labels]

    @property
    def bonafide_scores(self) -> np.ndarray:
        return self.scores[~self.labels]


def _require_both_classes(scores: ScoreSet) -> None:
    if scores.morphed_scores.size == 0:
        raise ValueError("score set has no morphed entries")
    if scores.bonafide_scores.size == 0:
        raise ValueError("score set has no bona fide entries")


def apcer(scores: ScoreSet, threshold: float) -> float:
    """Fraction of morphed entries scored below the threshold."""
    m = scores.morphed_scores
    if m.size == 0:
        raise ValueError("score set has no morphed entries")
    return float(np.count_nonzero(m < threshold)) / m.size


def bpcer(scores: ScoreSet, threshold: float) -> float:
    """Fraction of bona fide entries scored at or above the threshold."""
    b = scores.bonafide_scores
    if b.size == 0:
        raise ValueError("score set has no bona fide entries")
    return float(np.count_nonzero(b >= threshold)) / b.size


def _sweep(scores: ScoreSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, apcer, bpcer) over the candidate set, ascending."""
    thresholds = np.append(np.unique(scores.scores), np.inf)
    m = np.sort(scores.morphed_scores)
    b = np.sort(scores.bonafide_scores)
    ap = np.searchsorted(m, thresholds, side="left") / m.size
    bp = (b.size - np.searchsorted(b, thresholds, side="left")) / b.size
    return thresholds, ap, bp


def det_curve(scores: ScoreSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full (threshold, apcer, bpcer) trade-off, thresholds ascending."""
    _require_both_classes(scores)
    return _sweep(scores)


def d_eer(scores: ScoreSet) -> tuple[float, float]:
    """Detection equal error rate and its threshold.

    The sweep is discrete, so exact equality is rare; the reported rate
    is the APCER/BPCER midpoint at the threshold minimizing their gap,
    with ties resolved toward the lower threshold.
    """
    _require_both_classes(scores)
    thresholds, ap, bp = _sweep(scores)
    best = int(np.argmin(np.abs(ap - bp)))
    return float((ap[best] + bp[best]) / 2.0), float(thresholds[best])


def bpcer_at_apcer(scores: ScoreSet, target: float) -> float:
    """Lowest BPCER among thresholds with APCER <= target.

    The sweep always contains the all-morphed operating point
    (APCER = 0), so some threshold qualifies for any valid target.
    """
    _require_both_classes(scores)
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target APCER must be in (0, 1], got {target}")
    _, ap, bp = _sweep(scores)
    feasible = bp[ap <= target]
    assert feasible.size > 0, "sweep invariant violated: APCER=0 point missing"
    return float(feasible.min())


def roc_auc(scores: ScoreSet) -> float:
    """Probability a morphed score outranks a bona fide score, ties half.

    Computed from average ranks (Mann-Whitney U), which matches the
    brute-force pairwise count exactly.
    """
    _require_both_classes(scores)
    s = scores.scores
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=np.float64)
    # average ranks over tied groups, 1-based
    sorted_s = s[order]
    _, starts = np.unique(sorted_s, return_index=True)
    bounds = np.append(starts, s.size)
    for g in range(starts.size):
        lo, hi = bounds[g], bounds[g + 1]
        ranks[order[lo:hi]] = (lo + 1 + hi) / 2.0
    n_m = int(scores.labels.sum())
    n_b = s.size - n_m
    u = ranks[scores.labels].sum() - n_m * (n_m + 1) / 2.0
    return float(u / (n_m * n_b))


def summary(scores: ScoreSet) -> dict:
    """The headline metric bundle emitted by the evaluate command."""
    deer, tau = d_eer(scores)
    return {
        "deer": deer,
        "deer_threshold": tau,
        "bpcer_at_5": bpcer_at_apcer(scores, 0.05),
        "bpcer_at_10": bpcer_at_apcer(scores, 0.10),
        "auc": roc_auc(scores),
    }


# --- on-disk forms ---------------------------------------------------------


def read_scores_csv(path) -> ScoreSet:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SCORES_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            entries.append((row["image_id"], row["label"], float(row["score"])))
    if not entries:
        raise ValueError(f"{path}: no score rows")
    return ScoreSet.from_entries(entries)


def write_scores_csv(path, scores: ScoreSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORES_CSV_COLUMNS)
        for image_id, is_morph, score in zip(scores.image_ids, scores.labels, scores.scores):
            writer.writerow([image_id, MORPHED if is_morph else BONAFIDE, repr(float(score))])


def write_metrics_json(path, scores: ScoreSet) -> dict:
    doc = summary(scores)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return doc


def write_det_csv(path, scores: ScoreSet) -> None:
    thresholds, ap, bp = det_curve(scores)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DET_CSV_COLUMNS)
        for t, a, b in zip(thresholds, ap, bp):
            writer.writerow([repr(float(t)), repr(float(a)), repr(float(b))])

"""KL-divergence ranking of the 48 sub-bands across datasets.

For every dataset the divergence between the bona fide and morphed
entropy distributions is computed per sub-band, the 48 values are
zero-meaned within the dataset (so datasets with different overall
divergence scales can be compared), and the zero-meaned values are
averaged across datasets.  Sub-bands are ranked by that average,
descending; ties break toward the lower band index.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .features import EntropyDistribution
from .wavelet import BAND_COUNT

DEFAULT_KL_EPSILON = 1e-10

RANKING_CSV_COLUMNS = ("subband", "dataset", "kl_bits", "kl_zero_meaned", "kl_averaged", "rank")


def kl_divergence(p: EntropyDistribution, q: EntropyDistribution, epsilon: float = DEFAULT_KL_EPSILON) -> float:
    """Smoothed relative entropy D(p || q) in bits.

    Both masses get ``epsilon`` added and are renormalized before the
    sum, so empty bins in ``q`` cannot blow up.  The result can dip a
    hair below zero (order 1e-8) because of the smoothing.
    """
    if p.bin_edges.size != q.bin_edges.size or not np.array_equal(p.bin_edges, q.bin_edges):
        raise ValueError("distributions use different bin edges")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    ps = p.mass + epsilon
    ps /= ps.sum()
    qs = q.mass + epsilon
    qs /= qs.sum()
    return float(np.sum(ps * np.log2(ps / qs)))


@dataclass(frozen=True)
class TopK:
    """Keep the k sub-bands with the highest averaged divergence."""

    k: int


@dataclass(frozen=True)
class AboveThreshold:
    """Keep every sub-band whose averaged divergence strictly exceeds t."""

    t: float


SelectionPolicy = TopK | AboveThreshold


@dataclass
class KlRankingTable:
    """Per-dataset and averaged divergence values plus the rank order.

    ``selected`` holds all 48 band indices sorted by ``averaged``
    descending (ties toward the lower index); :func:`select` trims it
    by policy.
    """

    per_dataset: dict[str, np.ndarray]
    zero_meaned: dict[str, np.ndarray]
    averaged: np.ndarray
    selected: list[int]
    threshold: float | None = None

    @property
    def dataset_ids(self) -> list[str]:
        return sorted(self.per_dataset)

    def rank_of(self, subband: int) -> int:
        """1-based rank of a sub-band in the descending ordering."""
        return self.selected.index(subband) + 1


def _rank_order(averaged: np.ndarray) -> list[int]:
    return sorted(range(1, BAND_COUNT + 1), key=lambda i: (-averaged[i - 1], i))


def rank_subbands(per_dataset: dict[str, dict[int, tuple[EntropyDistribution, EntropyDistribution]]],
                  epsilon: float = DEFAULT_KL_EPSILON) -> KlRankingTable:
    """Compute, zero-mean, and cross-dataset average the 48 KL values.

    ``per_dataset`` maps dataset id to {band index: (bona fide dist,
    morphed dist)}; all 48 bands must be present for every dataset.
    Datasets are folded in sorted-id order, so the result does not
    depend on the mapping's iteration order.
    """
    if not per_dataset:
        raise ValueError("need at least one dataset")
    kl: dict[str, np.ndarray] = {}
    for ds_id in sorted(per_dataset):
        pairs = per_dataset[ds_id]
        missing = [i for i in range(1, BAND_COUNT + 1) if i not in pairs]
        if missing:
            raise ValueError(f"dataset {ds_id!r} is missing sub-band pairs {missing[:4]}...")
        values = np.empty(BAND_COUNT)
        for i in range(1, BAND_COUNT + 1):
            f_b, f_m = pairs[i]
            values[i - 1] = kl_divergence(f_b, f_m, epsilon)
        kl[ds_id] = values
    zero_meaned = {ds: v - v.mean() for ds, v in kl.items()}
    averaged = np.mean([zero_meaned[ds] for ds in sorted(zero_meaned)], axis=0)
    return KlRankingTable(
        per_dataset=kl,
        zero_meaned=zero_meaned,
        averaged=averaged,
        selected=_rank_order(averaged),
    )


def select(table: KlRankingTable, policy: SelectionPolicy) -> list[int]:
    """Ordered band indices picked by the policy, highest divergence first."""
    if isinstance(policy, TopK):
        if not 1 <= policy.k <= BAND_COUNT:
            raise ValueError(f"k must be in 1..{BAND_COUNT}, got {policy.k}")
        return table.selected[: policy.k]
    if isinstance(policy, AboveThreshold):
        return [i for i in table.selected if table.averaged[i - 1] > policy.t]
    raise TypeError(f"unknown selection policy: {policy!r}")


# --- on-disk forms ---------------------------------------------------------


def write_ranking_csv(path, table: KlRankingTable) -> None:
    """Long-format rows, one per (sub-band, dataset)."""
    rank = {i: r + 1 for r, i in enumerate(table.selected)}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RANKING_CSV_COLUMNS)
        for i in range(1, BAND_COUNT + 1):
            for ds in table.dataset_ids:
                writer.writerow([
                    i,
                    ds,
                    repr(float(table.per_dataset[ds][i - 1])),
                    repr(float(table.zero_meaned[ds][i - 1])),
                    repr(float(table.averaged[i - 1])),
                    rank[i],
                ])


def read_ranking_csv(path) -> KlRankingTable:
    per_dataset: dict[str, np.ndarray] = {}
    zero_meaned: dict[str, np.ndarray] = {}
    averaged = np.zeros(BAND_COUNT)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RANKING_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            i = int(row["subband"])
            ds = row["dataset"]
            if ds not in per_dataset:
                per_dataset[ds] = np.zeros(BAND_COUNT)
                zero_meaned[ds] = np.zeros(BAND_COUNT)
            per_dataset[ds][i - 1] = float(row["kl_bits"])
            zero_meaned[ds][i - 1] = float(row["kl_zero_meaned"])
            averaged[i - 1] = float(row["kl_averaged"])
    if not per_dataset:
        raise ValueError(f"{path}: no ranking rows")
    return KlRankingTable(
        per_dataset=per_dataset,
        zero_meaned=zero_meaned,
        averaged=averaged,
        selected=_rank_order(averaged),
    )


def write_selection_json(path, policy: SelectionPolicy, indices: list[int]) -> None:
    if isinstance(policy, TopK):
        doc = {"policy": "top_k", "k": policy.k, "indices": indices}
    else:
        doc = {"policy": "threshold", "threshold": policy.t, "indices": indices}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_selection_json(path) -> list[int]:
    with open(path) as fh:
        doc = json.load(fh)
    indices = doc.get("indices")
    if not isinstance(indices, list) or not indices:
        raise ValueError(f"{path}: selection JSON has no indices")
    bad = [i for i in indices if not (isinstance(i, int) and 1 <= i <= BAND_COUNT)]
    if bad:
        raise ValueError(f"{path}: invalid sub-band indices {bad}")
    if len(set(indices)) != len(indices):
        raise ValueError(f"{path}: duplicate sub-band indices")
    return indices

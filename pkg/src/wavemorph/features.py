"""Shannon entropy of sub-band planes and per-class entropy histograms.

Entropy of a coefficient plane is measured after min-max quantization:
values are mapped to ``t = (v - min) / (max - min)`` and assigned level
``floor(t * (n_levels - 1))``, so the maximum lands exactly on the top
level.  A constant plane has entropy 0 by convention.  Because the
quantizer is min-max based, entropy is invariant under positive affine
rescaling of the plane.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

BONAFIDE = "bonafide"
MORPHED = "morphed"
CLASS_LABELS = (BONAFIDE, MORPHED)

ENTROPY_CSV_COLUMNS = ("dataset", "image_id", "class", "subband", "entropy_bits")


def shannon_entropy(plane: np.ndarray, n_levels: int = 256) -> float:
    """Entropy in bits of the min-max quantized coefficient plane."""
    x = np.asarray(plane, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot compute entropy of an empty plane")
    if not np.all(np.isfinite(x)):
        raise ValueError("plane contains non-finite values")
    if n_levels < 2:
        raise ValueError(f"n_levels must be >= 2, got {n_levels}")
    mn = x.min()
    mx = x.max()
    if mx == mn:
        return 0.0
    t = (x - mn) / (mx - mn)
    levels = np.floor(t * (n_levels - 1)).astype(np.int64)
    np.clip(levels, 0, n_levels - 1, out=levels)
    counts = np.bincount(levels.ravel(), minlength=n_levels)
    p = counts[counts > 0] / x.size
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class EntropySample:
    """One measured entropy value: which band, which class, which dataset."""

    subband_index: int
    value: float
    class_label: str
    dataset_id: str
    image_id: str = ""


@dataclass
class EntropyDistribution:
    """Histogram-estimated probability mass of entropy values for one
    (sub-band, class) pair."""

    subband_index: int
    class_label: str
    bin_edges: np.ndarray
    mass: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        self.bin_edges = np.asarray(self.bin_edges, dtype=np.float64)
        self.mass = np.asarray(self.mass, dtype=np.float64)
        if self.bin_edges.ndim != 1 or self.bin_edges.size < 2:
            raise ValueError("bin_edges must be a 1D array of at least 2 edges")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin_edges must be strictly increasing")
        if self.mass.size != self.bin_edges.size - 1:
            raise ValueError("mass length must be len(bin_edges) - 1")
        if np.any(self.mass < 0):
            raise ValueError("mass must be non-negative")
        if abs(self.mass.sum() - 1.0) > 1e-9:
            raise ValueError(f"mass must sum to 1, got {self.mass.sum()!r}")


def pooled_bin_edges(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Uniform bin edges spanning the pooled sample range.

    A degenerate range (all samples equal) is widened by +-0.5 bits so a
    well-defined histogram still exists.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one sample to derive bin edges")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, n_bins + 1)


def estimate_distribution(samples, bin_edges) -> EntropyDistribution:
    """Histogram mass of the samples on shared edges.

    Bins are left-closed; samples outside the edge range are clamped into
    the end bins rather than dropped, so the total count is preserved.
    All samples must come from a single (sub-band, class, dataset) cell.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    keys = {(s.subband_index, s.class_label) for s in samples}
    if len(keys) != 1:
        raise ValueError(f"samples mix (subband, class) cells: {sorted(keys)}")
    edges = np.asarray(bin_edges, dtype=np.float64)
    values = np.array([s.value for s in samples], dtype=np.float64)
    n_bins = edges.size - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    np.clip(idx, 0, n_bins - 1, out=idx)
    counts = np.bincount(idx, minlength=n_bins)
    (subband, label), = keys
    return EntropyDistribution(
        subband_index=subband,
        class_label=label,
        bin_edges=edges,
        mass=counts / values.size,
        n_samples=values.size,
    )


def subband_entropies(stack_bands: np.ndarray, n_levels: int = 256) -> np.ndarray:
    """Entropy in bits of each plane in a (48, H, W) band array."""
    return np.array([shannon_entropy(b, n_levels) for b in stack_bands])


def write_entropy_csv(path, samples) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENTROPY_CSV_COLUMNS)
        for s in samples:
            writer.writerow([s.dataset_id, s.image_id, s.class_label, s.subband_index, repr(s.value)])


def read_entropy_csv(path) -> list[EntropySample]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(ENTROPY_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            out.append(
                EntropySample(
                    subband_index=int(row["subband"]),
                    value=float(row["entropy_bits"]),
                    class_label=row["class"],
                    dataset_id=row["dataset"],
                    image_id=row["image_id"],
                )
            )
    return out

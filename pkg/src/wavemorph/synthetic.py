"""Seeded synthetic textures for desk-scale morph experiments.

Bona fide samples are band-limited noise with two ingredients: a smooth
low-frequency background and a sparse heavy-tailed detail field.  The
sparsity matters: blending two independent textures averages their
detail fields, which visibly reshapes the sub-band coefficient
histograms (twice the spikes at half the amplitude), and that is the
signature the entropy features pick up.  Morphs are plain alpha blends
of texture pairs that appear nowhere else in the dataset.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataio import (
    BONAFIDE,
    MORPHED,
    DatasetManifest,
    ManifestEntry,
    assign_split,
    synth_morph,
    write_manifest_csv,
    write_pgm,
)

DEFAULT_SIZE = 64
DEFAULT_ALPHA = 0.5

# per-image parameter ranges; drawn uniformly so the classes overlap on
# any single feature but separate jointly
SPIKE_DENSITY_RANGE = (0.02, 0.08)
SPIKE_SCALE_RANGE = (2.0, 4.0)
BACKGROUND_SCALE = 1.0


def _upsample_bilinear(coarse: np.ndarray, size: int) -> np.ndarray:
    """Bilinear upsampling of a coarse grid onto size x size (periodic-free)."""
    n = coarse.shape[0]
    src = np.linspace(0.0, n - 1.0, size)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n - 1)
    t = src - i0
    rows = coarse[i0][:, i0] * np.outer(1 - t, 1 - t)
    rows += coarse[i0][:, i1] * np.outer(1 - t, t)
    rows += coarse[i1][:, i0] * np.outer(t, 1 - t)
    rows += coarse[i1][:, i1] * np.outer(t, t)
    return rows


def _binomial_smooth(x: np.ndarray) -> np.ndarray:
    """One separable [1, 2, 1]/4 pass (periodic), the band-limiting step."""
    out = x
    for axis in (0, 1):
        out = (np.roll(out, 1, axis) + 2.0 * out + np.roll(out, -1, axis)) / 4.0
    return out


def band_limited_texture(rng: np.random.Generator, size: int = DEFAULT_SIZE) -> np.ndarray:
    """One bona fide texture in [0, 1]."""
    if size < 16:
        raise ValueError(f"texture size must be >= 16, got {size}")
    density = rng.uniform(*SPIKE_DENSITY_RANGE)
    spike_scale = rng.uniform(*SPIKE_SCALE_RANGE)

    coarse = rng.normal(size=(max(size // 8, 2), max(size // 8, 2)))
    background = _upsample_bilinear(coarse, size)

    mask = rng.random((size, size)) < density
    spikes = rng.laplace(0.0, 1.0, (size, size)) * mask
    detail = _binomial_smooth(spikes)

    img = BACKGROUND_SCALE * background + spike_scale * detail
    img -= img.min()
    peak = img.max()
    return img / peak if peak > 0 else img


def gen_synthetic_dataset(
    root,
    n_bonafide: int = 200,
    n_morphs: int = 200,
    size: int = DEFAULT_SIZE,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    split_ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
) -> DatasetManifest:
    """Write a labeled synthetic dataset and its manifest under ``root``.

    Each morph blends a fresh pair of textures, disjoint from every
    other pair and from the bona fide set, so no pixel content is shared
    between entries.  Splits are assigned by image-id hash.
    """
    if n_bonafide < 1 or n_morphs < 1:
        raise ValueError("need at least one image per class")
    rng = np.random.default_rng(seed)
    root = Path(root)
    (root / BONAFIDE).mkdir(parents=True, exist_ok=True)
    (root / MORPHED).mkdir(parents=True, exist_ok=True)

    entries = []
    for i in range(n_bonafide):
        image_id = f"bonafide_{i:04d}"
        rel = f"{BONAFIDE}/{image_id}.pgm"
        write_pgm(root / rel, band_limited_texture(rng, size))
        entries.append(ManifestEntry(image_id, rel, BONAFIDE, assign_split(image_id, split_ratios)))
    for i in range(n_morphs):
        a = band_limited_texture(rng, size)
        b = band_limited_texture(rng, size)
        image_id = f"morphed_{i:04d}"
        rel = f"{MORPHED}/{image_id}.pgm"
        write_pgm(root / rel, synth_morph(a, b, alpha))
        entries.append(ManifestEntry(image_id, rel, MORPHED, assign_split(image_id, split_ratios)))

    entries.sort(key=lambda e: e.path)
    manifest = DatasetManifest(dataset_id=root.name, root=root, entries=entries)
    write_manifest_csv(root / "manifest.csv", manifest)
    return manifest

"""Dataset ingestion, alpha-blend morph synthesis, and tensor export.

A dataset is either a directory with ``bonafide/`` and ``morphed/``
subdirectories (every entry then lands in the train split) or an
explicit manifest CSV with per-image splits.  Images are decoded to
single-channel luminance in [0, 1]; 8-bit PGM is the bit-exact
reference codec, PNG is supported for convenience.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import BONAFIDE, MORPHED, CLASS_LABELS
from .selection import read_selection_json  # noqa: F401  (re-exported for pipeline use)
from .wavelet import BAND_COUNT, SubBandStack

SPLITS = ("train", "validation", "test")
MANIFEST_CSV_COLUMNS = ("image_id", "path", "label", "split")

# Rec. 601 luminance weights for RGB input
_LUMA = np.array([0.299, 0.587, 0.114])

WSB_MAGIC = b"WSB1"


# --- image codecs ----------------------------------------------------------


def read_pgm(path) -> np.ndarray:
    """Decode a binary (P5) or ASCII (P2) 8-bit PGM to floats in [0, 1]."""
    raw = Path(path).read_bytes()
    # header tokens: magic, width, height, maxval; comments start with '#'
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", raw[pos:])
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        pos += m.end()
        tok = m.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P2"):
        raise ValueError(f"{path}: not an 8-bit PGM (magic {magic!r})")
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(raw) or not raw[pos : pos + 1].isspace():
            raise ValueError(f"{path}: missing separator before PGM payload")
        pos += 1
        if len(raw) - pos < width * height:
            raise ValueError(f"{path}: truncated PGM payload")
        data = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    else:
        values = raw[pos:].split()
        if len(values) != width * height:
            raise ValueError(f"{path}: expected {width * height} pixels, got {len(values)}")
        data = np.array([int(v) for v in values], dtype=np.uint8)
    return data.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, img: np.ndarray) -> None:
    """Write floats in [0, 1] as binary 8-bit PGM (round-to-nearest)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected 2D image, got shape {arr.shape}")
    pixels = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(pixels.tobytes())


def _read_png(path) -> np.ndarray:
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        arr = np.asarray(im)
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype in (np.dtype(np.uint16), np.dtype(np.int32)):
        scale = 65535.0  # 16-bit gray decodes as uint16 or mode-I int32
    else:
        raise ValueError(f"{path}: unsupported PNG pixel type {arr.dtype}")
    arr = arr.astype(np.float64) / scale
    if arr.ndim == 3:
        arr = arr[..., :3] @ _LUMA  # drop alpha, weight RGB
    return arr


def decode_image(path) -> np.ndarray:
    """Decode a PGM or PNG file to a luminance matrix in [0, 1]."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        return _read_png(path)
    raise ValueError(f"{path}: unsupported image format {suffix!r} (want .pgm or .png)")


def resize_bilinear(img: np.ndarray, size: int) -> np.ndarray:
    """Resize to size x size with bilinear interpolation, clamped to [0, 1]."""
    if size < 1:
        raise ValueError(f"resize target must be positive, got {size}")
    from PIL import Image as PILImage

    arr = np.asarray(img, dtype=np.float32)
    if arr.shape == (size, size):
        return arr.astype(np.float64)
    out = PILImage.fromarray(arr, mode="F").resize((size, size), PILImage.BILINEAR)
    return np.clip(np.asarray(out, dtype=np.float64), 0.0, 1.0)


# --- manifests and datasets -------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    path: str  # relative to the dataset root
    class_label: str
    split: str


@dataclass
class DatasetManifest:
    dataset_id: str
    root: Path
    entries: list[ManifestEntry]

    def subset(self, split: str | None = None, class_label: str | None = None) -> list[ManifestEntry]:
        out = self.entries
        if split is not None:
            out = [e for e in out if e.split == split]
        if class_label is not None:
            out = [e for e in out if e.class_label == class_label]
        return out

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path

    def content_hash(self) -> str:
        """SHA-256 over the canonical manifest rows (not the pixel data)."""
        h = hashlib.sha256()
        for e in self.entries:
            h.update(f"{e.image_id},{e.path},{e.class_label},{e.split}\n".encode())
        return h.hexdigest()


def assign_split(image_id: str, ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)) -> str:
    """Deterministic split from a stable hash of the image id."""
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValueError(f"split ratios must be non-negative and sum to 1, got {ratios}")
    digest = hashlib.sha256(image_id.encode()).digest()
    u = int.from_bytes(digest[:8], "big") / 2**64
    if u < ratios[0]:
        return "train"
    if u < ratios[0] + ratios[1]:
        return "validation"
    return "test"


def write_manifest_csv(path, manifest: DatasetManifest) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_CSV_COLUMNS)
        for e in manifest.entries:
            writer.writerow([e.image_id, e.path, e.class_label, e.split])


def read_manifest_csv(path, root: Path, dataset_id: str) -> DatasetManifest:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            if row["label"] not in CLASS_LABELS:
                raise ValueError(f"{path}: bad label {row['label']!r} for {row['image_id']!r}")
            if row["split"] not in SPLITS:
                raise ValueError(f"{path}: bad split {row['split']!r} for {row['image_id']!r}")
            entries.append(ManifestEntry(row["image_id"], row["path"], row["label"], row["split"]))
    manifest = DatasetManifest(dataset_id=dataset_id, root=Path(root), entries=entries)
    _validate_manifest(manifest)
    return manifest


def _validate_manifest(manifest: DatasetManifest) -> None:
    seen = set()
    for e in manifest.entries:
        if e.image_id in seen:
            raise ValueError(f"duplicate image_id {e.image_id!r}")
        seen.add(e.image_id)
    missing = [str(manifest.resolve(e)) for e in manifest.entries if not manifest.resolve(e).is_file()]
    if missing:
        raise ValueError("manifest paths not found: " + ", ".join(missing[:5]))


def load_manifest(root, dataset_id: str | None = None) -> DatasetManifest:
    """Manifest for a dataset root.

    Uses ``manifest.csv`` inside the root when present; otherwise scans
    ``bonafide/`` and ``morphed/`` subdirectories, assigning everything
    to the train split.  Ordering is lexicographic by relative path in
    both cases, so repeated loads enumerate identically.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    dataset_id = dataset_id or root.name
    manifest_path = root / "manifest.csv"
    if manifest_path.is_file():
        manifest = read_manifest_csv(manifest_path, root, dataset_id)
        manifest.entries.sort(key=lambda e: e.path)
        return manifest

    entries = []
    for label in CLASS_LABELS:
        class_dir = root / label
        if not class_dir.is_dir():
            raise ValueError(f"{root}: expected a {label}/ subdirectory or a manifest.csv")
        paths = sorted(
            p.relative_to(root).as_posix()
            for p in class_dir.iterdir()
            if p.suffix.lower() in (".pgm", ".png")
        )
        if not paths:
            raise ValueError(f"{root}: no images under {label}/")
        for rel in paths:
            entries.append(ManifestEntry(Path(rel).stem, rel, label, "train"))
    entries.sort(key=lambda e: e.path)
    manifest = DatasetManifest(dataset_id=dataset_id, root=root, entries=entries)
    _validate_manifest(manifest)
    return manifest


def load_images(manifest: DatasetManifest, entries=None, resize: int = 0) -> list[np.ndarray]:
    """Decode (and optionally resize) the given entries, reporting every
    undecodable path at once."""
    entries = manifest.entries if entries is None else list(entries)
    images, bad = [], []
    for e in entries:
        try:
            img = decode_image(manifest.resolve(e))
            if resize:
                img = resize_bilinear(img, resize)
            images.append(img)
        except (ValueError, OSError) as exc:
            bad.append(f"{manifest.resolve(e)}: {exc}")
    if bad:
        raise ValueError("undecodable images:\n  " + "\n  ".join(bad))
    return images


# --- morph synthesis --------------------------------------------------------


def synth_morph(a: np.ndarray, b: np.ndarray, alpha: float) -> np.ndarray:
    """Pixelwise convex blend alpha*a + (1-alpha)*b, clamped to [0, 1].

    No landmark warping: this is the raw blend that leaves the
    high-frequency attenuation signature the detector exploits.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return np.clip(alpha * a + (1.0 - alpha) * b, 0.0, 1.0)


# --- selected-sub-band tensor export ----------------------------------------
#
# "WSB1": magic, little-endian u32 [n_channels, height, width], then
# float32 data channel-major in selection-rank order.


def write_tensor(path, channels: np.ndarray) -> None:
    arr = np.asarray(channels)
    if arr.ndim != 3:
        raise ValueError(f"expected (channels, height, width), got shape {arr.shape}")
    c, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(WSB_MAGIC)
        fh.write(np.array([c, h, w], dtype="<u4").tobytes())
        fh.write(arr.astype("<f4").tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != WSB_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {WSB_MAGIC!r}")
        c, h, w = (int(v) for v in np.frombuffer(fh.read(12), dtype="<u4"))
        payload = fh.read(c * h * w * 4)
    if len(payload) != c * h * w * 4:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(c, h, w)


def export_selected(
    manifest: DatasetManifest,
    stacks,
    indices: list[int],
    wavelet_name: str,
    out_dir,
    entries=None,
) -> list[Path]:
    """Write one WSB1 tensor per image plus a sidecar JSON.

    ``stacks`` yields one :class:`SubBandStack` per entry, in entry
    order; channels are emitted in the given selection-rank order.  Any
    partially written file is removed if the export fails midway.
    """
    if not indices:
        raise ValueError("selection is empty")
    bad = [i for i in indices if not 1 <= i <= BAND_COUNT]
    if bad:
        raise ValueError(f"invalid sub-band indices {bad}")
    entries = manifest.entries if entries is None else list(entries)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    offsets = np.array(indices) - 1
    try:
        for entry, stack in zip(entries, stacks):
            if not isinstance(stack, SubBandStack):
                raise TypeError(f"expected SubBandStack, got {type(stack).__name__}")
            path = out_dir / f"{entry.image_id}.wsb"
            write_tensor(path, stack.bands[offsets])
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    sidecar = out_dir / "selection_sidecar.json"
    with open(sidecar, "w") as fh:
        json.dump(
            {
                "indices": list(indices),
                "wavelet": wavelet_name,
                "manifest_sha256": manifest.content_hash(),
                "n_tensors": len(written),
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    written.append(sidecar)
    return written


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()

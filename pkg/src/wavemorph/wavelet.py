"""Undecimated separable 2D wavelet decomposition into 48 sub-bands.

The transform keeps full image resolution at every level (no decimation)
and achieves multi-scale analysis by dilating the filter taps instead:
at level ``l`` there are ``2**(l-1) - 1`` implicit zeros between taps.
All filtering is periodic (circular), which makes the transform exactly
shift-equivariant and gives exact one-level reconstruction.

Conventions, fixed so that an independent direct-convolution oracle can
reproduce every coefficient bit for bit:

* Analysis applies a filter ``h`` with dilation ``d`` as a periodic
  correlation anchored at tap 0::

      out[n] = sum_k h[k] * x[(n + k*d) mod N]

* Synthesis applies the stored synthesis filters as the adjoint
  (periodic convolution)::

      out[n] = sum_k g[k] * s[(n - k*d) mod N]

* A 2D plane named ``XY`` has filter ``X`` applied along axis 0 and
  ``Y`` along axis 1 (separable).

The 48-band tree splits the input once, discards the fully-smooth LL
branch, and uniformly splits the three detail branches twice more:
3 * 4 * 4 = 48 leaves.  Leaf ``i`` in 1..48 encodes its filter path as

    i = 16*b1 + 4*b2 + b3 + 1

with ``b1`` indexing {LH, HL, HH} at level 1 and ``b2``, ``b3``
indexing {LL, LH, HL, HH} at levels 2 and 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BAND_COUNT = 48

LEVEL1_NAMES = ("LH", "HL", "HH")
LEVEL23_NAMES = ("LL", "LH", "HL", "HH")

MIN_IMAGE_SIDE = 8


@dataclass(frozen=True)
class FilterPair:
    """Analysis/synthesis filter bank for one wavelet family.

    ``low``/``high`` are the analysis taps; ``synth_low``/``synth_high``
    are applied in the adjoint orientation by :func:`reconstruct_one_level`.
    For orthonormal families the synthesis taps are the analysis taps
    halved, which makes correlate-then-convolve an exact inverse.
    """

    name: str
    low: np.ndarray
    high: np.ndarray
    synth_low: np.ndarray
    synth_high: np.ndarray

    @classmethod
    def orthonormal(cls, name: str, low: list[float]) -> "FilterPair":
        """Build the quadrature-mirror pair from an orthonormal scaling filter."""
        lo = np.asarray(low, dtype=np.float64)
        n = lo.size
        hi = np.array([(-1.0) ** k * lo[n - 1 - k] for k in range(n)])
        return cls(name=name, low=lo, high=hi, synth_low=lo / 2.0, synth_high=hi / 2.0)

    def support(self, dilation: int = 1) -> int:
        """Span of the dilated analysis filters, in samples."""
        taps = max(self.low.size, self.high.size)
        return (taps - 1) * dilation + 1


# Orthonormal scaling filters at full float64 precision.  haar and db2 are
# closed-form; db4 comes from the standard minimal-phase spectral
# factorization, frozen here so the transform has no runtime derivation.
_HAAR_LOW = [0.7071067811865476, 0.7071067811865476]
_DB2_LOW = [
    0.4829629131445341,
    0.8365163037378077,
    0.2241438680420134,
    -0.12940952255126034,
]
_DB4_LOW = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
]

WAVELETS: dict[str, FilterPair] = {
    "haar": FilterPair.orthonormal("haar", _HAAR_LOW),
    "db2": FilterPair.orthonormal("db2", _DB2_LOW),
    "db4": FilterPair.orthonormal("db4", _DB4_LOW),
}


def get_wavelet(name: str) -> FilterPair:
    try:
        return WAVELETS[name]
    except KeyError:
        raise ValueError(
            f"unknown wavelet {name!r}; available: {', '.join(sorted(WAVELETS))}"
        ) from None


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the input-image contract: 2D, >= 8x8, finite, values in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {arr.shape}")
    h, w = arr.shape
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise ValueError(f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {h}x{w}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return arr


def _filter_axis(x: np.ndarray, taps: np.ndarray, dilation: int, axis: int, adjoint: bool) -> np.ndarray:
    """Periodic correlation (analysis) or convolution (synthesis) along one axis."""
    sign = 1 if adjoint else -1
    out = np.zeros_like(x)
    for k, c in enumerate(taps):
        out += c * np.roll(x, sign * k * dilation, axis=axis)
    return out


def _check_support(shape: tuple[int, int], filt: FilterPair, dilation: int) -> None:
    need = filt.support(dilation)
    if min(shape) < need:
        raise ValueError(
            f"image of shape {shape[0]}x{shape[1]} is smaller than the dilated "
            f"filter support {need} ({filt.name}, dilation {dilation})"
        )


def decompose_one_level(
    img: np.ndarray, filt: FilterPair, dilation: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One undecimated split into (LL, LH, HL, HH), all input-sized.

    ``dilation`` implements the zero-insertion of deeper levels; callers
    pass ``2**(level-1)``.
    """
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected 2D input, got shape {x.shape}")
    if dilation < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")
    _check_support(x.shape, filt, dilation)
    lo0 = _filter_axis(x, filt.low, dilation, axis=0, adjoint=False)
    hi0 = _filter_axis(x, filt.high, dilation, axis=0, adjoint=False)
    ll = _filter_axis(lo0, filt.low, dilation, axis=1, adjoint=False)
    lh = _filter_axis(lo0, filt.high, dilation, axis=1, adjoint=False)
    hl = _filter_axis(hi0, filt.low, dilation, axis=1, adjoint=False)
    hh = _filter_axis(hi0, filt.high, dilation, axis=1, adjoint=False)
    return ll, lh, hl, hh


def reconstruct_one_level(
    ll: np.ndarray,
    lh: np.ndarray,
    hl: np.ndarray,
    hh: np.ndarray,
    filt: FilterPair,
    dilation: int = 1,
) -> np.ndarray:
    """Inverse of :func:`decompose_one_level` (exact for orthonormal pairs)."""
    planes = (ll, lh, hl, hh)
    shapes = {p.shape for p in planes}
    if len(shapes) != 1:
        raise ValueError(f"plane dimensions differ: {sorted(shapes)}")
    g = {"L": filt.synth_low, "H": filt.synth_high}
    out = np.zeros_like(np.asarray(ll, dtype=np.float64))
    for plane, (a0, a1) in zip(planes, ("LL", "LH", "HL", "HH")):
        y = _filter_axis(np.asarray(plane, dtype=np.float64), g[a1], dilation, axis=1, adjoint=True)
        out += _filter_axis(y, g[a0], dilation, axis=0, adjoint=True)
    return out


def subband_path(index: int) -> tuple[str, str, str]:
    """Decode a 1-based band index into its (level1, level2, level3) filter path."""
    if not 1 <= index <= BAND_COUNT:
        raise ValueError(f"sub-band index must be in 1..{BAND_COUNT}, got {index}")
    i = index - 1
    return LEVEL1_NAMES[i // 16], LEVEL23_NAMES[(i // 4) % 4], LEVEL23_NAMES[i % 4]


def subband_index(path: tuple[str, str, str]) -> int:
    """Inverse of :func:`subband_path`."""
    b1, b2, b3 = path
    return 16 * LEVEL1_NAMES.index(b1) + 4 * LEVEL23_NAMES.index(b2) + LEVEL23_NAMES.index(b3) + 1


@dataclass
class SubBandStack:
    """The 48 level-3 detail planes of one image, in index order.

    ``bands[i]`` holds sub-band ``i + 1``; every plane has the source
    image's dimensions.
    """

    bands: np.ndarray  # shape (48, height, width)
    source_dims: tuple[int, int]  # (height, width)
    wavelet: str = "haar"

    def __post_init__(self) -> None:
        if self.bands.shape != (BAND_COUNT, *self.source_dims):
            raise ValueError(
                f"expected bands of shape {(BAND_COUNT, *self.source_dims)}, got {self.bands.shape}"
            )

    def band(self, index: int) -> np.ndarray:
        """Plane for 1-based sub-band ``index``."""
        if not 1 <= index <= BAND_COUNT:
            raise ValueError(f"sub-band index must be in 1..{BAND_COUNT}, got {index}")
        return self.bands[index - 1]


def decompose_48(img: np.ndarray, filt: FilterPair) -> SubBandStack:
    """Full 3-level uniform tree over the detail branches of a valid image.

    Level 1 splits the image and drops LL; each surviving branch is
    split at dilation 2, and each of those children again at dilation 4.
    """
    x = validate_image(img)
    for level, dilation in ((1, 1), (2, 2), (3, 4)):
        _check_support(x.shape, filt, dilation)

    _, lh1, hl1, hh1 = decompose_one_level(x, filt, dilation=1)
    bands = np.empty((BAND_COUNT, *x.shape), dtype=np.float64)
    for b1, plane1 in enumerate((lh1, hl1, hh1)):
        children2 = decompose_one_level(plane1, filt, dilation=2)
        for b2, plane2 in enumerate(children2):
            children3 = decompose_one_level(plane2, filt, dilation=4)
            for b3, plane3 in enumerate(children3):
                bands[16 * b1 + 4 * b2 + b3] = plane3
    return SubBandStack(bands=bands, source_dims=x.shape, wavelet=filt.name)


# --- .wst container -------------------------------------------------------
#
# magic "WST1", then little-endian u32 [n_bands, height, width], then
# n_bands*height*width IEEE-754 float32, band-major, row-major per band.

WST_MAGIC = b"WST1"


def write_stack(path, stack: SubBandStack) -> None:
    h, w = stack.source_dims
    header = np.array([BAND_COUNT, h, w], dtype="<u4")
    with open(path, "wb") as fh:
        fh.write(WST_MAGIC)
        fh.write(header.tobytes())
        fh.write(stack.bands.astype("<f4").tobytes())


def read_stack(path, wavelet: str = "haar") -> SubBandStack:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != WST_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {WST_MAGIC!r}")
        n, h, w = np.frombuffer(fh.read(12), dtype="<u4")
        if n != BAND_COUNT:
            raise ValueError(f"{path}: expected {BAND_COUNT} bands, header says {n}")
        payload = fh.read(int(n) * int(h) * int(w) * 4)
    if len(payload) != int(n) * int(h) * int(w) * 4:
        raise ValueError(f"{path}: truncated payload")
    data = np.frombuffer(payload, dtype="<f4")
    bands = data.reshape(int(n), int(h), int(w)).astype(np.float64)
    return SubBandStack(bands=bands, source_dims=(int(h), int(w)), wavelet=wavelet)

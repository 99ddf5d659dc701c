"""Wavelet sub-band analysis for morphing-attack detection.

Pipeline: undecimated 48-band decomposition -> per-band entropy features
-> divergence-based sub-band ranking and selection -> tensor export, with
a linear baseline classifier and ISO-style detection metrics.
"""

from .classifier import LinearModel, SplitFeatures, predict, predict_batch, sweep_k, train
from .config import RunConfig, load_config_file, write_config_file
from .dataio import (
    DatasetManifest,
    ManifestEntry,
    assign_split,
    decode_image,
    export_selected,
    load_images,
    load_manifest,
    read_tensor,
    synth_morph,
    write_tensor,
)
from .features import (
    BONAFIDE,
    MORPHED,
    EntropyDistribution,
    EntropySample,
    estimate_distribution,
    pooled_bin_edges,
    shannon_entropy,
    subband_entropies,
)
from .metrics import ScoreSet, apcer, bpcer, bpcer_at_apcer, d_eer, det_curve, roc_auc, summary
from .selection import (
    AboveThreshold,
    KlRankingTable,
    TopK,
    kl_divergence,
    rank_subbands,
    select,
)
from .synthetic import band_limited_texture, gen_synthetic_dataset
from .wavelet import (
    BAND_COUNT,
    FilterPair,
    SubBandStack,
    decompose_48,
    decompose_one_level,
    get_wavelet,
    read_stack,
    reconstruct_one_level,
    subband_index,
    subband_path,
    write_stack,
)

__version__ = "0.1.0"

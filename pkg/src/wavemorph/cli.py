"""Command-line pipeline: decompose, rank, select, export, sweep, evaluate.

Exit codes: 0 success, 2 input or validation problem, 3 I/O failure,
4 internal invariant violation.  Every command echoes its effective
configuration and writes a JSON run log (with input hashes) next to its
primary output; the run log is the only output containing a timestamp.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import classifier, dataio, features, metrics, selection, synthetic, wavelet
from .config import CONFIG_KEYS, RunConfig, load_config_file

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


def _map_images(fn, items, workers: int):
    """Order-preserving map, fanning out to a bounded thread pool."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_run_log(out_path: Path, command: str, config: RunConfig, inputs: dict, outputs: list) -> None:
    log_path = out_path / "runlog.json" if out_path.is_dir() else out_path.with_name(out_path.name + ".runlog.json")
    doc = {
        "command": command,
        "config": config.as_dict(),
        "inputs": inputs,
        "outputs": [str(p) for p in outputs],
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(log_path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _dataset_inputs(manifests) -> dict:
    return {str(m.root): f"manifest:{m.content_hash()}" for m in manifests}


def _entropy_matrix(manifest, entries, config: RunConfig):
    """(n, 48) per-image sub-band entropies plus labels and ids."""
    images = dataio.load_images(manifest, entries, resize=config.resize)
    filt = wavelet.get_wavelet(config.wavelet)

    def per_image(img):
        stack = wavelet.decompose_48(img, filt)
        return features.subband_entropies(stack.bands, config.entropy_levels)

    rows = _map_images(per_image, images, config.workers)
    matrix = np.array(rows) if rows else np.zeros((0, wavelet.BAND_COUNT))
    labels = [e.class_label for e in entries]
    ids = [e.image_id for e in entries]
    return matrix, labels, ids


def _train_distributions(manifest, config: RunConfig):
    """Per-sub-band (bona fide, morphed) entropy distributions from the
    train split, plus the raw samples for optional dumping."""
    pairs = {}
    samples = []
    per_class = {}
    for label in features.CLASS_LABELS:
        entries = manifest.subset(split="train", class_label=label)
        if not entries:
            raise ValueError(f"dataset {manifest.dataset_id!r}: train split has no {label} images")
        matrix, _, ids = _entropy_matrix(manifest, entries, config)
        per_class[label] = matrix
        for image_id, row in zip(ids, matrix):
            for band in range(1, wavelet.BAND_COUNT + 1):
                samples.append(
                    features.EntropySample(
                        subband_index=band,
                        value=float(row[band - 1]),
                        class_label=label,
                        dataset_id=manifest.dataset_id,
                        image_id=image_id,
                    )
                )
    for band in range(1, wavelet.BAND_COUNT + 1):
        col_b = per_class[features.BONAFIDE][:, band - 1]
        col_m = per_class[features.MORPHED][:, band - 1]
        edges = features.pooled_bin_edges(np.concatenate([col_b, col_m]), config.dist_bins)
        dist = {}
        for label, col in ((features.BONAFIDE, col_b), (features.MORPHED, col_m)):
            cell = [
                features.EntropySample(band, float(v), label, manifest.dataset_id)
                for v in col
            ]
            dist[label] = features.estimate_distribution(cell, edges)
        pairs[band] = (dist[features.BONAFIDE], dist[features.MORPHED])
    return pairs, samples


# --- commands ---------------------------------------------------------------


def cmd_decompose(args, config: RunConfig) -> int:
    src = Path(args.image)
    if not src.is_file():
        raise ValueError(f"input image not found: {src}")
    img = dataio.decode_image(src)
    if config.resize:
        img = dataio.resize_bilinear(img, config.resize)
    stack = wavelet.decompose_48(img, wavelet.get_wavelet(config.wavelet))
    out = Path(args.output)
    wavelet.write_stack(out, stack)
    print(f"wrote {wavelet.BAND_COUNT} sub-bands ({stack.source_dims[0]}x{stack.source_dims[1]}) to {out}")
    _write_run_log(out, "decompose", config, {str(src): dataio.sha256_file(src)}, [out])
    return EXIT_OK


def cmd_rank(args, config: RunConfig) -> int:
    manifests = [dataio.load_manifest(root) for root in args.datasets]
    ids = [m.dataset_id for m in manifests]
    if len(set(ids)) != len(ids):
        raise ValueError(f"dataset ids must be unique, got {ids}")
    per_dataset = {}
    all_samples = []
    for manifest in manifests:
        pairs, samples = _train_distributions(manifest, config)
        per_dataset[manifest.dataset_id] = pairs
        all_samples.extend(samples)
    table = selection.rank_subbands(per_dataset, epsilon=config.kl_epsilon)
    out = Path(args.output)
    selection.write_ranking_csv(out, table)
    outputs = [out]
    if args.dump_entropy:
        features.write_entropy_csv(args.dump_entropy, all_samples)
        outputs.append(Path(args.dump_entropy))
    top = table.selected[:5]
    print(f"ranked {wavelet.BAND_COUNT} sub-bands over {len(manifests)} dataset(s); top-5: {top}")
    _write_run_log(out, "rank", config, _dataset_inputs(manifests), outputs)
    return EXIT_OK


def cmd_select(args, config: RunConfig) -> int:
    table = selection.read_ranking_csv(args.ranking)
    if (args.top_k is None) == (args.threshold is None):
        raise ValueError("exactly one of --top-k or --threshold is required")
    policy = selection.TopK(args.top_k) if args.top_k is not None else selection.AboveThreshold(args.threshold)
    indices = selection.select(table, policy)
    out = Path(args.output)
    selection.write_selection_json(out, policy, indices)
    print(f"selected {len(indices)} sub-band(s): {indices}")
    _write_run_log(out, "select", config, {str(args.ranking): dataio.sha256_file(args.ranking)}, [out])
    return EXIT_OK


def cmd_export(args, config: RunConfig) -> int:
    manifest = dataio.load_manifest(args.dataset)
    indices = selection.read_selection_json(args.selection)
    entries = manifest.entries if args.split == "all" else manifest.subset(split=args.split)
    if not entries:
        raise ValueError(f"no images in split {args.split!r}")
    images = dataio.load_images(manifest, entries, resize=config.resize)
    filt = wavelet.get_wavelet(config.wavelet)
    stacks = _map_images(lambda img: wavelet.decompose_48(img, filt), images, config.workers)
    out_dir = Path(args.output)
    written = dataio.export_selected(manifest, stacks, indices, config.wavelet, out_dir, entries)
    print(f"exported {len(written) - 1} tensor(s) with {len(indices)} channel(s) to {out_dir}")
    inputs = _dataset_inputs([manifest])
    inputs[str(args.selection)] = dataio.sha256_file(args.selection)
    _write_run_log(out_dir, "export", config, inputs, written)
    return EXIT_OK


def cmd_sweep(args, config: RunConfig) -> int:
    manifest = dataio.load_manifest(args.dataset)
    table = selection.read_ranking_csv(args.ranking)
    k_values = _parse_k_list(args.k)
    train_entries = manifest.subset(split="train")
    val_entries = manifest.subset(split="validation")
    if not train_entries or not val_entries:
        raise ValueError("sweep needs non-empty train and validation splits")
    train_matrix, train_labels, train_ids = _entropy_matrix(manifest, train_entries, config)
    val_matrix, val_labels, val_ids = _entropy_matrix(manifest, val_entries, config)
    splits = classifier.SplitFeatures(
        train_matrix=train_matrix,
        train_labels=train_labels,
        validation_matrix=val_matrix,
        validation_labels=val_labels,
        train_ids=train_ids,
        validation_ids=val_ids,
    )
    results = classifier.sweep_k(table, splits, k_values, lam=args.l2)
    out = Path(args.output)
    classifier.write_sweep_csv(out, results)
    for k, auc in results:
        print(f"k={k:2d}  validation_auc={auc:.4f}")
    inputs = _dataset_inputs([manifest])
    inputs[str(args.ranking)] = dataio.sha256_file(args.ranking)
    _write_run_log(out, "sweep", config, inputs, [out])
    return EXIT_OK


def cmd_evaluate(args, config: RunConfig) -> int:
    scores = metrics.read_scores_csv(args.scores)
    out = Path(args.output)
    doc = metrics.write_metrics_json(out, scores)
    outputs = [out]
    if args.det:
        metrics.write_det_csv(args.det, scores)
        outputs.append(Path(args.det))
    print(
        "deer={deer:.4f} (threshold {deer_threshold:.6g}) "
        "bpcer@5%={bpcer_at_5:.4f} bpcer@10%={bpcer_at_10:.4f} auc={auc:.4f}".format(**doc)
    )
    _write_run_log(out, "evaluate", config, {str(args.scores): dataio.sha256_file(args.scores)}, outputs)
    return EXIT_OK


def cmd_synth_morph(args, config: RunConfig) -> int:
    for p in (args.image_a, args.image_b):
        if not Path(p).is_file():
            raise ValueError(f"input image not found: {p}")
    a = dataio.decode_image(args.image_a)
    b = dataio.decode_image(args.image_b)
    morph = dataio.synth_morph(a, b, args.alpha)
    out = Path(args.output)
    dataio.write_pgm(out, morph)
    print(f"blended {args.image_a} and {args.image_b} at alpha={args.alpha} -> {out}")
    inputs = {str(p): dataio.sha256_file(p) for p in (args.image_a, args.image_b)}
    _write_run_log(out, "synth-morph", config, inputs, [out])
    return EXIT_OK


def cmd_gen_synthetic(args, config: RunConfig) -> int:
    manifest = synthetic.gen_synthetic_dataset(
        args.output,
        n_bonafide=args.n_bonafide,
        n_morphs=args.n_morphs,
        size=args.size,
        seed=config.seed,
        alpha=args.alpha,
    )
    counts = {s: len(manifest.subset(split=s)) for s in dataio.SPLITS}
    print(f"generated {len(manifest.entries)} images under {args.output} (splits: {counts})")
    _write_run_log(Path(args.output), "gen-synthetic-dataset", config, {}, [Path(args.output) / "manifest.csv"])
    return EXIT_OK


# --- argument plumbing ------------------------------------------------------


def _parse_k_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"bad k list {text!r}; expected comma-separated integers") from None
    if not values:
        raise ValueError("k list is empty")
    return values


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    parser.add_argument("--wavelet", choices=sorted(wavelet.WAVELETS))
    parser.add_argument("--resize", type=int, help="square resize (0 disables)")
    parser.add_argument("--entropy-levels", type=int, dest="entropy_levels")
    parser.add_argument("--dist-bins", type=int, dest="dist_bins")
    parser.add_argument("--kl-epsilon", type=float, dest="kl_epsilon")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)


def _effective_config(args) -> RunConfig:
    values: dict = {}
    if args.config:
        if not Path(args.config).is_file():
            raise ValueError(f"config file not found: {args.config}")
        values.update(load_config_file(args.config))
    for key in (*CONFIG_KEYS, "workers"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return RunConfig(**values).validate()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavemorph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="decompose one image into a 48-band .wst stack")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("rank", help="rank sub-bands by cross-dataset divergence")
    p.add_argument("datasets", nargs="+", metavar="DATASET_ROOT")
    p.add_argument("-o", "--output", required=True, help="ranking CSV path")
    p.add_argument("--dump-entropy", help="also write the raw entropy samples CSV")
    p.set_defaults(handler=cmd_rank)

    p = sub.add_parser("select", help="pick sub-bands from a ranking")
    p.add_argument("--ranking", required=True)
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--threshold", type=float)
    p.add_argument("-o", "--output", required=True, help="selection JSON path")
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser("export", help="export selected-sub-band tensors")
    p.add_argument("dataset", metavar="DATASET_ROOT")
    p.add_argument("--selection", required=True)
    p.add_argument("--split", default="all", choices=("all", *dataio.SPLITS))
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("sweep", help="validation AUC versus sub-band count")
    p.add_argument("dataset", metavar="DATASET_ROOT")
    p.add_argument("--ranking", required=True)
    p.add_argument("--k", default="1,2,5,10,15,20,22,25,30,40,48", help="comma-separated k grid")
    p.add_argument("--l2", type=float, default=classifier.DEFAULT_LAMBDA)
    p.add_argument("-o", "--output", required=True, help="sweep CSV path")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("evaluate", help="detection metrics from a scores CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--det", help="also write the DET curve CSV")
    p.add_argument("-o", "--output", required=True, help="metrics JSON path")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("synth-morph", help="alpha-blend two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("-o", "--output", required=True, help="output PGM path")
    p.set_defaults(handler=cmd_synth_morph)

    p = sub.add_parser("gen-synthetic-dataset", help="write a seeded synthetic morph dataset")
    p.add_argument("-o", "--output", required=True, help="dataset root directory")
    p.add_argument("--n-bonafide", type=int, default=200)
    p.add_argument("--n-morphs", type=int, default=200)
    p.add_argument("--size", type=int, default=synthetic.DEFAULT_SIZE)
    p.add_argument("--alpha", type=float, default=synthetic.DEFAULT_ALPHA)
    p.set_defaults(handler=cmd_gen_synthetic)

    for sp in sub.choices.values():
        _add_config_flags(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _effective_config(args)
        print(f"[config] {config.describe()}")
        return args.handler(args, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AssertionError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

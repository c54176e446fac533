"""Command-line interface.

Every subcommand exits 0 on success.  Failures print one line of the form
``lmkbench: error: <ErrorType>: <message>`` to stderr and exit non-zero.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import augment, dataset, detection, geometry, metrics, plots, raster, report, tsne

log = logging.getLogger("lmkbench")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: UsageError: {message}\n")


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _model_name(path):
    return os.path.splitext(os.path.basename(path))[0]


def _splits(names):
    return [dataset.SplitFilter.parse(s) for s in names]


# ---------------------------------------------------------------------------

def cmd_eval_landmarks(args):
    manifest = dataset.load_manifest(args.manifest)
    preds = dataset.load_predictions(args.preds)
    model = args.model or _model_name(args.preds)
    doc = report.ReportDoc(threshold=args.threshold)
    reports = []
    for split in _splits(args.split):
        subset = dataset.filter_split(manifest, split)
        for norm in args.norm:
            rep = metrics.evaluate(subset, preds, norm, args.threshold, model=model)
            reports.append(rep)
            doc.add(report.ReportRow.from_metrics(rep, model, split.label))
            if rep.coverage < 1.0:
                log.warning("%s/%s: predictions cover %d of %d images", model, split.label, rep.n, len(subset))
    _write_text(args.out, report.emit_report(doc, args.format))
    if args.json:
        _write_text(args.json, json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
    if args.per_image_csv:
        _write_text(args.per_image_csv, reports[0].to_csv())


def cmd_eval_detections(args):
    manifest = dataset.load_manifest(args.manifest)
    dets = dataset.load_detections(args.dets)
    out = []
    for split in _splits(args.split):
        subset = dataset.filter_split(manifest, split)
        ap = detection.dataset_average_precision(subset, dets, args.iou)
        out.append(f"{split.label},{len(subset)},{args.iou:g},{100.0 * ap:.1f}")
    _write_text(args.out, "split,n_images,iou,ap\n" + "\n".join(out) + "\n")


def cmd_ced(args):
    manifest = dataset.filter_split(dataset.load_manifest(args.manifest), dataset.SplitFilter.parse(args.split))
    series = {}
    for path in args.preds:
        rep = metrics.evaluate(manifest, dataset.load_predictions(path), args.norm, args.threshold)
        series[_model_name(path)] = rep.nmes.tolist()
    spec = plots.PlotSpec("ced", series, title=args.title or f"CED, {manifest.name} (NME {args.norm})",
                          x_range=(0.0, args.max), threshold=args.threshold, x_label=f"NME ({args.norm})")
    _write_text(args.out, plots.render_plot(spec))


def cmd_stats(args):
    manifest = dataset.filter_split(dataset.load_manifest(args.manifest), dataset.SplitFilter.parse(args.split))
    st = geometry.geometry_stats([r.landmarks for r in manifest])
    _write_text(args.out, "dataset,n_images,mean_face_aspect_ratio,mean_iod_over_box\n"
                f"{manifest.name},{len(manifest)},{st.mean_face_aspect_ratio:.4f},{st.mean_iod_over_box:.4f}\n")


def cmd_mean_face(args):
    manifest = dataset.filter_split(dataset.load_manifest(args.manifest), dataset.SplitFilter.parse(args.split))
    face = geometry.mean_face([r.landmarks for r in manifest], args.norm)
    spec = plots.PlotSpec("landmark_error", {"face": face}, title=args.title or f"Mean face, {manifest.name}")
    _write_text(args.out, plots.render_plot(spec))
    if args.pts:
        dataset.write_pts(args.pts, face)


def cmd_per_landmark(args):
    manifest = dataset.filter_split(dataset.load_manifest(args.manifest), dataset.SplitFilter.parse(args.split))
    face = geometry.mean_face([r.landmarks for r in manifest], geometry.NormalizationKind.BOX_SIZE)
    series = {"face": face}
    rows = []
    for path in args.preds:
        errs = metrics.per_landmark_errors(dataset.load_predictions(path), manifest, args.norm)
        series[_model_name(path)] = errs
        rows.append([_model_name(path), *(repr(float(e)) for e in errs)])
    spec = plots.PlotSpec("landmark_error", series, title=args.title or f"Per-landmark NME ({args.norm})")
    _write_text(args.out, plots.render_plot(spec))
    if args.csv:
        buf = [",".join(["model", *(f"l{i}" for i in range(1, 69))])] + [",".join(r) for r in rows]
        _write_text(args.csv, "\n".join(buf) + "\n")


def cmd_tsne(args):
    features = dataset.load_features(args.features)
    labels = {}
    for path in args.labels or ():
        manifest = dataset.load_manifest(path)
        for rec in manifest:
            label = manifest.name
            if args.split_labels:
                label += "-challenging" if rec.attributes.challenging else "-common"
            labels.setdefault(rec.image_id, label)
    config = tsne.TsneConfig(perplexity=args.perplexity, iterations=args.iterations, seed=args.seed)
    result = tsne.run_tsne_detailed(features, config)
    log.info("t-SNE on %d x %d features: KL %.4f -> %.4f", len(features.ids), features.dim,
             result.initial_kl, result.final_kl)
    emb = result.embedding
    rows = ["image_id,x,y,group"]
    groups = {}
    for image_id, (x, y) in zip(emb.ids, emb.coords):
        g = labels.get(image_id, "unlabeled")
        groups.setdefault(g, []).append((x, y))
        rows.append(",".join([image_id, repr(float(x)), repr(float(y)), g]))
    _write_text(args.out, "\n".join(rows) + "\n")
    if args.plot:
        spec = plots.PlotSpec("scatter", {g: np.array(v) for g, v in groups.items()},
                              title=f"t-SNE (perplexity {args.perplexity:g}, D={features.dim})")
        _write_text(args.plot, plots.render_plot(spec))


def cmd_augment(args):
    config = augment.preset(args.preset)
    image = raster.read_pnm(args.image) if args.image else None
    pts = dataset.read_pts(args.pts) if args.pts else None
    for k in range(args.count):
        seed = args.seed + k
        sample = augment.augment_sample(config, seed, image, pts, fill=args.fill)
        prefix = args.out_prefix if args.count == 1 else f"{args.out_prefix}_{k:03d}"
        if sample.image is not None:
            ext = ".ppm" if sample.image.channels == 3 else ".pgm"
            raster.write_pnm(prefix + ext, sample.image)
        if sample.landmarks is not None:
            dataset.write_pts(prefix + ".pts", sample.landmarks)
        meta = {"preset": args.preset, "seed": seed, "angle_deg": sample.params.angle_deg,
                "zoom": sample.params.zoom, "grayscale": sample.params.grayscale,
                "matrix": sample.transform.matrix.tolist()}
        _write_text(prefix + ".json", json.dumps(meta, indent=2) + "\n")


def cmd_gen_configs(args):
    if args.space:
        with open(args.space, encoding="utf-8") as fh:
            space = augment.GridSpace.from_dict(json.load(fh))
    else:
        space = augment.default_grid_space()
    configs = augment.gen_config_grid(space)
    os.makedirs(args.out_dir, exist_ok=True)
    for k, cfg in enumerate(configs):
        name = f"config_{k:03d}_{cfg['sweep']}.json"
        _write_text(os.path.join(args.out_dir, name), json.dumps(cfg, indent=2) + "\n")
    counts = {}
    for cfg in configs:
        counts[cfg["sweep"]] = counts.get(cfg["sweep"], 0) + 1
    sys.stdout.write(f"wrote {len(configs)} configs to {args.out_dir} "
                     f"({', '.join(f'{k}={v}' for k, v in counts.items())})\n")


# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="lmkbench", description="Facial landmark and face detection evaluation toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    norm_choices = ["iod", "box"]

    s = sub.add_parser("eval-landmarks", help="NME / FR / AUC report")
    s.add_argument("--manifest", required=True)
    s.add_argument("--preds", required=True)
    s.add_argument("--norm", nargs="+", choices=norm_choices, default=["iod"])
    s.add_argument("--threshold", type=float, default=metrics.DEFAULT_THRESHOLD)
    s.add_argument("--split", nargs="+", default=["all"])
    s.add_argument("--model")
    s.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    s.add_argument("--out", help="report destination (default stdout)")
    s.add_argument("--json", help="write full metric reports as JSON")
    s.add_argument("--per-image-csv", help="write per-image NMEs of the first split/norm")
    s.set_defaults(func=cmd_eval_landmarks)

    s = sub.add_parser("eval-detections", help="average precision per split")
    s.add_argument("--manifest", required=True)
    s.add_argument("--dets", required=True)
    s.add_argument("--iou", type=float, default=detection.DEFAULT_IOU)
    s.add_argument("--split", nargs="+", default=["all", "common", "challenging"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval_detections)

    s = sub.add_parser("ced", help="cumulative error distribution plot")
    s.add_argument("--manifest", required=True)
    s.add_argument("--preds", nargs="+", required=True)
    s.add_argument("--norm", choices=norm_choices, default="iod")
    s.add_argument("--max", type=float, default=15.0)
    s.add_argument("--threshold", type=float, default=metrics.DEFAULT_THRESHOLD)
    s.add_argument("--split", default="all")
    s.add_argument("--title")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ced)

    s = sub.add_parser("stats", help="mean-face aspect ratio and iod/box ratio")
    s.add_argument("--manifest", required=True)
    s.add_argument("--split", default="all")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("mean-face", help="render the normalized mean face")
    s.add_argument("--manifest", required=True)
    s.add_argument("--norm", choices=norm_choices, default="box")
    s.add_argument("--split", default="all")
    s.add_argument("--title")
    s.add_argument("--pts", help="also write the mean face as .pts")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mean_face)

    s = sub.add_parser("per-landmark", help="per-landmark error face")
    s.add_argument("--manifest", required=True)
    s.add_argument("--preds", nargs="+", required=True)
    s.add_argument("--norm", choices=norm_choices, default="iod")
    s.add_argument("--split", default="all")
    s.add_argument("--title")
    s.add_argument("--csv")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_per_landmark)

    s = sub.add_parser("tsne", help="2-D t-SNE embedding of feature vectors")
    s.add_argument("--features", required=True)
    s.add_argument("--labels", nargs="*", help="manifests whose names label the points")
    s.add_argument("--split-labels", action="store_true", help="suffix labels with -common/-challenging")
    s.add_argument("--perplexity", type=float, default=50.0)
    s.add_argument("--iterations", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--plot", help="also write a scatter plot SVG")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tsne)

    s = sub.add_parser("augment", help="apply a sampled augmentation preset")
    s.add_argument("--preset", required=True, choices=sorted(augment.PRESETS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--image")
    s.add_argument("--pts")
    s.add_argument("--fill", type=int, default=0)
    s.add_argument("--out-prefix", required=True)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("gen-configs", help="emit training configuration JSON files")
    s.add_argument("--space", help="grid space JSON (default: the published search space)")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_gen_configs)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="lmkbench: %(levelname)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        msg = " ".join(str(exc).split())
        sys.stderr.write(f"lmkbench: error: {type(exc).__name__}: {msg}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

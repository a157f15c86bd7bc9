"""Command-line surface for the whole pipeline.

Subcommands: synth, ingest, annotate, features extract, segment,
fit ordinal, fit logistic, train, score, eval forced-choice|top1|map,
chisq, cv, report. Data goes to files or stdout; diagnostics go to
stderr. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import annotation, classify, corpus, detect, segment, stats
from .errors import PhotoscoreError
from .extract import extract_features

#: predictors of the quality-label regression, in feature-CSV order
ORDINAL_PREDICTORS = [
    "brightness", "contrast", "dynamic_range", "resolution",
    "x_asymmetry", "y_asymmetry", "fgbg_area_ratio",
    "bgfg_brightness_diff", "bgfg_contrast_diff",
    "bg_lightness", "bg_nonuniformity",
]


def _emit(obj):
    print(json.dumps(obj, indent=2))


def _warn(message):
    print(f"warning: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# synth / ingest
# ---------------------------------------------------------------------------

def _cmd_synth(args):
    spec = corpus.SynthSpec(
        n_images=args.n, width=args.width, height=args.height,
        category=args.category, n_raters=args.raters,
        raters_per_image=args.raters_per_image,
        ambiguous_fraction=args.ambiguous_fraction,
        p_no_detection=args.p_no_detection,
        p_two_objects=args.p_two_objects,
    )
    generated = corpus.generate_synthetic_corpus(spec, args.seed)
    os.makedirs(args.out, exist_ok=True)
    manifest_path = corpus.materialize(generated, args.out)
    boxes = {i: r.detections for i, r in generated.images.items() if r.detections}
    boxes_path = os.path.join(args.out, "boxes.jsonl")
    detect.write_boxes_jsonl(boxes, boxes_path)
    _emit({"manifest": manifest_path, "boxes": boxes_path,
           "images": len(generated.images), "seed": args.seed})
    return 0


def _cmd_ingest(args):
    loaded = corpus.load_manifest(args.manifest)
    categories = {}
    n_ratings = n_detections = n_listings = 0
    raters = set()
    for rec in loaded.images.values():
        categories[rec.category] = categories.get(rec.category, 0) + 1
        n_ratings += len(rec.ratings)
        n_detections += len(rec.detections)
        raters.update(r.rater_id for r in rec.ratings)
        if rec.listing is not None:
            n_listings += 1
    _emit({"images": len(loaded.images), "ratings": n_ratings,
           "raters": len(raters), "detections": n_detections,
           "listings": n_listings,
           "categories": dict(sorted(categories.items()))})
    return 0


# ---------------------------------------------------------------------------
# annotate
# ---------------------------------------------------------------------------

def _rho_or_none(std_ratings, min_common):
    try:
        rho, stderr, pairs = annotation.mean_pairwise_pearson(std_ratings, min_common)
        return {"mean": rho, "stderr": stderr, "pairs": pairs}
    except PhotoscoreError as exc:
        _warn(str(exc))
        return None


def _cmd_annotate(args):
    loaded = corpus.load_manifest(args.manifest)
    ratings = [r for rec in loaded.images.values() for r in rec.ratings]
    if not ratings:
        raise PhotoscoreError("manifest has no ratings to annotate")
    std = annotation.standardize_raters(ratings)
    scores = annotation.aggregate_image_scores(std)

    # disagreement filtering runs per product category
    category_of = {i: rec.category for i, rec in loaded.images.items()}
    retained = []
    for cat in sorted(set(category_of.values())):
        cat_scores = [s for s in scores if category_of[s.image_id] == cat]
        retained.extend(annotation.filter_by_disagreement(cat_scores, args.retain))
    retained.sort(key=lambda s: s.image_id)
    retained_ids = {s.image_id for s in retained}
    labels = [annotation.discretize(s) for s in retained]

    rho_before = _rho_or_none(std, args.min_common)
    std_after = [r for r in std if r.image_id in retained_ids]
    rho_after = _rho_or_none(std_after, args.min_common)

    annotation.write_labels_csv(retained, labels, args.out)
    _emit({"images": len(scores), "retained": len(retained),
           "labels": args.out,
           "label_counts": {str(v): sum(1 for x in labels if int(x) == v)
                            for v in (0, 1, 2)},
           "rho_unfiltered": rho_before, "rho_filtered": rho_after})
    return 0


# ---------------------------------------------------------------------------
# features extract
# ---------------------------------------------------------------------------

def _cmd_features_extract(args):
    loaded = corpus.load_manifest(args.manifest)
    labels = annotation.read_labels_csv(args.labels) if args.labels else {}
    external = None
    if args.detections:
        external = detect.threshold_detections(
            detect.load_boxes_jsonl(args.detections, with_confidence=True),
            args.conf_threshold)

    params = segment.GrabCutParams(seed=args.seed)
    order = list(loaded.images)  # manifest order

    def one(image_id):
        rec = loaded.images[image_id]
        img = corpus.load_image(rec)
        if external is not None:
            boxes = [b for b, _ in external.get(image_id, [])]
        else:
            boxes = rec.detections
        fv = extract_features(img, boxes, do_segment=args.segment,
                              grabcut_params=params)
        return image_id, fv, labels.get(image_id)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            records = list(pool.map(one, order))
    else:
        records = [one(i) for i in order]
    corpus.write_feature_table(records, args.out)
    _emit({"features": args.out, "rows": len(records),
           "labeled": sum(1 for _, _, lab in records if lab is not None)})
    return 0


def _cmd_segment(args):
    try:
        parts = [int(v) for v in args.box.split(",")]
        if len(parts) != 4:
            raise ValueError
    except ValueError:
        raise PhotoscoreError(f"--box must be left,top,right,bottom, got {args.box!r}")
    with open(args.image, "rb") as fh:
        img = corpus.decode_image(fh.read())
    box = corpus.BoundingBox(*parts)
    if not box.fits(img.width, img.height):
        raise PhotoscoreError(f"box {args.box} outside {img.width}x{img.height} image")
    params = segment.GrabCutParams(
        gmm_components=args.components, gamma=args.gamma,
        max_iterations=args.iterations, seed=args.seed)
    mask = segment.grabcut(img, box, params)
    segment.save_mask_png(mask, args.out)
    _emit({"mask": args.out,
           "foreground_pixels": int(mask.foreground.sum()),
           "iterations": len(mask.energy_trace)})
    return 0


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------

def _feature_design(path, predictors, standardize):
    records = corpus.read_feature_table(path)
    rows = [(fv, label) for _, fv, label in records if label is not None]
    if not rows:
        raise PhotoscoreError("feature table has no labeled rows")
    X, kept = classify.feature_matrix([fv for fv, _ in rows],
                                      feature_names=predictors)
    if kept.size < len(rows):
        _warn(f"dropped {len(rows) - kept.size} rows with absent features")
    y = np.array([int(label) for _, label in rows])[kept]

    names = list(predictors)
    if X.size:
        tol = 1e-12 * np.maximum(1.0, np.abs(X.mean(axis=0)))
        keep_cols = np.flatnonzero(X.std(axis=0) > tol)
    else:
        keep_cols = np.array([], dtype=np.int64)
    if keep_cols.size < len(names):
        dropped = [names[j] for j in range(len(names)) if j not in keep_cols]
        _warn(f"dropping constant predictors: {dropped}")
    X = X[:, keep_cols]
    names = [names[j] for j in keep_cols]
    if standardize and X.size:
        X = (X - X.mean(axis=0)) / X.std(axis=0)
    return stats.DesignMatrix(names, X, y)


def _print_fit_summary(fit, names, params):
    pvals = fit.p_values
    for i, name in enumerate(names):
        stars = stats.significance_stars(pvals[i])
        print(f"  {name:<22} {params[i]: .4f} ({fit.se[i]:.4f}) {stars}",
              file=sys.stderr)
    print(f"  AIC: {fit.aic:.2f}  loglik: {fit.loglik:.2f}  n={fit.n}"
          f"  converged={fit.converged}", file=sys.stderr)


def _cmd_fit_ordinal(args):
    predictors = (args.predictors.split(",") if args.predictors
                  else ORDINAL_PREDICTORS)
    dm = _feature_design(args.features, predictors, args.standardize)
    fit = stats.fit_ordinal(dm)
    if not fit.converged:
        _warn(f"fit did not converge: {fit.diagnostic}")
    _print_fit_summary(fit, list(dm.columns) + ["0|1", "1|2"],
                       np.concatenate([fit.beta, fit.cutpoints]))
    payload = stats.fit_to_json(fit)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        _emit({"fit": args.out, "aic": fit.aic, "converged": fit.converged})
    else:
        _emit(payload)
    return 0


def _listing_rows(loaded, quality_by_image):
    rows = []
    for image_id, rec in loaded.images.items():
        if rec.listing is None:
            continue
        lst = rec.listing
        row = {"days": lst.days_listed, "views": lst.view_count,
               "price": lst.price, "sold": int(lst.sold)}
        if lst.aesthetic_score is not None:
            row["aesthetic"] = lst.aesthetic_score
        if image_id in quality_by_image:
            row["quality"] = quality_by_image[image_id]
        elif lst.quality_score is not None:
            row["quality"] = lst.quality_score
        rows.append(row)
    return rows


def _quality_from_scores(path):
    """Per-image quality covariate: log-probability of the Good class."""
    out = {}
    for image_id, logits in classify.read_logits_csv(path):
        out[image_id] = float(classify.log_softmax(logits)[2])
    return out


def _formula_rows(args):
    loaded = corpus.load_manifest(args.manifest)
    quality = _quality_from_scores(args.scores) if args.scores else {}
    formula = stats.parse_formula(args.formula)
    rows = _listing_rows(loaded, quality)
    needed = {formula.response} | {var for var, _ in formula.terms}
    usable = [r for r in rows if needed <= set(r)]
    if len(usable) < len(rows):
        _warn(f"dropped {len(rows) - len(usable)} listings missing "
              f"{sorted(needed)} fields")
    if not usable:
        raise PhotoscoreError("no listings carry every formula variable")
    return stats.evaluate_formula(formula, usable)


def _cmd_fit_logistic(args):
    dm = _formula_rows(args)
    fit = stats.fit_logistic(dm)
    if not fit.converged:
        _warn(f"fit did not converge: {fit.diagnostic}")
    _print_fit_summary(fit, fit.columns, fit.beta)
    payload = stats.fit_to_json(fit)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        _emit({"fit": args.out, "aic": fit.aic, "converged": fit.converged})
    else:
        _emit(payload)
    return 0


def _cmd_cv(args):
    dm = _formula_rows(args)
    accuracy = stats.kfold_accuracy(dm.X, dm.y, k=args.k, seed=args.seed,
                                    columns=dm.columns)
    _emit({"accuracy": accuracy, "k": args.k, "n": int(dm.y.shape[0]),
           "seed": args.seed})
    return 0


def _cmd_chisq(args):
    records = corpus.read_feature_table(args.features)
    pairs = [(fv.object_cnt if fv.has_detection else 0, label)
             for _, fv, label in records if label is not None]
    if not pairs:
        raise PhotoscoreError("feature table has no labeled rows")
    table = detect.detection_label_table(pairs)
    keep_rows = table.sum(axis=1) > 0
    keep_cols = table.sum(axis=0) > 0
    sub = table[keep_rows][:, keep_cols]
    if sub.shape[0] < 2 or sub.shape[1] < 2:
        raise PhotoscoreError("degenerate contingency table (single row or column)")
    statistic, dof, p = stats.chi_squared(sub)
    _emit({"statistic": statistic, "dof": dof, "p": float(f"{p:.4g}"),
           "table": table.tolist()})
    return 0


# ---------------------------------------------------------------------------
# train / score / eval
# ---------------------------------------------------------------------------

def _cmd_train(args):
    records = corpus.read_feature_table(args.features)
    rows = [(fv, label) for _, fv, label in records if label is not None]
    if not rows:
        raise PhotoscoreError("feature table has no labeled rows")
    config = classify.TrainConfig(
        epsilon=args.epsilon, learning_rate=args.lr, epochs=args.epochs,
        l2=args.l2, seed=args.seed, impute=args.impute)
    model = classify.train_classifier(rows, config)
    classify.save_model(model, args.out)
    _emit({"model": args.out, "rows": len(rows),
           "features": len(model.feature_names),
           "final_loss": model.training_loss[-1] if model.training_loss else None})
    return 0


def _cmd_score(args):
    model = classify.load_model(args.model)
    records = corpus.read_feature_table(args.features)
    scored = [(image_id, classify.predict_logits(model, fv, impute=args.impute))
              for image_id, fv, _ in records]
    classify.write_logits_csv(scored, args.out)
    _emit({"scores": args.out, "rows": len(scored)})
    return 0


def _join_scores_labels(scores_path, labels_path):
    labels = annotation.read_labels_csv(labels_path)
    joined = []
    for image_id, logits in classify.read_logits_csv(scores_path):
        if image_id in labels:
            joined.append((logits, labels[image_id]))
    if not joined:
        raise PhotoscoreError("no image ids shared between scores and labels")
    return joined


def _cmd_eval_forced_choice(args):
    joined = _join_scores_labels(args.scores, args.labels)
    accuracy, n_used = classify.forced_choice_accuracy(joined)
    _emit({"metric": "forced-choice", "accuracy": accuracy, "n_used": n_used})
    return 0


def _cmd_eval_top1(args):
    joined = _join_scores_labels(args.scores, args.labels)
    accuracy = classify.top1_accuracy(joined)
    _emit({"metric": "top1", "accuracy": accuracy, "n": len(joined)})
    return 0


def _cmd_eval_map(args):
    detections = detect.load_boxes_jsonl(args.detections, with_confidence=True)
    groundtruth = detect.load_boxes_jsonl(args.groundtruth, with_confidence=False)
    if args.conf_threshold is not None:
        detections = detect.threshold_detections(detections, args.conf_threshold)
    value = detect.map50(detections, groundtruth, args.iou_threshold)
    _emit({"metric": "map", "iou_threshold": args.iou_threshold, "ap": value,
           "n_groundtruth": sum(len(b) for b in groundtruth.values())})
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _svg_histogram(values, column, bins):
    counts, edges = np.histogram(values, bins=bins)
    width, height = 480, 300
    left, bottom, top = 50, 40, 30
    plot_w, plot_h = width - left - 20, height - bottom - top
    peak = max(int(counts.max()), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{column}</text>',
    ]
    bar_w = plot_w / len(counts)
    for i, count in enumerate(counts):
        bar_h = plot_h * count / peak
        x = left + i * bar_w
        y = top + plot_h - bar_h
        parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                     f'height="{bar_h:.2f}" fill="#4878a8" stroke="white"/>')
    axis_y = top + plot_h
    parts.append(f'<line x1="{left}" y1="{axis_y}" x2="{left + plot_w}" '
                 f'y2="{axis_y}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" '
                 f'stroke="black"/>')
    for frac, value in ((0.0, edges[0]), (1.0, edges[-1])):
        x = left + frac * plot_w
        parts.append(f'<text x="{x:.1f}" y="{axis_y + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{value:.4g}</text>')
    parts.append(f'<text x="{left - 6}" y="{top + 4}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="11">{peak}</text>')
    parts.append(f'<text x="{left - 6}" y="{axis_y + 4}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="11">0</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmd_report(args):
    records = corpus.read_feature_table(args.features)
    numeric_columns = corpus.FEATURE_COLUMNS[1:-1]
    lines = ["column,count,mean,std,min,max"]
    per_column = {}
    for name in numeric_columns:
        values = [float(getattr(fv, name)) for _, fv, _ in records
                  if getattr(fv, name) is not None
                  and np.isfinite(float(getattr(fv, name)))]
        per_column[name] = values
        if values:
            arr = np.asarray(values)
            lines.append(f"{name},{arr.size},{arr.mean():.6g},{arr.std():.6g},"
                         f"{arr.min():.6g},{arr.max():.6g}")
        else:
            lines.append(f"{name},0,,,,")
    if args.column not in per_column:
        raise PhotoscoreError(
            f"unknown feature column {args.column!r}; choose from {numeric_columns}")
    values = per_column[args.column]
    if not values:
        raise PhotoscoreError(f"column {args.column!r} has no present values")
    svg = _svg_histogram(np.asarray(values), args.column, args.bins)

    os.makedirs(args.out_dir, exist_ok=True)
    summary_path = os.path.join(args.out_dir, "summary.csv")
    hist_path = os.path.join(args.out_dir, f"hist_{args.column}.svg")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(hist_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    _emit({"summary": summary_path, "histogram": hist_path,
           "rows": len(records)})
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="photoscore",
        description="Product-photo quality pipeline: synthetic corpora, crowd "
                    "label aggregation, feature extraction with optional "
                    "GrabCut segmentation, regression analyses, classifier "
                    "training, and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--category", default="shoe", choices=corpus.CATEGORIES)
    p.add_argument("--raters", type=int, default=8)
    p.add_argument("--raters-per-image", type=int, default=3)
    p.add_argument("--ambiguous-fraction", type=float, default=0.4)
    p.add_argument("--p-no-detection", type=float, default=0.06)
    p.add_argument("--p-two-objects", type=float, default=0.3)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate a manifest and summarize it")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("annotate",
                       help="standardize, filter, discretize crowd ratings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="labels CSV path")
    p.add_argument("--retain", type=float, default=0.6)
    p.add_argument("--min-common", type=int, default=5)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("features", help="feature extraction")
    fsub = p.add_subparsers(dest="features_command", required=True)
    pe = fsub.add_parser("extract", help="compute the feature CSV")
    pe.add_argument("--manifest", required=True)
    pe.add_argument("--out", required=True)
    pe.add_argument("--segment", action="store_true",
                    help="run GrabCut for regional features")
    pe.add_argument("--conf-threshold", type=float, default=0.90)
    pe.add_argument("--detections",
                    help="scored detections JSONL overriding manifest boxes")
    pe.add_argument("--labels", help="labels CSV to fill the label column")
    pe.add_argument("--seed", type=int, default=42)
    pe.add_argument("--workers", type=int, default=1)
    pe.set_defaults(func=_cmd_features_extract)

    p = sub.add_parser("segment", help="GrabCut one image to a PNG mask")
    p.add_argument("--image", required=True)
    p.add_argument("--box", required=True, help="left,top,right,bottom")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--gamma", type=float, default=50.0)
    p.add_argument("--components", type=int, default=5)
    p.add_argument("--iterations", type=int, default=5)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("fit", help="regression fits")
    fsub = p.add_subparsers(dest="fit_command", required=True)
    po = fsub.add_parser("ordinal", help="ordered logit on quality labels")
    po.add_argument("--features", required=True)
    po.add_argument("--out")
    po.add_argument("--predictors", help="comma-separated feature columns")
    po.add_argument("--standardize", action="store_true",
                    help="z-score predictors before fitting")
    po.set_defaults(func=_cmd_fit_ordinal)
    pl = fsub.add_parser("logistic", help="binary logit on listing outcomes")
    pl.add_argument("--manifest", required=True)
    pl.add_argument("--formula", required=True,
                    help='e.g. "sold ~ log(days) + log(views) + log(price) + quality"')
    pl.add_argument("--scores", help="logits CSV providing the quality covariate")
    pl.add_argument("--out")
    pl.set_defaults(func=_cmd_fit_logistic)

    p = sub.add_parser("train", help="train the softmax classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--impute", action="store_true",
                   help="mean-impute absent features instead of dropping rows")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", help="write logits for a feature table")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--impute", action="store_true")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="evaluation metrics")
    esub = p.add_subparsers(dest="eval_command", required=True)
    pf = esub.add_parser("forced-choice", help="binary Good-vs-Bad accuracy")
    pf.add_argument("--scores", required=True)
    pf.add_argument("--labels", required=True)
    pf.set_defaults(func=_cmd_eval_forced_choice)
    pt = esub.add_parser("top1", help="3-way argmax accuracy")
    pt.add_argument("--scores", required=True)
    pt.add_argument("--labels", required=True)
    pt.set_defaults(func=_cmd_eval_top1)
    pm = esub.add_parser("map", help="average precision of detections")
    pm.add_argument("--detections", required=True)
    pm.add_argument("--groundtruth", required=True)
    pm.add_argument("--iou-threshold", type=float, default=0.5)
    pm.add_argument("--conf-threshold", type=float, default=None)
    pm.set_defaults(func=_cmd_eval_map)

    p = sub.add_parser("chisq",
                       help="chi-squared test of label vs detection count")
    p.add_argument("--features", required=True)
    p.set_defaults(func=_cmd_chisq)

    p = sub.add_parser("cv", help="k-fold accuracy of the sales model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--scores")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("report", help="summary stats CSV + SVG histogram")
    p.add_argument("--features", required=True)
    p.add_argument("--column", default="brightness")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PhotoscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line front end: file-composed pipeline stages from synthetic data
(or a real export) through training, evaluation, attribution, and reports.

Exit codes: 0 success, 1 usage error, 2 data/contract error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__
from . import artifacts, court_data, decision_forests as forests, feature_pipeline as fp
from . import model_search, reports
from .attribution import TreeShapExplainer
from .errors import PendencyError
from .evaluation import EvaluationReport, evaluate_classifier

logger = logging.getLogger("pendency")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _seed(value: str) -> int:
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return seed


def _iso_date(value: str):
    return date.fromisoformat(value)


def _fractions(value: str) -> list[float]:
    return [float(part) for part in value.split(",")]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--output-dir", default=".", help="directory for artifacts (created if needed)")
    p.add_argument("--seed", type=_seed, default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="pendency", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pendency {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic case CSV")
    _add_common(p)
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("--target", choices=[fp.MULTI5, fp.BINARY3Y], default=fp.MULTI5,
                   help="target scheme the planted signal aims at")
    p.add_argument("--signal", type=float, default=0.85, help="planted signal strength in [0,1]")
    p.add_argument("--ongoing-fraction", type=float, default=0.1)
    p.add_argument("--prior", default=None,
                   help="comma-separated class prior in class order (default built-in)")
    p.add_argument("--cardinality", action="append", default=[], metavar="COL=N",
                   help="override a column's category count (repeatable)")

    p = sub.add_parser("ingest", help="parse, clean, and impute a case CSV")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--cutoff", type=_iso_date, default=date(2010, 1, 1),
                   help="drop rows with dates before this day (ISO date)")
    p.add_argument("--aux", default=None, help="optional metadata CSV keyed by case_id to overlay")

    p = sub.add_parser("featurize", help="encode a cleaned CSV into a feature directory")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--target", choices=[fp.MULTI5, fp.BINARY3Y], default=fp.BINARY3Y)
    p.add_argument("--encoder", choices=list(fp.ENCODER_KINDS), default=fp.ENCODER_LABEL)
    p.add_argument("--k", type=int, default=200, help="SVD components for onehot-svd")
    p.add_argument("--hash-width", type=int, default=256, help="bucket count for hashing")
    p.add_argument("--split", type=_fractions, default=[0.8, 0.2],
                   help="comma-separated part fractions")
    p.add_argument("--exclude-ongoing", action="store_true",
                   help="drop rows without a decision date instead of labeling them last-class")
    p.add_argument("--export-triplets", action="store_true",
                   help="also write the matrix as a row,col,value CSV")

    p = sub.add_parser("train", help="train a model on the train part of a feature directory")
    _add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=["tree", "bagging", "rf", "gbdt"], default="rf")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--lambda", dest="reg_lambda", type=float, default=1.0)
    p.add_argument("--max-features", default=None,
                   help="all, sqrt, or a fraction (random forest defaults to sqrt)")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("evaluate", help="score a model on one part of a feature directory")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--part", choices=["train", "val", "test", "all"], default="test")

    p = sub.add_parser("explain", help="feature importance and per-row attributions")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--part", choices=["train", "val", "test", "all"], default="test")
    p.add_argument("--rows", type=int, default=10, help="rows to attribute")
    p.add_argument("--class-index", type=int, default=None,
                   help="class to attribute for multiclass classifiers")

    p = sub.add_parser("search", help="random-search model selection on a cleaned CSV")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--target", choices=[fp.MULTI5, fp.BINARY3Y], default=fp.BINARY3Y)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--time-budget-s", type=float, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--kinds", default=None,
                   help="comma-separated model kinds to search (default all valid)")

    p = sub.add_parser("report", help="render report JSONs as tables and figures")
    _add_common(p)
    p.add_argument("--inputs", nargs="+", required=True, help="report JSON files from evaluate")

    return parser


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_dict(args) -> dict:
    return {k: (v.isoformat() if isinstance(v, date) else v) for k, v in vars(args).items()}


def _read_records(path: Path):
    with open(path, "rb") as fh:
        records, errors = court_data.parse_case_csv(fh)
    return records, errors


def _load_model_and_features(args):
    model_path = artifacts.resolve_input(args.model)
    features_dir = artifacts.resolve_input(args.features)
    model = forests.load_model(model_path)
    feats = artifacts.load_features(features_dir)
    return model, feats, model_path, features_dir


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    out = _outdir(args)
    prior = None
    if args.prior:
        names = fp.target_class_names(args.target)
        values = [float(x) for x in args.prior.split(",")]
        if len(values) != len(names):
            raise PendencyError(f"--prior needs {len(names)} values for {args.target}")
        prior = dict(zip(names, values))
    elif args.target == fp.BINARY3Y:
        prior = dict(court_data.DEFAULT_PRIOR_BINARY)
    cards = {}
    for item in args.cardinality:
        col, _, value = item.partition("=")
        cards[col] = int(value)
    spec = court_data.SyntheticSpec(
        n_rows=args.rows,
        seed=args.seed,
        class_prior=prior,
        signal_strength=args.signal,
        cardinalities=cards or None,
        ongoing_fraction=args.ongoing_fraction,
    )
    records = court_data.generate_synthetic(spec)
    cases_path = out / "cases.csv"
    with open(cases_path, "w", encoding="utf-8", newline="") as fh:
        court_data.records_to_csv(records, fh)
    logger.info("wrote %d synthetic cases to %s", len(records), cases_path)
    artifacts.write_manifest(out, "synth", _config_dict(args), [], [cases_path])
    return EXIT_OK


def cmd_ingest(args) -> int:
    out = _outdir(args)
    input_path = artifacts.resolve_input(args.input)
    records, errors = _read_records(input_path)
    inputs = [input_path]
    if args.aux:
        aux_path = artifacts.resolve_input(args.aux)
        import csv as _csv

        with open(aux_path, "r", encoding="utf-8", newline="") as fh:
            records = court_data.join_metadata(records, list(_csv.DictReader(fh)))
        inputs.append(aux_path)
    cleaned, stats = court_data.clean(records, cutoff=args.cutoff)
    cleaned = court_data.impute_missing(cleaned)

    outputs = []
    cleaned_path = out / "cleaned.csv"
    with open(cleaned_path, "w", encoding="utf-8", newline="") as fh:
        court_data.records_to_csv(cleaned, fh)
    outputs.append(cleaned_path)
    stats_path = out / "clean_stats.json"
    artifacts.json_dump(stats.to_json_dict(), stats_path)
    outputs.append(stats_path)
    if errors:
        errors_path = out / "row_errors.csv"
        import csv as _csv

        with open(errors_path, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["row", "column", "message"])
            for err in errors:
                writer.writerow([err.row, err.column or "", err.message])
        outputs.append(errors_path)
        logger.warning("%d malformed rows reported in %s", len(errors), errors_path)
    logger.info("kept %d of %d rows (%.1f%%)", stats.rows_kept, stats.rows_in, 100 * stats.kept_fraction)
    artifacts.write_manifest(out, "ingest", _config_dict(args), inputs, outputs)
    return EXIT_OK


def cmd_featurize(args) -> int:
    out = _outdir(args)
    input_path = artifacts.resolve_input(args.input)
    records, errors = _read_records(input_path)
    if errors:
        raise PendencyError(f"{len(errors)} malformed rows; run ingest first (first: {errors[0]})")
    labels, mask = fp.targets_for_records(records, args.target, include_ongoing=not args.exclude_ongoing)
    if not mask.all():
        records = [r for r, keep in zip(records, mask) if keep]
        labels = labels[mask]
        logger.info("excluded %d ongoing rows", int((~mask).sum()))

    bundle, matrix = fp.fit_encoder_bundle(
        records, kind=args.encoder, svd_k=args.k, hash_width=args.hash_width, seed=args.seed
    )
    fractions = args.split
    split = fp.stratified_split(labels, fractions, seed=args.seed)

    X = matrix.to_dense()
    outputs = artifacts.save_features(
        out, X, labels, split,
        feature_names=matrix.feature_names,
        class_names=fp.target_class_names(args.target),
        target=args.target,
        encoder_json=bundle.to_json_dict(),
        fractions=fractions,
        seed=args.seed,
    )
    if args.export_triplets:
        triplets_path = out / artifacts.TRIPLETS_FILE
        with open(triplets_path, "w", encoding="utf-8", newline="") as fh:
            fp.EncodedMatrix(X, matrix.feature_names).write_triplets(fh)
        outputs.append(triplets_path)
    logger.info("featurized %d rows into %d columns (%s)", X.shape[0], X.shape[1], args.encoder)
    artifacts.write_manifest(out, "featurize", _config_dict(args), [input_path], outputs)
    return EXIT_OK


def cmd_train(args) -> int:
    out = _outdir(args)
    features_dir = artifacts.resolve_input(args.features)
    feats = artifacts.load_features(features_dir)
    rows = artifacts.part_rows(feats["split"], "train")
    X = feats["X"][rows]
    y = feats["y"][rows]
    meta = feats["meta"]
    names = meta["feature_names"]
    class_names = meta["class_names"]

    if args.model == "tree":
        params = forests.TreeParams(max_depth=args.max_depth, seed=args.seed,
                                    max_features=_parse_max_features(args.max_features))
        model = forests.train_tree(X, y, params, n_classes=len(class_names),
                                   feature_names=names, class_names=class_names)
    elif args.model == "bagging":
        params = forests.TreeParams(max_depth=args.max_depth)
        model = forests.train_bagging(X, y, n_trees=args.n_trees, params=params, seed=args.seed,
                                      threads=args.threads, n_classes=len(class_names),
                                      feature_names=names, class_names=class_names)
    elif args.model == "rf":
        params = forests.TreeParams(max_depth=args.max_depth,
                                    max_features=_parse_max_features(args.max_features) or "sqrt")
        model = forests.train_random_forest(X, y, n_trees=args.n_trees, params=params, seed=args.seed,
                                            threads=args.threads, n_classes=len(class_names),
                                            feature_names=names, class_names=class_names)
    else:
        model = forests.train_gbdt(X, y, n_rounds=args.n_trees, learning_rate=args.eta,
                                   reg_lambda=args.reg_lambda, max_depth=args.max_depth,
                                   feature_names=names, class_names=class_names)

    model_path = out / "model.json"
    forests.save_model(model, model_path)
    logger.info("trained %s on %d rows -> %s", args.model, X.shape[0], model_path)
    inputs = [features_dir / artifacts.X_FILE, features_dir / artifacts.Y_FILE, features_dir / artifacts.SPLIT_FILE]
    artifacts.write_manifest(out, "train", _config_dict(args), inputs, [model_path])
    return EXIT_OK


def _parse_max_features(value):
    if value in (None, "", "all"):
        return None
    if value == "sqrt":
        return "sqrt"
    return float(value)


def cmd_evaluate(args) -> int:
    out = _outdir(args)
    model, feats, model_path, features_dir = _load_model_and_features(args)
    rows = artifacts.part_rows(feats["split"], args.part)
    X = feats["X"][rows]
    y = feats["y"][rows]
    class_names = model.class_names or feats["meta"]["class_names"]
    report = evaluate_classifier(y, model.predict_proba(X), class_names)

    report_dict = {"model_kind": model.kind, "part": args.part, **report.to_json_dict()}
    report_path = out / "report.json"
    artifacts.json_dump(report_dict, report_path)
    confusion_path = out / "confusion_table.csv"
    with open(confusion_path, "w", encoding="utf-8", newline="") as fh:
        reports.write_confusion_table(report.confusion, fh)
    metrics_path = out / "metrics_table.csv"
    with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
        reports.write_metrics_table(report, fh)
    logger.info("%s on part %s: accuracy %.4f", model.kind, args.part, report.accuracy)
    inputs = [model_path, features_dir / artifacts.X_FILE, features_dir / artifacts.Y_FILE]
    artifacts.write_manifest(out, "evaluate", _config_dict(args), inputs,
                             [report_path, confusion_path, metrics_path])
    return EXIT_OK


def cmd_explain(args) -> int:
    out = _outdir(args)
    model, feats, model_path, features_dir = _load_model_and_features(args)
    names = model.feature_names or feats["meta"]["feature_names"]

    weights = forests.impurity_importance(model)
    importance_csv = out / "importance.csv"
    with open(importance_csv, "w", encoding="utf-8", newline="") as fh:
        reports.write_importance_csv(names, weights, fh)
    importance_svg = out / "importance.svg"
    reports.importance_figure(names, weights, importance_svg)

    rows = artifacts.part_rows(feats["split"], args.part)[: max(args.rows, 0)]
    explainer = TreeShapExplainer(model, class_index=args.class_index)
    entries = []
    for r in rows:
        attribution = explainer.attribute(feats["X"][r])
        entries.append({
            "row": int(r),
            "base_value": attribution.base_value,
            "contributions": attribution.contributions,
            "output": attribution.output,
        })
    attributions_path = out / "attributions.csv"
    with open(attributions_path, "w", encoding="utf-8", newline="") as fh:
        reports.write_attributions_csv(names, entries, fh)
    logger.info("explained %d rows; importance peaked at %s", len(entries), names[int(np.argmax(weights))])
    inputs = [model_path, features_dir / artifacts.X_FILE]
    artifacts.write_manifest(out, "explain", _config_dict(args), inputs,
                             [importance_csv, importance_svg, attributions_path])
    return EXIT_OK


def cmd_search(args) -> int:
    out = _outdir(args)
    input_path = artifacts.resolve_input(args.input)
    records, errors = _read_records(input_path)
    if errors:
        raise PendencyError(f"{len(errors)} malformed rows; run ingest first (first: {errors[0]})")
    aliases = {"rf": forests.KIND_RANDOM_FOREST}
    if args.kinds:
        kinds = tuple(aliases.get(k.strip(), k.strip()) for k in args.kinds.split(","))
    elif args.target == fp.MULTI5:
        kinds = (forests.KIND_TREE, forests.KIND_BAGGING, forests.KIND_RANDOM_FOREST)
    else:
        kinds = model_search.MODEL_KINDS
    space = model_search.SearchSpace(kinds=kinds)
    result = model_search.run_search(
        records, args.target, space=space,
        n_trials=args.trials, time_budget_s=args.time_budget_s,
        seed=args.seed, threads=args.threads,
    )

    leaderboard_path = out / "leaderboard.jsonl"
    with open(leaderboard_path, "w", encoding="utf-8") as fh:
        model_search.write_leaderboard(result.leaderboard, fh)
    best_path = out / "best_model.json"
    forests.save_model(result.best_model, best_path)
    report_dict = {
        "model_kind": result.best_model.kind,
        "part": "test",
        "objective": result.objective,
        "best_config": result.best_trial.config,
        "test_checksum": result.test_checksum,
        **result.test_report.to_json_dict(),
    }
    report_path = out / "test_report.json"
    artifacts.json_dump(report_dict, report_path)
    logger.info(
        "search done: best %s (%s=%.4f on validation), test accuracy %.4f",
        result.best_trial.config["model"], result.objective,
        result.best_trial.score, result.test_report.accuracy,
    )
    artifacts.write_manifest(out, "search", _config_dict(args), [input_path],
                             [leaderboard_path, best_path, report_path])
    return EXIT_OK


def cmd_report(args) -> int:
    out = _outdir(args)
    named: list[tuple[str, EvaluationReport]] = []
    inputs = []
    outputs = []
    seen: dict[str, int] = {}
    for path_str in args.inputs:
        path = artifacts.resolve_input(path_str)
        data = artifacts.json_load(path)
        report = EvaluationReport.from_json_dict(data)
        name = data.get("model_kind", path.stem)
        seen[name] = seen.get(name, 0) + 1
        if seen[name] > 1:
            name = f"{name}_{seen[name]}"
        named.append((name, report))
        inputs.append(path)

        confusion_path = out / f"confusion_{name}.csv"
        with open(confusion_path, "w", encoding="utf-8", newline="") as fh:
            reports.write_confusion_table(report.confusion, fh)
        metrics_path = out / f"metrics_{name}.csv"
        with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
            reports.write_metrics_table(report, fh)
        figure_path = out / f"confusion_{name}.svg"
        reports.confusion_figure(report.confusion, figure_path)
        outputs.extend([confusion_path, metrics_path, figure_path])

    comparison_path = out / "comparison.csv"
    with open(comparison_path, "w", encoding="utf-8", newline="") as fh:
        reports.write_comparative_table(named, fh)
    outputs.append(comparison_path)
    logger.info("rendered %d report(s) into %s", len(named), out)
    artifacts.write_manifest(out, "report", _config_dict(args), inputs, outputs)
    return EXIT_OK


_HANDLERS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "search": cmd_search,
    "report": cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except (PendencyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

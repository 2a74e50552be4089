"""Budgeted random search over the tree-model family.

Configurations are sampled from a seed-keyed sequence fixed before any trial
runs, trained on the train part, scored on the validation part, and the
winner is retrained on train+validation and scored once on the held-out test
part. Test rows are checksummed before trial 1 and verified untouched after.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import decision_forests as forests
from . import feature_pipeline as fp
from .court_data import CaseRecord
from .errors import DataError, PendencyError, SearchBudgetError
from .evaluation import EvaluationReport, classification_metrics, evaluate_classifier

logger = logging.getLogger(__name__)

MODEL_KINDS = (forests.KIND_TREE, forests.KIND_BAGGING, forests.KIND_RANDOM_FOREST, forests.KIND_GBDT)


@dataclass(frozen=True)
class SearchSpace:
    """Discrete hyperparameter choices sampled uniformly per trial."""

    kinds: tuple[str, ...] = MODEL_KINDS
    encoders: tuple[str, ...] = fp.ENCODER_KINDS
    max_depth_choices: tuple[int, ...] = (4, 6, 8, 10)
    n_trees_choices: tuple[int, ...] = (10, 25, 50)
    n_rounds_choices: tuple[int, ...] = (25, 50, 100)
    eta_choices: tuple[float, ...] = (0.05, 0.1, 0.3)
    lambda_choices: tuple[float, ...] = (0.5, 1.0, 2.0)
    max_features_choices: tuple = ("sqrt", 0.5, None)
    svd_k_choices: tuple[int, ...] = (50, 100, 200)
    hash_width_choices: tuple[int, ...] = (64, 256, 1024)

    def validate(self) -> None:
        if not self.kinds:
            raise DataError("search space enables no model kinds")
        unknown = set(self.kinds) - set(MODEL_KINDS)
        if unknown:
            raise DataError(f"unknown model kinds: {sorted(unknown)}")
        unknown = set(self.encoders) - set(fp.ENCODER_KINDS)
        if unknown:
            raise DataError(f"unknown encoders: {sorted(unknown)}")
        for name in (
            "encoders", "max_depth_choices", "n_trees_choices", "n_rounds_choices",
            "eta_choices", "lambda_choices", "max_features_choices",
            "svd_k_choices", "hash_width_choices",
        ):
            if not getattr(self, name):
                raise DataError(f"search space field {name} is empty")


@dataclass
class TrialResult:
    """One completed trial: its configuration and validation-part scores."""

    trial_index: int
    config: dict
    objective: str
    score: float
    metrics: dict
    wall_time_s: float
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "config": self.config,
            "objective": self.objective,
            "score": self.score,
            "metrics": self.metrics,
            "wall_time_s": self.wall_time_s,
            "seed": self.seed,
        }


@dataclass
class SearchResult:
    leaderboard: list[TrialResult]  # (score desc, trial asc)
    best_trial: TrialResult
    best_model: forests.Model
    test_report: EvaluationReport
    objective: str
    test_checksum: str


def three_way_split(labels, seed: int = 0) -> np.ndarray:
    """Stratified 80/10/10 train/validation/test assignment."""
    return fp.stratified_split(labels, [0.8, 0.1, 0.1], seed=seed)


def _sample_config(space: SearchSpace, rng: np.random.Generator) -> dict:
    def pick(options):
        return options[int(rng.integers(len(options)))]

    kind = pick(space.kinds)
    encoder = pick(space.encoders)
    config: dict = {"model": kind, "encoder": encoder, "max_depth": pick(space.max_depth_choices)}
    if encoder == fp.ENCODER_ONEHOT_SVD:
        config["svd_k"] = pick(space.svd_k_choices)
    elif encoder == fp.ENCODER_HASHING:
        config["hash_width"] = pick(space.hash_width_choices)
    if kind in (forests.KIND_BAGGING, forests.KIND_RANDOM_FOREST):
        config["n_trees"] = pick(space.n_trees_choices)
    if kind == forests.KIND_RANDOM_FOREST:
        config["max_features"] = pick(space.max_features_choices)
    if kind == forests.KIND_GBDT:
        config["n_rounds"] = pick(space.n_rounds_choices)
        config["eta"] = pick(space.eta_choices)
        config["lambda"] = pick(space.lambda_choices)
    return config


def _train_for_config(config, X, y, n_classes, class_names, seed, threads):
    kind = config["model"]
    if kind == forests.KIND_TREE:
        params = forests.TreeParams(max_depth=config["max_depth"], seed=seed)
        return forests.train_tree(X, y, params, n_classes=n_classes, class_names=class_names)
    if kind == forests.KIND_BAGGING:
        params = forests.TreeParams(max_depth=config["max_depth"])
        return forests.train_bagging(
            X, y, n_trees=config["n_trees"], params=params, seed=seed,
            threads=threads, n_classes=n_classes, class_names=class_names,
        )
    if kind == forests.KIND_RANDOM_FOREST:
        params = forests.TreeParams(max_depth=config["max_depth"], max_features=config.get("max_features", "sqrt"))
        return forests.train_random_forest(
            X, y, n_trees=config["n_trees"], params=params, seed=seed,
            threads=threads, n_classes=n_classes, class_names=class_names,
        )
    if kind == forests.KIND_GBDT:
        return forests.train_gbdt(
            X, y, n_rounds=config["n_rounds"], learning_rate=config["eta"],
            reg_lambda=config["lambda"], max_depth=config["max_depth"],
            class_names=class_names,
        )
    raise DataError(f"unknown model kind in config: {kind!r}")


def _encoder_cache_key(config) -> tuple:
    return (config["encoder"], config.get("svd_k"), config.get("hash_width"))


def run_search(
    records: Sequence[CaseRecord],
    target: str,
    space: SearchSpace | None = None,
    n_trials: int | None = 20,
    time_budget_s: float | None = None,
    objective: str | None = None,
    seed: int = 0,
    threads: int = 1,
) -> SearchResult:
    """Random-search model selection over cleaned, imputed records.

    Stops at whichever budget bound (trial count, wall clock) hits first.
    Encoders are fitted on the train part only; the winning configuration is
    refitted on train+validation before the single test evaluation.

    Raises:
        SearchBudgetError: when no trial completes within the budget.
    """
    space = space or SearchSpace()
    space.validate()
    if n_trials is None and time_budget_s is None:
        raise DataError("search needs a trial count and/or a time budget")
    if n_trials is not None and n_trials < 0:
        raise DataError("n_trials must be nonnegative")
    if target == fp.MULTI5 and forests.KIND_GBDT in space.kinds:
        raise DataError("the boosted model is binary-only; remove it for the 5-class target")

    labels, _ = fp.targets_for_records(records, target)
    class_names = fp.target_class_names(target)
    n_classes = len(class_names)
    parts = three_way_split(labels, seed=seed)
    train_idx = np.nonzero(parts == 0)[0]
    val_idx = np.nonzero(parts == 1)[0]
    test_idx = np.nonzero(parts == 2)[0]
    checksum = hashlib.sha256(np.sort(test_idx).astype(np.int64).tobytes()).hexdigest()

    train_records = [records[i] for i in train_idx]
    val_records = [records[i] for i in val_idx]
    test_records = [records[i] for i in test_idx]
    y_train = labels[train_idx]
    y_val = labels[val_idx]
    y_test = labels[test_idx]

    if objective is None:
        objective = "accuracy" if target == fp.BINARY3Y else "weighted_f1"

    encoder_cache: dict[tuple, tuple] = {}

    def encoded(config):
        key = _encoder_cache_key(config)
        if key not in encoder_cache:
            bundle, X_train = fp.fit_encoder_bundle(
                train_records,
                kind=config["encoder"],
                svd_k=config.get("svd_k", 200),
                hash_width=config.get("hash_width", 256),
                seed=seed,
            )
            X_val = bundle.transform(val_records)
            encoder_cache[key] = (bundle, X_train, X_val)
        return encoder_cache[key]

    start = time.perf_counter()
    trials: list[TrialResult] = []
    t = 0
    while True:
        if n_trials is not None and t >= n_trials:
            break
        if time_budget_s is not None and time.perf_counter() - start >= time_budget_s:
            break
        config = _sample_config(space, np.random.default_rng((seed, t)))
        trial_start = time.perf_counter()
        _, X_train, X_val = encoded(config)
        model = _train_for_config(config, X_train, y_train, n_classes, class_names, seed, threads)
        proba = model.predict_proba(X_val)
        preds = np.argmax(proba, axis=1)
        metrics = classification_metrics(y_val, preds, labels=list(range(n_classes)))
        scores = {
            "accuracy": metrics["accuracy"],
            "weighted_f1": metrics["weighted_f1"],
        }
        if objective not in scores:
            raise DataError(f"unknown objective {objective!r}")
        score = scores[objective]
        if not np.isfinite(score):
            raise PendencyError(f"trial {t} produced a non-finite {objective}")
        trials.append(
            TrialResult(
                trial_index=t,
                config=config,
                objective=objective,
                score=float(score),
                metrics=scores,
                wall_time_s=time.perf_counter() - trial_start,
                seed=seed,
            )
        )
        logger.info("trial %d: %s -> %s=%.4f", t, config, objective, score)
        t += 1

    if not trials:
        raise SearchBudgetError("no trial completed within the budget", leaderboard=[])

    leaderboard = sorted(trials, key=lambda r: (-r.score, r.trial_index))
    best = leaderboard[0]

    trainval_records = train_records + val_records
    y_trainval = np.concatenate([y_train, y_val])
    bundle, X_trainval = fp.fit_encoder_bundle(
        trainval_records,
        kind=best.config["encoder"],
        svd_k=best.config.get("svd_k", 200),
        hash_width=best.config.get("hash_width", 256),
        seed=seed,
    )
    best_model = _train_for_config(best.config, X_trainval, y_trainval, n_classes, class_names, seed, threads)
    X_test = bundle.transform(test_records)
    test_report = evaluate_classifier(y_test, best_model.predict_proba(X_test), class_names)

    recheck = hashlib.sha256(np.sort(np.nonzero(parts == 2)[0]).astype(np.int64).tobytes()).hexdigest()
    if recheck != checksum:
        raise PendencyError("test partition changed during the search")

    return SearchResult(
        leaderboard=leaderboard,
        best_trial=best,
        best_model=best_model,
        test_report=test_report,
        objective=objective,
        test_checksum=checksum,
    )


def write_leaderboard(leaderboard: Sequence[TrialResult], dest: IO[str]) -> None:
    """One JSON object per line, already in leaderboard order."""
    for trial in leaderboard:
        dest.write(json.dumps(trial.to_json_dict(), sort_keys=True))
        dest.write("\n")

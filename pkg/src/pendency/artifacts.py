"""On-disk artifact plumbing: canonical JSON, digests, run manifests, and the
feature-directory format shared by featurize/train/evaluate/explain."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError


def json_dump(obj, path: Path) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def json_load(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    output_dir: Path,
    command: str,
    config: Mapping,
    inputs: Sequence[Path],
    outputs: Sequence[Path],
) -> Path:
    """Record what a run consumed and produced, with content digests."""
    manifest = {
        "command": command,
        "config": dict(config),
        "seed": config.get("seed"),
        "inputs": {str(p): sha256_file(Path(p)) for p in inputs},
        "outputs": {Path(p).name: sha256_file(Path(p)) for p in outputs},
    }
    path = output_dir / f"{command}_manifest.json"
    json_dump(manifest, path)
    return path


def resolve_input(path: str) -> Path:
    """Resolve an input path, falling back to $PENDENCY_DATA_DIR for
    relative paths that do not exist from the working directory."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    root = os.environ.get("PENDENCY_DATA_DIR")
    if root:
        candidate = Path(root) / p
        if candidate.exists():
            return candidate
    return p


# ---------------------------------------------------------------------------
# Feature directory format
# ---------------------------------------------------------------------------

META_FILE = "features_meta.json"
X_FILE = "features_X.npy"
Y_FILE = "features_y.npy"
SPLIT_FILE = "features_split.npy"
ENCODER_FILE = "encoder.json"
TRIPLETS_FILE = "features_triplets.csv"


def save_features(
    output_dir: Path,
    X: np.ndarray,
    y: np.ndarray,
    split: np.ndarray,
    feature_names: Sequence[str],
    class_names: Sequence[str],
    target: str,
    encoder_json: Mapping,
    fractions: Sequence[float],
    seed: int,
) -> list[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, arr in ((X_FILE, np.asarray(X, dtype=np.float64)),
                      (Y_FILE, np.asarray(y, dtype=np.int64)),
                      (SPLIT_FILE, np.asarray(split, dtype=np.int64))):
        path = output_dir / name
        np.save(path, arr)
        paths.append(path)
    meta = {
        "target": target,
        "class_names": list(class_names),
        "feature_names": list(feature_names),
        "n_rows": int(X.shape[0]),
        "n_cols": int(X.shape[1]),
        "split_fractions": [float(f) for f in fractions],
        "seed": seed,
    }
    meta_path = output_dir / META_FILE
    json_dump(meta, meta_path)
    paths.append(meta_path)
    encoder_path = output_dir / ENCODER_FILE
    json_dump(dict(encoder_json), encoder_path)
    paths.append(encoder_path)
    return paths


def load_features(features_dir: Path) -> dict:
    features_dir = Path(features_dir)
    meta_path = features_dir / META_FILE
    if not meta_path.exists():
        raise DataError(f"{features_dir} is not a feature directory ({META_FILE} missing)")
    meta = json_load(meta_path)
    return {
        "X": np.load(features_dir / X_FILE),
        "y": np.load(features_dir / Y_FILE),
        "split": np.load(features_dir / SPLIT_FILE),
        "meta": meta,
    }


def part_rows(split: np.ndarray, part: str) -> np.ndarray:
    """Row indices for a named split part; 'test' is always the last part."""
    n_parts = int(split.max()) + 1
    if part == "all":
        return np.arange(split.shape[0])
    if part == "train":
        return np.nonzero(split == 0)[0]
    if part == "test":
        return np.nonzero(split == n_parts - 1)[0]
    if part == "val":
        if n_parts < 3:
            raise DataError("features were split without a validation part")
        return np.nonzero(split == 1)[0]
    raise DataError(f"unknown part {part!r}")

"""Targets and design matrices: duration bucketing, categorical encoders,
truncated SVD, and stratified splitting."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from datetime import date
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .court_data import CATEGORICAL_COLUMNS, NOT_AVAILABLE, CaseRecord
from .errors import DataError, NotFittedError

DAYS_PER_YEAR = 365.25
DAYS_PER_MONTH = 30.4375

MULTI5 = "multi5"
BINARY3Y = "binary3y"

# Derived geographic composite plus the raw categorical columns.
COURT_KEY = "court_key"
MODEL_COLUMNS = CATEGORICAL_COLUMNS + (COURT_KEY,)


class PendencyClass5(enum.IntEnum):
    """Five pendency bands; the order matches increasing duration."""

    LT_1Y = 0
    Y1_TO_3 = 1
    GT3_TO_5 = 2
    GT5_TO_10 = 3
    GT_10Y = 4


class PendencyClass2(enum.IntEnum):
    """Two bands around the three-year boundary."""

    LT_3Y = 0
    GE_3Y = 1


def target_class_names(target: str) -> list[str]:
    if target == MULTI5:
        return [c.name for c in PendencyClass5]
    if target == BINARY3Y:
        return [c.name for c in PendencyClass2]
    raise DataError(f"unknown target kind: {target!r}")


def duration_days(filing: date, decision: date) -> int:
    """Exact calendar-day difference; dirty rows must be cleaned upstream."""
    days = (decision - filing).days
    if days < 0:
        raise DataError(f"decision date {decision} precedes filing date {filing}")
    return days


def duration_months(days: float) -> float:
    return days / DAYS_PER_MONTH


def target_multiclass(days: int | None) -> PendencyClass5:
    """Bucket a duration into the five pendency bands.

    Boundaries sit at 1, 3, 5 and 10 years of 365.25 days; the 1-3y band is
    closed at 3 years, the later bands open below / closed above. Ongoing
    cases (``days`` is None) land in the last band.
    """
    if days is None:
        return PendencyClass5.GT_10Y
    if days < 0:
        raise DataError("duration must be nonnegative")
    if days < DAYS_PER_YEAR:
        return PendencyClass5.LT_1Y
    if days <= 3 * DAYS_PER_YEAR:
        return PendencyClass5.Y1_TO_3
    if days <= 5 * DAYS_PER_YEAR:
        return PendencyClass5.GT3_TO_5
    if days <= 10 * DAYS_PER_YEAR:
        return PendencyClass5.GT5_TO_10
    return PendencyClass5.GT_10Y


def target_binary(days: int | None) -> PendencyClass2:
    """Below / at-or-above the three-year boundary; ongoing cases are GE_3Y."""
    if days is None:
        return PendencyClass2.GE_3Y
    if days < 0:
        raise DataError("duration must be nonnegative")
    return PendencyClass2.LT_3Y if days < 3 * DAYS_PER_YEAR else PendencyClass2.GE_3Y


def record_duration(record: CaseRecord) -> int | None:
    if record.date_of_decision is None:
        return None
    return duration_days(record.date_of_filing, record.date_of_decision)


def targets_for_records(
    records: Sequence[CaseRecord],
    target: str,
    include_ongoing: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Integer labels for each record plus a keep-mask.

    Ongoing rows map to the last class; with ``include_ongoing=False`` they
    are masked out instead (mask False) and their label set to -1.
    """
    bucket = target_multiclass if target == MULTI5 else target_binary
    if target not in (MULTI5, BINARY3Y):
        raise DataError(f"unknown target kind: {target!r}")
    labels = np.empty(len(records), dtype=np.int64)
    mask = np.ones(len(records), dtype=bool)
    for i, rec in enumerate(records):
        d = record_duration(rec)
        if d is None and not include_ongoing:
            labels[i] = -1
            mask[i] = False
        else:
            labels[i] = int(bucket(d))
    return labels, mask


def court_key(record: CaseRecord) -> str:
    parts = [record.state_code, record.dist_code, record.court_no]
    return "-".join(p if p not in (None, "") else NOT_AVAILABLE for p in parts)


def records_to_columns(
    records: Sequence[CaseRecord],
    columns: Sequence[str] = MODEL_COLUMNS,
) -> dict[str, list[str]]:
    """Raw token columns for encoding; missing cells read as ``Not Available``."""
    out: dict[str, list[str]] = {col: [] for col in columns}
    for rec in records:
        for col in columns:
            if col == COURT_KEY:
                out[col].append(court_key(rec))
            else:
                value = getattr(rec, col)
                out[col].append(value if value not in (None, "") else NOT_AVAILABLE)
    return out


# ---------------------------------------------------------------------------
# Encoded matrices
# ---------------------------------------------------------------------------


@dataclass
class EncodedMatrix:
    """Numeric design matrix plus per-column provenance names."""

    values: np.ndarray | sparse.spmatrix
    feature_names: list[str]

    def __post_init__(self):
        if self.values.shape[1] != len(self.feature_names):
            raise DataError(
                f"{len(self.feature_names)} feature names for {self.values.shape[1]} columns"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def to_dense(self) -> np.ndarray:
        if sparse.issparse(self.values):
            return np.asarray(self.values.todense(), dtype=np.float64)
        return np.asarray(self.values, dtype=np.float64)

    def write_triplets(self, dest: IO[str]) -> None:
        """Debug export: one ``row,col,value`` line per nonzero entry."""
        writer = csv.writer(dest)
        writer.writerow(["row", "col", "value"])
        coo = sparse.coo_matrix(self.values)
        order = np.lexsort((coo.col, coo.row))
        for i in order:
            writer.writerow([int(coo.row[i]), int(coo.col[i]), repr(float(coo.data[i]))])


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


class LabelEncoder:
    """Single-column encoder mapping categories to their lexicographic rank.

    ``Not Available`` is always in the vocabulary; unseen values at transform
    time take its code.
    """

    kind = "label"

    def __init__(self):
        self.vocabulary: list[str] | None = None
        self._codes: dict[str, int] | None = None

    @property
    def fitted(self) -> bool:
        return self.vocabulary is not None

    def fit(self, values: Iterable[str]) -> "LabelEncoder":
        vocab = set(values)
        vocab.add(NOT_AVAILABLE)
        self.vocabulary = sorted(vocab)
        self._codes = {v: i for i, v in enumerate(self.vocabulary)}
        return self

    def transform(self, values: Iterable[str]) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError("label encoder used before fit")
        fallback = self._codes[NOT_AVAILABLE]
        return np.array([self._codes.get(v, fallback) for v in values], dtype=np.int64)

    def decode(self, codes: Iterable[int]) -> list[str]:
        if not self.fitted:
            raise NotFittedError("label encoder used before fit")
        return [self.vocabulary[c] for c in codes]

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "vocabulary": self.vocabulary}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "LabelEncoder":
        enc = cls()
        enc.vocabulary = list(data["vocabulary"])
        enc._codes = {v: i for i, v in enumerate(enc.vocabulary)}
        return enc


def fit_label_encoder(values: Iterable[str]) -> LabelEncoder:
    return LabelEncoder().fit(values)


def label_transform(encoder: LabelEncoder, values: Iterable[str]) -> np.ndarray:
    return encoder.transform(values)


class OneHotEncoder:
    """Multi-column indicator encoder with one column per (source, category).

    Every source column's vocabulary includes ``Not Available``; unseen values
    light that indicator, so each row carries exactly one 1 per source column.
    """

    kind = "one-hot"

    def __init__(self):
        self.vocabularies: dict[str, list[str]] | None = None

    @property
    def fitted(self) -> bool:
        return self.vocabularies is not None

    def fit(self, columns: Mapping[str, Sequence[str]]) -> "OneHotEncoder":
        self.vocabularies = {
            col: sorted(set(values) | {NOT_AVAILABLE}) for col, values in columns.items()
        }
        return self

    def feature_names(self) -> list[str]:
        if not self.fitted:
            raise NotFittedError("one-hot encoder used before fit")
        return [f"{col}={cat}" for col, vocab in self.vocabularies.items() for cat in vocab]

    def transform(self, columns: Mapping[str, Sequence[str]]) -> EncodedMatrix:
        if not self.fitted:
            raise NotFittedError("one-hot encoder used before fit")
        missing = set(self.vocabularies) - set(columns)
        if missing:
            raise DataError(f"columns absent at transform time: {sorted(missing)}")
        n_rows = len(next(iter(columns.values()))) if columns else 0

        col_ind = []
        offset = 0
        for col, vocab in self.vocabularies.items():
            codes = {v: i for i, v in enumerate(vocab)}
            fallback = codes[NOT_AVAILABLE]
            col_ind.append(offset + np.array([codes.get(v, fallback) for v in columns[col]], dtype=np.int64))
            offset += len(vocab)

        if col_ind:
            indices = np.stack(col_ind, axis=1).reshape(-1)
            indptr = np.arange(n_rows + 1, dtype=np.int64) * len(col_ind)
        else:
            indices = np.zeros(0, dtype=np.int64)
            indptr = np.zeros(n_rows + 1, dtype=np.int64)
        data = np.ones(indices.size, dtype=np.float64)
        matrix = sparse.csr_matrix((data, indices, indptr), shape=(n_rows, offset))
        return EncodedMatrix(matrix, self.feature_names())

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "vocabularies": self.vocabularies}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "OneHotEncoder":
        enc = cls()
        enc.vocabularies = {col: list(vocab) for col, vocab in data["vocabularies"].items()}
        return enc


def fit_one_hot(columns: Mapping[str, Sequence[str]]) -> OneHotEncoder:
    return OneHotEncoder().fit(columns)


def one_hot_transform(encoder: OneHotEncoder, columns: Mapping[str, Sequence[str]]) -> EncodedMatrix:
    return encoder.transform(columns)


FNV64_OFFSET = 14695981039346656037
FNV64_PRIME = 1099511628211


def fnv1a64(token: str) -> int:
    """FNV-1a 64-bit hash of the token's UTF-8 bytes."""
    h = FNV64_OFFSET
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * FNV64_PRIME) % (1 << 64)
    return h


def hashing_encode(
    columns: Mapping[str, Sequence[str]],
    m: int,
) -> EncodedMatrix:
    """Stateless bucket-count encoding of ``column=value`` tokens.

    Tokens hash with FNV-1a 64-bit; the bucket is ``hash mod m`` with ``m`` a
    power of two so the reduction stays bit-exact. The matrix holds per-row
    bucket hit counts.
    """
    if m < 2 or m & (m - 1) != 0:
        raise DataError(f"hash width must be a power of two >= 2, got {m}")
    n_rows = len(next(iter(columns.values()))) if columns else 0
    counts = np.zeros((n_rows, m), dtype=np.float64)
    for col, values in columns.items():
        if len(values) != n_rows:
            raise DataError(f"column {col} has {len(values)} rows, expected {n_rows}")
        bucket_of: dict[str, int] = {}
        for i, value in enumerate(values):
            b = bucket_of.get(value)
            if b is None:
                b = fnv1a64(f"{col}={value}") % m
                bucket_of[value] = b
            counts[i, b] += 1.0
    width = len(str(m - 1))
    names = [f"hash_bucket_{b:0{width}d}" for b in range(m)]
    return EncodedMatrix(counts, names)


# ---------------------------------------------------------------------------
# Truncated SVD
# ---------------------------------------------------------------------------


@dataclass
class SvdModel:
    """Top-k singular triplets of an uncentered matrix."""

    components: np.ndarray  # (k, d), rows orthonormal
    singular_values: np.ndarray  # (k,), nonincreasing

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def transform(self, values: np.ndarray | sparse.spmatrix) -> np.ndarray:
        projected = values @ self.components.T
        return np.asarray(projected, dtype=np.float64)

    def to_json_dict(self) -> dict:
        return {
            "kind": "svd",
            "k": int(self.k),
            "n_features": int(self.components.shape[1]),
            "singular_values": [float(s) for s in self.singular_values],
            "components": [[float(x) for x in row] for row in self.components],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "SvdModel":
        return cls(
            components=np.array(data["components"], dtype=np.float64),
            singular_values=np.array(data["singular_values"], dtype=np.float64),
        )


def truncated_svd(
    matrix: EncodedMatrix | np.ndarray | sparse.spmatrix,
    k: int,
    seed: int = 0,
    n_oversamples: int = 10,
    n_power_iterations: int = 7,
) -> tuple[SvdModel, EncodedMatrix]:
    """Randomized truncated SVD of an uncentered matrix.

    Uses a seeded Gaussian range sketch with QR-stabilized power iterations;
    when the sketch covers the full smaller dimension the result is exact up
    to roundoff. Returns the model and the projected data (rows times the
    transposed components).
    """
    values = matrix.values if isinstance(matrix, EncodedMatrix) else matrix
    n, d = values.shape
    if not 1 <= k <= min(n, d):
        raise DataError(f"k must lie in [1, min(n_rows, n_cols)] = [1, {min(n, d)}], got {k}")

    rng = np.random.default_rng((seed,))
    sketch = min(k + n_oversamples, min(n, d))
    omega = rng.standard_normal((d, sketch))
    q, _ = np.linalg.qr(np.asarray(values @ omega))
    for _ in range(n_power_iterations):
        w, _ = np.linalg.qr(np.asarray(values.T @ q))
        q, _ = np.linalg.qr(np.asarray(values @ w))
    b = np.asarray(values.T @ q).T  # (sketch, d); avoids densifying a sparse input
    _, s, vt = np.linalg.svd(b, full_matrices=False)
    model = SvdModel(components=np.ascontiguousarray(vt[:k]), singular_values=s[:k].copy())

    projected = model.transform(values)
    names = [f"svd_component_{i:03d}" for i in range(k)]
    return model, EncodedMatrix(projected, names)


# ---------------------------------------------------------------------------
# Encoder bundles (one fitted encoding strategy over the model columns)
# ---------------------------------------------------------------------------

ENCODER_LABEL = "label"
ENCODER_ONEHOT_SVD = "onehot-svd"
ENCODER_HASHING = "hashing"
ENCODER_KINDS = (ENCODER_LABEL, ENCODER_ONEHOT_SVD, ENCODER_HASHING)


@dataclass
class EncoderBundle:
    """A fitted encoding strategy over the categorical model columns.

    ``label`` yields one integer-code column per source column; ``onehot-svd``
    projects the sparse indicator matrix onto the top SVD components;
    ``hashing`` is stateless bucket counting.
    """

    kind: str
    columns: tuple[str, ...] = MODEL_COLUMNS
    label_encoders: dict[str, LabelEncoder] | None = None
    one_hot: OneHotEncoder | None = None
    svd: SvdModel | None = None
    hash_width: int | None = None

    def transform(self, records: Sequence[CaseRecord]) -> EncodedMatrix:
        data = records_to_columns(records, self.columns)
        if self.kind == ENCODER_LABEL:
            codes = [self.label_encoders[col].transform(data[col]) for col in self.columns]
            matrix = np.stack(codes, axis=1).astype(np.float64) if codes else np.zeros((len(records), 0))
            return EncodedMatrix(matrix, list(self.columns))
        if self.kind == ENCODER_ONEHOT_SVD:
            onehot = self.one_hot.transform(data)
            model = self.svd
            names = [f"svd_component_{i:03d}" for i in range(model.k)]
            return EncodedMatrix(model.transform(onehot.values), names)
        if self.kind == ENCODER_HASHING:
            return hashing_encode(data, self.hash_width)
        raise DataError(f"unknown encoder kind: {self.kind!r}")

    def to_json_dict(self) -> dict:
        out: dict = {"kind": self.kind, "columns": list(self.columns)}
        if self.kind == ENCODER_LABEL:
            out["label_encoders"] = {col: enc.to_json_dict() for col, enc in self.label_encoders.items()}
        elif self.kind == ENCODER_ONEHOT_SVD:
            out["one_hot"] = self.one_hot.to_json_dict()
            out["svd"] = self.svd.to_json_dict()
        elif self.kind == ENCODER_HASHING:
            out["hash_width"] = self.hash_width
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "EncoderBundle":
        kind = data["kind"]
        bundle = cls(kind=kind, columns=tuple(data["columns"]))
        if kind == ENCODER_LABEL:
            bundle.label_encoders = {
                col: LabelEncoder.from_json_dict(enc) for col, enc in data["label_encoders"].items()
            }
        elif kind == ENCODER_ONEHOT_SVD:
            bundle.one_hot = OneHotEncoder.from_json_dict(data["one_hot"])
            bundle.svd = SvdModel.from_json_dict(data["svd"])
        elif kind == ENCODER_HASHING:
            bundle.hash_width = int(data["hash_width"])
        else:
            raise DataError(f"unknown encoder kind: {kind!r}")
        return bundle


def fit_encoder_bundle(
    records: Sequence[CaseRecord],
    kind: str,
    svd_k: int = 200,
    hash_width: int = 256,
    seed: int = 0,
    columns: Sequence[str] = MODEL_COLUMNS,
) -> tuple[EncoderBundle, EncodedMatrix]:
    """Fit the chosen encoding on ``records`` and return it with their matrix."""
    columns = tuple(columns)
    data = records_to_columns(records, columns)
    if kind == ENCODER_LABEL:
        encoders = {col: fit_label_encoder(data[col]) for col in columns}
        bundle = EncoderBundle(kind=kind, columns=columns, label_encoders=encoders)
        return bundle, bundle.transform(records)
    if kind == ENCODER_ONEHOT_SVD:
        one_hot = fit_one_hot(data)
        indicators = one_hot.transform(data)
        k = min(svd_k, min(indicators.n_rows, indicators.n_cols))
        svd_model, projected = truncated_svd(indicators, k=k, seed=seed)
        bundle = EncoderBundle(kind=kind, columns=columns, one_hot=one_hot, svd=svd_model)
        return bundle, projected
    if kind == ENCODER_HASHING:
        bundle = EncoderBundle(kind=kind, columns=columns, hash_width=hash_width)
        return bundle, bundle.transform(records)
    raise DataError(f"unknown encoder kind: {kind!r} (expected one of {ENCODER_KINDS})")


# ---------------------------------------------------------------------------
# Stratified splitting
# ---------------------------------------------------------------------------


def stratified_split(
    labels: Sequence | np.ndarray,
    fractions: Sequence[float],
    seed: int = 0,
) -> np.ndarray:
    """Assign each row to a part, preserving class proportions.

    Within each class the rows are shuffled by ``seed`` and cut by cumulative
    fractions with largest-remainder rounding, so every per-class part count
    sits within 1 of the exact proportion. Returns the part index per row.
    """
    fracs = np.asarray(fractions, dtype=np.float64)
    if fracs.size < 1 or np.any(fracs <= 0):
        raise DataError("fractions must be positive")
    if abs(float(fracs.sum()) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {fracs.tolist()}")
    n_parts = fracs.size

    labels = np.asarray(labels)
    assignment = np.full(labels.shape[0], -1, dtype=np.int64)
    rng = np.random.default_rng((seed,))
    for value in np.unique(labels):
        idx = np.nonzero(labels == value)[0]
        if idx.size < n_parts:
            raise DataError(
                f"class {value!r} has {idx.size} rows, fewer than {n_parts} parts"
            )
        perm = rng.permutation(idx)
        quotas = idx.size * fracs
        counts = np.floor(quotas).astype(np.int64)
        remainders = quotas - counts
        shortfall = idx.size - int(counts.sum())
        if shortfall:
            order = sorted(range(n_parts), key=lambda p: (-remainders[p], p))
            for p in order[:shortfall]:
                counts[p] += 1
        start = 0
        for part, count in enumerate(counts):
            assignment[perm[start : start + count]] = part
            start += count
    return assignment

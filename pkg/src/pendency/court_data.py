"""Case records in the e-courts CSV schema: parsing, cleaning, and synthesis.

A record is one lower-court case described by filing-time attributes plus the
decision date (absent while the case is ongoing). All non-date attributes are
kept as raw categorical tokens; downstream encoders decide how to turn them
into numbers.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, fields, replace
from datetime import date, timedelta
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, SchemaError

NOT_AVAILABLE = "Not Available"
DEFAULT_CUTOFF = date(2010, 1, 1)

# Categorical columns, in canonical file order.
CATEGORICAL_COLUMNS = (
    "state_code",
    "dist_code",
    "court_no",
    "judge_position",
    "female_judge_filing",
    "female_judge_decision",
    "female_adv_pet",
    "female_adv_def",
    "female_petitioner",
    "female_defendant",
    "type_name",
    "section",
    "act",
    "criminal",
    "number_sections_ipc",
    "bailable_ipc",
)

DATE_COLUMNS = ("date_of_filing", "date_of_decision")
REQUIRED_COLUMNS = ("case_id",) + DATE_COLUMNS + CATEGORICAL_COLUMNS

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True, slots=True)
class CaseRecord:
    """One court case keyed by ``case_id``.

    Categorical fields hold raw tokens; ``None`` means the cell was empty.
    ``date_of_decision`` is ``None`` while the case is ongoing.
    """

    case_id: str
    date_of_filing: date
    date_of_decision: date | None
    state_code: str | None = None
    dist_code: str | None = None
    court_no: str | None = None
    judge_position: str | None = None
    female_judge_filing: str | None = None
    female_judge_decision: str | None = None
    female_adv_pet: str | None = None
    female_adv_def: str | None = None
    female_petitioner: str | None = None
    female_defendant: str | None = None
    type_name: str | None = None
    section: str | None = None
    act: str | None = None
    criminal: str | None = None
    number_sections_ipc: str | None = None
    bailable_ipc: str | None = None


@dataclass(frozen=True, slots=True)
class RowError:
    """A malformed CSV row: 1-based data-row number, offending column, cause."""

    row: int
    column: str | None
    message: str


@dataclass(frozen=True, slots=True)
class CleanStats:
    """Accounting for one cleaning pass; counters always sum to ``rows_in``."""

    rows_in: int
    rows_kept: int
    dropped_discrepant_dates: int
    dropped_pre_cutoff: int
    kept_fraction: float

    def to_json_dict(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_kept": self.rows_kept,
            "dropped_discrepant_dates": self.dropped_discrepant_dates,
            "dropped_pre_cutoff": self.dropped_pre_cutoff,
            "kept_fraction": self.kept_fraction,
        }


def _parse_iso_date(cell: str) -> date:
    # Strict YYYY-MM-DD only; fromisoformat alone is laxer on 3.11+.
    if not _ISO_DATE.match(cell):
        raise ValueError(f"not an ISO YYYY-MM-DD date: {cell!r}")
    return date.fromisoformat(cell)


def parse_case_csv(
    source: IO[bytes] | IO[str],
    required_columns: Sequence[str] = REQUIRED_COLUMNS,
) -> tuple[list[CaseRecord], list[RowError]]:
    """Parse a case CSV into records plus per-row errors.

    The first row must be a header containing every required column; extra
    columns are ignored. Malformed rows (bad dates, wrong field count) are
    reported with their 1-based data-row number and skipped, never silently
    dropped. Empty categorical cells become missing (``None``); an empty
    ``date_of_decision`` means the case is ongoing.

    Raises:
        SchemaError: when a required column is absent from the header.
    """
    if isinstance(source.read(0), bytes):
        text: IO[str] = io.TextIOWrapper(source, encoding="utf-8", newline="")
    else:
        text = source

    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None

    missing = [col for col in required_columns if col not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    col_index = {col: header.index(col) for col in required_columns}

    records: list[CaseRecord] = []
    errors: list[RowError] = []
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(header):
            errors.append(RowError(row_no, None, f"expected {len(header)} fields, found {len(row)}"))
            continue

        def cell(col: str) -> str:
            return row[col_index[col]].strip()

        filing_cell = cell("date_of_filing")
        if not filing_cell:
            errors.append(RowError(row_no, "date_of_filing", "date_of_filing is empty"))
            continue
        try:
            filing = _parse_iso_date(filing_cell)
        except ValueError as exc:
            errors.append(RowError(row_no, "date_of_filing", str(exc)))
            continue

        decision_cell = cell("date_of_decision")
        decision: date | None = None
        if decision_cell:
            try:
                decision = _parse_iso_date(decision_cell)
            except ValueError as exc:
                errors.append(RowError(row_no, "date_of_decision", str(exc)))
                continue

        categoricals = {col: (cell(col) or None) for col in CATEGORICAL_COLUMNS}
        records.append(
            CaseRecord(
                case_id=cell("case_id"),
                date_of_filing=filing,
                date_of_decision=decision,
                **categoricals,
            )
        )
    return records, errors


def records_to_csv(records: Iterable[CaseRecord], dest: IO[str]) -> None:
    """Write records in the canonical column order; missing cells are empty."""
    writer = csv.writer(dest)
    writer.writerow(REQUIRED_COLUMNS)
    for rec in records:
        row = [rec.case_id, rec.date_of_filing.isoformat(), rec.date_of_decision.isoformat() if rec.date_of_decision else ""]
        row.extend(getattr(rec, col) or "" for col in CATEGORICAL_COLUMNS)
        writer.writerow(row)


def join_metadata(
    records: Sequence[CaseRecord],
    aux_rows: Iterable[Mapping[str, str]],
) -> list[CaseRecord]:
    """Left-outer overlay of auxiliary columns keyed by ``case_id``.

    Each aux row must carry ``case_id``; its remaining known columns overwrite
    (or fill) the matching record's fields. Records without a matching aux row
    pass through untouched. Empty aux cells and unknown columns are ignored.

    Raises:
        DataError: on duplicate ``case_id`` keys in the aux table, listing them.
    """
    table: dict[str, Mapping[str, str]] = {}
    duplicates: list[str] = []
    for row in aux_rows:
        key = row.get("case_id")
        if key is None:
            raise DataError("aux table row lacks a case_id column")
        if key in table:
            duplicates.append(key)
        else:
            table[key] = row
    if duplicates:
        raise DataError(f"duplicate case_id in aux table: {', '.join(sorted(set(duplicates)))}")

    known = set(CATEGORICAL_COLUMNS)
    out: list[CaseRecord] = []
    for rec in records:
        aux = table.get(rec.case_id)
        if not aux:
            out.append(rec)
            continue
        updates: dict[str, object] = {}
        for col, value in aux.items():
            if col == "case_id" or value is None or value == "":
                continue
            if col in known:
                updates[col] = value
            elif col in DATE_COLUMNS:
                try:
                    updates[col] = _parse_iso_date(value)
                except ValueError as exc:
                    raise DataError(f"aux table for case {rec.case_id}: {exc}") from None
        out.append(replace(rec, **updates) if updates else rec)
    return out


def clean(
    records: Sequence[CaseRecord],
    cutoff: date = DEFAULT_CUTOFF,
) -> tuple[list[CaseRecord], CleanStats]:
    """Drop rows with discrepant or pre-cutoff dates.

    A row is discrepant when its decision date precedes its filing date; it is
    pre-cutoff when filing or decision falls before ``cutoff``. A row failing
    both tests counts once, as discrepant. Ongoing rows (no decision) are kept
    whenever their filing date passes the cutoff.
    """
    kept: list[CaseRecord] = []
    discrepant = 0
    pre_cutoff = 0
    for rec in records:
        if rec.date_of_decision is not None and rec.date_of_decision < rec.date_of_filing:
            discrepant += 1
            continue
        if rec.date_of_filing < cutoff or (rec.date_of_decision is not None and rec.date_of_decision < cutoff):
            pre_cutoff += 1
            continue
        kept.append(rec)
    rows_in = len(records)
    stats = CleanStats(
        rows_in=rows_in,
        rows_kept=len(kept),
        dropped_discrepant_dates=discrepant,
        dropped_pre_cutoff=pre_cutoff,
        kept_fraction=len(kept) / rows_in if rows_in else 1.0,
    )
    return kept, stats


def impute_missing(records: Sequence[CaseRecord]) -> list[CaseRecord]:
    """Replace every missing/empty categorical cell with the literal token
    ``"Not Available"``. Dates are never imputed."""
    out = []
    for rec in records:
        updates = {
            col: NOT_AVAILABLE
            for col in CATEGORICAL_COLUMNS
            if getattr(rec, col) is None or getattr(rec, col) == ""
        }
        out.append(replace(rec, **updates) if updates else rec)
    return out


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

# Five-band day ranges used when drawing a duration for a generated class.
_BAND_DAYS_5 = {
    "LT_1Y": (0, 365),
    "Y1_TO_3": (366, 1095),
    "GT3_TO_5": (1096, 1826),
    "GT5_TO_10": (1827, 3652),
    "GT_10Y": (3653, 3959),
}
_BAND_DAYS_2 = {
    "LT_3Y": (0, 1095),
    "GE_3Y": (1096, 3959),
}

DEFAULT_PRIOR_MULTI5 = {
    "LT_1Y": 0.35,
    "Y1_TO_3": 0.30,
    "GT3_TO_5": 0.15,
    "GT5_TO_10": 0.12,
    "GT_10Y": 0.08,
}
DEFAULT_PRIOR_BINARY = {"LT_3Y": 0.55, "GE_3Y": 0.45}

DEFAULT_CARDINALITIES = {
    "state_code": 15,
    "dist_code": 20,
    "court_no": 12,
    "judge_position": 8,
    "female_judge_filing": 3,
    "female_judge_decision": 3,
    "female_adv_pet": 3,
    "female_adv_def": 3,
    "female_petitioner": 3,
    "female_defendant": 3,
    "type_name": 20,
    "section": 40,
    "act": 30,
    "criminal": 2,
    "number_sections_ipc": 12,
    "bailable_ipc": 3,
}

# Columns whose values carry the planted signal.
SIGNAL_COLUMNS = ("state_code", "type_name", "act")

_GENDER_TOKENS = ("0", "1", "-9998")
_TOKEN_PREFIX = {
    "state_code": "ST",
    "dist_code": "D",
    "court_no": "CT",
    "judge_position": "JP",
    "type_name": "T",
    "section": "S",
    "act": "A",
}


def _token(column: str, index: int, cardinality: int) -> str:
    """Category token for a generated cell; lexicographic order tracks index."""
    if column in ("criminal",):
        return str(index)
    if column.startswith("female") or column == "bailable_ipc":
        if index < len(_GENDER_TOKENS):
            return _GENDER_TOKENS[index]
        return f"G{index}"
    if column == "number_sections_ipc":
        return str(index)
    prefix = _TOKEN_PREFIX.get(column, "V")
    width = max(2, len(str(cardinality - 1)))
    return f"{prefix}{index:0{width}d}"


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the synthetic case generator.

    ``class_prior`` keys select the target scheme: the five pendency bands or
    the two three-year bands. ``signal_strength`` is the probability that a
    row's class equals the class its planted cell prefers; otherwise the class
    is uniform over the remaining ones, so a Bayes-optimal classifier over the
    planted columns scores exactly ``signal_strength`` (for strengths above
    chance and ``ongoing_fraction`` 0).
    """

    n_rows: int
    seed: int
    class_prior: Mapping[str, float] | None = None
    signal_strength: float = 0.85
    cardinalities: Mapping[str, int] | None = None
    ongoing_fraction: float = 0.1

    def resolved_prior(self) -> dict[str, float]:
        prior = dict(self.class_prior) if self.class_prior else dict(DEFAULT_PRIOR_MULTI5)
        names = tuple(prior)
        if set(names) == set(_BAND_DAYS_5):
            order = tuple(_BAND_DAYS_5)
        elif set(names) == set(_BAND_DAYS_2):
            order = tuple(_BAND_DAYS_2)
        else:
            raise DataError(f"class_prior keys must name one target scheme, got {sorted(names)}")
        probs = [prior[name] for name in order]
        if any(p < 0 for p in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
            raise DataError(f"class_prior must be nonnegative and sum to 1, got {prior}")
        return {name: prior[name] for name in order}

    def resolved_cardinalities(self) -> dict[str, int]:
        cards = dict(DEFAULT_CARDINALITIES)
        cards.update(self.cardinalities or {})
        unknown = set(cards) - set(CATEGORICAL_COLUMNS)
        if unknown:
            raise DataError(f"cardinalities name unknown columns: {sorted(unknown)}")
        bad = {c: v for c, v in cards.items() if v < 1}
        if bad:
            raise DataError(f"cardinalities must be >= 1, got {bad}")
        return cards

    def validate(self) -> None:
        if self.n_rows < 0:
            raise DataError("n_rows must be nonnegative")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise DataError("signal_strength must lie in [0, 1]")
        if not 0.0 <= self.ongoing_fraction <= 1.0:
            raise DataError("ongoing_fraction must lie in [0, 1]")
        self.resolved_prior()
        self.resolved_cardinalities()


def _irwin_hall3_cdf(x: float) -> float:
    """CDF of the sum of three independent uniform(0,1) draws."""
    acc = x**3
    if x > 1.0:
        acc -= 3.0 * (x - 1.0) ** 3
    if x > 2.0:
        acc += 3.0 * (x - 2.0) ** 3
    return acc / 6.0


def generate_synthetic(spec: SyntheticSpec) -> list[CaseRecord]:
    """Generate case records with a planted, learnable delay signal.

    Every row's randomness comes from a generator keyed on ``(seed, row)``, so
    the output is reproducible byte-for-byte regardless of scheduling. Each
    planted column maps its category index to a value in (0, 1); the summed
    score, pushed through its own CDF, picks the cell's preferred class by the
    prior's cumulative mass. With probability ``signal_strength`` a row takes
    its cell's class; otherwise one of the other classes, uniformly. Durations
    are uniform over the class's day band. Exactly
    ``floor(n_rows * ongoing_fraction)`` evenly spread rows are forced into
    the last class and emitted without a decision date.
    """
    spec.validate()
    prior = spec.resolved_prior()
    class_names = list(prior)
    bands = _BAND_DAYS_5 if len(class_names) == 5 else _BAND_DAYS_2
    cumulative = np.cumsum([prior[name] for name in class_names])
    cards = spec.resolved_cardinalities()
    n_classes = len(class_names)
    frac = spec.ongoing_fraction
    base_day = date(2010, 1, 1)
    id_width = max(7, len(str(max(spec.n_rows - 1, 0))))

    records: list[CaseRecord] = []
    for i in range(spec.n_rows):
        rng = np.random.default_rng((spec.seed, i))
        filing = base_day + timedelta(days=int(rng.integers(0, 365)))
        values: dict[str, str] = {}
        codes: dict[str, int] = {}
        for col in CATEGORICAL_COLUMNS:
            card = cards[col]
            j = int(rng.integers(0, card))
            codes[col] = j
            values[col] = _token(col, j, card)

        score = sum((codes[col] + 0.5) / cards[col] for col in SIGNAL_COLUMNS)
        quantile = _irwin_hall3_cdf(score)
        cell_class = int(np.searchsorted(cumulative, quantile, side="right"))
        cell_class = min(cell_class, n_classes - 1)

        ongoing = math.floor((i + 1) * frac) - math.floor(i * frac) == 1
        if ongoing:
            records.append(
                CaseRecord(
                    case_id=f"C{i:0{id_width}d}",
                    date_of_filing=filing,
                    date_of_decision=None,
                    **values,
                )
            )
            continue

        if rng.random() < spec.signal_strength:
            klass = cell_class
        else:
            shift = int(rng.integers(0, n_classes - 1))
            klass = shift if shift < cell_class else shift + 1
        lo, hi = bands[class_names[klass]]
        duration = int(rng.integers(lo, hi + 1))
        records.append(
            CaseRecord(
                case_id=f"C{i:0{id_width}d}",
                date_of_filing=filing,
                date_of_decision=filing + timedelta(days=duration),
                **values,
            )
        )
    return records

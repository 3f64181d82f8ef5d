"""MCQ dataset loading, option parsing, validation and deduplication.

Input files are CSV (comma-delimited, double-quote escaped, UTF-8, header
row mandatory) or JSONL with the same field names: id, question,
option_a..option_d, answer, rationale. Extra columns land in metadata.
Options embedded in the question text are split out by the marker parser.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ragmcq.corpus import normalize_text

__all__ = [
    "OPTION_KEYS",
    "McqRecord",
    "RawRecord",
    "Rejection",
    "ValidationReport",
    "OptionParseError",
    "parse_options",
    "validate_record",
    "dedup",
    "load_dataset",
    "LoadResult",
    "prepare_dataset",
    "write_rejection_report",
]

OPTION_KEYS = ("A", "B", "C", "D")

# Rejection reason codes.
BAD_OPTION_LABELS = "bad_option_labels"
MISSING_OPTIONS = "missing_options"
MISSING_ANSWER = "missing_answer"
DUPLICATE = "duplicate"
PARSE_FAILURE = "parse_failure"


class OptionParseError(ValueError):
    """Marker parsing failed; the message carries position detail."""


@dataclass(frozen=True)
class McqRecord:
    id: str
    question: str
    options: dict[str, str]
    answer_key: str
    rationale: str | None = None
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass
class RawRecord:
    """A loaded, normalized, not-yet-validated row."""

    id: str
    question: str
    options: dict[str, str] | None
    answer: str | None
    rationale: str | None
    metadata: dict[str, str]
    row: int
    parse_error: str | None = None


@dataclass(frozen=True)
class Rejection:
    row: int
    reason: str
    detail: str
    record_id: str = ""


@dataclass
class ValidationReport:
    accepted: list[McqRecord]
    rejected: list[Rejection]


# Option marker: the label letter at a token boundary, one of . ) : after
# it, then whitespace or a word character (keeps "A" inside formulas and
# strings like "A.)" from matching).
_MARKER = re.compile(r"(?<!\w)([ABCD])[.):](?=\s|\w)")

# Irregular labels the source data must not use: Bangla letters or numerals
# (ASCII or Bangla digits) in marker position.
_IRREGULAR_PREFIX = re.compile(r"^\s*(?:[কখগঘ]|[1-4১-৪])[.):]\s*")
_IRREGULAR_EMBEDDED = re.compile(r"(?:^|\s)(?:[কখগঘ]|[1-4১-৪])[.):]\s")


def parse_options(raw_text: str) -> tuple[str, dict[str, str]]:
    """Split ``raw_text`` into a question stem and four labeled options.

    Markers A/B/C/D with '.', ')' or ':' must appear exactly once each, in
    order. Raises :class:`OptionParseError` with position detail otherwise.
    """
    matches = list(_MARKER.finditer(raw_text))
    letters = [m.group(1) for m in matches]
    if letters != list(OPTION_KEYS):
        seen: set[str] = set()
        for m in matches:
            if m.group(1) in seen:
                raise OptionParseError(
                    f"repeated option marker {m.group(1)!r} at position {m.start()}"
                )
            seen.add(m.group(1))
        missing = [k for k in OPTION_KEYS if k not in seen]
        if missing:
            raise OptionParseError(
                f"missing option markers: {', '.join(missing)} (found {letters or 'none'})"
            )
        raise OptionParseError(
            f"option markers out of order: {letters} at positions {[m.start() for m in matches]}"
        )
    question = raw_text[: matches[0].start()].strip()
    options: dict[str, str] = {}
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(raw_text)
        options[m.group(1)] = raw_text[m.end() : end].strip()
    return question, options


def _irregular_label_detail(raw: RawRecord) -> str | None:
    if raw.options:
        for key in OPTION_KEYS:
            value = raw.options.get(key, "")
            if value and _IRREGULAR_PREFIX.match(value):
                return f"option {key} uses a Bangla/numeric label: {value[:30]!r}"
    if raw.options is None and _IRREGULAR_EMBEDDED.search(raw.question):
        return "question embeds Bangla/numeric option markers"
    return None


def validate_record(raw: RawRecord) -> McqRecord | Rejection:
    """Accept a structurally sound record or return the rejection reason.

    Rejection is data, not failure: bad labels, missing/duplicate options,
    out-of-range answer keys and unparsable rows all map to reason codes.
    """
    irregular = _irregular_label_detail(raw)
    if irregular is not None:
        return Rejection(raw.row, BAD_OPTION_LABELS, irregular, raw.id)
    if raw.options is None:
        return Rejection(raw.row, PARSE_FAILURE, raw.parse_error or "options missing", raw.id)
    if not raw.question.strip():
        return Rejection(raw.row, PARSE_FAILURE, "empty question", raw.id)
    missing = [k for k in OPTION_KEYS if not raw.options.get(k, "").strip()]
    if missing:
        return Rejection(raw.row, MISSING_OPTIONS, f"missing/empty options: {', '.join(missing)}", raw.id)
    values = [raw.options[k].strip() for k in OPTION_KEYS]
    if len(set(values)) != len(values):
        dupes = sorted({v for v in values if values.count(v) > 1})
        return Rejection(raw.row, MISSING_OPTIONS, f"duplicate option text: {dupes[0][:30]!r}", raw.id)
    answer = (raw.answer or "").strip().upper()
    if answer not in OPTION_KEYS:
        return Rejection(raw.row, MISSING_ANSWER, f"answer key {raw.answer!r} not in A-D", raw.id)
    return McqRecord(
        id=raw.id,
        question=raw.question.strip(),
        options={k: raw.options[k].strip() for k in OPTION_KEYS},
        answer_key=answer,
        rationale=raw.rationale if raw.rationale else None,
        metadata=raw.metadata,
    )


_ALL_WS = re.compile(r"\s+")


def _dedup_norm(text: str) -> str:
    return _ALL_WS.sub(" ", normalize_text(text)).strip().casefold()


def dedup(records: Iterable[McqRecord], rows: Iterable[int] | None = None) -> ValidationReport:
    """Drop later records whose normalized question plus option multiset
    matches an earlier one; first occurrence wins.

    ``rows`` optionally supplies original row numbers for the rejections
    (defaults to input positions).
    """
    records = list(records)
    row_ids = list(rows) if rows is not None else list(range(len(records)))
    seen: dict[tuple, str] = {}
    accepted: list[McqRecord] = []
    rejected: list[Rejection] = []
    for row, rec in zip(row_ids, records):
        key = (
            _dedup_norm(rec.question),
            tuple(sorted(_dedup_norm(v) for v in rec.options.values())),
        )
        if key in seen:
            rejected.append(Rejection(row, DUPLICATE, f"duplicate of {seen[key]}", rec.id))
        else:
            seen[key] = rec.id
            accepted.append(rec)
    return ValidationReport(accepted=accepted, rejected=rejected)


@dataclass
class LoadResult:
    records: list[RawRecord]
    rejections: list[Rejection]


_CORE_FIELDS = {"id", "question", "option_a", "option_b", "option_c", "option_d", "answer", "rationale"}


def _row_to_raw(row: dict, index: int) -> RawRecord:
    question_raw = normalize_text(str(row.get("question") or ""))
    rec_id = str(row.get("id") or "").strip() or f"row{index:05d}"
    opt_values = {
        key: normalize_text(str(row.get(f"option_{key.lower()}") or "")).strip()
        for key in OPTION_KEYS
    }
    parse_error = None
    if any(opt_values.values()):
        options: dict[str, str] | None = opt_values
        question = question_raw
    else:
        try:
            question, options = parse_options(question_raw)
        except OptionParseError as exc:
            question, options, parse_error = question_raw, None, str(exc)
    answer = row.get("answer")
    rationale_raw = normalize_text(str(row.get("rationale") or "")).strip()
    metadata = {
        str(k): str(v)
        for k, v in row.items()
        if k is not None and str(k) not in _CORE_FIELDS and v not in (None, "")
    }
    return RawRecord(
        id=rec_id,
        question=question,
        options=options,
        answer=str(answer) if answer is not None else None,
        rationale=rationale_raw or None,
        metadata=metadata,
        row=index,
        parse_error=parse_error,
    )


def load_dataset(path: str | Path, format: str = "csv") -> LoadResult:
    """Read records in file order, normalizing all text fields and splitting
    embedded options. Malformed rows become rejections; loading continues.
    Ids are synthesized from the row index when absent.
    """
    path = Path(path)
    records: list[RawRecord] = []
    rejections: list[Rejection] = []
    if format == "csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "question" not in reader.fieldnames:
                raise ValueError(f"{path}: CSV must have a header row with a 'question' column")
            for i, row in enumerate(reader):
                records.append(_row_to_raw(row, i))
    elif format == "jsonl":
        with path.open("r", encoding="utf-8") as fh:
            i = -1
            for line in fh:
                if not line.strip():
                    continue
                i += 1
                try:
                    obj = json.loads(line)
                    if not isinstance(obj, dict):
                        raise ValueError("line is not a JSON object")
                except ValueError as exc:
                    rejections.append(Rejection(i, PARSE_FAILURE, f"bad JSON: {exc}"))
                    continue
                records.append(_row_to_raw(obj, i))
    else:
        raise ValueError(f"unknown dataset format {format!r} (expected csv or jsonl)")
    return LoadResult(records=records, rejections=rejections)


def prepare_dataset(path: str | Path, format: str = "csv") -> ValidationReport:
    """Full hygiene pipeline: load, validate each row, then deduplicate."""
    loaded = load_dataset(path, format)
    accepted: list[McqRecord] = []
    accepted_rows: list[int] = []
    rejected = list(loaded.rejections)
    for raw in loaded.records:
        result = validate_record(raw)
        if isinstance(result, Rejection):
            rejected.append(result)
        else:
            accepted.append(result)
            accepted_rows.append(raw.row)
    deduped = dedup(accepted, rows=accepted_rows)
    rejected.extend(deduped.rejected)
    rejected.sort(key=lambda r: r.row)
    return ValidationReport(accepted=deduped.accepted, rejected=rejected)


def write_rejection_report(rejections: Iterable[Rejection], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "reason", "detail"])
        for r in rejections:
            writer.writerow([r.row, r.reason, r.detail])

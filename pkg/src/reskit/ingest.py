"""
Parsing and validation of transmission outage records.

The canonical CSV layout has one row per element outage::

    record_id,element_id,element_type,interconnection,outage_start,
    restore_time,initiating_cause,sustained_cause

Other layouts are adapted with a column mapping ``{canonical: source}``.
Timestamps are ISO-8601; naive values are taken as UTC and anything finer
than a minute is truncated with a warning.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping

from .errors import HeaderMismatch, ParseError, TimestampOrderViolation

log = logging.getLogger(__name__)

COLUMNS = (
    "record_id",
    "element_id",
    "element_type",
    "interconnection",
    "outage_start",
    "restore_time",
    "initiating_cause",
    "sustained_cause",
)
REQUIRED = COLUMNS[:-1]

WEATHER_CAUSES = frozenset(
    {"lightning", "weather excluding lightning", "fire", "environmental"}
)


class ElementType(str, enum.Enum):
    AC_CIRCUIT = "AC_CIRCUIT"
    TRANSFORMER = "TRANSFORMER"
    DC_CIRCUIT = "DC_CIRCUIT"
    BACK_TO_BACK_CONVERTER = "BACK_TO_BACK_CONVERTER"
    OTHER = "OTHER"


@dataclass(frozen=True)
class OutageRecord:
    record_id: str
    element_id: str
    element_type: ElementType
    interconnection: str
    outage_start: datetime
    restore_time: datetime
    initiating_cause: str
    sustained_cause: str | None = None

    @property
    def duration_minutes(self) -> int:
        return int((self.restore_time - self.outage_start) // timedelta(minutes=1))

    @property
    def is_momentary(self) -> bool:
        return self.restore_time == self.outage_start


@dataclass(frozen=True)
class Dataset:
    records: tuple[OutageRecord, ...]
    source_path: str = ""
    parse_warnings: tuple[tuple[int, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record_id values must be unique")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def is_weather_cause(code: str | None) -> bool:
    """True for the four weather-related cause codes, ignoring case, padding and commas."""
    if not code:
        return False
    return " ".join(code.replace(",", " ").split()).lower() in WEATHER_CAUSES


def parse_timestamp(text: str) -> tuple[datetime, bool]:
    """Parse an ISO-8601 timestamp to UTC at minute resolution.

    Returns the timestamp and whether sub-minute precision was discarded.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    if text[-1] in "zZ":
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    truncated = bool(ts.second or ts.microsecond)
    return ts.replace(second=0, microsecond=0), truncated


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    if ts.second or ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return ts.strftime("%Y-%m-%dT%H:%MZ")


def parse_element_type(text: str) -> tuple[ElementType, bool]:
    key = "_".join(text.replace("-", " ").replace("/", " ").upper().split())
    try:
        return ElementType(key), True
    except ValueError:
        return ElementType.OTHER, key == "OTHER"


def _resolve_header(header: list[str], schema: Mapping[str, str] | None) -> dict[str, int]:
    schema = dict(schema or {})
    unknown = set(schema) - set(COLUMNS)
    if unknown:
        raise HeaderMismatch(f"schema maps unknown canonical columns: {sorted(unknown)}")
    stripped = [h.strip() for h in header]
    index = {}
    for col in COLUMNS:
        source = schema.get(col, col)
        if source in stripped:
            index[col] = stripped.index(source)
        elif col in REQUIRED:
            raise HeaderMismatch(f"required column {source!r} not in header")
    return index


def _parse_row(row: list[str], index: dict[str, int]) -> tuple[OutageRecord, list[str]]:
    notes = []

    def get(col):
        i = index.get(col)
        if i is None or i >= len(row):
            return ""
        return row[i].strip()

    record_id = get("record_id")
    if not record_id:
        raise ValueError("missing record_id")
    element_id = get("element_id")
    if not element_id:
        raise ValueError("missing element_id")
    start_text, restore_text = get("outage_start"), get("restore_time")
    if not start_text:
        raise ValueError("missing outage_start")
    if not restore_text:
        raise ValueError("missing restore_time")
    start, cut1 = parse_timestamp(start_text)
    restore, cut2 = parse_timestamp(restore_text)
    if cut1 or cut2:
        notes.append(f"record {record_id}: sub-minute precision truncated")
    if restore < start:
        raise TimestampOrderViolation(0, f"record {record_id}: restore_time precedes outage_start")
    etype, known = parse_element_type(get("element_type"))
    if not known:
        notes.append(f"record {record_id}: unknown element_type {get('element_type')!r} mapped to OTHER")
    record = OutageRecord(
        record_id=record_id,
        element_id=element_id,
        element_type=etype,
        interconnection=get("interconnection"),
        outage_start=start,
        restore_time=restore,
        initiating_cause=get("initiating_cause"),
        sustained_cause=get("sustained_cause") or None,
    )
    return record, notes


def parse_csv(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    strict: bool = False,
) -> Dataset:
    """Read an outage-record CSV into a :class:`Dataset`.

    Malformed rows are skipped and listed in ``parse_warnings`` (each also
    logged as ``line <n>: <message>``). With ``strict=True`` the first
    malformed row raises :class:`ParseError` instead.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    records = []
    warnings = []
    seen = set()

    def warn(line_no, message):
        warnings.append((line_no, message))
        log.warning("line %d: %s", line_no, message)

    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatch("file is empty; header row required") from None
        index = _resolve_header(header, schema)
        for row in reader:
            line_no = reader.line_num
            if not any(cell.strip() for cell in row):
                continue
            try:
                record, notes = _parse_row(row, index)
                if record.record_id in seen:
                    raise ValueError(f"duplicate record_id {record.record_id!r}")
            except TimestampOrderViolation as exc:
                if strict:
                    raise TimestampOrderViolation(line_no, exc.message) from None
                warn(line_no, exc.message)
                continue
            except ValueError as exc:
                if strict:
                    raise ParseError(line_no, str(exc)) from None
                warn(line_no, str(exc))
                continue
            for note in notes:
                warn(line_no, note)
            seen.add(record.record_id)
            records.append(record)
    return Dataset(tuple(records), str(path), tuple(warnings))


def write_csv(records: Iterable[OutageRecord], path: str | Path) -> None:
    """Write records in the canonical layout (inverse of :func:`parse_csv`)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow([
                r.record_id,
                r.element_id,
                r.element_type.value,
                r.interconnection,
                format_timestamp(r.outage_start),
                format_timestamp(r.restore_time),
                r.initiating_cause,
                r.sustained_cause or "",
            ])

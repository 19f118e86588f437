"""
Grouping of outage records into resilience events.

Within one interconnection, records are swept in order of outage start.
A record joins the open event when it starts at most 5 minutes after any
member, or when it starts while some member that began at most an hour
earlier is still out. Repeated momentary outages of one element within
5 minutes are collapsed before grouping.

Event times are stored as minutes since ``origin`` (the first outage), so
``outage_times[0] == 0`` for extracted events.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import Dataset, OutageRecord, format_timestamp, is_weather_cause

JOIN_START_MINUTES = 5
OVERLAP_WINDOW_MINUTES = 60
MOMENTARY_WINDOW_MINUTES = 5

EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)
_MINUTE = timedelta(minutes=1)


@dataclass(frozen=True)
class ResilienceEvent:
    event_id: str
    interconnection: str
    outage_times: tuple
    restore_times: tuple
    member_record_ids: tuple[str, ...]
    weather_related: bool = False
    cause_counts: tuple[tuple[str, int], ...] = ()
    origin: datetime = EPOCH

    def __post_init__(self):
        o, r = self.outage_times, self.restore_times
        if not (len(o) == len(r) == len(self.member_record_ids)):
            raise ValueError("outage, restore and member lists must have equal length")
        if any(b < a for a, b in zip(o, o[1:])) or any(b < a for a, b in zip(r, r[1:])):
            raise ValueError("outage and restore times must be sorted ascending")
        if o and r[0] < o[0]:
            raise ValueError("first restore precedes first outage")

    @property
    def n(self) -> int:
        return len(self.outage_times)

    @property
    def weather_codes_present(self) -> frozenset[str]:
        return frozenset(code for code, _ in self.cause_counts if is_weather_cause(code))

    def outage_timestamps(self) -> list[datetime]:
        return [self.origin + t * _MINUTE for t in self.outage_times]

    def restore_timestamps(self) -> list[datetime]:
        return [self.origin + t * _MINUTE for t in self.restore_times]


def _minutes(delta: timedelta) -> int:
    return int(delta // _MINUTE)


def event_from_records(event_id: str, records: Sequence[OutageRecord]) -> ResilienceEvent:
    """Build an event from its member records."""
    origin = min(r.outage_start for r in records)
    causes = Counter()
    for r in records:
        causes.update({c for c in (r.initiating_cause, r.sustained_cause) if c})
    weather = any(
        is_weather_cause(r.initiating_cause) or is_weather_cause(r.sustained_cause)
        for r in records
    )
    return ResilienceEvent(
        event_id=event_id,
        interconnection=records[0].interconnection,
        outage_times=tuple(sorted(_minutes(r.outage_start - origin) for r in records)),
        restore_times=tuple(sorted(_minutes(r.restore_time - origin) for r in records)),
        member_record_ids=tuple(r.record_id for r in records),
        weather_related=weather,
        cause_counts=tuple(sorted(causes.items())),
        origin=origin,
    )


def _sweep_key(r: OutageRecord):
    return (r.outage_start, r.record_id)


def dedup_momentary(records_of_one_element: Iterable[OutageRecord]) -> list[OutageRecord]:
    """Drop momentary outages within 5 minutes of the last retained momentary outage."""
    kept = []
    anchor = None
    for r in sorted(records_of_one_element, key=_sweep_key):
        if r.is_momentary:
            if anchor is not None and r.outage_start - anchor <= MOMENTARY_WINDOW_MINUTES * _MINUTE:
                continue
            anchor = r.outage_start
        kept.append(r)
    return kept


def dedup_records(records: Iterable[OutageRecord]) -> list[OutageRecord]:
    by_element = defaultdict(list)
    for r in records:
        by_element[(r.interconnection, r.element_id)].append(r)
    kept = []
    for group in by_element.values():
        kept.extend(dedup_momentary(group))
    return sorted(kept, key=_sweep_key)


def group_records(records: Sequence[OutageRecord]) -> list[list[OutageRecord]]:
    """Sweep records of one interconnection into groups using the join rule."""
    join_gap = JOIN_START_MINUTES * _MINUTE
    window_span = OVERLAP_WINDOW_MINUTES * _MINUTE
    groups: list[list[OutageRecord]] = []
    window: deque[OutageRecord] = deque()
    for rec in sorted(records, key=_sweep_key):
        while window and rec.outage_start - window[0].outage_start > window_span:
            window.popleft()
        joins = any(
            rec.outage_start - m.outage_start <= join_gap or rec.outage_start <= m.restore_time
            for m in window
        )
        if groups and joins:
            groups[-1].append(rec)
        else:
            groups.append([rec])
            window.clear()
        window.append(rec)
    return groups


def extract_events(dataset: Dataset | Iterable[OutageRecord]) -> list[ResilienceEvent]:
    """Group all records into resilience events, one sweep per interconnection."""
    records = dedup_records(dataset)
    by_ic = defaultdict(list)
    for r in records:
        by_ic[r.interconnection].append(r)
    events = []
    for ic in sorted(by_ic):
        for k, group in enumerate(group_records(by_ic[ic]), start=1):
            events.append(event_from_records(f"{ic or 'NA'}-{k:05d}", group))
    return events


def filter_events(
    events: Iterable[ResilienceEvent], min_n: int = 10, weather_only: bool = False
) -> list[ResilienceEvent]:
    if min_n < 1:
        raise ValueError("min_n must be at least 1")
    return [e for e in events if e.n >= min_n and (e.weather_related or not weather_only)]


def event_to_dict(event: ResilienceEvent) -> dict:
    return {
        "event_id": event.event_id,
        "interconnection": event.interconnection,
        "n": event.n,
        "weather_related": event.weather_related,
        "weather_codes_present": sorted(event.weather_codes_present),
        "cause_counts": dict(event.cause_counts),
        "outage_times": [format_timestamp(t) for t in event.outage_timestamps()],
        "restore_times": [format_timestamp(t) for t in event.restore_timestamps()],
        "member_record_ids": list(event.member_record_ids),
    }


def _offset_minutes(ts: datetime, origin: datetime):
    delta = ts - origin
    if delta % _MINUTE:
        return delta / _MINUTE
    return _minutes(delta)


def _parse_exact(text: str) -> datetime:
    if text[-1] in "zZ":
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text).astimezone(timezone.utc)


def event_from_dict(data: dict) -> ResilienceEvent:
    outages = [_parse_exact(t) for t in data["outage_times"]]
    restores = [_parse_exact(t) for t in data["restore_times"]]
    origin = outages[0]
    return ResilienceEvent(
        event_id=data["event_id"],
        interconnection=data["interconnection"],
        outage_times=tuple(_offset_minutes(t, origin) for t in outages),
        restore_times=tuple(_offset_minutes(t, origin) for t in restores),
        member_record_ids=tuple(data["member_record_ids"]),
        weather_related=bool(data["weather_related"]),
        cause_counts=tuple(sorted((data.get("cause_counts") or {}).items())),
        origin=origin,
    )


def write_events_json(events: Iterable[ResilienceEvent], path: str | Path) -> None:
    payload = [event_to_dict(e) for e in events]
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def read_events_json(path: str | Path) -> list[ResilienceEvent]:
    return [event_from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]

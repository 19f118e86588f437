from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import strategies as st

from reskit.events import ResilienceEvent
from reskit.ingest import ElementType, OutageRecord

T0 = datetime(2020, 4, 1, tzinfo=timezone.utc)


def make_event(outage_hours, restore_hours, event_id="E-00001", interconnection="Eastern",
               weather=False, causes=()):
    """Event from hour offsets; times are stored in minutes."""
    o = tuple(sorted(h * 60 for h in outage_hours))
    r = tuple(sorted(h * 60 for h in restore_hours))
    ids = tuple(f"{event_id}-{k}" for k in range(len(o)))
    return ResilienceEvent(event_id, interconnection, o, r, ids, weather, tuple(causes), T0)


def make_record(rid, start_min, duration_min, element=None, interconnection="Eastern",
                cause="Lightning", sustained=None):
    start = T0 + timedelta(minutes=start_min)
    return OutageRecord(
        record_id=rid,
        element_id=element or f"L-{rid}",
        element_type=ElementType.AC_CIRCUIT,
        interconnection=interconnection,
        outage_start=start,
        restore_time=start + timedelta(minutes=duration_min),
        initiating_cause=cause,
        sustained_cause=sustained,
    )


@st.composite
def minute_events(draw, min_n=1, max_n=40, max_minutes=5000):
    """Events on integer minutes built from (start, duration) pairs, ties allowed."""
    n = draw(st.integers(min_n, max_n))
    starts = draw(st.lists(st.integers(0, max_minutes), min_size=n, max_size=n))
    durations = draw(st.lists(st.integers(0, max_minutes), min_size=n, max_size=n))
    base = min(starts)
    o = sorted(s - base for s in starts)
    r = sorted(s - base + d for s, d in zip(starts, durations))
    ids = tuple(f"R{k}" for k in range(n))
    return ResilienceEvent("H-00001", "Eastern", tuple(o), tuple(r), ids, False, (), T0)


@pytest.fixture
def fig1_event():
    # 12 outages over 2 h, restores spread over two days with one early restore
    outages = [0, 0.1, 0.2, 0.25, 0.5, 0.8, 1.0, 1.2, 1.5, 1.7, 1.9, 2.0]
    restores = [0.5, 1.5, 2.5, 3, 4, 6, 8, 10, 15, 20, 30, 48]
    return make_event(outages, restores, event_id="F-00001")


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    lines = acceptance_report.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

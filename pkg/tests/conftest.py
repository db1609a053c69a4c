import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vtops.config import load_site
from vtops.model import (
    Direction,
    DoorStatus,
    EventType,
    LiftEvent,
    LiftId,
    OperationMode,
    TimeWindow,
)
from vtops.store import EventStore

FIXTURES = Path(__file__).parent.parent / "fixtures"

T0 = datetime(2026, 8, 10, 0, 0, 0, tzinfo=timezone.utc)


def at(seconds: int) -> datetime:
    return T0 + timedelta(seconds=seconds)


def window(start_s: int, end_s: int) -> TimeWindow:
    return TimeWindow(start=at(start_s), end=at(end_s))


def make_event(
    lift="B8-1",
    offset_s=0,
    event_type=EventType.HEARTBEAT,
    direction=Direction.NONE,
    wait_time_s=None,
    mode=OperationMode.NORMAL,
    floor=1,
    door=DoorStatus.CLOSED,
) -> LiftEvent:
    return LiftEvent(
        lift=LiftId.parse(lift) if isinstance(lift, str) else lift,
        occurred_at=at(offset_s),
        direction=direction,
        wait_time_s=wait_time_s,
        operation_mode=mode,
        event_type=event_type,
        floor_position=floor,
        door_status=door,
    )


def served(lift="B8-1", offset_s=0, direction=Direction.UP, wait=10, floor=1):
    return make_event(
        lift=lift,
        offset_s=offset_s,
        event_type=EventType.HALL_CALL_SERVED,
        direction=direction,
        wait_time_s=wait,
        floor=floor,
    )


def registered(lift="B8-1", offset_s=0, direction=Direction.UP, floor=1):
    return make_event(
        lift=lift,
        offset_s=offset_s,
        event_type=EventType.HALL_CALL_REGISTERED,
        direction=direction,
        floor=floor,
    )


def mode_change(lift="B8-1", offset_s=0, mode=OperationMode.OUT_OF_SERVICE, floor=1):
    return make_event(
        lift=lift, offset_s=offset_s, event_type=EventType.MODE_CHANGE, mode=mode, floor=floor
    )


@pytest.fixture(scope="session")
def site():
    return load_site(FIXTURES / "site.json")


@pytest.fixture
def store(tmp_path):
    return EventStore(tmp_path / "data")

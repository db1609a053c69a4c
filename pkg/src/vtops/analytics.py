"""Portal statistics over the event log.

Every function is a pure query over a store snapshot. "No data" is an
explicit sentinel (:data:`NO_DATA`), produced exactly when no qualifying
records exist in the requested scope and window; a zero-valued aggregate is
real data, never NO_DATA.

Percentages are rounded half-up to one decimal, with the remainder bucket
corrected so the total is exactly 100.0.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import Decimal, ROUND_HALF_UP
from typing import Optional, Union

from .config import SiteConfig
from .model import (
    Direction,
    EventType,
    LiftEvent,
    OperationMode,
    QueryScope,
    TimeWindow,
)
from .store import EventFilter, EventStore


class UnknownLevel(ValueError):
    code = "unknown_level"


class _NoData:
    """Sentinel for "No Data Available"; distinct from any zero-valued result."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_DATA"

    def __bool__(self):
        return False


NO_DATA = _NoData()

_BEGINNING_OF_TIME = datetime.min.replace(tzinfo=timezone.utc)

LOG_KINDS = {
    "general": None,
    "hall_call": frozenset({EventType.HALL_CALL_REGISTERED, EventType.HALL_CALL_SERVED}),
    "emergency": frozenset({EventType.EMERGENCY}),
}


def default_window(now: datetime) -> TimeWindow:
    """The portal's first-visit window: the trailing 24 hours."""
    return TimeWindow(start=now - timedelta(hours=24), end=now)


@dataclass(frozen=True)
class DirectionWaitStats:
    count: int
    mean_s: float
    min_s: int
    max_s: int


@dataclass(frozen=True)
class WaitTimeStats:
    up: Union[DirectionWaitStats, _NoData]
    down: Union[DirectionWaitStats, _NoData]

    def for_direction(self, direction: Direction) -> Union[DirectionWaitStats, _NoData]:
        return self.up if direction is Direction.UP else self.down


@dataclass(frozen=True)
class ModeSplit:
    """Share of lift-time per operation mode within a window, in percent (one decimal)."""

    percentages: dict[OperationMode, float]
    total_lift_seconds: int


def _percent(numerator: int, denominator: int) -> Decimal:
    return (Decimal(numerator) * 100 / Decimal(denominator)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )


def wait_time_stats(store: EventStore, scope: QueryScope, window: TimeWindow) -> WaitTimeStats:
    """Per-direction wait statistics over served hall calls; pooled across lifts."""
    served = store.query_events(
        EventFilter(scope=scope, window=window, event_types=frozenset({EventType.HALL_CALL_SERVED}))
    )
    per_direction = {}
    for direction in (Direction.UP, Direction.DOWN):
        waits = [e.wait_time_s for e in served if e.direction is direction]
        if not waits:
            per_direction[direction] = NO_DATA
        else:
            per_direction[direction] = DirectionWaitStats(
                count=len(waits),
                mean_s=sum(waits) / len(waits),
                min_s=min(waits),
                max_s=max(waits),
            )
    return WaitTimeStats(up=per_direction[Direction.UP], down=per_direction[Direction.DOWN])


def hall_call_count(
    store: EventStore, scope: QueryScope, window: TimeWindow
) -> Union[tuple[int, int], _NoData]:
    """Accumulated (up, down) hall calls registered in the window."""
    registered = store.query_events(
        EventFilter(
            scope=scope, window=window, event_types=frozenset({EventType.HALL_CALL_REGISTERED})
        )
    )
    if not registered:
        return NO_DATA
    up = sum(1 for e in registered if e.direction is Direction.UP)
    return (up, len(registered) - up)


def direction_percentages(
    store: EventStore, scope: QueryScope, window: TimeWindow
) -> Union[tuple[float, float], _NoData]:
    """Up/down split of registered hall calls; down takes the rounding remainder."""
    counts = hall_call_count(store, scope, window)
    if counts is NO_DATA:
        return NO_DATA
    up, down = counts
    up_pct = _percent(up, up + down)
    down_pct = Decimal("100.0") - up_pct
    return (float(up_pct), float(down_pct))


def _mode_durations_for_lift(
    changes: list[LiftEvent], window: TimeWindow
) -> dict[OperationMode, int]:
    """Seconds spent per mode within the window, from one lift's mode-change events.

    ``changes`` must be time-ordered and may include changes before the window.
    With no change before the window, the span up to the first in-window change
    is unknown and contributes nothing.
    """
    mode_at_start = None
    for event in changes:
        if event.occurred_at < window.start:
            mode_at_start = event.operation_mode
        else:
            break
    in_window = [e for e in changes if window.contains(e.occurred_at)]

    durations: dict[OperationMode, int] = {}
    cursor = window.start if mode_at_start is not None else None
    current = mode_at_start
    for event in in_window:
        if current is not None and cursor is not None:
            span = int((event.occurred_at - cursor).total_seconds())
            if span > 0:
                durations[current] = durations.get(current, 0) + span
        current = event.operation_mode
        cursor = event.occurred_at
    if current is not None and cursor is not None:
        span = int((window.end - cursor).total_seconds())
        if span > 0:
            durations[current] = durations.get(current, 0) + span
    return durations


def mode_percentages(
    store: EventStore, site: SiteConfig, scope: QueryScope, window: TimeWindow
) -> Union[ModeSplit, _NoData]:
    """Time-weighted share of each operation mode across the lifts in scope.

    Mode intervals are reconstructed from mode-change events; the mode in
    force at window start is the latest change before the window.
    """
    totals: dict[OperationMode, int] = {mode: 0 for mode in OperationMode}
    lookback = TimeWindow(start=_BEGINNING_OF_TIME, end=window.end)
    for lift in site.lift_ids():
        if not scope.matches(lift):
            continue
        changes = store.query_events(
            EventFilter(
                scope=QueryScope.single_lift(lift),
                window=lookback,
                event_types=frozenset({EventType.MODE_CHANGE}),
            )
        )
        for mode, seconds in _mode_durations_for_lift(changes, window).items():
            totals[mode] += seconds
    grand_total = sum(totals.values())
    if grand_total == 0:
        return NO_DATA

    # Round each bucket half-up; the highest-id mode with any time absorbs the
    # remainder so the four percentages sum to exactly 100.0.
    remainder_mode = max((m for m in OperationMode if totals[m] > 0), key=lambda m: m.mode_id)
    percentages: dict[OperationMode, float] = {}
    assigned = Decimal("0.0")
    for mode in OperationMode:
        if mode is remainder_mode:
            continue
        pct = _percent(totals[mode], grand_total)
        percentages[mode] = float(pct)
        assigned += pct
    percentages[remainder_mode] = float(Decimal("100.0") - assigned)
    return ModeSplit(
        percentages={mode: percentages[mode] for mode in OperationMode},
        total_lift_seconds=grand_total,
    )


def event_log(
    store: EventStore, kind: str, scope: QueryScope, window: TimeWindow
) -> list[LiftEvent]:
    """Time-ordered log rows: ``general`` (all), ``hall_call``, or ``emergency``."""
    try:
        types = LOG_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown log kind {kind!r}; expected one of {sorted(LOG_KINDS)}") from None
    return store.query_events(EventFilter(scope=scope, window=window, event_types=types))


def estimated_travel_time(
    store: EventStore,
    site: SiteConfig,
    building: str,
    from_level: int,
    to_level: int,
    window: TimeWindow,
) -> Union[float, _NoData]:
    """Historical wait plus ride time between two levels of one building.

    Estimate = mean wait for the travel direction + levels crossed x per-level
    travel time + door dwell, using the building's configured kinematics.
    """
    for level in (from_level, to_level):
        if not site.level_in_range(building, level):
            raise UnknownLevel(f"level {level} does not exist in building {building}")
    if from_level == to_level:
        return 0.0
    direction = Direction.UP if to_level > from_level else Direction.DOWN
    stats = wait_time_stats(store, QueryScope.for_building(building), window)
    directional = stats.for_direction(direction)
    if directional is NO_DATA:
        return NO_DATA
    cfg = site.building(building)
    levels = abs(to_level - from_level)
    return directional.mean_s + levels * cfg.travel_s_per_level + cfg.door_dwell_s

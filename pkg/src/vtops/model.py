"""Core vocabulary types for lift telemetry and portal queries.

Everything here is an immutable value. Invariants that do not depend on the
site configuration are enforced by the constructors; site-dependent checks
(known lift, level range) happen in :func:`validate_event`.

All timestamps are UTC at second resolution. Wire encoding of a telemetry
event is one JSON object per line with the field order fixed by
``WIRE_FIELDS``; :func:`event_to_json` / :func:`event_from_wire` round-trip
bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping, Optional, TYPE_CHECKING

if TYPE_CHECKING:
    from .config import SiteConfig


class EventRejected(ValueError):
    """A candidate telemetry event violates an invariant.

    ``code`` is a stable machine-readable name of the violated invariant.
    """

    code = "rejected"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class UnknownLift(EventRejected):
    code = "unknown_lift"


class LevelOutOfRange(EventRejected):
    code = "level_out_of_range"


class MissingWaitTime(EventRejected):
    code = "missing_wait_time"


class UnexpectedWaitTime(EventRejected):
    code = "unexpected_wait_time"


class InvalidDirection(EventRejected):
    code = "invalid_direction"


class MalformedEvent(EventRejected):
    code = "malformed_event"


class InvalidWindow(ValueError):
    code = "invalid_window"


class OperationMode(Enum):
    """Operating state of a lift. NORMAL is the only working mode.

    The numeric values are the stable mode ids used on the wire and in
    storage.
    """

    NORMAL = 0
    OUT_OF_SERVICE = 1
    NO_COMMUNICATION = 2
    IN_MAINTENANCE = 3

    @property
    def mode_id(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def working(self) -> bool:
        return self is OperationMode.NORMAL

    @classmethod
    def from_id(cls, mode_id: int) -> "OperationMode":
        try:
            return cls(mode_id)
        except ValueError:
            raise MalformedEvent(f"unknown operation mode id {mode_id!r}") from None

    @classmethod
    def from_label(cls, label: str) -> "OperationMode":
        for mode in cls:
            if mode.label == label:
                return mode
        raise MalformedEvent(f"unknown operation mode {label!r}")


NOT_WORKING_MODES = frozenset(m for m in OperationMode if not m.working)


class Direction(Enum):
    UP = "up"
    DOWN = "down"
    NONE = "none"


class EventType(Enum):
    HALL_CALL_REGISTERED = "hall_call_registered"
    HALL_CALL_SERVED = "hall_call_served"
    CAR_ARRIVAL = "car_arrival"
    DOOR_OPEN = "door_open"
    DOOR_CLOSE = "door_close"
    MODE_CHANGE = "mode_change"
    EMERGENCY = "emergency"
    HEARTBEAT = "heartbeat"


HALL_CALL_TYPES = frozenset({EventType.HALL_CALL_REGISTERED, EventType.HALL_CALL_SERVED})


class DoorStatus(Enum):
    OPEN = "open"
    CLOSED = "closed"
    OPENING = "opening"
    CLOSING = "closing"


@dataclass(frozen=True, order=True)
class LiftId:
    """Identifies one lift: building code plus unit number within it."""

    building: str
    unit: int

    def __post_init__(self):
        if not self.building:
            raise MalformedEvent("lift id requires a building code")
        if self.unit < 1:
            raise MalformedEvent(f"lift unit must be >= 1, got {self.unit}")

    def __str__(self) -> str:
        return f"{self.building}-{self.unit}"

    @classmethod
    def parse(cls, text: str) -> "LiftId":
        building, sep, unit = text.rpartition("-")
        if not sep or not building:
            raise MalformedEvent(f"lift id {text!r} is not of the form <building>-<unit>")
        try:
            return cls(building, int(unit))
        except ValueError:
            raise MalformedEvent(f"lift id {text!r} has a non-numeric unit") from None


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC-3339 timestamp into an aware UTC datetime, truncated to seconds."""
    if not isinstance(text, str):
        raise MalformedEvent(f"timestamp must be a string, got {type(text).__name__}")
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError:
        raise MalformedEvent(f"timestamp {text!r} is not RFC-3339") from None
    if parsed.tzinfo is None:
        raise MalformedEvent(f"timestamp {text!r} has no UTC offset")
    return parsed.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(at: datetime) -> str:
    """Render an aware datetime as RFC-3339 UTC with second resolution."""
    return at.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class LiftEvent:
    """One telemetry record from a data logger.

    ``wait_time_s`` is present exactly on HALL_CALL_SERVED events; hall-call
    events always carry an up or down direction. The mode carried by a
    MODE_CHANGE event is the mode changed *to*.
    """

    lift: LiftId
    occurred_at: datetime
    direction: Direction
    wait_time_s: Optional[int]
    operation_mode: OperationMode
    event_type: EventType
    floor_position: int
    door_status: DoorStatus

    def __post_init__(self):
        if self.occurred_at.tzinfo is None:
            raise MalformedEvent("occurred_at must be timezone-aware")
        if self.occurred_at.microsecond:
            object.__setattr__(self, "occurred_at", self.occurred_at.replace(microsecond=0))
        object.__setattr__(self, "occurred_at", self.occurred_at.astimezone(timezone.utc))
        if self.event_type is EventType.HALL_CALL_SERVED:
            if self.wait_time_s is None:
                raise MissingWaitTime("hall_call_served requires wait_time_s")
            if self.wait_time_s < 0:
                raise MalformedEvent(f"wait_time_s must be >= 0, got {self.wait_time_s}")
        elif self.wait_time_s is not None:
            raise UnexpectedWaitTime(
                f"{self.event_type.value} must not carry wait_time_s"
            )
        if self.event_type in HALL_CALL_TYPES and self.direction is Direction.NONE:
            raise InvalidDirection(f"{self.event_type.value} requires an up or down direction")


# Figure-style wire field order; every line carries all of them.
WIRE_FIELDS = (
    "lift_id",
    "occurred_time",
    "direction",
    "wait_time_s",
    "operation_mode_id",
    "event_type",
    "floor_position",
    "door_status",
)


def event_to_wire(event: LiftEvent) -> dict:
    return {
        "lift_id": str(event.lift),
        "occurred_time": format_timestamp(event.occurred_at),
        "direction": event.direction.value,
        "wait_time_s": event.wait_time_s,
        "operation_mode_id": event.operation_mode.mode_id,
        "event_type": event.event_type.value,
        "floor_position": event.floor_position,
        "door_status": event.door_status.value,
    }


def event_to_json(event: LiftEvent) -> str:
    return json.dumps(event_to_wire(event))


def event_from_wire(raw: Mapping) -> LiftEvent:
    """Build a LiftEvent from a parsed wire object, checking intrinsic invariants.

    Site-dependent checks are left to :func:`validate_event`.
    """
    if not isinstance(raw, Mapping):
        raise MalformedEvent("event must be a JSON object")
    missing = [f for f in WIRE_FIELDS if f not in raw]
    if missing:
        raise MalformedEvent(f"missing fields: {', '.join(missing)}")
    lift_id = raw["lift_id"]
    if not isinstance(lift_id, str):
        raise MalformedEvent("lift_id must be a string")
    wait = raw["wait_time_s"]
    if wait is not None and (isinstance(wait, bool) or not isinstance(wait, int)):
        raise MalformedEvent(f"wait_time_s must be an integer or null, got {wait!r}")
    floor = raw["floor_position"]
    if isinstance(floor, bool) or not isinstance(floor, int):
        raise MalformedEvent(f"floor_position must be an integer, got {floor!r}")
    mode_id = raw["operation_mode_id"]
    if isinstance(mode_id, bool) or not isinstance(mode_id, int):
        raise MalformedEvent(f"operation_mode_id must be an integer, got {mode_id!r}")
    try:
        direction = Direction(raw["direction"])
    except ValueError:
        raise MalformedEvent(f"unknown direction {raw['direction']!r}") from None
    try:
        event_type = EventType(raw["event_type"])
    except ValueError:
        raise MalformedEvent(f"unknown event type {raw['event_type']!r}") from None
    try:
        door = DoorStatus(raw["door_status"])
    except ValueError:
        raise MalformedEvent(f"unknown door status {raw['door_status']!r}") from None
    return LiftEvent(
        lift=LiftId.parse(lift_id),
        occurred_at=parse_timestamp(raw["occurred_time"]),
        direction=direction,
        wait_time_s=wait,
        operation_mode=OperationMode.from_id(mode_id),
        event_type=event_type,
        floor_position=floor,
        door_status=door,
    )


def validate_event(raw: Mapping, site: "SiteConfig") -> LiftEvent:
    """Validate one candidate event against the site configuration.

    Total: every input either returns a LiftEvent or raises an
    :class:`EventRejected` naming the violated invariant.
    """
    event = raw if isinstance(raw, LiftEvent) else event_from_wire(raw)
    if not site.has_lift(event.lift):
        raise UnknownLift(f"lift {event.lift} is not configured")
    if not site.level_in_range(event.lift.building, event.floor_position):
        lo, hi = site.level_range(event.lift.building)
        raise LevelOutOfRange(
            f"floor {event.floor_position} outside levels {lo}..{hi} of {event.lift.building}"
        )
    return event


@dataclass(frozen=True)
class TimeWindow:
    """Half-open query window [start, end) in UTC."""

    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise InvalidWindow("window bounds must be timezone-aware")
        object.__setattr__(self, "start", self.start.astimezone(timezone.utc))
        object.__setattr__(self, "end", self.end.astimezone(timezone.utc))
        if self.start >= self.end:
            raise InvalidWindow(
                f"window start {format_timestamp(self.start)} must precede end "
                f"{format_timestamp(self.end)}"
            )

    def contains(self, at: datetime) -> bool:
        return self.start <= at < self.end


@dataclass(frozen=True)
class QueryScope:
    """Which lifts a query covers: one lift, one building, or the whole site."""

    lift: Optional[LiftId] = None
    building: Optional[str] = None

    def __post_init__(self):
        if self.lift is not None and self.building is not None:
            raise ValueError("scope takes a lift or a building, not both")

    @classmethod
    def single_lift(cls, lift: LiftId) -> "QueryScope":
        return cls(lift=lift)

    @classmethod
    def for_building(cls, code: str) -> "QueryScope":
        return cls(building=code)

    @classmethod
    def all_lifts(cls) -> "QueryScope":
        return cls()

    def matches(self, lift: LiftId) -> bool:
        if self.lift is not None:
            return lift == self.lift
        if self.building is not None:
            return lift.building == self.building
        return True

    def validate(self, site: "SiteConfig") -> "QueryScope":
        if self.lift is not None and not site.has_lift(self.lift):
            raise UnknownLift(f"lift {self.lift} is not configured")
        if self.building is not None and not site.has_building(self.building):
            raise UnknownLift(f"building {self.building} is not configured")
        return self

    def describe(self) -> str:
        if self.lift is not None:
            return str(self.lift)
        if self.building is not None:
            return self.building
        return "all lifts"

"""Deterministic lift-fleet simulator emitting telemetry in the store file format.

Hall calls arrive as a Poisson process per (floor, direction) with hourly
piecewise-constant rates; each stream gets its own child generator derived
from the run seed, so one seed fully determines the output. Cars use a
nearest-car dispatch policy; calls that find no working car queue until one
recovers. Scheduled faults emit a mode-change pair and re-dispatch the
faulted car's workload; heartbeats go out every 300 s per working lift,
matching the loggers' batching cadence.

The run drains all outstanding calls after the arrival horizon ends, so
every registered call is eventually served and its wait equals the
registration-to-arrival gap.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, SiteConfig, load_site, site_from_dict
from .model import (
    Direction,
    DoorStatus,
    EventType,
    LiftEvent,
    LiftId,
    OperationMode,
    event_to_json,
    parse_timestamp,
)

HEARTBEAT_INTERVAL_S = 300


class InvalidConfig(ValueError):
    code = "invalid_config"


class NoWorkingLift(Exception):
    """No working lift can serve the call right now; it stays queued."""


@dataclass(frozen=True)
class FaultSpec:
    lift: LiftId
    mode: OperationMode
    start_s: int
    duration_s: int

    @property
    def end_s(self) -> int:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class EmergencySpec:
    lift: LiftId
    at_s: int


@dataclass(frozen=True)
class SimConfig:
    site: SiteConfig
    start: datetime
    duration_s: int
    seed: int
    # 24 hourly rates (calls/hour) applied to every (served floor, direction)
    # stream of the building; buildings absent from the map generate no calls.
    arrival_rates: dict[str, tuple[float, ...]]
    faults: tuple[FaultSpec, ...] = ()
    emergencies: tuple[EmergencySpec, ...] = ()


def sim_config_from_dict(doc: dict, base_dir: Path | str = ".") -> SimConfig:
    site_ref = doc.get("site")
    if isinstance(site_ref, str):
        site = load_site(Path(base_dir) / site_ref)
    elif isinstance(site_ref, dict):
        site = site_from_dict(site_ref)
    else:
        raise InvalidConfig("site must be a path or an inline site object")
    try:
        start = parse_timestamp(doc["start"])
    except KeyError:
        raise InvalidConfig("missing start timestamp") from None
    duration_s = int(doc.get("duration_s", 86400))
    if duration_s <= 0:
        raise InvalidConfig("duration_s must be positive")

    rates: dict[str, tuple[float, ...]] = {}
    for code, raw in doc.get("arrival_rates", {}).items():
        if not site.has_building(code):
            raise InvalidConfig(f"arrival_rates references unknown building {code!r}")
        hourly = tuple(float(raw) for _ in range(24)) if isinstance(raw, (int, float)) else tuple(
            float(x) for x in raw
        )
        if len(hourly) != 24:
            raise InvalidConfig(f"building {code}: need 24 hourly rates, got {len(hourly)}")
        if any(r < 0 for r in hourly):
            raise InvalidConfig(f"building {code}: rates must be >= 0")
        if any(r > 0 for r in hourly) and not site.buildings[code].lifts:
            raise InvalidConfig(f"building {code} has hall-call demand but no lifts")
        rates[code] = hourly

    faults = []
    per_lift_intervals: dict[LiftId, list[tuple[int, int]]] = {}
    for raw in doc.get("faults", []):
        lift = LiftId.parse(raw["lift"])
        if not site.has_lift(lift):
            raise InvalidConfig(f"fault references unknown lift {lift}")
        mode = OperationMode.from_label(raw["mode"])
        if mode.working:
            raise InvalidConfig("fault mode must be a not-working mode")
        start_s, fault_dur = int(raw["start_s"]), int(raw["duration_s"])
        if fault_dur <= 0:
            raise InvalidConfig("fault duration_s must be positive")
        if start_s < 0 or start_s + fault_dur > duration_s:
            raise InvalidConfig(f"fault for {lift} must lie within the run duration")
        for lo, hi in per_lift_intervals.get(lift, []):
            if start_s < hi and lo < start_s + fault_dur:
                raise InvalidConfig(f"overlapping faults for {lift}")
        per_lift_intervals.setdefault(lift, []).append((start_s, start_s + fault_dur))
        faults.append(FaultSpec(lift=lift, mode=mode, start_s=start_s, duration_s=fault_dur))

    emergencies = []
    for raw in doc.get("emergencies", []):
        lift = LiftId.parse(raw["lift"])
        if not site.has_lift(lift):
            raise InvalidConfig(f"emergency references unknown lift {lift}")
        at_s = int(raw["at_s"])
        if not 0 <= at_s < duration_s:
            raise InvalidConfig("emergency at_s must lie within the run duration")
        emergencies.append(EmergencySpec(lift=lift, at_s=at_s))

    return SimConfig(
        site=site,
        start=start,
        duration_s=duration_s,
        seed=int(doc.get("seed", 0)),
        arrival_rates=rates,
        faults=tuple(sorted(faults, key=lambda f: (f.start_s, str(f.lift)))),
        emergencies=tuple(sorted(emergencies, key=lambda e: (e.at_s, str(e.lift)))),
    )


def load_sim_config(path: Path | str) -> SimConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot load simulation config {path}: {exc}") from exc
    return sim_config_from_dict(doc, base_dir=path.parent)


@dataclass(frozen=True)
class CarSnapshot:
    lift: LiftId
    position: int
    working: bool
    served_levels: frozenset[int]


def dispatch(cars: Sequence[CarSnapshot], call_floor: int) -> LiftId:
    """Nearest-car policy: minimal distance to the call floor, ties to lowest unit."""
    candidates = [c for c in cars if c.working and call_floor in c.served_levels]
    if not candidates:
        raise NoWorkingLift(f"no working lift serves floor {call_floor}")
    best = min(candidates, key=lambda c: (abs(c.position - call_floor), c.lift.unit))
    return best.lift


@dataclass
class _Call:
    call_id: int
    building: str
    floor: int
    direction: Direction
    registered_s: int
    record: "_Rec"


@dataclass
class _Rec:
    """Mutable event record; the lift of a hall-call registration is resolved
    when the call is served."""

    event_type: EventType
    at_s: int
    lift: Optional[LiftId]
    direction: Direction
    wait_time_s: Optional[int]
    mode: OperationMode
    floor: int
    door: DoorStatus


@dataclass
class _Car:
    lift: LiftId
    served: frozenset[int]
    travel_s_per_level: float
    dwell_s: int
    position: int
    mode: OperationMode = OperationMode.NORMAL
    queue: deque = field(default_factory=deque)
    active: Optional[_Call] = None
    version: int = 0

    @property
    def working(self) -> bool:
        return self.mode is OperationMode.NORMAL

    @property
    def idle(self) -> bool:
        return self.active is None

    def travel_time(self, to_floor: int) -> int:
        return int(round(abs(self.position - to_floor) * self.travel_s_per_level))


def _poisson_arrivals(rng: random.Random, hourly: tuple[float, ...], start: datetime, duration_s: int) -> list[int]:
    """Arrival seconds over [0, duration) for piecewise-constant hour-of-day rates."""
    out: list[int] = []
    seg_start = 0
    while seg_start < duration_s:
        at = start + timedelta(seconds=seg_start)
        until_boundary = 3600 - (at.minute * 60 + at.second)
        seg_end = min(duration_s, seg_start + until_boundary)
        rate_per_s = hourly[at.hour] / 3600.0
        if rate_per_s > 0:
            t = float(seg_start)
            while True:
                t += rng.expovariate(rate_per_s)
                if t >= seg_end:
                    break
                out.append(int(t))
        seg_start = seg_end
    return out


class _Sim:
    def __init__(self, config: SimConfig):
        self.config = config
        self.site = config.site
        self.records: list[_Rec] = []
        self.heap: list[tuple[int, int, tuple]] = []
        self._push_seq = 0
        self._next_call_id = 0
        self.cars: dict[LiftId, _Car] = {}
        self.pending: dict[str, list[_Call]] = {code: [] for code in self.site.buildings}
        for lc in self.site.all_lifts():
            self.cars[lc.lift] = _Car(
                lift=lc.lift,
                served=frozenset(lc.served_levels),
                travel_s_per_level=lc.travel_s_per_level,
                dwell_s=int(round(lc.door_dwell_s)),
                position=min(lc.served_levels),
            )
        self.fault_mode_at = self._fault_lookup()

    def _fault_lookup(self):
        intervals: dict[LiftId, list[FaultSpec]] = {}
        for fault in self.config.faults:
            intervals.setdefault(fault.lift, []).append(fault)

        def mode_at(lift: LiftId, t: int) -> OperationMode:
            for fault in intervals.get(lift, []):
                if fault.start_s <= t < fault.end_s:
                    return fault.mode
            return OperationMode.NORMAL

        return mode_at

    def _push(self, at_s: int, action: tuple):
        heapq.heappush(self.heap, (at_s, self._push_seq, action))
        self._push_seq += 1

    def _emit(self, rec: _Rec) -> _Rec:
        self.records.append(rec)
        return rec

    # -- scheduling ---------------------------------------------------------

    def _schedule_all(self):
        for fault in self.config.faults:
            self._push(fault.start_s, ("fault_start", fault))
            self._push(fault.end_s, ("fault_end", fault))
        for emergency in self.config.emergencies:
            self._push(emergency.at_s, ("emergency", emergency))
        for lift in sorted(self.cars):
            for t in range(0, self.config.duration_s, HEARTBEAT_INTERVAL_S):
                self._push(t, ("heartbeat", lift))
        for code in sorted(self.config.arrival_rates):
            hourly = self.config.arrival_rates[code]
            building = self.site.buildings[code]
            served_union = sorted({l for lc in building.lifts for l in lc.served_levels})
            if not served_union:
                continue
            lo, hi = served_union[0], served_union[-1]
            for floor in served_union:
                for direction in (Direction.UP, Direction.DOWN):
                    if direction is Direction.UP and floor >= hi:
                        continue
                    if direction is Direction.DOWN and floor <= lo:
                        continue
                    rng = random.Random(f"{self.config.seed}:{code}:{floor}:{direction.value}")
                    for at_s in _poisson_arrivals(rng, hourly, self.config.start, self.config.duration_s):
                        self._push(at_s, ("call", code, floor, direction))

    # -- car workflow ---------------------------------------------------------

    def _assign(self, call: _Call, now: int):
        snapshots = [
            CarSnapshot(c.lift, c.position, c.working, c.served)
            for c in self.cars.values()
            if c.lift.building == call.building
        ]
        try:
            chosen = dispatch(snapshots, call.floor)
        except NoWorkingLift:
            pending = self.pending[call.building]
            pending.append(call)
            pending.sort(key=lambda c: (c.registered_s, c.call_id))
            return
        car = self.cars[chosen]
        if car.idle:
            self._start_service(car, call, now)
        else:
            car.queue.append(call)

    def _start_service(self, car: _Car, call: _Call, now: int):
        car.active = call
        arrive = now + car.travel_time(call.floor)
        self._push(arrive + car.dwell_s, ("service_done", car.lift, car.version, call, arrive))

    def _finish_service(self, car: _Car, call: _Call, arrive: int):
        call.record.lift = car.lift
        wait = arrive - call.registered_s
        self._emit(
            _Rec(EventType.CAR_ARRIVAL, arrive, car.lift, call.direction, None,
                 OperationMode.NORMAL, call.floor, DoorStatus.CLOSED)
        )
        self._emit(
            _Rec(EventType.HALL_CALL_SERVED, arrive, car.lift, call.direction, wait,
                 OperationMode.NORMAL, call.floor, DoorStatus.CLOSED)
        )
        self._emit(
            _Rec(EventType.DOOR_OPEN, arrive, car.lift, Direction.NONE, None,
                 OperationMode.NORMAL, call.floor, DoorStatus.OPEN)
        )
        self._emit(
            _Rec(EventType.DOOR_CLOSE, arrive + car.dwell_s, car.lift, Direction.NONE, None,
                 OperationMode.NORMAL, call.floor, DoorStatus.CLOSED)
        )
        car.position = call.floor
        car.active = None

    def _pull_next(self, car: _Car, now: int):
        """Start the oldest serviceable call, whether queued on this car or
        stranded in the building's pending backlog."""
        if not car.working or not car.idle:
            return
        pending = self.pending[car.lift.building]
        pending_idx = next((i for i, c in enumerate(pending) if c.floor in car.served), None)
        own = car.queue[0] if car.queue else None
        backlog = pending[pending_idx] if pending_idx is not None else None
        if own is None and backlog is None:
            return
        if backlog is None or (
            own is not None and (own.registered_s, own.call_id) <= (backlog.registered_s, backlog.call_id)
        ):
            self._start_service(car, car.queue.popleft(), now)
        else:
            del pending[pending_idx]
            self._start_service(car, backlog, now)

    # -- event handlers ----------------------------------------------------------

    def _on_call(self, now: int, building: str, floor: int, direction: Direction):
        record = self._emit(
            _Rec(EventType.HALL_CALL_REGISTERED, now, None, direction, None,
                 OperationMode.NORMAL, floor, DoorStatus.CLOSED)
        )
        call = _Call(
            call_id=self._next_call_id,
            building=building,
            floor=floor,
            direction=direction,
            registered_s=now,
            record=record,
        )
        self._next_call_id += 1
        self._assign(call, now)

    def _on_fault_start(self, now: int, fault: FaultSpec):
        car = self.cars[fault.lift]
        car.mode = fault.mode
        car.version += 1  # invalidates any in-flight service completion
        self._emit(
            _Rec(EventType.MODE_CHANGE, now, car.lift, Direction.NONE, None,
                 fault.mode, car.position, DoorStatus.CLOSED)
        )
        orphaned = ([car.active] if car.active else []) + list(car.queue)
        car.active = None
        car.queue.clear()
        for call in orphaned:
            self._assign(call, now)

    def _on_fault_end(self, now: int, fault: FaultSpec):
        car = self.cars[fault.lift]
        car.mode = OperationMode.NORMAL
        self._emit(
            _Rec(EventType.MODE_CHANGE, now, car.lift, Direction.NONE, None,
                 OperationMode.NORMAL, car.position, DoorStatus.CLOSED)
        )
        self._pull_next(car, now)

    def run(self) -> list[LiftEvent]:
        self._schedule_all()
        while self.heap:
            now, _, action = heapq.heappop(self.heap)
            kind = action[0]
            if kind == "call":
                self._on_call(now, action[1], action[2], action[3])
            elif kind == "fault_start":
                self._on_fault_start(now, action[1])
            elif kind == "fault_end":
                self._on_fault_end(now, action[1])
            elif kind == "emergency":
                spec: EmergencySpec = action[1]
                car = self.cars[spec.lift]
                self._emit(
                    _Rec(EventType.EMERGENCY, now, spec.lift, Direction.NONE, None,
                         self.fault_mode_at(spec.lift, now), car.position, DoorStatus.CLOSED)
                )
            elif kind == "heartbeat":
                car = self.cars[action[1]]
                if car.working:
                    self._emit(
                        _Rec(EventType.HEARTBEAT, now, car.lift, Direction.NONE, None,
                             OperationMode.NORMAL, car.position, DoorStatus.CLOSED)
                    )
            elif kind == "service_done":
                _, lift, version, call, arrive = action
                car = self.cars[lift]
                if version == car.version:
                    self._finish_service(car, call, arrive)
                    self._pull_next(car, now)

        unresolved = [r for r in self.records if r.lift is None]
        if unresolved:
            raise InvalidConfig(
                f"{len(unresolved)} hall call(s) could never be served; "
                "check that faulted floors recover within the run"
            )
        # The registration records of queued calls carry the serving car's mode
        # at the moment the button was pressed.
        for rec in self.records:
            if rec.event_type is EventType.HALL_CALL_REGISTERED:
                rec.mode = self.fault_mode_at(rec.lift, rec.at_s)
        indexed = sorted(enumerate(self.records), key=lambda pair: (pair[1].at_s, pair[0]))
        return [self._to_event(rec) for _, rec in indexed]

    def _to_event(self, rec: _Rec) -> LiftEvent:
        return LiftEvent(
            lift=rec.lift,
            occurred_at=self.config.start + timedelta(seconds=rec.at_s),
            direction=rec.direction,
            wait_time_s=rec.wait_time_s,
            operation_mode=rec.mode,
            event_type=rec.event_type,
            floor_position=rec.floor,
            door_status=rec.door,
        )


def simulate(config: SimConfig) -> list[LiftEvent]:
    """Run the fleet simulation; the returned stream is time-ordered and
    fully determined by the config (seed included)."""
    return _Sim(config).run()


def write_events(path: Path | str, events: list[LiftEvent], seed: Optional[int] = None):
    """Write events in the store file format, optionally with a seed header comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        if seed is not None:
            handle.write(f"# seed={seed}\n")
        for event in events:
            handle.write(event_to_json(event) + "\n")

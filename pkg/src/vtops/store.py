"""Append-only persistence for telemetry events, sign-ins, status transitions, and users.

Each table is one JSON-lines file under the store directory, loaded into
memory on open. The event table's line format is exactly the telemetry wire
format (see :mod:`vtops.model`), so a simulator output file, the ingest
payload, and the stored log are byte-identical line for line. Sequence
numbers are implicit: the 1-based position in append order.

Writers are serialized by a lock; queries read a consistent snapshot no
older than the last completed append.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional

from .model import (
    EventType,
    LiftEvent,
    LiftId,
    OperationMode,
    QueryScope,
    TimeWindow,
    event_from_wire,
    event_to_json,
    format_timestamp,
    parse_timestamp,
)


class StorageFailure(Exception):
    code = "storage_failure"


@dataclass(frozen=True)
class EventFilter:
    scope: QueryScope
    window: TimeWindow
    event_types: Optional[frozenset[EventType]] = None

    def admits(self, event: LiftEvent) -> bool:
        if not self.window.contains(event.occurred_at):
            return False
        if not self.scope.matches(event.lift):
            return False
        return self.event_types is None or event.event_type in self.event_types


@dataclass(frozen=True)
class StoredEvent:
    seq: int
    event: LiftEvent
    duplicate: bool


@dataclass(frozen=True)
class SignInRecord:
    user_id: str
    at: datetime
    outcome: str  # "success" | "failure"
    note: str = ""


@dataclass(frozen=True)
class StatusTransition:
    lift: LiftId
    from_mode: OperationMode
    to_mode: OperationMode
    at: datetime
    source: str  # "ingest" | "watchdog" | "manual"

    def __post_init__(self):
        if self.from_mode is self.to_mode:
            raise ValueError("a transition must change the mode")


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    display_name: str
    role: str  # "admin" | "vt_staff"
    salt: str
    password_hash: str


def _signin_to_json(rec: SignInRecord) -> str:
    return json.dumps(
        {
            "user_id": rec.user_id,
            "at": format_timestamp(rec.at),
            "outcome": rec.outcome,
            "note": rec.note,
        }
    )


def _signin_from_wire(raw: dict) -> SignInRecord:
    return SignInRecord(
        user_id=raw["user_id"],
        at=parse_timestamp(raw["at"]),
        outcome=raw["outcome"],
        note=raw.get("note", ""),
    )


def _transition_to_json(t: StatusTransition) -> str:
    return json.dumps(
        {
            "lift_id": str(t.lift),
            "from_mode_id": t.from_mode.mode_id,
            "to_mode_id": t.to_mode.mode_id,
            "at": format_timestamp(t.at),
            "source": t.source,
        }
    )


def _transition_from_wire(raw: dict) -> StatusTransition:
    return StatusTransition(
        lift=LiftId.parse(raw["lift_id"]),
        from_mode=OperationMode.from_id(raw["from_mode_id"]),
        to_mode=OperationMode.from_id(raw["to_mode_id"]),
        at=parse_timestamp(raw["at"]),
        source=raw["source"],
    )


def _user_to_json(u: UserAccount) -> str:
    return json.dumps(
        {
            "user_id": u.user_id,
            "display_name": u.display_name,
            "role": u.role,
            "salt": u.salt,
            "password_hash": u.password_hash,
        }
    )


class EventStore:
    """File-backed event log plus the small side tables the portal needs."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create store directory {self.root}: {exc}") from exc
        self._lock = threading.Lock()
        self._events: list[StoredEvent] = []
        self._dedup_seen: set[tuple[LiftId, datetime, EventType]] = set()
        self._latest: dict[LiftId, StoredEvent] = {}
        self._signins: list[SignInRecord] = []
        self._transitions: list[StatusTransition] = []
        self._users: dict[str, UserAccount] = {}
        self._load()

    # -- paths -------------------------------------------------------------

    @property
    def events_path(self) -> Path:
        return self.root / "events.jsonl"

    @property
    def signins_path(self) -> Path:
        return self.root / "signins.jsonl"

    @property
    def transitions_path(self) -> Path:
        return self.root / "transitions.jsonl"

    @property
    def users_path(self) -> Path:
        return self.root / "users.jsonl"

    # -- load / append plumbing --------------------------------------------

    def _read_lines(self, path: Path) -> Iterable[tuple[int, dict]]:
        if not path.exists():
            return
        try:
            text = path.read_text()
        except OSError as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise StorageFailure(f"{path}:{lineno}: corrupt line: {exc}") from exc

    def _load(self):
        for _, raw in self._read_lines(self.events_path):
            self._index_event(event_from_wire(raw))
        for _, raw in self._read_lines(self.signins_path):
            self._signins.append(_signin_from_wire(raw))
        for _, raw in self._read_lines(self.transitions_path):
            self._transitions.append(_transition_from_wire(raw))
        for _, raw in self._read_lines(self.users_path):
            user = UserAccount(
                user_id=raw["user_id"],
                display_name=raw["display_name"],
                role=raw["role"],
                salt=raw["salt"],
                password_hash=raw["password_hash"],
            )
            self._users[user.user_id] = user

    def _index_event(self, event: LiftEvent) -> StoredEvent:
        key = (event.lift, event.occurred_at, event.event_type)
        stored = StoredEvent(seq=len(self._events) + 1, event=event, duplicate=key in self._dedup_seen)
        self._dedup_seen.add(key)
        self._events.append(stored)
        latest = self._latest.get(event.lift)
        if latest is None or event.occurred_at >= latest.event.occurred_at:
            self._latest[event.lift] = stored
        return stored

    def _append_lines(self, path: Path, lines: list[str]):
        try:
            with path.open("a") as handle:
                handle.write("".join(line + "\n" for line in lines))
                handle.flush()
        except OSError as exc:
            raise StorageFailure(f"cannot append to {path}: {exc}") from exc

    # -- event log -----------------------------------------------------------

    def append_event(self, event: LiftEvent) -> StoredEvent:
        return self.append_events([event])[0]

    def append_events(self, events: list[LiftEvent]) -> list[StoredEvent]:
        """Append a batch atomically: either every event is durable or none is."""
        if not events:
            return []
        with self._lock:
            lines = [event_to_json(e) for e in events]
            self._append_lines(self.events_path, lines)
            return [self._index_event(e) for e in events]

    def event_count(self) -> int:
        return len(self._events)

    def query_events(self, flt: EventFilter) -> list[LiftEvent]:
        """Events admitted by the filter, ordered by occurred_at then sequence."""
        snapshot = self._events[: len(self._events)]
        hits = [s for s in snapshot if flt.admits(s.event)]
        hits.sort(key=lambda s: (s.event.occurred_at, s.seq))
        return [s.event for s in hits]

    def latest_event_per_lift(self) -> dict[LiftId, StoredEvent]:
        """Per lift, the stored event with maximal occurred_at (append order breaks ties)."""
        return dict(self._latest)

    # -- sign-in history -------------------------------------------------------

    def record_signin(self, record: SignInRecord) -> SignInRecord:
        with self._lock:
            self._append_lines(self.signins_path, [_signin_to_json(record)])
            self._signins.append(record)
        return record

    def query_signin_history(self, window: TimeWindow) -> list[SignInRecord]:
        snapshot = self._signins[: len(self._signins)]
        hits = [(i, r) for i, r in enumerate(snapshot) if window.contains(r.at)]
        hits.sort(key=lambda pair: (pair[1].at, pair[0]))
        return [r for _, r in hits]

    # -- status transitions ----------------------------------------------------

    def record_transition(self, transition: StatusTransition) -> StatusTransition:
        with self._lock:
            self._append_lines(self.transitions_path, [_transition_to_json(transition)])
            self._transitions.append(transition)
        return transition

    def transitions(self) -> list[StatusTransition]:
        """All recorded transitions in append order."""
        return self._transitions[: len(self._transitions)]

    # -- users -------------------------------------------------------------------

    def upsert_user(self, user: UserAccount) -> UserAccount:
        with self._lock:
            self._append_lines(self.users_path, [_user_to_json(user)])
            self._users[user.user_id] = user
        return user

    def get_user(self, user_id: str) -> Optional[UserAccount]:
        return self._users.get(user_id)

    def list_users(self) -> list[UserAccount]:
        return sorted(self._users.values(), key=lambda u: u.user_id)

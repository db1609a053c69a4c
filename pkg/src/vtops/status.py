"""Live per-lift status, notice board, and notifications on not-working transitions.

Status is a pure fold over the persisted transition log: a lift starts as
NO_COMMUNICATION (nothing heard yet) and each transition replaces its mode.
Reopening the store and replaying the log reproduces the same board.

Every transition into a not-working mode dispatches exactly one notification
to the configured sink. The default sink appends rendered messages to an
outbox file, one JSON object per line; delivery failures are retried once and
then recorded as failed without blocking the status update.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional, Protocol

from .config import SiteConfig
from .model import LiftId, OperationMode, format_timestamp, EventRejected
from .store import EventStore, StatusTransition

log = logging.getLogger(__name__)

INITIAL_MODE = OperationMode.NO_COMMUNICATION


class UnknownLiftError(EventRejected):
    code = "unknown_lift"


class SinkUnavailable(Exception):
    """The notification sink could not accept a message."""


@dataclass(frozen=True)
class LiftStatus:
    lift: LiftId
    working: bool
    mode: OperationMode
    since: Optional[datetime]
    data_age_s: Optional[int] = None

    def __post_init__(self):
        if self.working != self.mode.working:
            raise ValueError("working flag must mirror mode")


@dataclass(frozen=True)
class NoticeEntry:
    lift: LiftId
    mode: OperationMode
    since: Optional[datetime]
    message: str


@dataclass(frozen=True)
class DispatchRecord:
    lift: LiftId
    to_mode: OperationMode
    at: datetime
    rendered_text: str
    outcome: str  # "sent" | "failed"

    def to_wire(self) -> dict:
        return {
            "lift": str(self.lift),
            "to_mode": self.to_mode.label,
            "at": format_timestamp(self.at),
            "rendered_text": self.rendered_text,
            "outcome": self.outcome,
        }


class NotificationSink(Protocol):
    def deliver(self, record: DispatchRecord) -> None:
        """Accept one rendered notification or raise SinkUnavailable."""


class FileOutboxSink:
    """Default sink: append each dispatch record to a JSON-lines outbox file."""

    def __init__(self, path: Path | str):
        self.path = Path(path)

    def deliver(self, record: DispatchRecord) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as handle:
                handle.write(json.dumps(record.to_wire()) + "\n")
        except OSError as exc:
            raise SinkUnavailable(str(exc)) from exc


class StdoutSink:
    """Print each rendered notification; handy for demos and piping."""

    def deliver(self, record: DispatchRecord) -> None:
        print(json.dumps(record.to_wire()), flush=True)


class MemorySink:
    """Test sink; optionally fails a fixed number of deliveries."""

    def __init__(self, fail_first: int = 0):
        self.records: list[DispatchRecord] = []
        self._fail_remaining = fail_first

    def deliver(self, record: DispatchRecord) -> None:
        if self._fail_remaining > 0:
            self._fail_remaining -= 1
            raise SinkUnavailable("sink down")
        self.records.append(record)


def render_notice(lift: LiftId, mode: OperationMode, since: Optional[datetime]) -> str:
    when = format_timestamp(since) if since else "an unknown time"
    return f"Lift {lift} is {mode.label.replace('_', ' ')} since {when}"


class StatusBoard:
    """Current mode per configured lift, rebuilt from the transition log on open."""

    def __init__(self, store: EventStore, site: SiteConfig, sink: NotificationSink):
        self.store = store
        self.site = site
        self.sink = sink
        self.dispatch_records: list[DispatchRecord] = []
        self._lock = threading.Lock()
        self._state: dict[LiftId, tuple[OperationMode, Optional[datetime]]] = {
            lift: (INITIAL_MODE, None) for lift in site.lift_ids()
        }
        for transition in store.transitions():
            if transition.lift in self._state:
                self._state[transition.lift] = (transition.to_mode, transition.at)

    def mode_of(self, lift: LiftId) -> OperationMode:
        try:
            return self._state[lift][0]
        except KeyError:
            raise UnknownLiftError(f"lift {lift} is not configured") from None

    def apply_mode_change(
        self, lift: LiftId, to_mode: OperationMode, at: datetime, source: str
    ) -> Optional[StatusTransition]:
        """Record a mode transition; returns None when the mode is unchanged.

        Out-of-order timestamps (at earlier than the current since) are applied
        in arrival order with a warning.
        """
        with self._lock:
            if lift not in self._state:
                raise UnknownLiftError(f"lift {lift} is not configured")
            current_mode, since = self._state[lift]
            if to_mode is current_mode:
                return None
            if since is not None and at < since:
                log.warning(
                    "out-of-order mode change for %s: %s before current since %s",
                    lift, format_timestamp(at), format_timestamp(since),
                )
            transition = StatusTransition(
                lift=lift, from_mode=current_mode, to_mode=to_mode, at=at, source=source
            )
            self.store.record_transition(transition)
            self._state[lift] = (to_mode, at)
        if not to_mode.working:
            self.notify(transition)
        return transition

    def current_statuses(
        self, now: datetime, last_contact: Optional[dict[LiftId, datetime]] = None
    ) -> list[LiftStatus]:
        """One status per configured lift, ordered by building then unit."""
        contact = last_contact or {}
        statuses = []
        for lift in self.site.lift_ids():
            mode, since = self._state[lift]
            seen = contact.get(lift)
            age = max(0, int((now - seen).total_seconds())) if seen is not None else None
            statuses.append(
                LiftStatus(lift=lift, working=mode.working, mode=mode, since=since, data_age_s=age)
            )
        return statuses

    def notice_board(self) -> list[NoticeEntry]:
        """One entry per currently not-working lift."""
        entries = []
        for lift in self.site.lift_ids():
            mode, since = self._state[lift]
            if not mode.working:
                entries.append(
                    NoticeEntry(lift=lift, mode=mode, since=since, message=render_notice(lift, mode, since))
                )
        return entries

    def notify(self, transition: StatusTransition) -> DispatchRecord:
        """Dispatch one notification for a transition into a not-working mode."""
        if transition.to_mode.working:
            raise ValueError("notifications are only sent for not-working transitions")
        text = render_notice(transition.lift, transition.to_mode, transition.at)
        record = DispatchRecord(
            lift=transition.lift,
            to_mode=transition.to_mode,
            at=transition.at,
            rendered_text=text,
            outcome="sent",
        )
        for attempt in (1, 2):
            try:
                self.sink.deliver(record)
                break
            except SinkUnavailable as exc:
                if attempt == 2:
                    record = DispatchRecord(
                        lift=record.lift,
                        to_mode=record.to_mode,
                        at=record.at,
                        rendered_text=record.rendered_text,
                        outcome="failed",
                    )
                    log.error("notification for %s failed after retry: %s", transition.lift, exc)
        self.dispatch_records.append(record)
        return record

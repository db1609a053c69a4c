"""Logger frame intake: decode, validate, append, track contact, watch for silence.

A frame is a JSON-lines payload of telemetry events from one logger. Decoding
is all-or-nothing: the first bad line rejects the whole frame and nothing is
appended. Lines starting with ``#`` are comments (the simulator writes its
seed in one) and are skipped.

The watchdog transitions lifts that have been silent beyond the threshold to
NO_COMMUNICATION; the default threshold of 900 s is three missed logger
batches at the loggers' five-minute cadence.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Optional

from .config import SiteConfig
from .model import (
    EventRejected,
    EventType,
    LiftEvent,
    LiftId,
    OperationMode,
    format_timestamp,
    validate_event,
)
from .status import StatusBoard
from .store import EventStore

import json

DEFAULT_WATCHDOG_THRESHOLD_S = 900


class FrameRejected(ValueError):
    """The whole frame was refused; ``line`` is the offending 1-based line number."""

    def __init__(self, code: str, line: Optional[int], detail: str):
        super().__init__(detail)
        self.code = code
        self.line = line
        self.detail = detail


@dataclass(frozen=True)
class LoggerFrame:
    logger_id: str
    sent_at: datetime
    events: tuple[LiftEvent, ...]


class ContactTracker:
    """Maximum occurred_at ever ingested, per lift."""

    def __init__(self):
        self._lock = threading.Lock()
        self._last: dict[LiftId, datetime] = {}

    def update(self, lift: LiftId, at: datetime):
        with self._lock:
            current = self._last.get(lift)
            if current is None or at > current:
                self._last[lift] = at

    def last_contact(self, lift: LiftId) -> Optional[datetime]:
        return self._last.get(lift)

    def snapshot(self) -> dict[LiftId, datetime]:
        with self._lock:
            return dict(self._last)


def decode_frame(
    payload: bytes | str, site: SiteConfig, logger_id: str, sent_at: Optional[datetime]
) -> LoggerFrame:
    """Parse and validate a JSON-lines payload into a frame, atomically.

    Raises FrameRejected citing the first offending line; comment lines
    (``#`` prefix) and blank lines are skipped but keep their line numbers.
    Loggers batch with delay, so events after ``sent_at`` are rejected;
    pass ``sent_at=None`` when replaying a complete stored file, which
    stamps the frame with its own newest event.
    """
    if isinstance(payload, bytes):
        try:
            payload = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FrameRejected("malformed_payload", None, f"payload is not UTF-8: {exc}") from exc
    events = []
    for lineno, line in enumerate(payload.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise FrameRejected("malformed_payload", lineno, f"line {lineno}: {exc}") from exc
        try:
            event = validate_event(raw, site)
        except EventRejected as exc:
            raise FrameRejected(exc.code, lineno, f"line {lineno}: {exc.detail}") from exc
        if sent_at is not None and event.occurred_at > sent_at:
            raise FrameRejected(
                "malformed_payload",
                lineno,
                f"line {lineno}: occurred_time {format_timestamp(event.occurred_at)} is after "
                f"the frame's sent_at {format_timestamp(sent_at)}",
            )
        events.append(event)
    if not events:
        raise FrameRejected("malformed_payload", None, "payload contains no events")
    if sent_at is None:
        sent_at = max(e.occurred_at for e in events)
    return LoggerFrame(logger_id=logger_id, sent_at=sent_at, events=tuple(events))


class IngestService:
    """Applies decoded frames to the store, status board, and contact tracker."""

    def __init__(
        self,
        store: EventStore,
        site: SiteConfig,
        board: StatusBoard,
        tracker: Optional[ContactTracker] = None,
    ):
        self.store = store
        self.site = site
        self.board = board
        self.tracker = tracker or ContactTracker()
        # Rebuild last-contact from whatever the store already holds.
        for lift, stored in store.latest_event_per_lift().items():
            self.tracker.update(lift, stored.event.occurred_at)

    def ingest_frame(self, frame: LoggerFrame, now: Optional[datetime] = None) -> int:
        """Append every event in the frame; returns the count appended.

        Mode-change events always reach the status board; any other event
        recovers a NO_COMMUNICATION lift to the mode it carries.
        """
        events = list(frame.events)
        self.store.append_events(events)
        for event in events:
            self.tracker.update(event.lift, event.occurred_at)
            if event.event_type is EventType.MODE_CHANGE:
                self.board.apply_mode_change(
                    event.lift, event.operation_mode, event.occurred_at, source="ingest"
                )
            elif self.board.mode_of(event.lift) is OperationMode.NO_COMMUNICATION:
                self.board.apply_mode_change(
                    event.lift, event.operation_mode, event.occurred_at, source="ingest"
                )
        return len(events)

    def watchdog_sweep(
        self, now: datetime, threshold_s: int = DEFAULT_WATCHDOG_THRESHOLD_S
    ) -> list[LiftId]:
        """Transition lifts silent beyond the threshold to NO_COMMUNICATION.

        Only working lifts are swept: an explicit out-of-service or maintenance
        mode already explains the silence. Idempotent per state.
        """
        if threshold_s <= 0:
            raise ValueError("threshold_s must be positive")
        transitioned = []
        for lift in self.site.lift_ids():
            last = self.tracker.last_contact(lift)
            if last is None:
                continue
            if (now - last).total_seconds() <= threshold_s:
                continue
            if self.board.mode_of(lift) is not OperationMode.NORMAL:
                continue
            self.board.apply_mode_change(
                lift, OperationMode.NO_COMMUNICATION, now, source="watchdog"
            )
            transitioned.append(lift)
        return transitioned

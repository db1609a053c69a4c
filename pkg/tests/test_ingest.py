import random

import pytest

from vtops.ingest import (
    ContactTracker,
    FrameRejected,
    IngestService,
    decode_frame,
)
from vtops.model import EventType, LiftId, OperationMode, event_to_json
from vtops.status import MemorySink, StatusBoard

from conftest import at, make_event, mode_change, served

B8_1 = LiftId("B8", 1)
B8_2 = LiftId("B8", 2)


@pytest.fixture
def service(store, site):
    return IngestService(store, site, StatusBoard(store, site, MemorySink()))


def payload_of(*events) -> str:
    return "\n".join(event_to_json(e) for e in events) + "\n"


class TestDecodeFrame:
    def test_empty_payload_rejected(self, site):
        with pytest.raises(FrameRejected) as exc:
            decode_frame(b"", site, "logger-1", at(100))
        assert exc.value.code == "malformed_payload"

    def test_three_valid_lines(self, site):
        frame = decode_frame(
            payload_of(make_event(offset_s=0), make_event(offset_s=5), served(offset_s=9, wait=3)),
            site, "logger-1", at(100),
        )
        assert len(frame.events) == 3
        assert frame.logger_id == "logger-1"

    def test_bad_line_cites_line_number(self, site):
        payload = payload_of(make_event(offset_s=0)) + "{not json}\n"
        with pytest.raises(FrameRejected) as exc:
            decode_frame(payload, site, "logger-1", at(100))
        assert exc.value.line == 2

    def test_invalid_event_cites_line_and_invariant(self, site):
        bad = payload_of(make_event(offset_s=0), make_event(lift="B99-1", offset_s=1))
        with pytest.raises(FrameRejected) as exc:
            decode_frame(bad, site, "logger-1", at(100))
        assert exc.value.line == 2
        assert exc.value.code == "unknown_lift"

    def test_comment_and_blank_lines_skipped(self, site):
        payload = "# seed=42\n\n" + payload_of(make_event(offset_s=0))
        frame = decode_frame(payload, site, "logger-1", at(100))
        assert len(frame.events) == 1

    def test_event_newer_than_sent_at_rejected(self, site):
        with pytest.raises(FrameRejected) as exc:
            decode_frame(payload_of(make_event(offset_s=200)), site, "logger-1", at(100))
        assert exc.value.code == "malformed_payload"

    def test_replay_mode_stamps_sent_at_from_payload(self, site):
        frame = decode_frame(
            payload_of(make_event(offset_s=50), make_event(offset_s=200)),
            site, "file", sent_at=None,
        )
        assert frame.sent_at == at(200)


class TestIngestFrame:
    def test_heartbeat_advances_last_contact(self, service, site):
        frame = decode_frame(payload_of(make_event(offset_s=42)), site, "l", at(100))
        assert service.ingest_frame(frame) == 1
        assert service.tracker.last_contact(B8_1) == at(42)
        assert service.store.event_count() == 1

    def test_mode_change_forwarded_to_status(self, service, site):
        frame = decode_frame(
            payload_of(mode_change(offset_s=10, mode=OperationMode.OUT_OF_SERVICE)),
            site, "l", at(100),
        )
        service.ingest_frame(frame)
        assert service.board.mode_of(B8_1) is OperationMode.OUT_OF_SERVICE
        assert len(service.board.sink.records) == 1

    def test_last_contact_is_max_not_latest_frame(self, service, site):
        late = decode_frame(payload_of(make_event(offset_s=90)), site, "l", at(100))
        early = decode_frame(payload_of(make_event(offset_s=30)), site, "l", at(100))
        service.ingest_frame(late)
        service.ingest_frame(early)
        assert service.tracker.last_contact(B8_1) == at(90)

    def test_any_event_recovers_from_no_communication(self, service, site):
        service.board.apply_mode_change(B8_1, OperationMode.NORMAL, at(0), "ingest")
        service.board.apply_mode_change(B8_1, OperationMode.NO_COMMUNICATION, at(10), "watchdog")
        frame = decode_frame(payload_of(make_event(offset_s=20)), site, "l", at(100))
        service.ingest_frame(frame)
        assert service.board.mode_of(B8_1) is OperationMode.NORMAL

    def test_non_mode_change_does_not_override_explicit_mode(self, service, site):
        service.board.apply_mode_change(B8_1, OperationMode.IN_MAINTENANCE, at(0), "manual")
        frame = decode_frame(payload_of(make_event(offset_s=20)), site, "l", at(100))
        service.ingest_frame(frame)
        assert service.board.mode_of(B8_1) is OperationMode.IN_MAINTENANCE

    def test_rejected_frame_leaves_store_bytes_identical(self, service, site, tmp_path):
        good = decode_frame(payload_of(make_event(offset_s=1)), site, "l", at(100))
        service.ingest_frame(good)
        before = service.store.events_path.read_bytes()
        bad = payload_of(make_event(offset_s=2)) + payload_of(make_event(lift="B99-1", offset_s=3))
        with pytest.raises(FrameRejected):
            decode_frame(bad, site, "l", at(100))
        assert service.store.events_path.read_bytes() == before
        assert service.store.event_count() == 1

    def test_last_contact_matches_brute_force(self, service, site):
        rng = random.Random(17)
        lifts = ["B8-1", "B8-2", "B10-1"]
        best = {}
        for _ in range(30):
            events = [
                make_event(lift=rng.choice(lifts), offset_s=rng.randint(0, 900))
                for _ in range(rng.randint(1, 5))
            ]
            frame = decode_frame(payload_of(*events), site, "l", at(1000))
            service.ingest_frame(frame)
            for e in events:
                if e.lift not in best or e.occurred_at > best[e.lift]:
                    best[e.lift] = e.occurred_at
        for lift, expected in best.items():
            assert service.tracker.last_contact(lift) == expected


class TestWatchdog:
    def prime(self, service, lift, contact_s):
        service.board.apply_mode_change(lift, OperationMode.NORMAL, at(contact_s), "ingest")
        service.tracker.update(lift, at(contact_s))

    def test_silent_lift_transitioned(self, service):
        self.prime(service, B8_1, 0)
        swept = service.watchdog_sweep(at(1201), threshold_s=900)  # 20 min silent, 15 min threshold
        assert swept == [B8_1]
        assert service.board.mode_of(B8_1) is OperationMode.NO_COMMUNICATION

    def test_lift_within_threshold_untouched(self, service):
        self.prime(service, B8_1, 600)
        assert service.watchdog_sweep(at(1201), threshold_s=900) == []
        assert service.board.mode_of(B8_1) is OperationMode.NORMAL

    def test_maintenance_explains_silence(self, service):
        self.prime(service, B8_1, 0)
        service.board.apply_mode_change(B8_1, OperationMode.IN_MAINTENANCE, at(10), "manual")
        assert service.watchdog_sweep(at(7200), threshold_s=900) == []
        assert service.board.mode_of(B8_1) is OperationMode.IN_MAINTENANCE

    def test_sweep_is_idempotent(self, service):
        self.prime(service, B8_1, 0)
        first = service.watchdog_sweep(at(2000), threshold_s=900)
        second = service.watchdog_sweep(at(2000), threshold_s=900)
        assert first == [B8_1]
        assert second == []
        assert len(service.board.sink.records) == 1

    def test_never_contacted_lift_not_swept(self, service):
        # Never-contacted lifts already render as NO_COMMUNICATION; no transition.
        assert service.watchdog_sweep(at(10_000), threshold_s=900) == []
        assert service.store.transitions() == []

    def test_exact_threshold_not_transitioned(self, service):
        self.prime(service, B8_1, 0)
        assert service.watchdog_sweep(at(900), threshold_s=900) == []
        assert service.watchdog_sweep(at(901), threshold_s=900) == [B8_1]


def test_tracker_rebuilt_from_store(tmp_path, site):
    from vtops.store import EventStore

    root = tmp_path / "data"
    store = EventStore(root)
    board = StatusBoard(store, site, MemorySink())
    service = IngestService(store, site, board)
    frame = decode_frame(payload_of(make_event(offset_s=77)), site, "l", at(100))
    service.ingest_frame(frame)

    store2 = EventStore(root)
    service2 = IngestService(store2, site, StatusBoard(store2, site, MemorySink()))
    assert service2.tracker.last_contact(B8_1) == at(77)

"""HTTP JSON API: public dashboard data, authorised analytics, logger ingestion,
route planning, sessions, and sign-in history.

Public endpoints need no credentials; analytics and manual mode changes need a
signed-in admin or VT staff session (opaque bearer token, server-side, 12 h
expiry); the sign-in history is admin-only; telemetry ingestion authenticates
with a per-logger shared token. Every 4xx body carries a machine-readable
``error`` code, and "no data" results serialise as ``{"no_data": true}``.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import analytics, planner
from .config import ServiceConfig, SiteConfig
from .ingest import ContactTracker, FrameRejected, IngestService, decode_frame
from .model import (
    Direction,
    EventRejected,
    InvalidWindow,
    LiftId,
    OperationMode,
    QueryScope,
    TimeWindow,
    event_to_wire,
    format_timestamp,
    parse_timestamp,
    utc_now,
)
from .status import FileOutboxSink, LiftStatus, NoticeEntry, StatusBoard
from .store import EventStore, SignInRecord, UserAccount

PBKDF2_ITERATIONS = 120_000


def hash_password(password: str, salt: str) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), bytes.fromhex(salt), PBKDF2_ITERATIONS
    ).hex()


def make_user(user_id: str, display_name: str, role: str, password: str) -> UserAccount:
    salt = secrets.token_hex(16)
    return UserAccount(
        user_id=user_id,
        display_name=display_name,
        role=role,
        salt=salt,
        password_hash=hash_password(password, salt),
    )


def verify_password(user: UserAccount, password: str) -> bool:
    return hmac.compare_digest(user.password_hash, hash_password(password, user.salt))


@dataclass(frozen=True)
class Session:
    token: str
    user_id: str
    role: str
    expires_at: datetime


class SessionManager:
    def __init__(self, ttl_s: int):
        self.ttl_s = ttl_s
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def create(self, user: UserAccount, now: datetime) -> Session:
        session = Session(
            token=secrets.token_urlsafe(32),
            user_id=user.user_id,
            role=user.role,
            expires_at=now + timedelta(seconds=self.ttl_s),
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def get(self, token: str, now: datetime) -> Optional[Session]:
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                return None
            if session.expires_at <= now:
                del self._sessions[token]
                return None
            return session

    def revoke(self, token: str):
        with self._lock:
            self._sessions.pop(token, None)


class Runtime:
    """Everything one deployment shares: store, status board, ingest, planner graph."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.site: SiteConfig = config.site
        self.store = EventStore(config.store_dir)
        self.board = StatusBoard(self.store, self.site, FileOutboxSink(config.outbox_path))
        self.ingest = IngestService(self.store, self.site, self.board)
        self.graph = planner.build_graph(self.site)
        self.sessions = SessionManager(config.session_ttl_s)
        for seed in config.users:
            if self.store.get_user(seed.user_id) is None:
                self.store.upsert_user(
                    make_user(seed.user_id, seed.display_name, seed.role, seed.password)
                )

    @property
    def tracker(self) -> ContactTracker:
        return self.ingest.tracker

    def cost_model(self, window: TimeWindow) -> planner.EdgeCostModel:
        working = {s.lift: s.working for s in self.board.current_statuses(utc_now())}
        cache: dict[str, analytics.WaitTimeStats] = {}

        def mean_wait(building: str, direction: Direction) -> Optional[float]:
            if building not in cache:
                cache[building] = analytics.wait_time_stats(
                    self.store, QueryScope.for_building(building), window
                )
            stats = cache[building].for_direction(direction)
            return None if stats is analytics.NO_DATA else stats.mean_s

        return planner.EdgeCostModel(
            mean_wait=mean_wait,
            is_working=lambda lift: working.get(lift, False),
            default_lift_wait_s=self.site.planner.default_lift_wait_s,
        )

    def watchdog_tick(self, now: Optional[datetime] = None):
        return self.ingest.watchdog_sweep(
            now or utc_now(), self.config.watchdog_threshold_s
        )


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


def _parse_window(start: Optional[str], end: Optional[str], now: datetime) -> TimeWindow:
    # Timestamps have second resolution and windows are half-open, so the
    # default "until now" window ends one second past now to include it.
    try:
        end_at = parse_timestamp(end) if end else now + timedelta(seconds=1)
        start_at = parse_timestamp(start) if start else end_at - timedelta(hours=24)
        return TimeWindow(start=start_at, end=end_at)
    except (EventRejected, InvalidWindow) as exc:
        raise ApiError(400, "invalid_window", str(exc)) from exc


def _parse_scope(site: SiteConfig, lift: Optional[str], building: Optional[str]) -> QueryScope:
    try:
        if lift and building:
            raise ApiError(400, "invalid_scope", "pass lift or building, not both")
        if lift:
            return QueryScope.single_lift(LiftId.parse(lift)).validate(site)
        if building:
            return QueryScope.for_building(building).validate(site)
        return QueryScope.all_lifts()
    except EventRejected as exc:
        raise ApiError(400, exc.code, str(exc)) from exc


def _status_payload(status: LiftStatus) -> dict:
    return {
        "lift_id": str(status.lift),
        "building": status.lift.building,
        "unit": status.lift.unit,
        "working": status.working,
        "mode": status.mode.label,
        "mode_id": status.mode.mode_id,
        "since": format_timestamp(status.since) if status.since else None,
        "data_age_s": status.data_age_s,
    }


def _notice_payload(entry: NoticeEntry) -> dict:
    return {
        "lift_id": str(entry.lift),
        "mode": entry.mode.label,
        "mode_id": entry.mode.mode_id,
        "since": format_timestamp(entry.since) if entry.since else None,
        "message": entry.message,
    }


def wait_times_payload(stats: analytics.WaitTimeStats, stat: Optional[str]) -> dict:
    def one(direction_stats):
        if direction_stats is analytics.NO_DATA:
            return {"no_data": True}
        if stat is None:
            return {
                "count": direction_stats.count,
                "mean_s": direction_stats.mean_s,
                "min_s": direction_stats.min_s,
                "max_s": direction_stats.max_s,
            }
        value = {
            "mean": direction_stats.mean_s,
            "min": direction_stats.min_s,
            "max": direction_stats.max_s,
        }[stat]
        return {"count": direction_stats.count, "value": value}

    payload = {"up": one(stats.up), "down": one(stats.down)}
    if stat is not None:
        payload["stat"] = stat
    return payload


def plan_payload(plan: planner.RoutePlan) -> dict:
    return {
        "legs": [
            {
                "mode": leg.mode.value,
                "from": {"building": leg.frm[0], "level": leg.frm[1]},
                "to": {"building": leg.to[0], "level": leg.to[1]},
                "expected_wait_s": leg.expected_wait_s,
                "travel_s": leg.travel_s,
            }
            for leg in plan.legs
        ],
        "total_s": plan.total_s,
        "stairs_advisory": plan.stairs_advisory,
        "stairs_total_s": plan.stairs_total_s,
    }


def create_app(runtime: Runtime) -> FastAPI:
    app = FastAPI(title="vtops", docs_url=None, redoc_url=None)
    site = runtime.site
    # The dashboard is a static client on its own origin; auth is bearer
    # tokens, not cookies, so a wildcard origin is safe.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def _api_error(_req, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.code, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "validation_error", "detail": str(exc)})

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_req, exc: StarletteHTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": "http_error", "detail": str(exc.detail)})

    def require_session(request: Request) -> Session:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise ApiError(401, "unauthorised", "sign in to access this resource")
        session = runtime.sessions.get(token.strip(), utc_now())
        if session is None:
            raise ApiError(401, "unauthorised", "session is invalid or expired")
        return session

    # -- public dashboard -------------------------------------------------

    @app.get("/api/v1/status")
    def get_status():
        now = utc_now()
        statuses = runtime.board.current_statuses(now, runtime.tracker.snapshot())
        return {"now": format_timestamp(now), "statuses": [_status_payload(s) for s in statuses]}

    @app.get("/api/v1/notices")
    def get_notices():
        return {"notices": [_notice_payload(n) for n in runtime.board.notice_board()]}

    @app.get("/api/v1/site")
    def get_site():
        return {
            "buildings": [
                {
                    "code": b.code,
                    "min_level": b.min_level,
                    "max_level": b.max_level,
                    "lifts": [
                        {
                            "lift_id": str(lc.lift),
                            "unit": lc.lift.unit,
                            "served_levels": list(lc.served_levels),
                        }
                        for lc in b.lifts
                    ],
                }
                for b in (site.buildings[code] for code in sorted(site.buildings))
            ],
            "bridges": [
                {
                    "from": {"building": br.building_a, "level": br.level_a},
                    "to": {"building": br.building_b, "level": br.level_b},
                    "walk_s": br.walk_s,
                }
                for br in site.bridges
            ],
        }

    @app.get("/api/v1/panel/{building}/{level}")
    def get_panel(building: str, level: int, start: Optional[str] = None, end: Optional[str] = None):
        if not site.has_building(building):
            raise ApiError(400, "unknown_lift", f"building {building!r} is not configured")
        if not site.level_in_range(building, level):
            raise ApiError(400, "unknown_level", f"no level {level} in building {building}")
        now = utc_now()
        window = _parse_window(start, end, now)
        lo, hi = site.level_range(building)
        estimates = []
        for to_level in range(lo, hi + 1):
            if to_level == level:
                continue
            estimate = analytics.estimated_travel_time(
                runtime.store, site, building, level, to_level, window
            )
            if estimate is analytics.NO_DATA:
                estimates.append({"to_level": to_level, "no_data": True})
            else:
                estimates.append({"to_level": to_level, "seconds": estimate})
        statuses = [
            _status_payload(s)
            for s in runtime.board.current_statuses(now, runtime.tracker.snapshot())
            if s.lift.building == building
        ]
        return {"building": building, "from_level": level, "estimates": estimates, "statuses": statuses}

    @app.post("/api/v1/route")
    async def post_route(request: Request):
        body = await _json_body(request)
        now = utc_now()
        try:
            origin = _node(body, "origin")
            destination = _node(body, "destination")
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, "invalid_route_query", f"bad route query: {exc}") from exc
        window = _parse_window(body.get("start"), body.get("end"), now)
        query = planner.RouteQuery(origin=origin, destination=destination, at=now, wait_window=window)
        try:
            plan = planner.plan_route(
                runtime.graph,
                query,
                runtime.cost_model(window),
                stairs_advisory_margin=site.planner.stairs_advisory_margin,
            )
        except planner.UnknownNode as exc:
            raise ApiError(400, "unknown_node", str(exc)) from exc
        except planner.NoRoute:
            return {"no_route": True}
        return plan_payload(plan)

    # -- logger ingestion ------------------------------------------------------

    @app.post("/api/v1/events")
    async def post_events(request: Request):
        token = request.headers.get("x-logger-token", "")
        logger_id = next(
            (lid for lid, t in runtime.config.logger_tokens.items() if hmac.compare_digest(t, token)),
            None,
        )
        if logger_id is None:
            raise ApiError(401, "invalid_logger_token", "unknown or missing logger token")
        sent_at_header = request.headers.get("x-sent-at")
        now = utc_now()
        try:
            sent_at = parse_timestamp(sent_at_header) if sent_at_header else now
        except EventRejected as exc:
            raise ApiError(400, "malformed_payload", f"bad x-sent-at header: {exc}") from exc
        payload = await request.body()
        try:
            frame = decode_frame(payload, site, logger_id, sent_at)
        except FrameRejected as exc:
            return JSONResponse(
                status_code=400,
                content={"error": exc.code, "line": exc.line, "detail": exc.detail},
            )
        appended = runtime.ingest.ingest_frame(frame, now)
        return {"appended": appended}

    # -- authorised analytics -----------------------------------------------------

    @app.get("/api/v1/analytics/wait-times")
    def get_wait_times(
        request: Request,
        lift: Optional[str] = None,
        building: Optional[str] = None,
        start: Optional[str] = None,
        end: Optional[str] = None,
        stat: Optional[str] = None,
    ):
        require_session(request)
        if stat is not None and stat not in ("mean", "max", "min"):
            raise ApiError(400, "invalid_stat", "stat must be mean, max, or min")
        scope = _parse_scope(site, lift, building)
        window = _parse_window(start, end, utc_now())
        return wait_times_payload(analytics.wait_time_stats(runtime.store, scope, window), stat)

    @app.get("/api/v1/analytics/hall-calls")
    def get_hall_calls(
        request: Request,
        lift: Optional[str] = None,
        building: Optional[str] = None,
        start: Optional[str] = None,
        end: Optional[str] = None,
    ):
        require_session(request)
        scope = _parse_scope(site, lift, building)
        window = _parse_window(start, end, utc_now())
        counts = analytics.hall_call_count(runtime.store, scope, window)
        if counts is analytics.NO_DATA:
            return {"no_data": True}
        return {"up": counts[0], "down": counts[1]}

    @app.get("/api/v1/analytics/direction-split")
    def get_direction_split(
        request: Request,
        lift: Optional[str] = None,
        building: Optional[str] = None,
        start: Optional[str] = None,
        end: Optional[str] = None,
    ):
        require_session(request)
        scope = _parse_scope(site, lift, building)
        window = _parse_window(start, end, utc_now())
        split = analytics.direction_percentages(runtime.store, scope, window)
        if split is analytics.NO_DATA:
            return {"no_data": True}
        return {"up_pct": split[0], "down_pct": split[1]}

    @app.get("/api/v1/analytics/mode-split")
    def get_mode_split(
        request: Request,
        lift: Optional[str] = None,
        building: Optional[str] = None,
        start: Optional[str] = None,
        end: Optional[str] = None,
    ):
        require_session(request)
        scope = _parse_scope(site, lift, building)
        window = _parse_window(start, end, utc_now())
        split = analytics.mode_percentages(runtime.store, site, scope, window)
        if split is analytics.NO_DATA:
            return {"no_data": True}
        return {
            "percentages": {mode.label: split.percentages[mode] for mode in OperationMode},
            "total_lift_seconds": split.total_lift_seconds,
        }

    @app.get("/api/v1/logs/{kind}")
    def get_logs(
        request: Request,
        kind: str,
        lift: Optional[str] = None,
        building: Optional[str] = None,
        start: Optional[str] = None,
        end: Optional[str] = None,
    ):
        require_session(request)
        kind_map = {"general": "general", "hall": "hall_call", "emergency": "emergency"}
        if kind not in kind_map:
            raise ApiError(400, "unknown_log_kind", "log kind must be general, hall, or emergency")
        scope = _parse_scope(site, lift, building)
        window = _parse_window(start, end, utc_now())
        rows = analytics.event_log(runtime.store, kind_map[kind], scope, window)
        return {"rows": [event_to_wire(e) for e in rows]}

    @app.get("/api/v1/signin-history")
    def get_signin_history(
        request: Request, start: Optional[str] = None, end: Optional[str] = None
    ):
        session = require_session(request)
        if session.role != "admin":
            raise ApiError(403, "forbidden", "sign-in history is admin-only")
        window = _parse_window(start, end, utc_now())
        records = runtime.store.query_signin_history(window)
        return {
            "records": [
                {
                    "user_id": r.user_id,
                    "at": format_timestamp(r.at),
                    "outcome": r.outcome,
                    "note": r.note,
                }
                for r in records
            ]
        }

    # -- manual mode change ----------------------------------------------------------

    @app.post("/api/v1/lifts/{lift_id}/mode")
    async def post_mode(request: Request, lift_id: str):
        require_session(request)
        body = await _json_body(request)
        try:
            lift = LiftId.parse(lift_id)
            mode = OperationMode.from_label(str(body.get("mode", "")))
        except EventRejected as exc:
            raise ApiError(400, exc.code, str(exc)) from exc
        if not site.has_lift(lift):
            raise ApiError(400, "unknown_lift", f"lift {lift} is not configured")
        transition = runtime.board.apply_mode_change(lift, mode, utc_now(), source="manual")
        if transition is None:
            return {"no_op": True, "mode": mode.label}
        return {
            "transition": {
                "lift_id": str(transition.lift),
                "from_mode": transition.from_mode.label,
                "to_mode": transition.to_mode.label,
                "at": format_timestamp(transition.at),
                "source": transition.source,
            }
        }

    # -- sessions ---------------------------------------------------------------------

    @app.post("/api/v1/session")
    async def post_session(request: Request):
        body = await _json_body(request)
        user_id = str(body.get("user_id", ""))
        password = str(body.get("password", ""))
        note = request.client.host if request.client else ""
        now = utc_now()
        user = runtime.store.get_user(user_id)
        ok = user is not None and verify_password(user, password)
        runtime.store.record_signin(
            SignInRecord(user_id=user_id or "<missing>", at=now, outcome="success" if ok else "failure", note=note)
        )
        if not ok:
            raise ApiError(401, "invalid_credentials", "user id or password is wrong")
        session = runtime.sessions.create(user, now)
        return {
            "token": session.token,
            "role": user.role,
            "display_name": user.display_name,
            "expires_at": format_timestamp(session.expires_at),
        }

    @app.delete("/api/v1/session")
    def delete_session(request: Request):
        session = require_session(request)
        runtime.sessions.revoke(session.token)
        return {"signed_out": True}

    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise ApiError(400, "invalid_json", f"request body is not JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ApiError(400, "invalid_json", "request body must be a JSON object")
    return body


def _node(body: dict, key: str) -> planner.Node:
    raw = body[key]
    return (str(raw["building"]), int(raw["level"]))

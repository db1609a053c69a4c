"""Site topology and service configuration.

The site file is a JSON document listing buildings with their level ranges,
lifts (served levels and kinematics), escalators (directional), stair spans,
and same-level bridges between buildings. ``fixtures/site.json`` in the
repository is a complete three-building example.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .model import LiftId


class ConfigError(ValueError):
    code = "config_error"


@dataclass(frozen=True)
class LiftConfig:
    lift: LiftId
    served_levels: tuple[int, ...]
    travel_s_per_level: float
    door_dwell_s: float


@dataclass(frozen=True)
class EscalatorConfig:
    building: str
    from_level: int
    to_level: int
    travel_s: float


@dataclass(frozen=True)
class StairSpanConfig:
    building: str
    from_level: int
    to_level: int
    travel_s_per_level: float


@dataclass(frozen=True)
class BridgeConfig:
    building_a: str
    level_a: int
    building_b: str
    level_b: int
    walk_s: float


@dataclass(frozen=True)
class BuildingConfig:
    code: str
    min_level: int
    max_level: int
    travel_s_per_level: float
    door_dwell_s: float
    lifts: tuple[LiftConfig, ...]
    escalators: tuple[EscalatorConfig, ...]
    stairs: tuple[StairSpanConfig, ...]


@dataclass(frozen=True)
class PlannerDefaults:
    default_lift_wait_s: float = 45.0
    stairs_advisory_margin: float = 0.15


@dataclass(frozen=True)
class SiteConfig:
    buildings: dict[str, BuildingConfig]
    bridges: tuple[BridgeConfig, ...] = ()
    planner: PlannerDefaults = field(default_factory=PlannerDefaults)

    def has_building(self, code: str) -> bool:
        return code in self.buildings

    def building(self, code: str) -> BuildingConfig:
        try:
            return self.buildings[code]
        except KeyError:
            raise ConfigError(f"building {code!r} is not configured") from None

    def has_lift(self, lift: LiftId) -> bool:
        b = self.buildings.get(lift.building)
        return b is not None and any(lc.lift == lift for lc in b.lifts)

    def lift(self, lift: LiftId) -> LiftConfig:
        for lc in self.building(lift.building).lifts:
            if lc.lift == lift:
                return lc
        raise ConfigError(f"lift {lift} is not configured")

    def all_lifts(self) -> Iterator[LiftConfig]:
        for code in sorted(self.buildings):
            yield from self.buildings[code].lifts

    def lift_ids(self) -> list[LiftId]:
        return [lc.lift for lc in self.all_lifts()]

    def level_range(self, building: str) -> tuple[int, int]:
        b = self.building(building)
        return b.min_level, b.max_level

    def level_in_range(self, building: str, level: int) -> bool:
        if building not in self.buildings:
            return False
        b = self.buildings[building]
        return b.min_level <= level <= b.max_level


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}: missing {key!r}")
    return obj[key]


def _positive(value, key: str, where: str) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key} must be a number, got {value!r}") from None
    if number <= 0:
        raise ConfigError(f"{where}: {key} must be positive, got {value!r}")
    return number


def site_from_dict(doc: dict) -> SiteConfig:
    if not isinstance(doc, dict):
        raise ConfigError("site document must be a JSON object")
    buildings: dict[str, BuildingConfig] = {}
    for braw in _require(doc, "buildings", "site"):
        code = _require(braw, "code", "building")
        where = f"building {code}"
        if code in buildings:
            raise ConfigError(f"{where}: duplicate building code")
        levels = _require(braw, "levels", where)
        lo, hi = int(_require(levels, "min", where)), int(_require(levels, "max", where))
        if lo >= hi:
            raise ConfigError(f"{where}: levels min must be below max")
        travel = _positive(braw.get("travel_s_per_level", 4), "travel_s_per_level", where)
        dwell = _positive(braw.get("door_dwell_s", 8), "door_dwell_s", where)

        lifts = []
        seen_units = set()
        for lraw in braw.get("lifts", []):
            unit = int(_require(lraw, "unit", f"{where} lift"))
            lwhere = f"{where} lift {unit}"
            if unit in seen_units:
                raise ConfigError(f"{lwhere}: duplicate unit")
            seen_units.add(unit)
            served = tuple(sorted(set(int(l) for l in _require(lraw, "served_levels", lwhere))))
            if len(served) < 2:
                raise ConfigError(f"{lwhere}: must serve at least two levels")
            for level in served:
                if not lo <= level <= hi:
                    raise ConfigError(f"{lwhere}: served level {level} outside {lo}..{hi}")
            lifts.append(
                LiftConfig(
                    lift=LiftId(code, unit),
                    served_levels=served,
                    travel_s_per_level=_positive(
                        lraw.get("travel_s_per_level", travel), "travel_s_per_level", lwhere
                    ),
                    door_dwell_s=_positive(lraw.get("door_dwell_s", dwell), "door_dwell_s", lwhere),
                )
            )

        escalators = []
        for eraw in braw.get("escalators", []):
            f, t = int(_require(eraw, "from_level", where)), int(_require(eraw, "to_level", where))
            if abs(f - t) != 1:
                raise ConfigError(f"{where}: escalator {f}->{t} must span adjacent levels")
            for level in (f, t):
                if not lo <= level <= hi:
                    raise ConfigError(f"{where}: escalator level {level} outside {lo}..{hi}")
            escalators.append(
                EscalatorConfig(code, f, t, _positive(eraw.get("travel_s", 30), "travel_s", where))
            )

        stairs = []
        for sraw in braw.get("stairs", []):
            f, t = int(_require(sraw, "from_level", where)), int(_require(sraw, "to_level", where))
            if f >= t:
                raise ConfigError(f"{where}: stair span {f}->{t} must ascend")
            for level in (f, t):
                if not lo <= level <= hi:
                    raise ConfigError(f"{where}: stair level {level} outside {lo}..{hi}")
            stairs.append(
                StairSpanConfig(
                    code, f, t,
                    _positive(sraw.get("travel_s_per_level", 20), "travel_s_per_level", where),
                )
            )

        buildings[code] = BuildingConfig(
            code=code,
            min_level=lo,
            max_level=hi,
            travel_s_per_level=travel,
            door_dwell_s=dwell,
            lifts=tuple(lifts),
            escalators=tuple(escalators),
            stairs=tuple(stairs),
        )

    bridges = []
    for braw in doc.get("bridges", []):
        a = _require(braw, "from", "bridge")
        b = _require(braw, "to", "bridge")
        ab, al = _require(a, "building", "bridge"), int(_require(a, "level", "bridge"))
        bb, bl = _require(b, "building", "bridge"), int(_require(b, "level", "bridge"))
        if al != bl:
            raise ConfigError(f"bridge {ab}:{al}->{bb}:{bl} must join the same level")
        for bc, lvl in ((ab, al), (bb, bl)):
            if bc not in buildings:
                raise ConfigError(f"bridge references unknown building {bc!r}")
            if not buildings[bc].min_level <= lvl <= buildings[bc].max_level:
                raise ConfigError(f"bridge level {lvl} outside building {bc}")
        bridges.append(BridgeConfig(ab, al, bb, bl, _positive(braw.get("walk_s", 60), "walk_s", "bridge")))

    praw = doc.get("planner", {})
    planner = PlannerDefaults(
        default_lift_wait_s=_positive(praw.get("default_lift_wait_s", 45), "default_lift_wait_s", "planner"),
        stairs_advisory_margin=float(praw.get("stairs_advisory_margin", 0.15)),
    )
    if planner.stairs_advisory_margin < 0:
        raise ConfigError("planner: stairs_advisory_margin must be >= 0")

    if not buildings:
        raise ConfigError("site must configure at least one building")
    return SiteConfig(buildings=buildings, bridges=tuple(bridges), planner=planner)


def load_site(path: Path | str) -> SiteConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read site file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"site file {path} is not valid JSON: {exc}") from exc
    return site_from_dict(doc)


@dataclass(frozen=True)
class UserSeed:
    user_id: str
    display_name: str
    role: str
    password: str


@dataclass(frozen=True)
class ServiceConfig:
    """Everything the service and CLI need to run against one deployment."""

    site_path: Path
    site: SiteConfig
    store_dir: Path
    outbox_path: Path
    port: int = 8080
    logger_tokens: dict[str, str] = field(default_factory=dict)
    watchdog_threshold_s: int = 900
    watchdog_interval_s: int = 60
    session_ttl_s: int = 12 * 3600
    users: tuple[UserSeed, ...] = ()


def load_service_config(path: Path | str) -> ServiceConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    base = path.parent
    site_path = base / _require(doc, "site", "config")
    store_dir = base / doc.get("store_dir", "data")
    outbox = base / doc.get("outbox", str(Path(doc.get("store_dir", "data")) / "outbox.jsonl"))
    users = tuple(
        UserSeed(
            user_id=_require(u, "user_id", "user"),
            display_name=u.get("display_name", u["user_id"]),
            role=_require(u, "role", "user"),
            password=_require(u, "password", "user"),
        )
        for u in doc.get("users", [])
    )
    for user in users:
        if user.role not in ("admin", "vt_staff"):
            raise ConfigError(f"user {user.user_id}: role must be admin or vt_staff")
    tokens = doc.get("logger_tokens", {})
    if not isinstance(tokens, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in tokens.items()
    ):
        raise ConfigError("logger_tokens must map logger id to token string")
    watchdog = doc.get("watchdog", {})
    return ServiceConfig(
        site_path=site_path,
        site=load_site(site_path),
        store_dir=store_dir,
        outbox_path=outbox,
        port=int(doc.get("port", 8080)),
        logger_tokens=tokens,
        watchdog_threshold_s=int(watchdog.get("threshold_s", 900)),
        watchdog_interval_s=int(watchdog.get("interval_s", 60)),
        session_ttl_s=int(doc.get("session_ttl_s", 12 * 3600)),
        users=users,
    )

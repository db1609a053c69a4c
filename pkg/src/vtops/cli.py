"""Single entry point: serve the API, simulate fleets, replay logs, report
analytics, plan routes, and manage users.

Exit codes: 0 ok, 2 usage or validation error, 3 storage error, 4 no route.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import sys
import threading
import time
from datetime import timedelta
from pathlib import Path
from typing import Optional

import click

from . import analytics, planner
from .api import Runtime, create_app, make_user
from .config import ConfigError, load_service_config
from .ingest import FrameRejected, decode_frame
from .model import (
    EventRejected,
    InvalidWindow,
    LiftId,
    QueryScope,
    TimeWindow,
    event_to_wire,
    format_timestamp,
    parse_timestamp,
    utc_now,
)
from .simulator import InvalidConfig, load_sim_config, simulate, write_events
from .store import StorageFailure

EXIT_VALIDATION = 2
EXIT_STORAGE = 3
EXIT_NO_ROUTE = 4

REPORT_KINDS = (
    "wait-times",
    "hall-calls",
    "direction-split",
    "mode-split",
    "general-log",
    "hall-log",
    "emergency-log",
)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_runtime(config_path: str) -> Runtime:
    try:
        return Runtime(load_service_config(config_path))
    except ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except StorageFailure as exc:
        _fail(EXIT_STORAGE, str(exc))


def _scope_from_flags(runtime: Runtime, building: Optional[str], lift: Optional[str]) -> QueryScope:
    try:
        if building and lift:
            _fail(EXIT_VALIDATION, "pass --building or --lift, not both")
        if lift:
            return QueryScope.single_lift(LiftId.parse(lift)).validate(runtime.site)
        if building:
            return QueryScope.for_building(building).validate(runtime.site)
        return QueryScope.all_lifts()
    except EventRejected as exc:
        _fail(EXIT_VALIDATION, str(exc))


def _window_from_flags(start: Optional[str], end: Optional[str]) -> TimeWindow:
    # Default end is one second past now: second-resolution half-open windows
    # would otherwise drop records from the current second.
    try:
        end_at = parse_timestamp(end) if end else utc_now() + timedelta(seconds=1)
        start_at = parse_timestamp(start) if start else end_at - timedelta(hours=24)
        return TimeWindow(start=start_at, end=end_at)
    except (EventRejected, InvalidWindow) as exc:
        _fail(EXIT_VALIDATION, str(exc))


@click.group()
def main():
    """Vertical-transport operations toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, envvar="VTOPS_CONFIG", help="service config file")
@click.option("--port", type=int, default=None, envvar="VTOPS_PORT", help="override the configured port")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path: str, port: Optional[int], host: str):
    """Run the HTTP service with the background no-communication watchdog."""
    import uvicorn

    runtime = _load_runtime(config_path)
    app = create_app(runtime)

    def sweep_forever():
        while True:
            time.sleep(runtime.config.watchdog_interval_s)
            runtime.watchdog_tick()

    threading.Thread(target=sweep_forever, daemon=True, name="watchdog").start()
    uvicorn.run(app, host=host, port=port or runtime.config.port, log_level="info")


@main.command(name="simulate")
@click.option("--config", "sim_config_path", required=True, help="simulation config file")
@click.option("--seed", type=int, default=None, help="override the configured seed")
@click.option("--out", "out_path", required=True, help="output telemetry file (JSON lines)")
def simulate_cmd(sim_config_path: str, seed: Optional[int], out_path: str):
    """Generate a deterministic telemetry log for a simulated fleet."""
    try:
        config = load_sim_config(sim_config_path)
        if seed is not None:
            config = dataclasses.replace(config, seed=seed)
        events = simulate(config)
        write_events(out_path, events, seed=config.seed)
    except (InvalidConfig, ConfigError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(f"wrote {len(events)} events to {out_path}")


@main.command(name="ingest-file")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", required=True, envvar="VTOPS_CONFIG")
def ingest_file(path: str, config_path: str):
    """Replay a stored telemetry log through the ingest path."""
    runtime = _load_runtime(config_path)
    try:
        frame = decode_frame(Path(path).read_bytes(), runtime.site, logger_id=f"file:{path}", sent_at=None)
        appended = runtime.ingest.ingest_frame(frame)
    except FrameRejected as exc:
        _fail(EXIT_VALIDATION, exc.detail)
    except StorageFailure as exc:
        _fail(EXIT_STORAGE, str(exc))
    click.echo(f"appended {appended} events")


def _report_result(runtime: Runtime, kind: str, scope: QueryScope, window: TimeWindow):
    store = runtime.store
    if kind == "wait-times":
        stats = analytics.wait_time_stats(store, scope, window)
        if stats.up is analytics.NO_DATA and stats.down is analytics.NO_DATA:
            return None
        rows = []
        for name, s in (("up", stats.up), ("down", stats.down)):
            if s is analytics.NO_DATA:
                rows.append([name, "no data", "", "", ""])
            else:
                rows.append([name, str(s.count), f"{s.mean_s:.3f}", str(s.min_s), str(s.max_s)])
        return (["direction", "count", "mean_s", "min_s", "max_s"], rows)
    if kind == "hall-calls":
        counts = analytics.hall_call_count(store, scope, window)
        if counts is analytics.NO_DATA:
            return None
        return (["direction", "count"], [["up", str(counts[0])], ["down", str(counts[1])]])
    if kind == "direction-split":
        split = analytics.direction_percentages(store, scope, window)
        if split is analytics.NO_DATA:
            return None
        return (["direction", "percent"], [["up", f"{split[0]:.1f}"], ["down", f"{split[1]:.1f}"]])
    if kind == "mode-split":
        split = analytics.mode_percentages(store, runtime.site, scope, window)
        if split is analytics.NO_DATA:
            return None
        rows = [[mode.label, f"{split.percentages[mode]:.1f}"] for mode in split.percentages]
        return (["mode", "percent"], rows)
    log_kind = {"general-log": "general", "hall-log": "hall_call", "emergency-log": "emergency"}[kind]
    events = analytics.event_log(store, log_kind, scope, window)
    if not events:
        return None
    header = ["lift_id", "occurred_time", "direction", "wait_time_s",
              "operation_mode_id", "event_type", "floor_position", "door_status"]
    rows = [[str(event_to_wire(e)[f]) if event_to_wire(e)[f] is not None else "" for f in header] for e in events]
    return (header, rows)


@main.command()
@click.argument("kind", type=click.Choice(REPORT_KINDS))
@click.option("--config", "config_path", required=True, envvar="VTOPS_CONFIG")
@click.option("--building", default=None, help="limit to one building")
@click.option("--lift", default=None, help="limit to one lift, e.g. B8-2")
@click.option("--start", default=None, help="window start (RFC-3339); default 24 h before end")
@click.option("--end", default=None, help="window end (RFC-3339); default now")
@click.option("--stat", type=click.Choice(["mean", "max", "min"]), default=None,
              help="wait-times only: print a single statistic")
@click.option("--format", "out_format", type=click.Choice(["table", "csv", "json"]), default="table",
              show_default=True)
def report(kind, config_path, building, lift, start, end, stat, out_format):
    """Render one analytics result for a scope and time window."""
    runtime = _load_runtime(config_path)
    scope = _scope_from_flags(runtime, building, lift)
    window = _window_from_flags(start, end)
    try:
        result = _report_result(runtime, kind, scope, window)
    except StorageFailure as exc:
        _fail(EXIT_STORAGE, str(exc))
    if result is None:
        if out_format == "json":
            click.echo(json.dumps({"no_data": True}))
        else:
            click.echo("No Data Available")
        return
    header, rows = result
    if stat is not None and kind == "wait-times":
        column = {"mean": "mean_s", "max": "max_s", "min": "min_s"}[stat]
        keep = [0, 1, header.index(column)]
        header = [header[i] for i in keep]
        rows = [[row[i] for i in keep] for row in rows]
    if out_format == "json":
        click.echo(json.dumps([dict(zip(header, row)) for row in rows]))
    elif out_format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        click.echo(buffer.getvalue(), nl=False)
    else:
        widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
        click.echo("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for row in rows:
            click.echo("  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)))


def _parse_node(text: str) -> planner.Node:
    building, sep, level = text.partition(":")
    if not sep or not building:
        raise click.UsageError(f"node {text!r} must look like B8:4")
    try:
        return (building, int(level))
    except ValueError:
        raise click.UsageError(f"node {text!r} has a non-numeric level") from None


@main.command()
@click.option("--from", "origin", required=True, help="origin node, e.g. B8:4")
@click.option("--to", "destination", required=True, help="destination node, e.g. B12:8")
@click.option("--config", "config_path", required=True, envvar="VTOPS_CONFIG")
@click.option("--start", default=None, help="wait-history window start")
@click.option("--end", default=None, help="wait-history window end")
def route(origin, destination, config_path, start, end):
    """Plan the fastest way between two levels, using live status and history."""
    runtime = _load_runtime(config_path)
    window = _window_from_flags(start, end)
    query = planner.RouteQuery(
        origin=_parse_node(origin),
        destination=_parse_node(destination),
        at=utc_now(),
        wait_window=window,
    )
    try:
        plan = planner.plan_route(
            runtime.graph, query, runtime.cost_model(window),
            stairs_advisory_margin=runtime.site.planner.stairs_advisory_margin,
        )
    except planner.UnknownNode as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except planner.NoRoute as exc:
        click.echo(f"no route: {exc}", err=True)
        sys.exit(EXIT_NO_ROUTE)
    if not plan.legs:
        click.echo("already there (total 0 s)")
        return
    for i, leg in enumerate(plan.legs, start=1):
        wait = f" (wait {leg.expected_wait_s:.0f} s)" if leg.expected_wait_s else ""
        click.echo(
            f"{i}. {leg.mode.value}: {leg.frm[0]} level {leg.frm[1]} -> "
            f"{leg.to[0]} level {leg.to[1]}{wait}, {leg.travel_s:.0f} s"
        )
    click.echo(f"total {plan.total_s:.0f} s")
    if plan.stairs_advisory:
        click.echo(f"consider the stairs: {plan.stairs_total_s:.0f} s all the way")


@main.group()
def user():
    """Manage portal accounts."""


@user.command("add")
@click.argument("user_id")
@click.option("--role", type=click.Choice(["admin", "vt_staff"]), required=True)
@click.option("--display-name", default=None)
@click.option("--password", prompt=True, hide_input=True)
@click.option("--config", "config_path", required=True, envvar="VTOPS_CONFIG")
def user_add(user_id, role, display_name, password, config_path):
    runtime = _load_runtime(config_path)
    try:
        runtime.store.upsert_user(make_user(user_id, display_name or user_id, role, password))
    except StorageFailure as exc:
        _fail(EXIT_STORAGE, str(exc))
    click.echo(f"stored user {user_id} ({role})")


@user.command("list")
@click.option("--config", "config_path", required=True, envvar="VTOPS_CONFIG")
def user_list(config_path):
    runtime = _load_runtime(config_path)
    for account in runtime.store.list_users():
        click.echo(f"{account.user_id}  {account.role}  {account.display_name}")


if __name__ == "__main__":
    main()

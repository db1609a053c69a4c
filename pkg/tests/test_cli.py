import json
import shutil

import pytest
from click.testing import CliRunner

from vtops import analytics
from vtops.api import Runtime
from vtops.cli import main
from vtops.config import load_service_config
from vtops.model import QueryScope, TimeWindow, parse_timestamp

from conftest import FIXTURES


@pytest.fixture
def deployment(tmp_path):
    """A config dir with the fixture site, seed users, and a simulated log."""
    shutil.copy(FIXTURES / "site.json", tmp_path / "site.json")
    config = {
        "port": 8099,
        "site": "site.json",
        "store_dir": "data",
        "outbox": "data/outbox.jsonl",
        "logger_tokens": {"logger-1": "tok"},
        "users": [
            {"user_id": "admin", "role": "admin", "password": "pw"},
        ],
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    sim = {
        "site": "site.json",
        "start": "2026-08-10T00:00:00Z",
        "duration_s": 1800,
        "seed": 3,
        "arrival_rates": {"B8": 8.0, "B12": 5.0},
        "faults": [{"lift": "B8-1", "mode": "out_of_service", "start_s": 300, "duration_s": 600}],
    }
    sim_path = tmp_path / "sim.json"
    sim_path.write_text(json.dumps(sim))
    return tmp_path


@pytest.fixture
def runner():
    return CliRunner()


def run_ok(runner, args, **kwargs):
    result = runner.invoke(main, args, **kwargs)
    assert result.exit_code == 0, result.output
    return result


class TestSimulateAndIngest:
    def test_simulate_writes_deterministic_file(self, deployment, runner):
        out1, out2 = deployment / "a.jsonl", deployment / "b.jsonl"
        run_ok(runner, ["simulate", "--config", str(deployment / "sim.json"), "--out", str(out1)])
        run_ok(runner, ["simulate", "--config", str(deployment / "sim.json"), "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_text().startswith("# seed=3\n")

    def test_seed_flag_overrides(self, deployment, runner):
        out1, out2 = deployment / "a.jsonl", deployment / "b.jsonl"
        run_ok(runner, ["simulate", "--config", str(deployment / "sim.json"),
                        "--seed", "8", "--out", str(out1)])
        run_ok(runner, ["simulate", "--config", str(deployment / "sim.json"),
                        "--seed", "9", "--out", str(out2)])
        assert out1.read_text().splitlines()[0] == "# seed=8"
        assert out1.read_bytes() != out2.read_bytes()

    def test_ingest_file_appends(self, deployment, runner):
        out = deployment / "log.jsonl"
        run_ok(runner, ["simulate", "--config", str(deployment / "sim.json"), "--out", str(out)])
        result = run_ok(runner, ["ingest-file", str(out), "--config", str(deployment / "config.json")])
        count = len([l for l in out.read_text().splitlines() if not l.startswith("#")])
        assert f"appended {count} events" in result.output

    def test_ingest_rejects_bad_file(self, deployment, runner):
        bad = deployment / "bad.jsonl"
        bad.write_text("{nope}\n")
        result = runner.invoke(main, ["ingest-file", str(bad), "--config", str(deployment / "config.json")])
        assert result.exit_code == 2


@pytest.fixture
def ingested(deployment, runner):
    out = deployment / "log.jsonl"
    run_ok(runner, ["simulate", "--config", str(deployment / "sim.json"), "--out", str(out)])
    run_ok(runner, ["ingest-file", str(out), "--config", str(deployment / "config.json")])
    return deployment


WINDOW_FLAGS = ["--start", "2026-08-10T00:00:00Z", "--end", "2026-08-10T02:00:00Z"]


class TestReport:
    def test_empty_store_prints_no_data(self, deployment, runner):
        result = run_ok(runner, ["report", "wait-times", "--config", str(deployment / "config.json")])
        assert result.output.strip() == "No Data Available"

    def test_wait_times_match_analytics(self, ingested, runner):
        result = run_ok(runner, ["report", "wait-times", "--format", "csv",
                                 "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        runtime = Runtime(load_service_config(ingested / "config.json"))
        window = TimeWindow(parse_timestamp(WINDOW_FLAGS[1]), parse_timestamp(WINDOW_FLAGS[3]))
        stats = analytics.wait_time_stats(runtime.store, QueryScope.all_lifts(), window)
        lines = result.output.splitlines()
        assert lines[0] == "direction,count,mean_s,min_s,max_s"
        up = lines[1].split(",")
        assert up[0] == "up"
        assert int(up[1]) == stats.up.count
        assert float(up[2]) == pytest.approx(stats.up.mean_s, abs=1e-3)

    def test_csv_is_bit_stable(self, ingested, runner):
        args = ["report", "hall-calls", "--format", "csv",
                "--config", str(ingested / "config.json"), *WINDOW_FLAGS]
        assert run_ok(runner, args).output == run_ok(runner, args).output

    def test_stat_flag_selects_column(self, ingested, runner):
        result = run_ok(runner, ["report", "wait-times", "--stat", "max", "--format", "csv",
                                 "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        assert result.output.splitlines()[0] == "direction,count,max_s"

    def test_scope_flags(self, ingested, runner):
        by_building = run_ok(runner, ["report", "hall-calls", "--building", "B8", "--format", "json",
                                      "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        all_lifts = run_ok(runner, ["report", "hall-calls", "--format", "json",
                                    "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        b8 = {row["direction"]: int(row["count"]) for row in json.loads(by_building.output)}
        total = {row["direction"]: int(row["count"]) for row in json.loads(all_lifts.output)}
        assert b8["up"] <= total["up"]

    def test_mode_split_table(self, ingested, runner):
        result = run_ok(runner, ["report", "mode-split",
                                 "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        assert "out_of_service" in result.output

    def test_log_report_lists_fields(self, ingested, runner):
        result = run_ok(runner, ["report", "emergency-log", "--format", "csv",
                                 "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        # the fixture schedule has no emergencies: empty means No Data Available
        assert result.output.strip() == "No Data Available"
        result = run_ok(runner, ["report", "hall-log", "--format", "csv",
                                 "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        assert result.output.splitlines()[0].startswith("lift_id,occurred_time,direction")

    def test_invalid_building_exits_2(self, ingested, runner):
        result = runner.invoke(main, ["report", "wait-times", "--building", "B99",
                                      "--config", str(ingested / "config.json")])
        assert result.exit_code == 2

    def test_invalid_window_exits_2(self, ingested, runner):
        result = runner.invoke(main, ["report", "wait-times",
                                      "--start", "2026-08-10T02:00:00Z",
                                      "--end", "2026-08-10T01:00:00Z",
                                      "--config", str(ingested / "config.json")])
        assert result.exit_code == 2

    def test_unknown_kind_exits_2(self, ingested, runner):
        result = runner.invoke(main, ["report", "everything",
                                      "--config", str(ingested / "config.json")])
        assert result.exit_code == 2


class TestRoute:
    def test_same_origin_destination(self, deployment, runner):
        result = run_ok(runner, ["route", "--from", "B8:4", "--to", "B8:4",
                                 "--config", str(deployment / "config.json")])
        assert "already there" in result.output

    def test_fixture_route_prints_legs_and_total(self, ingested, runner):
        result = run_ok(runner, ["route", "--from", "B8:4", "--to", "B8:8",
                                 "--config", str(ingested / "config.json"), *WINDOW_FLAGS])
        assert result.output.strip().splitlines()[-1].startswith("total ")
        assert "1. " in result.output

    def test_unknown_node_exits_2(self, deployment, runner):
        result = runner.invoke(main, ["route", "--from", "B8:77", "--to", "B8:1",
                                      "--config", str(deployment / "config.json")])
        assert result.exit_code == 2

    def test_no_route_exits_4(self, deployment, runner, tmp_path):
        # an island building: no stairs, no lifts, no bridges
        site = {
            "buildings": [
                {"code": "A", "levels": {"min": 1, "max": 3},
                 "stairs": [{"from_level": 1, "to_level": 3}]},
                {"code": "Z", "levels": {"min": 1, "max": 2}},
            ]
        }
        (tmp_path / "site.json").write_text(json.dumps(site))
        (tmp_path / "c.json").write_text(json.dumps({"site": "site.json"}))
        result = runner.invoke(main, ["route", "--from", "A:1", "--to", "Z:2",
                                      "--config", str(tmp_path / "c.json")])
        assert result.exit_code == 4

    def test_bad_node_syntax_exits_2(self, deployment, runner):
        result = runner.invoke(main, ["route", "--from", "B8", "--to", "B8:1",
                                      "--config", str(deployment / "config.json")])
        assert result.exit_code == 2


class TestUsers:
    def test_add_and_list(self, deployment, runner):
        run_ok(runner, ["user", "add", "maria", "--role", "vt_staff",
                        "--password", "secret", "--config", str(deployment / "config.json")])
        result = run_ok(runner, ["user", "list", "--config", str(deployment / "config.json")])
        assert "maria" in result.output
        assert "vt_staff" in result.output

    def test_passwords_never_stored_clear(self, deployment, runner):
        run_ok(runner, ["user", "add", "maria", "--role", "vt_staff",
                        "--password", "hunter2", "--config", str(deployment / "config.json")])
        users_file = (deployment / "data" / "users.jsonl").read_text()
        assert "hunter2" not in users_file

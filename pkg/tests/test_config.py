import json

import pytest

from vtops.config import ConfigError, load_service_config, load_site, site_from_dict
from vtops.model import LiftId

from conftest import FIXTURES


def test_fixture_site_loads(site):
    assert sorted(site.buildings) == ["B10", "B12", "B8"]
    assert site.level_range("B8") == (1, 12)
    assert site.has_lift(LiftId("B8", 3))
    assert not site.has_lift(LiftId("B8", 4))
    assert site.lift(LiftId("B8", 3)).served_levels == (1, 4, 8, 12)
    assert site.lift(LiftId("B8", 3)).travel_s_per_level == 3  # per-lift override
    assert site.lift(LiftId("B8", 1)).travel_s_per_level == 4  # building default
    assert len(site.bridges) == 2
    assert [lc.lift for lc in site.all_lifts()][:2] == [LiftId("B10", 1), LiftId("B10", 2)]


def minimal_site(**overrides):
    doc = {
        "buildings": [
            {
                "code": "A",
                "levels": {"min": 1, "max": 5},
                "lifts": [{"unit": 1, "served_levels": [1, 2, 3, 4, 5]}],
                "stairs": [{"from_level": 1, "to_level": 5}],
            }
        ]
    }
    doc.update(overrides)
    return doc


def test_minimal_site_defaults():
    site = site_from_dict(minimal_site())
    assert site.building("A").travel_s_per_level == 4
    assert site.building("A").door_dwell_s == 8
    assert site.planner.default_lift_wait_s == 45


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["buildings"].append(dict(d["buildings"][0])),  # duplicate code
        lambda d: d["buildings"][0]["levels"].update(min=5, max=5),  # empty range
        lambda d: d["buildings"][0]["lifts"][0].update(served_levels=[1]),  # one level
        lambda d: d["buildings"][0]["lifts"][0].update(served_levels=[1, 9]),  # outside
        lambda d: d["buildings"][0].update(escalators=[{"from_level": 1, "to_level": 3}]),
        lambda d: d["buildings"][0].update(stairs=[{"from_level": 3, "to_level": 1}]),
        lambda d: d["buildings"][0].update(travel_s_per_level=0),
        lambda d: d.update(bridges=[{"from": {"building": "A", "level": 1},
                                     "to": {"building": "Z", "level": 1}}]),
        lambda d: d.update(bridges=[{"from": {"building": "A", "level": 1},
                                     "to": {"building": "A", "level": 2}}]),
    ],
)
def test_invalid_sites_rejected(mutate):
    doc = minimal_site()
    mutate(doc)
    with pytest.raises(ConfigError):
        site_from_dict(doc)


def test_service_config_loads():
    cfg = load_service_config(FIXTURES / "service_config.json")
    assert cfg.port == 8080
    assert cfg.watchdog_threshold_s == 900
    assert {u.role for u in cfg.users} == {"admin", "vt_staff"}
    assert cfg.site.has_building("B12")
    assert cfg.logger_tokens["logger-b8"].startswith("tok-")


def test_service_config_rejects_bad_role(tmp_path):
    (tmp_path / "site.json").write_text(json.dumps(minimal_site()))
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "site": "site.json",
        "users": [{"user_id": "x", "role": "superuser", "password": "p"}],
    }))
    with pytest.raises(ConfigError):
        load_service_config(cfg_path)


def test_load_site_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_site(tmp_path / "nope.json")

import json
import math

import pytest

import aoi_sched as aoi


def small_config(**overrides):
    doc = {
        "defaults": "paper-iv",
        "sensors": {"rule": "paper-iv", "count": 3},
        "network": {"filters": 4, "kernel": 3, "hidden": 8},
        "train": {"episodes_per_stage": 2, "episode_len": 40, "rollout_len": 20},
        "eval": {"jobs": 2000},
        "traces": {"train_count": 2, "test_count": 1, "duration_ms": 60000},
    }
    doc.update(overrides)
    return aoi.parse_run_config(json.dumps(doc))


def test_ten_sensor_environment_defaults():
    env = aoi.paper_env_config()
    assert [s.packet_bytes for s in env.sensors] == [50.0 * (n + 1) for n in range(10)]
    assert env.thresholds() == [30.0 + 20.0 * n for n in range(10)]
    assert env.penalties()[0] == pytest.approx(1000.0)
    assert env.success_prob == 0.9


def test_env_step_applies_age_recursion():
    cfg = aoi.EnvConfig()
    cfg.sensors = [aoi.SensorConfig(100, 1000, 10), aoi.SensorConfig(100, 1000, 10)]
    cfg.success_prob = 1.0
    env = aoi.Env(cfg)
    env.reset(aoi.Trace("c", [(0, 1.0)], 1000), seed=0)
    r = env.step(0)
    assert r["duration_ms"] == 100
    assert r["ages"] == [100, 100]
    r = env.step(1)
    assert r["ages"] == [200, 100]
    assert r["reward"] == -300
    with pytest.raises(IndexError):
        env.step(5)


def test_traces_and_baselines():
    t = aoi.gen_synthetic("two-level-markov", 10000, 100, 3, low=10, high=90)
    assert {r for _, r in t.samples} <= {10.0, 90.0}
    assert t.rate_at(5) == t.rate_at(5 + t.duration_ms)
    assert aoi.edf_select([20, 100], [30, 150]) == 0
    q = aoi.osrp_probs([30, 210])
    assert q == pytest.approx([7 / 8, 1 / 8])
    with pytest.raises(aoi.ConfigError):
        aoi.gen_synthetic("sine", 100, 1, 0)


def test_config_rejects_unknown_keys():
    with pytest.raises(aoi.ConfigError):
        aoi.parse_run_config('{"defaults": "paper-iv", "sead": 1}')


def test_train_eval_round_trip(tmp_path):
    cfg = small_config()
    train = aoi.generate_traces(cfg, "train")
    test = aoi.generate_traces(cfg, "test")
    ckpt = aoi.train(cfg, train, tmp_path)
    assert ckpt.num_sensors == 3
    assert ckpt.entropy_stage == 5
    assert (tmp_path / "ckpt_stage5.json").exists()
    assert aoi.load_checkpoint(tmp_path / "ckpt_stage5.json") == ckpt

    again = aoi.train(cfg, train)
    assert again.to_json() == ckpt.to_json()

    results = {name: aoi.evaluate(name, cfg, test, ckpt if name == "rl" else None)
               for name in ("edf", "osrp", "rl")}
    for m in results.values():
        assert m["jobs"] == 2000
        assert m["objective"] == pytest.approx(m["aoi_term"] + m["penalty_term"])
        assert math.isclose(m["mean_neg_reward"], 3 * m["aoi_term"] + m["penalty_term"], rel_tol=1e-9)

    with pytest.raises(aoi.ShapeError):
        aoi.evaluate("rl", small_config(sensors={"rule": "paper-iv", "count": 4}), test, ckpt)

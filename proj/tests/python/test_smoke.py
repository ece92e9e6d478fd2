"""Smoke tests for the python bindings against the CMake-built module."""

import json
import math

import pytest

import nudgesim as ns


def tiny_config(seed=7, horizon=4, users=3, policy="thompson_bernoulli"):
    return json.dumps(
        {
            "seed": seed,
            "schedule": {"horizon_days": horizon, "nudge_window_days": 5},
            "contexts": [
                {
                    "context_id": "ctx",
                    "session_rate_per_day": 3.0,
                    "active_hours": [8.0, 20.0],
                    "p_online": 1.0,
                    "weight_distributions": {
                        "alpha": {"type": "point_mass", "value": 1.0},
                        "beta": {"type": "point_mass", "value": 0.0},
                        "gamma": {"type": "point_mass", "value": 0.0},
                    },
                    "baseline_matrix": {
                        "states": ["session_start", "content/browse", "out_of_app"],
                        "rows": [
                            [0.0, 0.5, 0.5],
                            [0.2, 0.3, 0.5],
                            [0.0, 0.0, 1.0],
                        ],
                        "initial": [1.0, 0.0, 0.0],
                    },
                }
            ],
            "population": [{"context_id": "ctx", "user_count": users}],
            "rl": {"policy": {"name": policy}},
        }
    )


def test_decay_functions_match_frozen_values():
    assert ns.decay_f(0) == 1.0
    assert ns.decay_g(0) == 0.0
    assert ns.decay_h(0) == 0.0
    assert math.isclose(ns.decay_g(1), 0.11271282797663488, rel_tol=0, abs_tol=1e-9)
    assert math.isclose(ns.decay_h(1), 0.06855641894538326, rel_tol=0, abs_tol=1e-9)
    assert math.isclose(
        ns.activity_response(1, 0.5, 0.3, 0.2), 0.45689050872105805, abs_tol=1e-9
    )


def test_engagement_multiplier_is_one_without_nudges():
    assert ns.engagement_multiplier(0, 1.0, 2.0, 3.0) == 1.0
    assert ns.engagement_multiplier(5, 1.0, 0.0, 0.0) < 1.0
    assert ns.engagement_multiplier(5, 0.0, 0.0, 1.0) > 1.0


def test_load_environment_and_population():
    env = ns.load_environment(tiny_config(users=5))
    assert env.total_users == 5
    assert env.horizon_days == 4
    assert env.nudge_window_days == 5
    users = ns.sample_population(env)
    assert [u.user_id for u in users[:2]] == ["u000001", "u000002"]
    assert all(u.alpha == 1.0 for u in users)


def test_config_errors_are_value_errors():
    with pytest.raises(ValueError, match="row sum"):
        bad = json.loads(tiny_config())
        bad["contexts"][0]["baseline_matrix"]["rows"][0] = [0.6, 0.6, 0.6]
        ns.load_environment(json.dumps(bad))


def test_matrix_modulation_preserves_validity():
    env = ns.load_environment(tiny_config())
    users = ns.sample_population(env)
    assert users
    run = ns.run(env, policy="never_nudge")
    # never-nudge: no nudge decisions at all
    assert all(d.action == "no_nudge" for d in run.decisions)


def test_run_is_deterministic_and_closed_loop():
    env = ns.load_environment(tiny_config(horizon=5, users=4))
    a = ns.run(env)
    b = ns.run(env, workers=2)
    assert a.logs_jsonl == b.logs_jsonl
    assert [d.action for d in a.decisions] == [d.action for d in b.decisions]
    assert len(a.decisions) == 5 * 4
    assert len(a.result.per_day) == 5
    days = {row.day for row in a.metric_rows}
    assert days.issubset(set(range(5)))


def test_walk_session_emits_engagement_states_only():
    env = ns.load_environment(tiny_config())
    matrix = env.baseline_matrix("ctx")
    assert matrix.states[0] == "session_start"
    for seed in range(20):
        states = ns.walk_session(matrix, seed=seed)
        assert states
        assert "out_of_app" not in states


def test_modulate_matrix_scales_engagement_mass():
    env = ns.load_environment(tiny_config())
    base = env.baseline_matrix("ctx")
    halved = ns.modulate_matrix(base, 0.5)
    assert ns.validate_matrix(halved) == []
    assert halved.rows[0][1] == pytest.approx(0.25)
    assert halved.rows[0][2] == pytest.approx(0.75)
    identity = ns.modulate_matrix(base, 1.0)
    assert identity.rows == base.rows

import json
import math

import numpy as np
import pytest

import kmpc


def test_accelerations():
    cart, pole = kmpc.cartpole_accelerations(kmpc.CartPoleParams(), np.zeros(4), 1.0)
    assert cart == pytest.approx(0.9756098, rel=1e-7)
    assert pole == pytest.approx(-1.4634146, rel=1e-7)


def test_residual_round_trip():
    truth = kmpc.make_cartpole_plant(kmpc.CartPoleParams(), 1 / 15)
    nominal = kmpc.make_cartpole_plant(kmpc.CartPoleParams().scaled(0.75), 1 / 15)
    x = np.array([0.2, 0.0, 0.1, -0.1])
    u = np.array([1.5])
    x_next = truth.step(x, u)
    w = kmpc.extract_residual(nominal, x, u, x_next)
    np.testing.assert_allclose(nominal.step(x, u) + w, x_next, atol=1e-15)


def test_ogd_step_and_gradient():
    obs = kmpc.cartpole_observables()
    learner = kmpc.OgdLearner(obs, 0.01, 10.0)
    z = np.array([0.1, 0.0, 0.2, 0.0, 1.0])
    w = np.array([0.01, 0.02, -0.01, 0.03])
    first = learner.update(z, w)
    assert first == pytest.approx(float(w @ w))
    assert learner.model.norm() > 0.0
    da, db = kmpc.gradient(kmpc.KoopmanModel.zeros(obs), obs, np.zeros(4), z, w)
    assert da.shape == (4, 4) and db.shape == (4, 9)


def test_solver_respects_box():
    cfg = kmpc.MpcConfig()
    cfg.q = np.diag([5.0, 0.1, 5.0, 0.1])
    cfg.r = np.array([[0.1]])
    cfg.input_low = np.array([-1.0])
    cfg.input_high = np.array([1.0])
    plant = kmpc.make_cartpole_plant(kmpc.CartPoleParams(), 1 / 15)
    sol = kmpc.solve_nominal(cfg, plant, np.array([2.0, 0.0, 0.3, 0.0]))
    assert len(sol.inputs) == 20
    assert all(-1.0 <= u[0] <= 1.0 for u in sol.inputs)


def test_config_errors_name_field():
    with pytest.raises(kmpc.ConfigError, match="mpc.horizon"):
        kmpc.parse_config(json.dumps({"mpc": {"horizon": 0}}))
    cfg = kmpc.parse_config("{}")
    assert cfg.steps() == 90


def test_simulate_is_deterministic():
    cfg = kmpc.ExperimentConfig()
    cfg.run_count = 2
    cfg.duration = 1.0
    cfg.controllers = ["koopman", "nominal"]
    a = kmpc.simulate(cfg)
    b = kmpc.simulate(cfg)
    assert len(a) == 4
    for la, lb in zip(a, b):
        assert la["controller"] == lb["controller"]
        np.testing.assert_array_equal(la["x"], lb["x"])
        assert la["x"].shape == (15, 4)
        assert math.isfinite(la["final_sq_error"])


def test_run_experiment_writes_artifacts(tmp_path):
    cfg = kmpc.ExperimentConfig()
    cfg.run_count = 1
    cfg.duration = 1.0
    cfg.controllers = ["nominal"]
    out = kmpc.run_experiment(cfg, str(tmp_path / "out"))
    header = (tmp_path / "out" / "runs.csv").read_text().splitlines()[0]
    assert header.startswith("run,controller,t,x1")
    assert (tmp_path / "out" / "stabilization_error.svg").exists()
    assert str(out).endswith("out")


def test_quick_checks():
    rows = kmpc.run_checks(["gradient_oracle", "solver_oracle"])
    assert [r["name"] for r in rows] == ["gradient_oracle", "solver_oracle"]
    assert all(r["passed"] for r in rows)
    assert "dynamic_regret" in kmpc.check_names()


def test_exponent():
    t = np.arange(1, 1001, dtype=float)
    assert kmpc.sublinearity_exponent(list(np.sqrt(t))) == pytest.approx(0.5, abs=0.05)

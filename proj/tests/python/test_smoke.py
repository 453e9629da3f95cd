import json
import math

import numpy as np
import pytest

import topnav


def test_unit_square_has_one_loop():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    d = topnav.persistence(square)
    h1 = d["dim"] == 1
    assert h1.sum() == 1
    assert d["birth"][h1][0] == pytest.approx(1.0, abs=1e-12)
    assert d["death"][h1][0] == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert math.isinf(d["death"][d["dim"] == 0].max())
    assert d["birth_edge"].shape == (len(d["dim"]), 2)


def test_h0_deaths_are_spanning_tree_lengths():
    rng = np.random.default_rng(5)
    pts = rng.random((30, 2))
    d = topnav.persistence(pts, max_dim=0)
    deaths = np.sort(d["death"][np.isfinite(d["death"])])
    # Prim's algorithm on the full distance matrix
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    inside = np.zeros(len(pts), bool)
    inside[0] = True
    best = dist[0].copy()
    lengths = []
    for _ in range(len(pts) - 1):
        best[inside] = np.inf
        k = int(np.argmin(best))
        lengths.append(best[k])
        inside[k] = True
        best = np.minimum(best, dist[k])
    np.testing.assert_allclose(deaths, np.sort(lengths), atol=1e-12)


def test_circle_features():
    t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    f = topnav.features(np.c_[np.cos(t), np.sin(t)])
    assert f["h1_count"] >= 1
    assert f["maxPers1"] > 1.0
    assert 0.0 <= f["entropy1"] <= 1.0


def test_integrate_matches_rk4_shape():
    times, states = topnav.integrate("rossler", mu=[0.1, 0.2, 5.7], tf=5.0, dt=0.05)
    assert times.shape == (101,)
    assert states.shape == (101, 3)
    np.testing.assert_allclose(states[0], topnav.model_info("rossler")["initial_state"])


def test_model_info():
    assert set(topnav.model_names()) == {"lorenz", "rossler", "magnetic_pendulum"}
    info = topnav.model_info("lorenz")
    assert info["param_names"] == ["sigma", "rho", "beta"]
    assert info["bounds"][2][0] == info["bounds"][2][1]


def test_config_round_trip_and_errors():
    text = topnav.config("rossler", parameters={"a": 0.1}, seed=3)
    cfg = json.loads(text)
    assert cfg["parameters"]["a"] == 0.1
    assert cfg["seed"] == 3
    assert topnav.normalize_config(text) == text
    with pytest.raises(topnav.InputError):
        topnav.normalize_config('{"model": "rossler", "colour": 1}')
    with pytest.raises(ValueError):
        topnav.persistence(np.zeros(3))


def test_periodic_rossler_pipeline(tmp_path):
    text = topnav.config(
        "rossler",
        parameters={"a": 0.1, "b": 0.2},
        simulation={"tf": 60.0, "tail_count": 150},
        loss={"balance": False, "terms": [{"kind": "maxPers", "sign": 1}]},
        gd={"max_epochs": 0},
    )
    out = topnav.simulate(text, str(tmp_path / "sim"))
    assert (tmp_path / "sim" / "trajectory.csv").exists()
    assert out["maxPers1"] > 0.0
    r = topnav.loss_and_gradient(text)
    assert r["loss"] == pytest.approx(out["maxPers1"])
    assert r["gradient"].shape == (3,)
    assert np.all(np.isfinite(r["gradient"]))
    path = topnav.navigate(text, str(tmp_path / "nav"))
    assert path["mu"].shape == (1, 3)
    assert (tmp_path / "nav" / "path.json").exists()


def test_divergence_is_reported():
    with pytest.raises(topnav.DivergenceError):
        topnav.integrate("rossler", mu=[0.3, 0.0, 5.7], tf=200.0, dt=0.04)

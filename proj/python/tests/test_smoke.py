import math

import numpy as np
import pytest

import densyn


def small(name, trials=10):
    cfg = densyn.preset(name)
    cfg["validation"]["n_trials"] = trials
    return cfg


def test_basis():
    assert densyn.basis_size(2, 2) == 6
    assert densyn.basis_size(6, 3) == 84
    assert densyn.basis_exponents(2, 1) == [[0, 0], [1, 0], [0, 1]]
    np.testing.assert_array_equal(densyn.eval_basis(2, 2, np.array([2.0, 3.0])), [1, 2, 3, 4, 6, 9])


def test_presets_round_trip():
    assert densyn.preset_names() == ["vdp", "pendulum", "lorenz", "rigid_body"]
    for name in densyn.preset_names():
        cfg = densyn.preset(name)
        assert densyn.normalize_config(cfg) == cfg


def test_config_errors():
    cfg = densyn.preset("vdp")
    cfg["sampling"]["n_init"] = 0
    with pytest.raises(densyn.ConfigError):
        densyn.collect(cfg)


def test_pendulum_divergence():
    cfg = densyn.preset("pendulum")
    cfg["sampling"]["n_init"] = 4000
    zero = densyn.collect(cfg)[0]
    assert zero.label == "zero"
    assert zero.X.shape[0] == 2
    L = densyn.drift_generator(zero, 3)
    div = densyn.divergence_estimate(L, 2, 3)
    assert abs(div[0] + 0.5) < 0.05
    assert np.max(np.abs(div[1:])) < 0.05


def test_lorenz_pipeline():
    cfg = small("lorenz")
    res = densyn.synthesize(cfg)
    assert res["sdp"]["status"] == "optimal"
    assert res["certificate"]["violation_fraction"] == 0.0
    ctrl = res["controller"]
    closed = densyn.validate(cfg, ctrl)
    assert closed["converged_count"] == 10
    opened = densyn.validate(cfg, open_loop=True)
    assert opened["converged_count"] == 0
    assert densyn.eval_control(ctrl, np.zeros(3))[0] == 0.0
    t, x, status = densyn.simulate("lorenz", np.array([1.0, 1.0, 1.0]), ctrl, t_final=10.0)
    assert status == "completed"
    assert x.shape == (len(t), 3)
    assert np.linalg.norm(x[-1]) < 0.05


def test_pendulum_is_infeasible():
    with pytest.raises(densyn.StageError, match="sdp stage"):
        densyn.synthesize(densyn.preset("pendulum"))


def test_sdp_roundtrip():
    # min x+ + x- subject to x+ - x- = 3
    problem = {
        "block_sizes": [],
        "num_nonneg": 2,
        "objective": {"blocks": [], "linear": [1.0, 1.0]},
        "constraints": [{"blocks": [], "linear": [[0, 1.0], [1, -1.0]], "rhs": 3.0}],
    }
    sol = densyn.solve_sdp(problem)
    assert sol["status"] == "optimal"
    assert math.isclose(sol["primal_objective"], 3.0, abs_tol=1e-6)

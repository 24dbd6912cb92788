import json
import math

import pytest

try:
    import stmix
except ImportError:
    import _stmix as stmix


def test_lattice_counts():
    box = stmix.LatticeBox(2, 1)
    assert len(box) == 8
    assert len(box.representatives()) == 4
    assert len(stmix.LatticeBox(3, 1)) == 26
    assert box.find([1, 0]) >= 0
    assert box.find([0, 0]) == -1


def test_theta_and_constants():
    box = stmix.LatticeBox(2, 4)
    theta = stmix.make_theta(box, family="unit_shell")
    assert theta.hnorm_sq(-1.0) == pytest.approx(1.0)
    assert theta.hnorm_sq(1.0) == pytest.approx(1.0)
    mc = stmix.mixing_constants(theta, 2, 1.0)
    assert mc["C_theta_d"] == pytest.approx(math.pi**2)
    assert mc["D_theta_d"] == pytest.approx(math.pi**2 / 4)
    assert mc["t0"] == pytest.approx(1.9839e-5, rel=1e-3)


def test_frames_and_projection():
    v = stmix.basis_vectors([2, 1])
    assert len(v) == 1
    assert v[0][0] * 2 + v[0][1] * 1 == pytest.approx(0.0, abs=1e-14)
    assert stmix.perp_proj_sq([2, 1], [1, 1]) == pytest.approx(0.5)


def test_poincare_hand_values():
    assert stmix.poincare_gap([1.0], 2.0) == (1.0, pytest.approx(8.0))
    lhs, rhs = stmix.poincare_gap([1.0, 1.0], 2.0)
    assert (lhs, rhs) == (2.0, pytest.approx(32.0))


def test_spectrum_run_conserves_mass():
    out = stmix.integrate_spectrum(dimension=2, radius=8, T=0.01)
    sums = out["sum"]
    assert max(abs(s - sums[0]) for s in sums) <= 1e-10 * sums[0]
    l2 = out["l2"]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(l2, l2[1:]))


def test_drift_and_dirichlet():
    box = stmix.LatticeBox(2, 8)
    theta = stmix.make_theta(box)
    state = stmix.SpectrumState(box)
    state.set_pair([1, 1], 1.0)
    drift, warn = stmix.h_minus1_drift(state, theta, 1.0)
    assert drift == pytest.approx(0.2 * 2.0 * 2.0, rel=1e-10)
    assert not warn
    r = stmix.dirichlet_ratio(state, theta, 2.0)
    assert r["ratio"] <= 32.0


def test_orbit_cover():
    out = stmix.orbit_cover_summary([2, 1], box=16, margin=3)
    assert out["violations"] == 0
    assert out["min_projection_ratio"] >= 1.0


def test_kappa_sizing_limit():
    hm1 = None
    k = stmix.kappa_for_target_rate(1.0, 1e-14, 0.5, 10)
    box = stmix.LatticeBox(2, 10)
    theta = stmix.make_theta(box, family="powerlaw", alpha=0.5, cutoff=10)
    hm1 = theta.hnorm_sq(-1.0)
    assert k == pytest.approx(8.0 / (math.pi**2 * hm1), rel=1e-6)


def test_config_errors_and_run():
    errors, _ = stmix.parse_config_errors('{"command":"fly"}')
    assert errors
    code, report = stmix.run_command_json(
        json.dumps({"command": "poincare", "cases": 50, "out_dir": "/tmp/stmix_smoke"})
    )
    assert code == 0
    data = json.loads(report)
    assert data["criteria"][0]["pass"]

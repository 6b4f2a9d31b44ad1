import math

import numpy as np
import pytest
from scipy.linalg import expm

from adiashort.core import GammaPolicy, StateVector, adiabatic_state, hamiltonian, mixing_angle
from adiashort.integrator import (
    CSV_HEADER,
    IntegrationError,
    SimulationConfig,
    TrajectoryRecord,
    _ordered_product,
    closed_form_a_plus,
    expm_2x2,
    integrate,
    propagator_oracle,
)
from adiashort.models import AllenEberly, LandauZener, Tabulated

# Finite-window Hermitian LZ survival on [-200, 200] from |1>, frozen from the
# exponential-midpoint propagator converged between 2e5 and 8e5 slices.
LZ_SURVIVAL_200 = {0.2: 0.9391255355896, 1.0: 0.205868458962, 2.0: 0.0027944128276}


# --- oracle building blocks ---------------------------------------------------

def test_expm_2x2_matches_scipy():
    rng = np.random.default_rng(7)
    for scale in (1e-7, 1e-3, 1.0, 30.0):
        h = scale * (rng.normal(size=(20, 2, 2)) + 1j * rng.normal(size=(20, 2, 2)))
        dt = 0.37
        u = expm_2x2(h[:, 0, 0], h[:, 0, 1], h[:, 1, 0], h[:, 1, 1], dt)
        for k in range(20):
            ref = expm(-1j * h[k] * dt)
            np.testing.assert_allclose(u[k], ref, rtol=1e-12, atol=1e-13 * np.abs(ref).max())


def test_ordered_product_order():
    rng = np.random.default_rng(3)
    u = rng.normal(size=(13, 2, 2)) + 1j * rng.normal(size=(13, 2, 2))
    ref = np.eye(2, dtype=complex)
    for m in u:
        ref = m @ ref
    np.testing.assert_allclose(_ordered_product(u), ref, rtol=1e-12)


@pytest.mark.parametrize("model", [LandauZener(1.0), AllenEberly(1.0, 1.0)], ids=repr)
def test_oracle_is_second_order(model):
    cfg = SimulationConfig(model, GammaPolicy.shortcut(+1))
    ref = propagator_oracle(cfg, 400_000).as_array()
    e1 = np.linalg.norm(propagator_oracle(cfg, 1000).as_array() - ref)
    e2 = np.linalg.norm(propagator_oracle(cfg, 2000).as_array() - ref)
    assert e1 / e2 == pytest.approx(4.0, abs=0.5)


@pytest.mark.parametrize("n", [1, 7, 1000])
def test_oracle_exact_for_constant_drive(n):
    tab = Tabulated([0.0, 10.0], [1.0, 1.0], [0.0, 0.0])
    cfg = SimulationConfig(tab, GammaPolicy.off(), (0.0, math.pi), "bare1")
    assert propagator_oracle(cfg, n).p2 == pytest.approx(1.0, abs=1e-13)


def test_oracle_matches_integrator_per_component(scenarios):
    traj = scenarios.shortcut_runs[LandauZener(1.0)]
    ref = propagator_oracle(traj.config, 200_000).as_array()
    assert np.max(np.abs(traj.c[-1] - ref)) <= 1e-7


def test_oracle_chunking_is_invisible():
    cfg = SimulationConfig(LandauZener(1.0), GammaPolicy.shortcut(+1))
    a = propagator_oracle(cfg, 5000).as_array()
    b = propagator_oracle(cfg, 5000, chunk=777).as_array()
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        propagator_oracle(cfg, 0)


# --- configuration --------------------------------------------------------------

def test_config_validation():
    m = LandauZener(1.0)
    with pytest.raises(ValueError):
        SimulationConfig(m, rel_tol=0.0)
    with pytest.raises(ValueError):
        SimulationConfig(m, samples=1)
    with pytest.raises(ValueError):
        SimulationConfig(m, initial_state="bare3")
    with pytest.raises(ValueError):
        SimulationConfig(m, window=(3.0, -3.0))
    tab = Tabulated([-1, 0, 1], [1, 1, 1], [-1, 0, 1])
    with pytest.raises(ValueError, match="support"):
        SimulationConfig(tab, window=(-2, 1))


def test_initial_vectors():
    m = LandauZener(1.0)
    th = float(mixing_angle(m, -15.0))
    cases = {
        "bare1": [1, 0],
        "bare2": [0, 1],
        "adiabatic": adiabatic_state(th, "plus").as_array(),
        "adiabatic_minus": adiabatic_state(th, "minus").as_array(),
    }
    for name, vec in cases.items():
        np.testing.assert_array_equal(SimulationConfig(m, initial_state=name).initial_vector(), vec)
    custom = StateVector(0.6, 0.8j)
    assert SimulationConfig(m, initial_state=custom).initial_vector().tolist() == [0.6, 0.8j]


def test_config_dict_round_trip():
    cfg = SimulationConfig(AllenEberly(2.0, 1.0), GammaPolicy.shortcut(-1, (-3, 3)), (-10, 10),
                           StateVector(0.6, 0.8j), 1e-9, 1e-11, 101)
    assert SimulationConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.replace(samples=7).samples == 7


# --- integration ------------------------------------------------------------------

def test_rabi_oscillation_from_table():
    t = np.linspace(0.0, 2 * math.pi, 41)
    tab = Tabulated(t, np.ones_like(t), np.zeros_like(t))
    traj = integrate(SimulationConfig(tab, GammaPolicy.off(), (0.0, 2 * math.pi), "bare1", samples=257))
    np.testing.assert_allclose(traj.p2, np.sin(traj.t / 2) ** 2, rtol=0, atol=1e-9)


@pytest.mark.parametrize("omega", [0.2, 1.0, 2.0])
def test_hermitian_lz_survival_frozen(scenarios, omega):
    traj = scenarios.hermitian_runs[omega]
    assert traj.p1[-1] == pytest.approx(LZ_SURVIVAL_200[omega], abs=1e-8)
    assert np.max(np.abs(traj.norm - 1)) <= 1e-9


@pytest.mark.parametrize("omega", [0.2, 1.0, 2.0])
def test_shortcut_transfer_matches_mixing_angle(scenarios, omega):
    m = LandauZener(omega)
    traj = scenarios.shortcut_runs[m]
    assert traj.p2[-1] == pytest.approx(math.cos(mixing_angle(m, 15.0)) ** 2, abs=1e-8)
    assert traj.t[0] == -15.0 and traj.t[-1] == 15.0
    assert len(traj) == 3001


@pytest.mark.parametrize("model", [LandauZener(0.2), LandauZener(2.0), AllenEberly(1.0, 1.0)], ids=repr)
@pytest.mark.parametrize("init", ["bare1", "bare2", "adiabatic"])
def test_hermitian_runs_conserve_norm(model, init):
    traj = integrate(SimulationConfig(model, GammaPolicy.off(), initial_state=init, samples=301))
    assert np.max(np.abs(traj.norm - 1)) <= 1e-9


def test_decoupled_amplitude_stays_at_unit_modulus(scenarios):
    traj = scenarios.shortcut_runs[LandauZener(1.0)]
    assert np.max(traj.abs_a_minus) <= 1e-8
    assert traj.abs_a_plus[-1] == pytest.approx(1.0, abs=1e-8)
    assert traj.p2[-1] == pytest.approx(0.99889, abs=1e-5)
    assert scenarios.shortcut_runs[LandauZener(0.2)].p2[-1] == pytest.approx(0.999956, abs=1e-6)


@pytest.mark.parametrize("omega", [0.2, 1.0, 2.0])
def test_closed_form_unit_modulus_and_agreement(scenarios, omega):
    m = LandauZener(omega)
    val = closed_form_a_plus(m)
    assert abs(val) == pytest.approx(1.0, abs=1e-10)
    assert abs(val - scenarios.shortcut_runs[m].adiabatic[-1, 1]) <= 1e-7


def test_norm_dips_and_never_exceeds_one(scenarios):
    traj = scenarios.shortcut_runs[LandauZener(0.2)]
    assert traj.norm.min() == pytest.approx(0.115, abs=5e-3)
    assert traj.norm.max() <= 1 + 1e-9
    assert traj.norm[1500] < traj.norm[0]


def test_dense_output_matches_shorter_run():
    m = AllenEberly(1.0, 1.0)
    cfg = SimulationConfig(m, GammaPolicy.shortcut(+1), samples=301)
    traj = integrate(cfg)
    k = 117  # interior sample, not a step endpoint in general
    ref = propagator_oracle(cfg.replace(window=(-15.0, float(traj.t[k]))), 200_000).as_array()
    np.testing.assert_allclose(traj.c[k], ref, rtol=0, atol=1e-8)


def test_asymmetric_window_loses_norm_as_predicted():
    m = LandauZener(1.0)
    cfg = SimulationConfig(m, GammaPolicy.shortcut(+1), (-10.0, 15.0))
    traj = integrate(cfg)
    a_plus = traj.adiabatic[-1, 1]
    assert abs(a_plus - closed_form_a_plus(m, (-10.0, 15.0))) <= 1e-8
    assert abs(traj.norm[-1] - 1) > 1e-3


def test_truncated_gamma_window_restarts_controller():
    m = LandauZener(1.0)
    cfg = SimulationConfig(m, GammaPolicy.shortcut(+1, window=(-5.0, 5.0)))
    traj = integrate(cfg)
    assert traj.stats["segments"] == 3
    assert traj.gamma[0] == 0.0 and traj.gamma[1500] == -1.0
    # slice edges land on the gamma switch times (dt = 1e-4)
    ref = propagator_oracle(cfg, 300_000).as_array()
    assert np.linalg.norm(traj.c[-1] - ref) <= 1e-6


def test_tolerance_monotonicity():
    cfg = SimulationConfig(LandauZener(1.0), GammaPolicy.shortcut(+1), samples=3)
    ref = propagator_oracle(cfg, 400_000).as_array()
    errors = []
    for k in range(8):
        tol = 1e-5 / 2**k
        traj = integrate(cfg.replace(rel_tol=tol, abs_tol=tol * 1e-2))
        errors.append(np.linalg.norm(traj.c[-1] - ref))
    assert all(b <= a for a, b in zip(errors, errors[1:])), errors


def test_rel_tol_floor():
    with pytest.raises(IntegrationError, match="floor"):
        integrate(SimulationConfig(LandauZener(1.0), rel_tol=1e-16))


def test_trajectory_derived_columns(scenarios):
    traj = scenarios.shortcut_runs[LandauZener(1.0)]
    np.testing.assert_allclose(traj.p1 + traj.p2, traj.norm**2, rtol=1e-14)
    np.testing.assert_allclose(traj.abs_a_minus**2 + traj.abs_a_plus**2, traj.norm**2, rtol=1e-12)
    assert traj.final_state.p2 == traj.p2[-1]
    assert list(traj.columns()) == CSV_HEADER


def test_csv_and_json_round_trip(tmp_path, scenarios):
    traj = scenarios.shortcut_runs[AllenEberly(2.0, 1.0)]
    traj.to_csv(tmp_path / "t.csv")
    assert TrajectoryRecord.read_csv(tmp_path / "t.csv") == traj
    traj.to_json(tmp_path / "t.json")
    back = TrajectoryRecord.read_json(tmp_path / "t.json")
    assert back == traj
    assert back.config == traj.config and back.stats == traj.stats
    with open(tmp_path / "t.csv", encoding="utf-8") as fh:
        assert fh.readline().strip() == ",".join(CSV_HEADER)


def test_csv_rejects_wrong_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("t,a\n0,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        TrajectoryRecord.read_csv(p)


def test_closed_form_without_gain_is_a_phase():
    val = closed_form_a_plus(LandauZener(1.0), policy=GammaPolicy.off())
    assert abs(val) == pytest.approx(1.0, abs=1e-15)


def test_hamiltonian_is_hermitian_only_without_gamma():
    m = LandauZener(1.0)
    h = hamiltonian(m, GammaPolicy.off(), 0.3)
    np.testing.assert_array_equal(h, h.conj().T)
    h = hamiltonian(m, GammaPolicy.shortcut(+1), 0.3)
    assert not np.allclose(h, h.conj().T)

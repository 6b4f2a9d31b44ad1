import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiashort.core import (
    AdiabaticAmplitudes,
    DomainError,
    GammaPolicy,
    StateVector,
    WindowError,
    adiabatic_eigenvalues,
    adiabatic_frame,
    adiabatic_hamiltonian,
    adiabatic_state,
    check_window,
    from_adiabatic_basis,
    gamma_shortcut,
    hamiltonian,
    hamiltonian_entries,
    mixing_angle,
    rotation,
    to_adiabatic_basis,
)
from adiashort.models import AllenEberly, LandauZener, Tabulated

MODELS = [LandauZener(0.2), LandauZener(1.0), LandauZener(2.0),
          AllenEberly(0.2, 1.0), AllenEberly(1.0, 1.0), AllenEberly(2.0, 1.0)]
finite = st.floats(-1e3, 1e3, allow_nan=False)


# --- mixing angle and eigenvalues -------------------------------------------

def test_mixing_angle_branch_limits():
    m = LandauZener(1.0)
    assert mixing_angle(m, 0.0) == pytest.approx(math.pi / 4, abs=1e-15)
    assert mixing_angle(m, -1e8) == pytest.approx(math.pi / 2, abs=1e-7)
    assert mixing_angle(m, 1e8) == pytest.approx(0.0, abs=1e-7)
    t = np.linspace(-50, 50, 2001)
    th = mixing_angle(m, t)
    assert np.all((th > 0) & (th < math.pi / 2))
    assert np.all(np.diff(th) < 0)


def test_zero_coupling_is_a_domain_error():
    tab = Tabulated([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0], [-1.0, 0.0, 1.0])
    with pytest.raises(DomainError, match="coupling vanishes"):
        mixing_angle(tab, 0.0)
    with pytest.raises(DomainError):
        gamma_shortcut(tab, np.array([-0.5, 0.0]))


@pytest.mark.parametrize("model", MODELS, ids=repr)
def test_eigenvalues_match_numpy(model):
    t = np.linspace(-15, 15, 1000)
    h11, h12, h22 = hamiltonian_entries(model, GammaPolicy.off(), t)
    stack = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2).real
    ref = np.linalg.eigvalsh(stack)
    lm, lp = adiabatic_eigenvalues(model, t)
    np.testing.assert_allclose(lm, ref[:, 0], rtol=1e-12, atol=0)
    np.testing.assert_allclose(lp, ref[:, 1], rtol=1e-12, atol=0)


def test_eigenvalue_examples():
    assert adiabatic_eigenvalues(LandauZener(1.0), 0.0) == (-0.5, 0.5)
    lm, lp = adiabatic_eigenvalues(LandauZener(1.0), math.sqrt(3))
    assert lm == pytest.approx(0.5 * (math.sqrt(3) - 2), rel=1e-15)
    assert lp == pytest.approx(0.5 * (math.sqrt(3) + 2), rel=1e-15)
    assert adiabatic_eigenvalues(AllenEberly(2.0, 1.0), 0.0) == (-1.0, 1.0)


def test_mixing_angle_examples():
    assert mixing_angle(LandauZener(1.0), 0.0) == math.pi / 4
    assert mixing_angle(LandauZener(1.0), -15.0) == pytest.approx(0.5 * (math.pi - math.atan(1 / 15)), abs=1e-15)
    assert mixing_angle(AllenEberly(1.0, 1.0), 40.0) < 1e-16
    for w in (0.2, 1.0, 2.0):
        m = LandauZener(w)
        assert 0 < math.pi / 2 - mixing_angle(m, -15.0) <= math.atan(w / 15) / 2 + 1e-15
        assert 0 < mixing_angle(m, 15.0) <= math.atan(w / 15) / 2 + 1e-15
    t = np.linspace(-15, 15, 1001)
    assert np.all(np.diff(mixing_angle(AllenEberly(1.0, 1.0), t)) < 0)
    d = AllenEberly(2.0, 1.0).detuning(t)
    np.testing.assert_allclose(np.tan(2 * mixing_angle(AllenEberly(2.0, 1.0), t[d != 0])),
                               AllenEberly(2.0, 1.0).rabi(t[d != 0]) / d[d != 0], rtol=1e-9)


def test_theta_dot_examples():
    assert LandauZener(1.0).theta_dot(0.0) == -0.5
    assert AllenEberly(1.0, 1.0).theta_dot(0.0) == -0.5
    assert abs(LandauZener(2.0).theta_dot(1e8)) < 1e-15


def test_hamiltonian_examples():
    np.testing.assert_array_equal(hamiltonian(LandauZener(1.0), GammaPolicy.shortcut(+1), 0.0),
                                  [[-0.5j, 0.5], [0.5, 0.5j]])
    np.testing.assert_array_equal(hamiltonian(LandauZener(1.0), GammaPolicy.off(), 2.0), [[0, 0.5], [0.5, 2]])
    np.testing.assert_allclose(hamiltonian(AllenEberly(1.0, 1.0), GammaPolicy.shortcut(+1), 0.0),
                               [[-0.5j, 0.5], [0.5, 0.5j]], atol=1e-16)
    np.testing.assert_array_equal(adiabatic_hamiltonian(LandauZener(1.0), GammaPolicy.off(), 0.0),
                                  [[-0.5, 0.5j], [-0.5j, 0.5]])
    for m in MODELS:
        h = adiabatic_hamiltonian(m, GammaPolicy.off(), 0.7)
        np.testing.assert_array_equal(h, h.conj().T)


def test_basis_examples():
    a = to_adiabatic_basis(StateVector(1, 0), 0.0)
    assert (a.a_minus, a.a_plus) == (1, 0)
    a = to_adiabatic_basis(StateVector(1, 0), math.pi / 2)
    assert abs(a.a_minus) < 1e-16 and a.a_plus == 1


def test_eigenvalues_stable_far_from_crossing():
    # the small root ~ -W^2/(4D) must survive D >> W without cancellation
    lm, lp = adiabatic_eigenvalues(LandauZener(1e-3), 1e6)
    assert lm == pytest.approx(-0.25e-6 / 1e6, rel=1e-12)
    assert lp == pytest.approx(1e6, rel=1e-15)


def test_adiabatic_frame_fields():
    fr = adiabatic_frame(LandauZener(1.0), 0.0)
    assert fr.theta == pytest.approx(math.pi / 4)
    assert fr.theta_dot == -0.5
    assert (fr.lambda_minus, fr.lambda_plus) == (-0.5, 0.5)


# --- bases --------------------------------------------------------------------

@given(finite, finite, finite, finite, st.floats(0, math.pi / 2))
def test_basis_round_trip(a, b, c, d, theta):
    sv = StateVector(complex(a, b), complex(c, d))
    back = from_adiabatic_basis(to_adiabatic_basis(sv, theta), theta)
    assert abs(back.c1 - sv.c1) <= 1e-12 * (1 + abs(sv.c1) + abs(sv.c2))
    assert abs(back.c2 - sv.c2) <= 1e-12 * (1 + abs(sv.c1) + abs(sv.c2))


@given(st.floats(0, math.pi / 2))
def test_rotation_columns_are_adiabatic_states(theta):
    r = rotation(theta)
    np.testing.assert_allclose(r[:, 0], adiabatic_state(theta, "minus").as_array(), atol=0)
    np.testing.assert_allclose(r[:, 1], adiabatic_state(theta, "plus").as_array(), atol=0)
    a = to_adiabatic_basis(adiabatic_state(theta, "plus"), theta)
    assert abs(a.a_minus) < 1e-15 and abs(a.a_plus - 1) < 1e-15


def test_basis_rejects_non_finite():
    with pytest.raises(ValueError):
        to_adiabatic_basis(StateVector(1, 0), float("nan"))
    with pytest.raises(ValueError):
        StateVector(float("inf"), 0)
    with pytest.raises(ValueError):
        adiabatic_state(0.3, "up")


def test_adiabatic_state_eigenvectors():
    m = LandauZener(0.7)
    for t in (-3.0, 0.0, 2.5):
        th = float(mixing_angle(m, t))
        lm, lp = adiabatic_eigenvalues(m, t)
        h = hamiltonian(m, GammaPolicy.off(), t)
        for which, lam in (("plus", lp), ("minus", lm)):
            v = adiabatic_state(th, which).as_array()
            np.testing.assert_allclose(h @ v, lam * v, atol=1e-14)


# --- shortcut rate and Hamiltonians -------------------------------------------

@pytest.mark.parametrize("model", MODELS, ids=repr)
def test_decoupling_at_1000_times(model):
    pol = GammaPolicy.shortcut(+1)
    for t in np.linspace(-15, 15, 1000):
        scale = max(float(model.rabi(t)), abs(float(model.detuning(t))), abs(float(gamma_shortcut(model, t))))
        assert abs(adiabatic_hamiltonian(model, pol, t)[0, 1]) <= 1e-14 * scale


@pytest.mark.parametrize("model", MODELS, ids=repr)
def test_sign_law(model):
    t = np.linspace(-15, 15, 301)
    np.testing.assert_array_equal(gamma_shortcut(model, t, -1), -gamma_shortcut(model, t, +1))


@given(st.floats(0.05, 5), st.floats(-30, 30))
@settings(max_examples=200)
def test_shortcut_nulls_coupling_entry(omega, t):
    m = LandauZener(omega)
    ha = adiabatic_hamiltonian(m, GammaPolicy.shortcut(+1), t)
    scale = max(omega, abs(t), abs(gamma_shortcut(m, t)))
    assert abs(ha[0, 1]) <= 1e-14 * scale
    assert ha[1, 0] == pytest.approx(2j * m.theta_dot(t), rel=1e-12)


def _frame_by_differences(model, policy, t, h=1e-3):
    """R^T H R - i R^T dR/dt with dR/dt from Richardson-extrapolated central differences."""
    def rot(s):
        return rotation(float(mixing_angle(model, s)))

    def central(step):
        return (rot(t + step) - rot(t - step)) / (2 * step)

    dr = (4 * central(h / 2) - central(h)) / 3
    r = rot(t)
    return r.T @ hamiltonian(model, policy, t) @ r - 1j * r.T @ dr


@pytest.mark.parametrize("model", MODELS, ids=repr)
@pytest.mark.parametrize("policy", [GammaPolicy.off(), GammaPolicy.shortcut(+1), GammaPolicy.shortcut(-1)],
                         ids=["off", "shortcut", "shortcut-neg"])
def test_adiabatic_hamiltonian_matches_rotation(model, policy):
    for t in np.linspace(-15, 15, 1000):
        np.testing.assert_allclose(adiabatic_hamiltonian(model, policy, t),
                                   _frame_by_differences(model, policy, t), rtol=0, atol=1e-10)


def test_hamiltonian_layout():
    m = LandauZener(1.0)
    h = hamiltonian(m, GammaPolicy.shortcut(+1), 0.0)
    # H11 = i g/2 and H22 = D - i g/2, with g(0) = -1
    assert h[0, 0] == 0.5j * -1.0
    assert h[1, 1] == 0.5j
    assert h[0, 1] == h[1, 0] == 0.5
    h11, h12, h22 = hamiltonian_entries(m, GammaPolicy.off(), np.array([-1.0, 2.0]))
    np.testing.assert_array_equal(h22, [-1.0, 2.0])
    np.testing.assert_array_equal(h11, [0, 0])


# --- policies ------------------------------------------------------------------

def test_policy_window_truncates():
    m = LandauZener(1.0)
    p = GammaPolicy.shortcut(+1, window=(-2.0, 2.0))
    assert p.gamma(m, 2.0) == gamma_shortcut(m, 2.0)
    assert p.gamma(m, 2.0000001) == 0.0
    vals = p.gamma(m, np.array([-3.0, -2.0, 0.0, 3.0]))
    assert vals[0] == 0.0 and vals[3] == 0.0 and vals[2] == -1.0


def test_policy_custom_interpolates_and_round_trips():
    t = np.linspace(-5, 5, 101)
    p = GammaPolicy.custom(t, np.cos(t))
    assert p.window == (-5.0, 5.0)
    assert p.gamma(None, 0.3) == pytest.approx(math.cos(0.3), abs=1e-6)
    assert p.gamma(None, 6.0) == 0.0
    q = GammaPolicy.from_dict(p.to_dict())
    assert q == p
    for pol in (GammaPolicy.off(), GammaPolicy.shortcut(-1, (-1, 1))):
        assert GammaPolicy.from_dict(pol.to_dict()) == pol


def test_policy_validation():
    with pytest.raises(ValueError):
        GammaPolicy("bogus")
    with pytest.raises(ValueError):
        GammaPolicy.shortcut(2)
    with pytest.raises(WindowError):
        GammaPolicy.shortcut(1, window=(1.0, 1.0))
    with pytest.raises(ValueError):
        GammaPolicy.custom([0, 0], [1, 2])
    with pytest.raises(WindowError):
        GammaPolicy.custom([0, 1], [1, 2], window=(-1, 1))


@pytest.mark.parametrize("window", [(1, 1), (2, 1), (float("nan"), 1), (0, float("inf"))])
def test_check_window_rejects(window):
    with pytest.raises(WindowError):
        check_window(window)


def test_amplitudes_as_array():
    assert np.array_equal(AdiabaticAmplitudes(1j, 2).as_array(), [1j, 2])
    sv = StateVector.from_array([3, 4j])
    assert (sv.p1, sv.p2, sv.norm) == (9.0, 16.0, 5.0)

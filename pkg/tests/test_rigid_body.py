import numpy as np
import pytest

from src.dynamics.rigid_body import (DynState, ExternalWrench, SimulationFault, Wrench, bias_terms,
                                     inverse_dynamics, kinetic_energy, mass_matrix, nonlinear_effects,
                                     potential_energy, step_forward_dynamics)
from src.kinematics.chain import geometric_jacobian
from src.kinematics.robot_model import model_from_dict

from .conftest import random_configuration

G = 9.81


def pendulum(mass=1.0, length=0.5, inertia=1e-3, damping=0.0):
    """绕y轴转动的单摆，q=0 时质心位于关节正下方"""
    return model_from_dict({"name": "pendulum", "joints": [{
        "axis": [0.0, 1.0, 0.0], "mass": mass, "com": [0.0, 0.0, -length],
        "inertia": [inertia, 0.0, 0.0, inertia, 0.0, inertia],
        "q_min": -10.0, "q_max": 10.0, "qd_max": 100.0, "tau_max": 100.0, "damping": damping,
    }]})


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, -2.0])
def test_pendulum_gravity_torque(theta):
    model = pendulum()
    tau = inverse_dynamics(model, np.array([theta]), np.zeros(1), np.zeros(1))
    assert tau[0] == pytest.approx(1.0 * G * 0.5 * np.sin(theta), abs=1e-12)


def test_pendulum_inertia_about_axis():
    model = pendulum(mass=2.0, length=0.5, inertia=0.01)
    M = mass_matrix(model, np.array([0.7]))
    assert M[0, 0] == pytest.approx(0.01 + 2.0 * 0.25)


@pytest.mark.parametrize("trial", range(4))
def test_rnea_consistent_with_mass_matrix(arm7, rng, trial):
    q = random_configuration(arm7, rng)
    qd = rng.uniform(-1.0, 1.0, arm7.dof)
    qdd = rng.uniform(-2.0, 2.0, arm7.dof)
    coriolis, gravity = bias_terms(arm7, q, qd)
    expected = mass_matrix(arm7, q) @ qdd + coriolis + gravity
    np.testing.assert_allclose(inverse_dynamics(arm7, q, qd, qdd), expected, atol=1e-9)


def test_mass_matrix_columns_from_rnea(arm7, rng):
    q = random_configuration(arm7, rng)
    zeros = np.zeros(arm7.dof)
    gravity = inverse_dynamics(arm7, q, zeros, zeros)
    M = mass_matrix(arm7, q)
    for i in range(arm7.dof):
        e = np.zeros(arm7.dof)
        e[i] = 1.0
        np.testing.assert_allclose(inverse_dynamics(arm7, q, zeros, e) - gravity, M[:, i], atol=1e-9)


def test_mass_matrix_symmetric_positive_definite(arm7, rng):
    M = mass_matrix(arm7, random_configuration(arm7, rng))
    np.testing.assert_allclose(M, M.T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(M)) > 0.0


def test_nonlinear_effects_is_coriolis_plus_gravity(arm7, rng):
    q = random_configuration(arm7, rng)
    qd = rng.uniform(-1.0, 1.0, arm7.dof)
    coriolis, gravity = bias_terms(arm7, q, qd)
    np.testing.assert_allclose(nonlinear_effects(arm7, q, qd), coriolis + gravity, atol=1e-10)


def test_coriolis_power_is_consistent_with_energy(arm7, rng):
    # 科氏项不做功: q̇ᵀ(½Ṁq̇ - C) = 0
    q = random_configuration(arm7, rng)
    qd = rng.uniform(-1.0, 1.0, arm7.dof)
    h = 1e-6
    M_dot = (mass_matrix(arm7, q + h * qd) - mass_matrix(arm7, q - h * qd)) / (2.0 * h)
    coriolis, _ = bias_terms(arm7, q, qd)
    assert qd @ (0.5 * M_dot @ qd - coriolis) == pytest.approx(0.0, abs=1e-6)


def test_external_wrench_maps_through_jacobian_transpose(arm7):
    q = arm7.home
    zeros = np.zeros(arm7.dof)
    wrench = Wrench(force=[0.0, 20.0, -5.0], torque=[0.1, 0.0, 0.3])
    free = inverse_dynamics(arm7, q, zeros, zeros)
    loaded = inverse_dynamics(arm7, q, zeros, zeros, external=wrench)
    J = geometric_jacobian(arm7, q)
    np.testing.assert_allclose(loaded, free - J.T @ wrench.as_vector(), atol=1e-9)


def test_gravity_compensation_holds_exactly(arm7):
    state = DynState(q=arm7.home.copy(), qd=np.zeros(arm7.dof))
    for _ in range(50):
        tau = nonlinear_effects(arm7, state.q, state.qd)
        state = step_forward_dynamics(arm7, state, tau, dt=0.001)
    np.testing.assert_array_equal(state.q, arm7.home)
    np.testing.assert_array_equal(state.qd, np.zeros(arm7.dof))
    assert state.t == pytest.approx(0.05)


def test_static_equilibrium_under_external_wrench(arm7):
    wrench = Wrench(force=[0.0, 10.0, 0.0])
    zeros = np.zeros(arm7.dof)
    tau = inverse_dynamics(arm7, arm7.home, zeros, zeros, external=wrench)
    state = step_forward_dynamics(arm7, DynState(q=arm7.home, qd=zeros), tau, external=wrench, dt=0.001)
    np.testing.assert_allclose(state.qd, zeros, atol=1e-9)


def test_free_fall_from_rest_accelerates_down(planar2):
    model = planar2.with_gravity([0.0, -G, 0.0])
    state = DynState(q=np.array([0.0, 0.0]), qd=np.zeros(2))
    state = step_forward_dynamics(model, state, np.zeros(2), dt=0.001)
    assert state.qd[0] < 0.0


def test_pendulum_energy_conserved():
    model = pendulum()
    state = DynState(q=np.array([1.0]), qd=np.zeros(1))
    energy0 = kinetic_energy(model, state.q, state.qd) + potential_energy(model, state.q)
    swing = 1.0 * G * 0.5 * (1.0 - np.cos(1.0))
    worst = 0.0
    for _ in range(1000):
        state = step_forward_dynamics(model, state, np.zeros(1), dt=0.001)
        energy = kinetic_energy(model, state.q, state.qd) + potential_energy(model, state.q)
        worst = max(worst, abs(energy - energy0))
    assert state.t == pytest.approx(1.0)
    assert worst <= 1e-3 * swing


@pytest.mark.slow
def test_free_motion_energy_conserved(arm7, rng):
    model = arm7.with_gravity([0.0, 0.0, 0.0])
    assert np.all(model.damping == 0.0)
    state = DynState(q=random_configuration(model, rng), qd=rng.uniform(-1.0, 1.0, model.dof))
    energy0 = kinetic_energy(model, state.q, state.qd)
    worst = 0.0
    for _ in range(1000):
        state = step_forward_dynamics(model, state, np.zeros(model.dof), dt=0.001)
        worst = max(worst, abs(kinetic_energy(model, state.q, state.qd) - energy0))
    assert worst <= 1e-3 * energy0


def test_damping_dissipates_energy():
    model = pendulum(damping=0.2)
    state = DynState(q=np.array([1.0]), qd=np.zeros(1))
    energy0 = potential_energy(model, state.q)
    for _ in range(1000):
        state = step_forward_dynamics(model, state, np.zeros(1), dt=0.001)
    energy = kinetic_energy(model, state.q, state.qd) + potential_energy(model, state.q)
    assert energy < energy0


def test_torque_is_saturated(planar2):
    state = DynState(q=planar2.home, qd=np.zeros(2))
    big = step_forward_dynamics(planar2, state, np.array([1e6, 0.0]), dt=0.001)
    limit = step_forward_dynamics(planar2, state, np.array([planar2.tau_max[0], 0.0]), dt=0.001)
    np.testing.assert_allclose(big.qd, limit.qd)


@pytest.mark.parametrize("dt", [0.0, -0.001, 0.02])
def test_invalid_time_step(planar2, dt):
    state = DynState(q=planar2.home, qd=np.zeros(2))
    with pytest.raises(ValueError):
        step_forward_dynamics(planar2, state, np.zeros(2), dt=dt)


def test_non_finite_input_rejected(planar2):
    state = DynState(q=np.array([np.nan, 0.0]), qd=np.zeros(2))
    with pytest.raises(ValueError):
        step_forward_dynamics(planar2, state, np.zeros(2))


def test_singular_mass_matrix_faults():
    model = model_from_dict({"joints": [{
        "axis": [0.0, 0.0, 1.0], "mass": 1.0, "com": [0.0, 0.0, 0.0],
        "inertia": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        "q_min": -1.0, "q_max": 1.0, "qd_max": 1.0, "tau_max": 1.0,
    }]})
    with pytest.raises(SimulationFault):
        step_forward_dynamics(model, DynState(q=np.zeros(1), qd=np.zeros(1)), np.zeros(1))


def test_ill_conditioned_mass_matrix_faults(arm7):
    state = DynState(q=arm7.home, qd=np.zeros(arm7.dof))
    with pytest.raises(SimulationFault):
        step_forward_dynamics(arm7, state, np.zeros(arm7.dof), condition_limit=1.0)


def test_external_wrench_schedule_half_open():
    push = Wrench(force=[0.0, 20.0, 0.0])
    twist = Wrench(torque=[0.0, 0.0, 1.0])
    schedule = ExternalWrench([(1.0, 1.1, push), (1.05, 2.0, twist)])
    assert schedule.at(0.99).is_zero()
    np.testing.assert_allclose(schedule.at(1.0).force, [0.0, 20.0, 0.0])
    np.testing.assert_allclose(schedule.at(1.07).as_vector(), [0.0, 20.0, 0.0, 0.0, 0.0, 1.0])
    assert schedule.at(2.0).is_zero()
    with pytest.raises(ValueError):
        ExternalWrench([(1.0, 1.0, push)])

import math

import numpy as np
import pytest

from src.planning.harmonic_planner import (VELOCITY_CONSTANT, HarmonicPlanner, Phase, PlannerAxisState,
                                           PlannerParams, convergence_acceleration, derive_gains,
                                           detect_phase, divergence_acceleration, step_harmonic,
                                           via_point_phase)


def run_to_target(params, x0, target, seconds, period=0.01):
    planner = HarmonicPlanner(params, x0)
    planner.set_target(target, params.v_d)
    positions, velocities = [], []
    for _ in range(int(round(seconds / period))):
        x, v = planner.advance(period)
        positions.append(x.copy())
        velocities.append(v.copy())
    return planner, np.array(positions), np.array(velocities)


def test_parameter_table_lookup():
    params = PlannerParams.from_table(3)
    assert (params.zeta, params.f_n, params.a_cap, params.v_d) == (0.01, 5.0, 5.0, 0.3)
    assert params.omega_n == pytest.approx(2.0 * math.pi * 5.0)
    with pytest.raises(ValueError):
        PlannerParams.from_table(7)


@pytest.mark.parametrize("field", ["zeta", "f_n", "a_cap", "v_d"])
def test_non_positive_parameter_rejected(field):
    values = {"zeta": 0.01, "f_n": 5.0, "a_cap": 5.0, "v_d": 0.3}
    values[field] = 0.0
    with pytest.raises(ValueError):
        PlannerParams(**values)


def test_derived_gains_for_set_three():
    params = PlannerParams.from_table(3)
    gains = derive_gains(params, np.array([0.0, 0.01, 0.0]), v_d=0.3)
    assert gains.K == pytest.approx(986.96, abs=0.01)
    assert gains.mu == pytest.approx(0.6283, abs=1e-4)
    assert gains.v_max == pytest.approx(VELOCITY_CONSTANT * 0.3)
    assert gains.v_max == pytest.approx(0.4785)
    # 2(v_max/‖d‖)²·d 远大于 a_cap，被限幅
    np.testing.assert_allclose(gains.a_max_vec, [0.0, 5.0, 0.0])


def test_short_move_limits_speed_by_natural_frequency():
    params = PlannerParams.from_table(3)
    d = np.array([0.0005, 0.0, 0.0])
    gains = derive_gains(params, d)
    v_max = VELOCITY_CONSTANT * params.omega_n * 0.0005
    assert gains.v_max == pytest.approx(v_max)
    assert gains.a_max_vec[0] == pytest.approx(2.0 * (v_max / 0.0005) ** 2 * 0.0005)
    assert gains.a_max_vec[0] < params.a_cap


def test_acceleration_direction_follows_distance():
    params = PlannerParams.from_table(1)
    gains = derive_gains(params, np.array([-0.001, 0.0005, 0.0]))
    assert gains.a_max_vec[0] < 0.0 < gains.a_max_vec[1]
    assert gains.a_max_vec[2] == 0.0
    assert np.all(np.abs(gains.a_max_vec) <= params.a_cap)


def test_zero_stream_speed_falls_back_to_parameter():
    params = PlannerParams.from_table(2)
    d = np.array([0.0, 0.5, 0.0])
    assert derive_gains(params, d, v_d=0.0).v_max == pytest.approx(VELOCITY_CONSTANT * params.v_d)
    assert derive_gains(params, d, v_d=0.1).v_max == pytest.approx(VELOCITY_CONSTANT * 0.1)


def test_degenerate_distance_keeps_previous_gains():
    params = PlannerParams.from_table(3)
    previous = derive_gains(params, np.array([0.1, 0.0, 0.0]))
    assert derive_gains(params, np.zeros(3), previous=previous) is previous
    fresh = derive_gains(params, np.zeros(3))
    np.testing.assert_allclose(fresh.a_max_vec, np.zeros(3))


@pytest.mark.parametrize("prev_err, err, expected", [
    (0.0, 0.1, Phase.DIVERGENCE),
    (0.1, 0.2, Phase.DIVERGENCE),
    (0.2, 0.1, Phase.CONVERGENCE),
    (-0.2, -0.1, Phase.CONVERGENCE),
    (0.1, -0.05, Phase.DIVERGENCE),
    (0.1, 0.1, Phase.DIVERGENCE),
])
def test_detect_phase(prev_err, err, expected):
    assert detect_phase(prev_err, err) is expected


def test_divergence_acceleration_saturates():
    assert divergence_acceleration(0.001, 1000.0, 5.0) == pytest.approx(1.0)
    assert divergence_acceleration(0.1, 1000.0, 5.0) == pytest.approx(5.0)
    assert divergence_acceleration(-0.1, 1000.0, 5.0) == pytest.approx(-5.0)
    assert divergence_acceleration(0.0, 1000.0, 5.0) == 0.0


def test_convergence_spring_passes_through_midpoint():
    x_T0, A_max = 0.04, 3.0
    assert convergence_acceleration(x_T0, x_T0, A_max) == pytest.approx(A_max)
    assert convergence_acceleration(0.5 * x_T0, x_T0, A_max) == pytest.approx(0.0)
    assert convergence_acceleration(0.0, x_T0, A_max) == pytest.approx(-A_max)


def test_phase_switches_and_latches_peak():
    params = PlannerParams.from_table(3)
    gains = derive_gains(params, np.array([0.02, 0.0, 0.0]))
    states = tuple(PlannerAxisState() for _ in range(3))
    target = np.array([0.02, 0.0, 0.0])
    phases = []
    for _ in range(50):
        states = step_harmonic(states, gains, target, 0.001)
        phases.append(states[0].phase)
    assert phases[0] is Phase.DIVERGENCE
    assert Phase.CONVERGENCE in phases
    assert states[0].x_T0 == pytest.approx(0.02)
    assert states[0].A_max == pytest.approx(min(gains.K * 0.02, abs(gains.a_max_vec[0])))
    assert states[1].x == 0.0 and states[2].x == 0.0


def test_via_point_phase_follows_error_envelope():
    gains = derive_gains(PlannerParams.from_table(3), np.array([0.0, 0.004, 0.0]))
    state = PlannerAxisState(via_err=0.004)

    shrinking = via_point_phase(state, 0.003, gains, 5.0)
    assert shrinking.held is Phase.CONVERGENCE
    assert shrinking.x_T0 == pytest.approx(0.003)
    assert shrinking.A_max == pytest.approx(min(gains.K * 0.003, 5.0))
    assert shrinking.via_err == pytest.approx(0.003)

    growing = via_point_phase(state, 0.005, gains, 5.0)
    assert growing.held is Phase.DIVERGENCE
    assert growing.prev_err == 0.0 and growing.peak == 0.0

    assert via_point_phase(state, -0.001, gains, 5.0).held is Phase.DIVERGENCE


def test_held_convergence_uses_via_point_anchor():
    gains = derive_gains(PlannerParams.from_table(3), np.array([0.004, 0.0, 0.0]))
    state = via_point_phase(PlannerAxisState(via_err=0.004), 0.003, gains, 5.0)
    states = (state, PlannerAxisState(), PlannerAxisState())
    held = step_harmonic(states, gains, np.array([0.003, 0.0, 0.0]), 0.001, hold=True)
    # 位移为 x_T0 时的弹簧加速度即 A_max
    assert held[0].phase is Phase.CONVERGENCE
    assert held[0].a == pytest.approx(state.A_max)


@pytest.mark.parametrize("index", range(1, 7))
@pytest.mark.parametrize("target", [(0.0, 0.05, -0.02), (0.1, -0.05, 0.03)])
def test_converges_to_static_target(index, target):
    params = PlannerParams.from_table(index)
    target = np.array(target)
    horizon = min(10.0 / (params.zeta * params.omega_n), 3.0)
    planner, positions, velocities = run_to_target(params, np.zeros(3), target, seconds=horizon)
    errors = np.max(np.abs(positions - target), axis=1)
    assert np.all(errors[-20:] < 1e-4)
    assert planner.via_interval is None
    speeds = np.linalg.norm(velocities, axis=1)
    assert np.all(speeds <= planner.gains.v_max + 1e-12)


def test_speed_bounded_over_random_target_streams():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        params = PlannerParams.from_table(int(rng.integers(1, 7)))
        planner = HarmonicPlanner(params, rng.uniform(-0.1, 0.1, 3))
        for _ in range(5):
            if rng.random() < 0.8:
                planner.set_target(planner.position + rng.uniform(-0.05, 0.05, 3), float(rng.uniform(0.0, 0.5)))
            _, v = planner.advance(0.01)
            assert np.linalg.norm(v) <= planner.gains.v_max * (1.0 + 1e-12)


def test_tracks_ramp_then_settles_on_last_via_point():
    params = PlannerParams.from_table(3)
    planner = HarmonicPlanner(params, np.zeros(3))
    for k in range(1, 51):
        planner.set_target(np.array([0.0, 0.001 * k, 0.0005 * k]), 0.11)
        planner.advance(0.01)
    assert planner.via_interval == pytest.approx(0.01)
    assert np.max(np.abs(planner.position - planner.target)) < 0.003
    for _ in range(150):
        planner.advance(0.01)
    np.testing.assert_allclose(planner.position, [0.0, 0.05, 0.025], atol=1e-4)


def test_advance_equals_substeps():
    params = PlannerParams.from_table(2)
    target = np.array([0.1, 0.0, 0.0])
    planner = HarmonicPlanner(params, np.zeros(3), substep=0.001)
    planner.set_target(target, 0.2)
    states = planner.states
    gains = planner.gains
    for _ in range(10):
        states = step_harmonic(states, gains, target, 0.001)
    x, v = planner.advance(0.01)
    np.testing.assert_allclose(x, [s.x for s in states], atol=1e-15)
    np.testing.assert_allclose(v, [s.v for s in states], atol=1e-15)


def test_degenerate_target_is_ignored():
    planner = HarmonicPlanner(PlannerParams.from_table(3), np.array([0.1, 0.2, 0.3]))
    assert not planner.set_target(np.array([0.1, 0.2, 0.3]))
    x, v = planner.advance(0.01)
    np.testing.assert_allclose(x, [0.1, 0.2, 0.3])
    np.testing.assert_allclose(v, np.zeros(3))


def test_degenerate_threshold_from_config(restore_config):
    restore_config.set("planner", "min_target_distance", 0.01)
    planner = HarmonicPlanner(PlannerParams.from_table(3), np.zeros(3))
    assert not planner.set_target(np.array([0.0, 0.005, 0.0]))
    assert planner.set_target(np.array([0.0, 0.02, 0.0]))


def test_deterministic():
    params = PlannerParams.from_table(5)
    target = np.array([0.03, -0.01, 0.02])
    _, first, _ = run_to_target(params, np.zeros(3), target, seconds=0.5)
    _, second, _ = run_to_target(params, np.zeros(3), target, seconds=0.5)
    np.testing.assert_array_equal(first, second)


def test_invalid_step():
    params = PlannerParams.from_table(3)
    gains = derive_gains(params, np.array([0.1, 0.0, 0.0]))
    with pytest.raises(ValueError):
        step_harmonic(tuple(PlannerAxisState() for _ in range(3)), gains, np.zeros(3), 0.0)

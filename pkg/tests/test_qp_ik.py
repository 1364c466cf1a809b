import numpy as np
import pytest

import src.ik.qp_ik as qp_ik
from src.ik.qp_ik import IkState, IkWeights, QpIkSolver, ik_step, solve_ik_increment, velocity_bounds
from src.kinematics.chain import forward_kinematics
from src.kinematics.se3 import Pose, so3_exp

from .conftest import random_configuration

PLANAR = (1.0, 1.0, 0.0, 0.0, 0.0, 0.0)


def test_single_joint_increment():
    J = np.zeros((6, 1))
    J[0, 0] = 1.0
    e = np.array([0.1, 0.0, 0.0, 0.0, 0.0, 0.0])
    weights = IkWeights(w_task=1.0, w_reg=0.01, dt=0.01, gain=1.0)
    dq = solve_ik_increment(J, e, np.zeros(1), np.array([-10.0]), np.array([10.0]), np.array([100.0]), weights)
    assert dq[0] == pytest.approx(0.1 / 1.01)


def test_velocity_bounds_combine_position_limits():
    lo, hi = velocity_bounds(np.array([0.95, -0.5]), -np.ones(2), np.ones(2), np.array([2.0, 2.0]), 0.1)
    np.testing.assert_allclose(lo, [-2.0, -2.0])
    np.testing.assert_allclose(hi, [0.5, 2.0])
    lo, hi = velocity_bounds(np.array([1.0 + 1e-12]), -np.ones(1), np.ones(1), np.ones(1), 0.1)
    assert lo[0] <= hi[0]


def test_increment_respects_limits(rng):
    q_min, q_max = -np.ones(4), np.ones(4)
    qd_max = np.full(4, 0.5)
    weights = IkWeights(dt=0.01, gain=50.0)
    for _ in range(20):
        J = rng.normal(size=(6, 4))
        e = rng.normal(size=6)
        q_d = rng.uniform(-1.0, 1.0, size=4)
        dq = solve_ik_increment(J, e, q_d, q_min, q_max, qd_max, weights)
        assert np.all(np.abs(dq) <= qd_max + 1e-12)
        q_next = q_d + dq * weights.dt
        assert np.all(q_next >= q_min - 1e-12) and np.all(q_next <= q_max + 1e-12)


def test_converges_to_reachable_target(planar2):
    goal = forward_kinematics(planar2, np.array([0.5, 0.9]))
    solver = QpIkSolver(planar2, IkWeights(w_reg=2e-4, dt=0.01, gain=50.0, axis_weights=PLANAR))
    for _ in range(100):
        solver.step(goal)
    reached = forward_kinematics(planar2, solver.q_d).translation
    np.testing.assert_allclose(reached, goal.translation, atol=1e-6)
    assert np.linalg.norm(solver.last_error.linear) < 1e-5


def test_out_of_reach_target_stretches_toward_it(planar2):
    target = Pose(translation=[0.0, 3.0, 0.0])
    weights = IkWeights(w_task=1.0, w_reg=0.01, dt=0.01, gain=1.0, axis_weights=PLANAR)
    state = IkState(q_d=planar2.home)
    for _ in range(2000):
        state, _ = ik_step(planar2, state, target, weights)
    reached = forward_kinematics(planar2, state.q_d).translation
    np.testing.assert_allclose(reached, [0.0, 2.0, 0.0], atol=1e-3)
    assert np.all(np.isfinite(state.q_d))


def test_joint_limits_hold_when_target_needs_more(planar2):
    goal = forward_kinematics(planar2, np.array([0.0, 0.0]))
    weights = IkWeights(dt=0.01, gain=50.0, axis_weights=PLANAR)
    state = IkState(q_d=np.array([3.0, 3.0]))
    for _ in range(200):
        state, _ = ik_step(planar2, state, goal, weights)
        assert np.all(state.q_d <= planar2.q_max) and np.all(state.q_d >= planar2.q_min)


def test_error_is_zero_at_target(arm7):
    goal = forward_kinematics(arm7, arm7.home)
    state, error = ik_step(arm7, IkState(q_d=arm7.home), goal, IkWeights.from_config(arm7.dof, 0.01))
    np.testing.assert_allclose(error.as_vector(), np.zeros(6), atol=1e-12)
    np.testing.assert_allclose(state.q_d, arm7.home, atol=1e-12)


def test_invalid_desired_pose(planar2):
    with pytest.raises(ValueError):
        ik_step(planar2, IkState(q_d=planar2.home), Pose(rotation=2.0 * np.eye(3)), IkWeights())


def test_weights_from_config_scale_regularization():
    weights = IkWeights.from_config(7, 0.01)
    assert weights.w_reg == pytest.approx(7e-4)
    assert weights.gain == pytest.approx(50.0)
    assert IkWeights.from_config(7, 0.01, gain=2.0).gain == 2.0
    assert weights.max_iterations == 200


@pytest.mark.parametrize("overrides", [{"w_reg": 0.0}, {"w_task": -1.0}, {"dt": 0.0}, {"gain": 0.0},
                                       {"axis_weights": (1, 1, 1, 1, 1, -1)},
                                       {"max_iterations": 0}])
def test_invalid_weights(overrides):
    with pytest.raises(ValueError):
        IkWeights(**overrides)


def test_iteration_limit_reaches_solver(planar2, monkeypatch):
    seen = []
    original = qp_ik.solve_box_ls

    def recording(H, g, lo, hi, max_iter=None):
        seen.append(max_iter)
        return original(H, g, lo, hi, max_iter=max_iter)

    monkeypatch.setattr(qp_ik, "solve_box_ls", recording)
    goal = forward_kinematics(planar2, np.array([0.5, 0.9]))
    ik_step(planar2, IkState(q_d=planar2.home), goal, IkWeights(dt=0.01, max_iterations=7, axis_weights=PLANAR))
    ik_step(planar2, IkState(q_d=planar2.home), goal, IkWeights.from_config(planar2.dof, 0.01))
    assert seen == [7, 200]


@pytest.mark.slow
def test_joint_limits_hold_for_arbitrary_targets(arm7, rng):
    weights = IkWeights.from_config(arm7.dof, 0.01)
    step = arm7.qd_max * weights.dt
    for trial in range(300):
        q_d = random_configuration(arm7, rng, margin=0.0)
        if trial % 3 == 0:
            # 从限位上出发
            at_limit = rng.random(arm7.dof) < 0.5
            q_d = np.where(at_limit, np.where(rng.random(arm7.dof) < 0.5, arm7.q_min, arm7.q_max), q_d)
        axis = rng.normal(size=3)
        rotation = so3_exp(axis / np.linalg.norm(axis) * rng.uniform(0.0, np.pi))
        target = Pose(rotation=rotation, translation=rng.uniform(-3.0, 3.0, 3))
        state = IkState(q_d=q_d)
        for _ in range(5):
            previous = state.q_d
            state, _ = ik_step(arm7, state, target, weights)
            assert np.all(state.q_d >= arm7.q_min - 1e-12)
            assert np.all(state.q_d <= arm7.q_max + 1e-12)
            assert np.all(np.abs(state.q_d - previous) <= step + 1e-12)

from __future__ import annotations

import math

import numpy as np

from doortraversal import armkin
from doortraversal.frames import Pose, quat_to_rotation_vector


def random_config(rng, scale=1.0):
    return rng.uniform(-armkin.JOINT_LIMIT * scale, armkin.JOINT_LIMIT * scale, size=armkin.DOF)


def finite_difference_jacobian(q, h=1e-6):
    """Central differences on FK: positions directly, orientation via log map."""
    jac = np.zeros((6, armkin.DOF))
    for j in range(armkin.DOF):
        qp, qm = q.copy(), q.copy()
        qp[j] += h
        qm[j] -= h
        fp, fm = armkin.forward_kinematics(qp), armkin.forward_kinematics(qm)
        jac[:3, j] = (fp.position - fm.position) / (2 * h)
        rel = fp.compose(fm.inverse()).quaternion
        jac[3:, j] = quat_to_rotation_vector(rel) / (2 * h)
    return jac


def test_fk_zero_config_is_straight_arm():
    hand = armkin.forward_kinematics(np.zeros(armkin.DOF))
    assert np.allclose(hand.position, [armkin.REACH, 0, 0], atol=1e-12)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(42)
    for _ in range(100):
        q = random_config(rng, scale=0.9)
        analytic = armkin.jacobian(q)
        numeric = finite_difference_jacobian(q)
        assert np.max(np.abs(analytic - numeric)) < 1e-5


def test_ik_fixed_point_returns_seed():
    rng = np.random.default_rng(1)
    q = random_config(rng, scale=0.5)
    target = armkin.forward_kinematics(q)
    result = armkin.solve_ik(target, q)
    assert result.converged
    assert result.iterations == 0
    assert np.allclose(result.joint_angles, q)


def test_ik_near_target_converges_fast():
    rng = np.random.default_rng(2)
    q = random_config(rng, scale=0.4)
    hand = armkin.forward_kinematics(q)
    nudged = Pose(position=hand.position + [1e-3, 0, 0], quaternion=hand.quaternion)
    result = armkin.solve_ik(nudged, q)
    assert result.converged
    assert result.iterations <= 5


def test_ik_out_of_reach_residual_matches_geometry():
    # A straight-ahead target past full extension: the best the chain can do
    # is stretch out, leaving a residual equal to the distance to the reach
    # sphere (within 10%).
    target = Pose.from_translation(1.0, 0.0, 0.0)
    result = armkin.solve_ik(target, np.full(armkin.DOF, 0.3))
    assert not result.converged
    expected = 1.0 - armkin.REACH
    assert abs(result.position_error - expected) < 0.1 * expected


def test_ik_convergence_rate_on_reachable_targets():
    rng = np.random.default_rng(3)
    trials, hits = 200, 0
    seed = np.zeros(armkin.DOF)
    for _ in range(trials):
        q = random_config(rng)
        target = armkin.forward_kinematics(q)
        result = armkin.solve_ik(target, seed)
        if result.position_error < 1e-3:
            hits += 1
    assert hits / trials >= 0.99

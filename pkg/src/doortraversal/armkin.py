"""Serial 7R arm chain: forward kinematics, geometric Jacobian, DLS inverse
kinematics.

The chain is a desk-scale stand-in with a spherical shoulder (Z-Y-X), a pitch
elbow, and a spherical wrist (X-Y-Z); link lengths 0.25 / 0.25 / 0.08 m along
local +X, joint limits +-2.6 rad.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import Pose, quat_from_matrix, quat_to_rotation_vector

JOINT_LIMIT = 2.6
LINK_LENGTHS = (0.25, 0.25, 0.08)
DOF = 7

_AX = np.array([1.0, 0.0, 0.0])
_AY = np.array([0.0, 1.0, 0.0])
_AZ = np.array([0.0, 0.0, 1.0])

# (rotation axis in the local frame, translation to the next joint after rotating)
_JOINTS = [
    (_AZ, None),
    (_AY, None),
    (_AX, np.array([LINK_LENGTHS[0], 0.0, 0.0])),
    (_AY, np.array([LINK_LENGTHS[1], 0.0, 0.0])),
    (_AX, None),
    (_AY, None),
    (_AZ, np.array([LINK_LENGTHS[2], 0.0, 0.0])),
]

REACH = sum(LINK_LENGTHS)


@dataclass
class IKResult:
    joint_angles: np.ndarray
    converged: bool
    iterations: int
    position_error: float
    orientation_error: float


_AXIS_INDEX = {id(_AX): 0, id(_AY): 1, id(_AZ): 2}


def clamp_joints(q: np.ndarray) -> np.ndarray:
    return np.clip(q, -JOINT_LIMIT, JOINT_LIMIT)


def _axis_rotation(axis_idx: int, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if axis_idx == 0:
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis_idx == 1:
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def _fk_frames(q: np.ndarray):
    """Joint axes/origins in the chain base plus the hand rotation/position."""
    rot = np.eye(3)
    pos = np.zeros(3)
    axes = np.empty((DOF, 3))
    origins = np.empty((DOF, 3))
    for i, (qi, (axis, offset)) in enumerate(zip(q, _JOINTS)):
        axes[i] = rot @ axis
        origins[i] = pos
        rot = rot @ _axis_rotation(_AXIS_INDEX[id(axis)], qi)
        if offset is not None:
            pos = pos + rot @ offset
    return axes, origins, rot, pos


def forward_kinematics(q) -> Pose:
    _, _, rot, pos = _fk_frames(np.asarray(q, dtype=float))
    return Pose(position=pos, quaternion=quat_from_matrix(rot))


def jacobian(q) -> np.ndarray:
    """6x7 geometric Jacobian in the chain base frame (rows: v_xyz, w_xyz)."""
    axes, origins, _, hand_pos = _fk_frames(np.asarray(q, dtype=float))
    jac = np.empty((6, DOF))
    jac[:3] = np.cross(axes, hand_pos - origins).T
    jac[3:] = axes.T
    return jac


def pose_error(current: Pose, target: Pose) -> tuple[np.ndarray, float, float]:
    """6-vector task error (position, rotation vector) and its two norms."""
    e_pos = target.position - current.position
    rel_q = target.compose(current.inverse()).quaternion
    e_rot = quat_to_rotation_vector(rel_q)
    return np.concatenate([e_pos, e_rot]), float(np.linalg.norm(e_pos)), float(np.linalg.norm(e_rot))


def solve_ik(
    target: Pose,
    seed,
    position_tolerance: float = 1e-3,
    orientation_tolerance: float = math.radians(0.5),
    max_iterations: int = 200,
    damping: float = 0.05,
    step_clamp: float = 0.2,
    restarts: int = 6,
) -> IKResult:
    """Damped-least-squares IK for the 7R chain.

    Iterates until the task-space error is under both tolerances or the
    iteration budget runs out; on non-convergence returns the best
    configuration seen with `converged=False`. Restarts (deterministic) are
    retried from perturbed seeds when the first descent stalls.
    """
    seed = clamp_joints(np.asarray(seed, dtype=float))
    restart_rng = np.random.default_rng(2024)
    best: IKResult | None = None
    total_iters = 0

    for attempt in range(restarts + 1):
        if attempt == 0:
            q = seed.copy()
        else:
            q = clamp_joints(restart_rng.uniform(-1.8, 1.8, size=DOF))
        q, iters, pos_err, rot_err = _descend(
            q, target, position_tolerance, orientation_tolerance,
            max_iterations, damping, step_clamp,
        )
        total_iters += iters
        converged = pos_err < position_tolerance and rot_err < orientation_tolerance
        result = IKResult(q, converged, total_iters, pos_err, rot_err)
        if best is None or (pos_err + 0.1 * rot_err) < (best.position_error + 0.1 * best.orientation_error):
            best = result
        if converged:
            return result
    return best


def _task_error(rot, pos, target: Pose):
    e_pos = target.position - pos
    rel = target.rotation_matrix() @ rot.T
    e_rot = quat_to_rotation_vector(quat_from_matrix(rel))
    return np.concatenate([e_pos, e_rot]), float(np.linalg.norm(e_pos)), float(np.linalg.norm(e_rot))


def _descend(q, target, pos_tol, rot_tol, max_iterations, damping, step_clamp):
    identity6 = np.eye(6)
    axes, origins, rot, pos = _fk_frames(q)
    err, pos_err, rot_err = _task_error(rot, pos, target)
    iters = 0
    while (pos_err >= pos_tol or rot_err >= rot_tol) and iters < max_iterations:
        jac = np.empty((6, DOF))
        jac[:3] = np.cross(axes, pos - origins).T
        jac[3:] = axes.T
        jjt = jac @ jac.T + (damping ** 2) * identity6
        dq = jac.T @ np.linalg.solve(jjt, err)
        peak = float(np.max(np.abs(dq)))
        if peak > step_clamp:
            dq *= step_clamp / peak
        q = clamp_joints(q + dq)
        iters += 1
        axes, origins, rot, pos = _fk_frames(q)
        err, pos_err, rot_err = _task_error(rot, pos, target)
    return q, iters, pos_err, rot_err


def within_reach(target_position, base_position=(0.0, 0.0, 0.0), margin: float = 0.0) -> bool:
    d = float(np.linalg.norm(np.asarray(target_position, dtype=float) - np.asarray(base_position, dtype=float)))
    return d <= REACH + margin

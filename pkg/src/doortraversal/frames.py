"""Rigid-body poses and a mutable tree of named reference frames.

Conventions: right-handed coordinates, Z-up, gravity along -Z. Angles are
radians everywhere except file-format and UI boundaries. Quaternions are
stored scalar-last (x, y, z, w) and renormalized after every composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUAT_NORM_TOL = 1e-9


class FrameError(ValueError):
    """Raised for frame-tree misuse (unknown frames, cross-tree queries)."""


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(rot: np.ndarray) -> np.ndarray:
    """Unit quaternion (x, y, z, w) of a 3x3 rotation matrix."""
    t = np.trace(rot)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        return np.array(
            [(rot[2, 1] - rot[1, 2]) / s, (rot[0, 2] - rot[2, 0]) / s,
             (rot[1, 0] - rot[0, 1]) / s, 0.25 * s]
        )
    i = int(np.argmax(np.diag(rot)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = math.sqrt(max(1e-15, 1.0 + rot[i, i] - rot[j, j] - rot[k, k])) * 2
    quat = np.empty(4)
    quat[i] = 0.25 * s
    quat[j] = (rot[j, i] + rot[i, j]) / s
    quat[k] = (rot[k, i] + rot[i, k]) / s
    quat[3] = (rot[k, j] - rot[j, k]) / s
    return quat


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return np.array([0.0, 0.0, 0.0, 1.0])
    half = 0.5 * angle
    return np.concatenate([axis / n * math.sin(half), [math.cos(half)]])


def quat_to_rotation_vector(q: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi]."""
    x, y, z, w = q
    if w < 0.0:
        x, y, z, w = -x, -y, -z, -w
    sin_half = math.sqrt(x * x + y * y + z * z)
    if sin_half < 1e-12:
        return np.array([2.0 * x, 2.0 * y, 2.0 * z])
    angle = 2.0 * math.atan2(sin_half, w)
    return np.array([x, y, z]) * (angle / sin_half)


class Pose:
    """A rigid transform: rotation (unit quaternion) plus translation."""

    __slots__ = ("position", "quaternion")

    def __init__(self, position=None, quaternion=None):
        self.position = (
            np.zeros(3) if position is None else np.asarray(position, dtype=float).copy()
        )
        q = (
            np.array([0.0, 0.0, 0.0, 1.0])
            if quaternion is None
            else np.asarray(quaternion, dtype=float).copy()
        )
        self.quaternion = q / np.linalg.norm(q)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Pose":
        return Pose(position=np.array([x, y, z]))

    @staticmethod
    def from_axis_angle(axis, angle: float, position=None) -> "Pose":
        return Pose(position=position, quaternion=quat_from_axis_angle(np.asarray(axis, dtype=float), angle))

    @staticmethod
    def from_xy_yaw(x: float, y: float, yaw: float, z: float = 0.0) -> "Pose":
        return Pose.from_axis_angle([0.0, 0.0, 1.0], yaw, position=np.array([x, y, z]))

    def compose(self, other: "Pose") -> "Pose":
        """Transform applying `other` then `self` (matrix product self @ other)."""
        rotated = self.rotate_vector(other.position)
        return Pose(
            position=self.position + rotated,
            quaternion=_quat_multiply(self.quaternion, other.quaternion),
        )

    def inverse(self) -> "Pose":
        conj = self.quaternion * np.array([-1.0, -1.0, -1.0, 1.0])
        inv_pos = -_quat_to_matrix(conj) @ self.position
        return Pose(position=inv_pos, quaternion=conj)

    def rotate_vector(self, v) -> np.ndarray:
        return _quat_to_matrix(self.quaternion) @ np.asarray(v, dtype=float)

    def transform_point(self, p) -> np.ndarray:
        return self.position + self.rotate_vector(p)

    def rotation_matrix(self) -> np.ndarray:
        return _quat_to_matrix(self.quaternion)

    def yaw(self) -> float:
        fwd = self.rotate_vector([1.0, 0.0, 0.0])
        return math.atan2(fwd[1], fwd[0])

    def rotation_angle_to(self, other: "Pose") -> float:
        """Magnitude of the rotation taking self's orientation to other's."""
        rel = _quat_multiply(other.quaternion, self.quaternion * np.array([-1.0, -1.0, -1.0, 1.0]))
        return float(np.linalg.norm(quat_to_rotation_vector(rel / np.linalg.norm(rel))))

    def distance_to(self, other: "Pose") -> float:
        return float(np.linalg.norm(self.position - other.position))

    def interpolate(self, other: "Pose", alpha: float) -> "Pose":
        """Linear position blend plus quaternion slerp, alpha in [0, 1]."""
        q0, q1 = self.quaternion, other.quaternion.copy()
        dot = float(np.dot(q0, q1))
        if dot < 0.0:
            q1, dot = -q1, -dot
        if dot > 1.0 - 1e-10:
            q = q0 + alpha * (q1 - q0)
        else:
            theta = math.acos(min(1.0, dot))
            q = (math.sin((1 - alpha) * theta) * q0 + math.sin(alpha * theta) * q1) / math.sin(theta)
        return Pose(
            position=(1 - alpha) * self.position + alpha * other.position,
            quaternion=q,
        )

    def is_identity(self, tol: float = 1e-9) -> bool:
        return (
            float(np.linalg.norm(self.position)) <= tol
            and abs(abs(float(self.quaternion[3])) - 1.0) <= tol
        )

    def copy(self) -> "Pose":
        return Pose(position=self.position, quaternion=self.quaternion)

    def to_json_dict(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "orientationQuaternion": [float(v) for v in self.quaternion],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "Pose":
        return Pose(position=data["position"], quaternion=data["orientationQuaternion"])

    def __repr__(self) -> str:
        p = ", ".join(f"{v:.4f}" for v in self.position)
        q = ", ".join(f"{v:.4f}" for v in self.quaternion)
        return f"Pose(p=[{p}], q=[{q}])"


WORLD_FRAME_NAME = "world"


@dataclass
class ReferenceFrame:
    name: str
    handle: int
    parent_handle: int  # -1 for the world root
    transform_to_parent: Pose = field(default_factory=Pose.identity)


class FrameTree:
    """Named reference frames rooted at a single world frame.

    Lookups are by string name with an integer-handle fast path; the tree is
    owned by the runtime tick loop and must not be mutated concurrently.
    """

    def __init__(self):
        self._frames: list[ReferenceFrame] = []
        self._by_name: dict[str, int] = {}
        self._add(WORLD_FRAME_NAME, -1, Pose.identity())

    def _add(self, name: str, parent_handle: int, transform: Pose) -> ReferenceFrame:
        handle = len(self._frames)
        frame = ReferenceFrame(name=name, handle=handle, parent_handle=parent_handle,
                               transform_to_parent=transform.copy())
        self._frames.append(frame)
        self._by_name[name] = handle
        return frame

    @property
    def world(self) -> ReferenceFrame:
        return self._frames[0]

    def has_frame(self, name: str) -> bool:
        return name in self._by_name

    def frame(self, name: str) -> ReferenceFrame:
        try:
            return self._frames[self._by_name[name]]
        except KeyError:
            raise FrameError(f"unknown frame '{name}'") from None

    def names(self) -> list[str]:
        return [f.name for f in self._frames]

    def add_frame(self, name: str, parent: str, transform_to_parent: Pose) -> ReferenceFrame:
        if name in self._by_name:
            raise FrameError(f"frame '{name}' already exists")
        parent_frame = self.frame(parent)
        return self._add(name, parent_frame.handle, transform_to_parent)

    def add_or_update_frame(self, name: str, parent: str, transform_to_parent: Pose) -> ReferenceFrame:
        if name in self._by_name:
            frame = self.frame(name)
            frame.parent_handle = self.frame(parent).handle
            frame.transform_to_parent = transform_to_parent.copy()
            return frame
        return self.add_frame(name, parent, transform_to_parent)

    def update_frame(self, name: str, new_transform_to_parent: Pose) -> None:
        frame = self.frame(name)
        if frame.parent_handle < 0:
            raise FrameError("the world root frame cannot be moved")
        frame.transform_to_parent = new_transform_to_parent.copy()

    def world_pose(self, name: str) -> Pose:
        frame = self.frame(name)
        pose = Pose.identity()
        while frame.parent_handle >= 0:
            pose = frame.transform_to_parent.compose(pose)
            frame = self._frames[frame.parent_handle]
        return pose

    def transform_between(self, from_name: str, to_name: str) -> Pose:
        """Pose of `from_name` expressed in `to_name` (chains through the root)."""
        return self.world_pose(to_name).inverse().compose(self.world_pose(from_name))


@dataclass
class ScrewAxis:
    """A spatial axis (origin + unit direction) expressed in a named frame."""

    origin_in_frame: np.ndarray
    direction_in_frame: np.ndarray
    frame_name: str = WORLD_FRAME_NAME

    def __post_init__(self):
        self.origin_in_frame = np.asarray(self.origin_in_frame, dtype=float)
        self.direction_in_frame = np.asarray(self.direction_in_frame, dtype=float)
        n = float(np.linalg.norm(self.direction_in_frame))
        if abs(n - 1.0) > 1e-6:
            if n < 1e-12:
                raise ValueError("screw axis direction must be nonzero")
            self.direction_in_frame = self.direction_in_frame / n

    def resolved_in_world(self, frames: FrameTree) -> tuple[np.ndarray, np.ndarray]:
        pose = frames.world_pose(self.frame_name)
        origin = pose.transform_point(self.origin_in_frame)
        direction = pose.rotate_vector(self.direction_in_frame)
        return origin, direction / np.linalg.norm(direction)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi

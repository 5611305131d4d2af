"""Deterministic kinematic simulation of the robot and the door.

World layout: the door frame sits in the plane x = 0 with the opening centered
on y = 0; the robot approaches from -x and traversal progress is the pelvis x
coordinate. The panel hangs from a vertical hinge at one frame edge; its angle
is 0 when closed and grows as it opens (push swings to +x, pull to -x).

The robot is kinematic: trajectories are tracked exactly, walking follows the
standing / transfer / swing state machine, and the CoM sway is a lateral
offset proportional to step width. Grasped handles are welded: the hand is
slaved rigidly to the mechanism, whose joint angles are driven by projecting
the commanded hand motion onto the hinge and spindle axes.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import armkin
from .actions import Footstep, Side
from .frames import Pose, quat_from_matrix, quat_to_rotation_vector

# robot geometry (desk scale)
PELVIS_HEIGHT = 0.95
SHOULDER_HEIGHT = 1.25
CAMERA_HEIGHT = 1.30
CAMERA_FORWARD_OFFSET = 0.10
BLOCK_CIRCLE_RADIUS = 0.05  # plan-view arm/shoulder contact circles
HOME_ARM_ANGLES = np.array([0.0, 0.45, 0.0, 1.1, 0.0, 0.0, 0.0])

# door geometry
DOOR_HEIGHT = 2.0
HANDLE_HEIGHT = 1.0
HANDLE_EDGE_OFFSET = 0.10
HANDLE_PROTRUSION = 0.06
HANDLE_TRAVEL_LIMIT = 1.3
PUSH_BAR_TRAVEL_LIMIT = 0.05
UNLATCH_HANDLE_ANGLE = 0.52  # rad, knob / lever
UNLATCH_DEPRESSION = 0.02  # m, push bar
COLLISION_WINDOW = 0.3  # +-x band around the frame plane where shoulders matter

# mechanism plate half extents (along panel, vertical), plan-view segments
MECHANISM_HALF_EXTENTS = {
    "Knob": (0.045, 0.045),
    "LeverHandle": (0.10, 0.03),
    "PushBar": (0.30, 0.03),
    "PullHandle": (0.02, 0.18),
}
LATCHING_MECHANISMS = {"Knob", "LeverHandle", "PushBar"}


class MechanismType(str, Enum):
    KNOB = "Knob"
    LEVER_HANDLE = "LeverHandle"
    PUSH_BAR = "PushBar"
    PULL_HANDLE = "PullHandle"


class HingeSide(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


class SwingDirection(str, Enum):
    PUSH = "Push"
    PULL = "Pull"


class WalkPhase(str, Enum):
    STANDING = "Standing"
    TRANSFER = "Transfer"
    SWING = "Swing"


class HandMode(str, Enum):
    CARRIED = "Carried"  # rides along with the body
    TRACKING = "Tracking"  # follows world-frame trajectory samples
    JOINT = "Joint"  # follows a jointspace interpolation
    WELDED = "Welded"  # rigidly attached to the door mechanism


@dataclass
class DoorState:
    hinge_side: HingeSide
    swing_direction: SwingDirection
    mechanism_type: MechanismType
    frame_width: float = 1.0
    panel_width: float = 0.92
    panel_angle: float = 0.0
    handle_angle: float = 0.0
    depression: float = 0.0
    latched: bool = True
    spring_closer_rate: float = 0.0
    max_open_angle: float = 2.1

    def __post_init__(self):
        if self.mechanism_type is MechanismType.PULL_HANDLE:
            self.latched = False
        if self.latched:
            self.panel_angle = 0.0

    @property
    def swing_sign(self) -> float:
        """Sign of the world-z rotation per unit opening angle."""
        right = self.hinge_side is HingeSide.RIGHT
        push = self.swing_direction is SwingDirection.PUSH
        return -1.0 if (right and push) or (not right and not push) else 1.0

    @property
    def hinge_point(self) -> np.ndarray:
        y = -self.frame_width / 2.0 if self.hinge_side is HingeSide.RIGHT else self.frame_width / 2.0
        return np.array([0.0, y, 0.0])

    @property
    def hinge_world_pose(self) -> Pose:
        return Pose(position=self.hinge_point)

    def panel_direction(self, angle: float | None = None) -> np.ndarray:
        """Unit vector from the hinge toward the free edge, in plan view."""
        angle = self.panel_angle if angle is None else angle
        a = self.swing_sign * angle
        closed = 1.0 if self.hinge_side is HingeSide.RIGHT else -1.0
        return np.array([-math.sin(a) * closed, math.cos(a) * closed, 0.0])

    def face_normal(self, angle: float | None = None) -> np.ndarray:
        """Panel face normal pointing toward the approach side (-x when closed)."""
        angle = self.panel_angle if angle is None else angle
        a = self.swing_sign * angle
        return np.array([-math.cos(a), -math.sin(a), 0.0])

    @property
    def handle_edge_distance(self) -> float:
        if self.mechanism_type is MechanismType.PUSH_BAR:
            return self.panel_width / 2.0  # bar spans the middle of the panel
        return self.panel_width - HANDLE_EDGE_OFFSET

    def handle_point(self, angle: float | None = None) -> np.ndarray:
        base = self.hinge_point + self.handle_edge_distance * self.panel_direction(angle)
        protrusion = HANDLE_PROTRUSION - self.depression  # push bars travel into the door
        return base + protrusion * self.face_normal(angle) + np.array([0.0, 0.0, HANDLE_HEIGHT])

    def handle_segment(self, angle: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """3D endpoints of the mechanism plate (lever arm, bar span, ...)."""
        half_u, half_v = MECHANISM_HALF_EXTENTS[self.mechanism_type.value]
        center = self.handle_point(angle)
        along = self.panel_direction(angle)
        if self.mechanism_type is MechanismType.PULL_HANDLE:
            along = np.array([0.0, 0.0, 1.0])
            half_u = half_v
        return center - half_u * along, center + half_u * along

    def handle_pose(self) -> Pose:
        """Mechanism frame: +x out of the door toward the approach side, z up,
        spun about +x by the handle angle."""
        n = self.face_normal()
        z = np.array([0.0, 0.0, 1.0])
        y = np.cross(z, n)
        rot = np.column_stack([n, y, z])
        base = Pose(position=self.handle_point(), quaternion=quat_from_matrix(rot))
        spin = Pose.from_axis_angle(n, self.handle_angle)
        return Pose(position=base.position,
                    quaternion=spin.compose(base).quaternion)

    def grasp_point_near(self, position: np.ndarray) -> np.ndarray:
        """Closest point on the mechanism plate to a hand position."""
        a, b = self.handle_segment()
        ab = b - a
        denom = float(np.dot(ab, ab))
        t = 0.0 if denom < 1e-12 else float(np.clip(np.dot(position - a, ab) / denom, 0.0, 1.0))
        return a + t * ab


@dataclass
class QueuedStep:
    side: Side
    target: Pose
    swing_duration: float
    transfer_duration: float
    step_width: float
    action_id: int


@dataclass
class WalkingState:
    phase: WalkPhase = WalkPhase.STANDING
    queue: deque = field(default_factory=deque)
    support_side: str = "Both"
    state_timer: float = 0.0
    swing_start: Pose | None = None
    sway: float = 0.0  # lateral CoM offset in the pelvis frame, +left


@dataclass
class HandState:
    mode: HandMode = HandMode.CARRIED
    pose: Pose = field(default_factory=Pose.identity)
    carried_offset: Pose = field(default_factory=Pose.identity)
    trajectory: list[tuple[float, Pose]] | None = None
    trajectory_start: float = 0.0
    commanded: Pose = field(default_factory=Pose.identity)
    joint_start: np.ndarray | None = None
    joint_target: np.ndarray | None = None
    joint_duration: float = 0.0
    closed: bool = False
    welded: bool = False
    weld_offset: Pose = field(default_factory=Pose.identity)


@dataclass
class ScalarTrajectory:
    start: float
    target: float
    duration: float
    elapsed: float = 0.0

    def value(self) -> float:
        if self.duration <= 0 or self.elapsed >= self.duration:
            return self.target
        tau = self.elapsed / self.duration
        ease = 0.5 * (1.0 - math.cos(math.pi * tau))
        return self.start + (self.target - self.start) * ease

    @property
    def done(self) -> bool:
        return self.elapsed >= self.duration


@dataclass
class CollisionReport:
    collision: bool
    clearance: float
    shoulder_center_offset: float


def _ease(tau: float) -> float:
    return 0.5 * (1.0 - math.cos(math.pi * min(max(tau, 0.0), 1.0)))


class SimWorld:
    """Single-owner world state advanced by the tick loop."""

    def __init__(self, door: DoorState, start_stance: tuple[Pose, Pose],
                 shoulder_span: float | None = None):
        self.door = door
        self.sim_time = 0.0
        self.shoulder_span = 0.85 * door.frame_width if shoulder_span is None else shoulder_span
        left, right = start_stance
        self.foot_poses = {Side.LEFT: left.copy(), Side.RIGHT: right.copy()}
        self.walking = WalkingState()
        self.chest_yaw = 0.0
        self.pelvis_height_delta = 0.0
        self.chest_trajectory: ScalarTrajectory | None = None
        self.pelvis_trajectory: ScalarTrajectory | None = None
        self.pelvis_pose = self._pelvis_from_feet()
        self.arm_joint_angles = {Side.LEFT: HOME_ARM_ANGLES.copy(),
                                 Side.RIGHT: HOME_ARM_ANGLES.copy()}
        self.hands = {Side.LEFT: HandState(), Side.RIGHT: HandState()}
        for side in (Side.LEFT, Side.RIGHT):
            hand = self.hands[side]
            hand.pose = self.arm_base_pose(side).compose(
                armkin.forward_kinematics(self.arm_joint_angles[side]))
            hand.carried_offset = self.pelvis_pose.inverse().compose(hand.pose)
        self.collision_flag = False
        self.collision_count = 0
        self._welded_door_sides: set[Side] = set()
        self._current_step: QueuedStep | None = None

    # -- derived robot geometry ---------------------------------------------

    def _pelvis_from_feet(self) -> Pose:
        left, right = self.foot_poses[Side.LEFT], self.foot_poses[Side.RIGHT]
        mid = 0.5 * (left.position + right.position)
        fwd = left.rotate_vector([1, 0, 0]) + right.rotate_vector([1, 0, 0])
        yaw = math.atan2(fwd[1], fwd[0])
        return Pose.from_xy_yaw(mid[0], mid[1], yaw,
                                z=PELVIS_HEIGHT + self.pelvis_height_delta)

    def heading(self) -> float:
        return self.pelvis_pose.yaw()

    def torso_yaw(self) -> float:
        return self.heading() + self.chest_yaw

    def shoulder_position(self, side: Side) -> np.ndarray:
        lateral = self.shoulder_span / 2.0 if side is Side.LEFT else -self.shoulder_span / 2.0
        yaw = self.torso_yaw()
        p = self.pelvis_pose.position
        return np.array([p[0] - lateral * math.sin(yaw),
                         p[1] + lateral * math.cos(yaw),
                         SHOULDER_HEIGHT + self.pelvis_height_delta])

    def arm_base_pose(self, side: Side) -> Pose:
        pos = self.shoulder_position(side)
        return Pose.from_xy_yaw(pos[0], pos[1], self.torso_yaw(), z=pos[2])

    def camera_pose(self, tilt_rad: float) -> Pose:
        """Camera frame: +x right, +y down, +z optical axis (forward/down)."""
        yaw = self.torso_yaw()
        t = tilt_rad
        fwd = np.array([math.cos(t) * math.cos(yaw), math.cos(t) * math.sin(yaw), -math.sin(t)])
        right = np.array([math.sin(yaw), -math.cos(yaw), 0.0])
        down = np.cross(fwd, right)
        rot = np.column_stack([right, down, fwd])
        p = self.pelvis_pose.position
        pos = np.array([p[0] + CAMERA_FORWARD_OFFSET * math.cos(yaw),
                        p[1] + CAMERA_FORWARD_OFFSET * math.sin(yaw),
                        CAMERA_HEIGHT + self.pelvis_height_delta])
        return Pose(position=pos, quaternion=quat_from_matrix(rot))

    def com_lateral_offset(self) -> float:
        return self.walking.sway

    # -- commands from the action executor -----------------------------------

    def queue_footsteps(self, steps: list[Footstep], swing: float, transfer: float,
                        step_width: float, action_id: int) -> None:
        for step in steps:
            self.walking.queue.append(QueuedStep(step.side, step.pose, swing, transfer,
                                                 step_width, action_id))

    def steps_remaining(self, action_id: int) -> int:
        return sum(1 for s in self.walking.queue if s.action_id == action_id)

    def start_hand_trajectory(self, side: Side, samples: list[tuple[float, Pose]]) -> None:
        hand = self.hands[side]
        hand.trajectory = samples
        hand.trajectory_start = self.sim_time
        hand.commanded = samples[0][1].copy()
        if not hand.welded:
            hand.mode = HandMode.TRACKING

    def start_joint_trajectory(self, side: Side, target: np.ndarray, duration: float) -> None:
        hand = self.hands[side]
        hand.joint_start = self.arm_joint_angles[side].copy()
        hand.joint_target = np.asarray(target, dtype=float)
        hand.joint_duration = max(duration, 1e-6)
        hand.trajectory_start = self.sim_time
        if not hand.welded:
            hand.mode = HandMode.JOINT

    def start_chest_trajectory(self, target_yaw: float, duration: float) -> None:
        self.chest_trajectory = ScalarTrajectory(self.chest_yaw, target_yaw, max(duration, 1e-6))

    def start_pelvis_trajectory(self, target_delta: float, duration: float) -> None:
        self.pelvis_trajectory = ScalarTrajectory(self.pelvis_height_delta, target_delta,
                                                  max(duration, 1e-6))

    def set_hand_closed(self, side: Side, closed: bool) -> bool:
        """Open/close a hand; closing near the mechanism welds it. Returns
        whether a weld is active afterwards."""
        hand = self.hands[side]
        hand.closed = closed
        if closed and not hand.welded:
            grasp_point = self.door.grasp_point_near(hand.pose.position)
            if float(np.linalg.norm(hand.pose.position - grasp_point)) <= 0.05 + 1e-12:
                handle_pose = self.door.handle_pose()
                hand.weld_offset = handle_pose.inverse().compose(hand.pose)
                hand.welded = True
                self._welded_door_sides.add(side)
        if not closed and hand.welded:
            hand.welded = False
            self._welded_door_sides.discard(side)
            if self.door.mechanism_type in (MechanismType.KNOB, MechanismType.LEVER_HANDLE):
                self.door.handle_angle = 0.0  # spring-return lever/knob
            self.door.depression = 0.0
            hand.mode = HandMode.CARRIED
            hand.carried_offset = self.pelvis_pose.inverse().compose(hand.pose)
        return hand.welded

    def abort_motion(self) -> None:
        self.walking.queue.clear()
        for hand in self.hands.values():
            hand.trajectory = None
        self.chest_trajectory = None
        self.pelvis_trajectory = None

    # -- per-tick integration -------------------------------------------------

    def step(self, dt: float) -> None:
        self._advance_torso(dt)
        self._advance_hands(dt)
        self._advance_door(dt)
        self._advance_walking(dt)
        self.pelvis_pose = self._pelvis_from_feet()
        self._carry_idle_hands()
        report = self.door_frame_collision_check()
        if report.collision:
            if not self.collision_flag:
                self.collision_count += 1
            self.collision_flag = True
        else:
            self.collision_flag = False
        self.sim_time += dt

    def _advance_torso(self, dt: float) -> None:
        if self.chest_trajectory is not None:
            self.chest_trajectory.elapsed += dt
            self.chest_yaw = self.chest_trajectory.value()
            if self.chest_trajectory.done:
                self.chest_yaw = self.chest_trajectory.target
                self.chest_trajectory = None
        if self.pelvis_trajectory is not None:
            self.pelvis_trajectory.elapsed += dt
            self.pelvis_height_delta = self.pelvis_trajectory.value()
            if self.pelvis_trajectory.done:
                self.pelvis_height_delta = self.pelvis_trajectory.target
                self.pelvis_trajectory = None

    def _sample_trajectory(self, samples: list[tuple[float, Pose]], t: float) -> Pose:
        if t <= samples[0][0]:
            return samples[0][1]
        if t >= samples[-1][0]:
            return samples[-1][1]
        for (t0, p0), (t1, p1) in zip(samples, samples[1:]):
            if t0 <= t <= t1:
                alpha = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
                return p0.interpolate(p1, alpha)
        return samples[-1][1]

    def _advance_hands(self, dt: float) -> None:
        for side, hand in self.hands.items():
            if hand.trajectory is not None:
                t = self.sim_time + dt - hand.trajectory_start
                new_cmd = self._sample_trajectory(hand.trajectory, t)
                if hand.welded:
                    self._drive_mechanism(hand.commanded, new_cmd)
                else:
                    hand.pose = new_cmd.copy()
                hand.commanded = new_cmd.copy()
                if t >= hand.trajectory[-1][0]:
                    hand.trajectory = None
                    if not hand.welded:
                        hand.mode = HandMode.CARRIED
                        hand.carried_offset = self.pelvis_pose.inverse().compose(hand.pose)
            elif hand.mode is HandMode.JOINT and hand.joint_target is not None:
                t = self.sim_time + dt - hand.trajectory_start
                tau = min(t / hand.joint_duration, 1.0)
                q = hand.joint_start + (hand.joint_target - hand.joint_start) * _ease(tau)
                self.arm_joint_angles[side] = q
                hand.pose = self.arm_base_pose(side).compose(armkin.forward_kinematics(q))
                if tau >= 1.0:
                    hand.joint_target = None
                    hand.mode = HandMode.CARRIED
                    hand.carried_offset = self.pelvis_pose.inverse().compose(hand.pose)

    def _drive_mechanism(self, prev_cmd: Pose, new_cmd: Pose) -> None:
        """Project the commanded hand displacement onto the mechanism axes."""
        door = self.door
        delta = new_cmd.compose(prev_cmd.inverse())
        r = quat_to_rotation_vector(delta.quaternion)
        dp = new_cmd.position - prev_cmd.position
        if door.mechanism_type in (MechanismType.KNOB, MechanismType.LEVER_HANDLE):
            spindle = door.face_normal()
            door.handle_angle = float(np.clip(door.handle_angle + np.dot(r, spindle),
                                              -HANDLE_TRAVEL_LIMIT, HANDLE_TRAVEL_LIMIT))
        elif door.mechanism_type is MechanismType.PUSH_BAR:
            into_door = -door.face_normal()
            door.depression = float(np.clip(door.depression + np.dot(dp, into_door),
                                            0.0, PUSH_BAR_TRAVEL_LIMIT))
        unlatch_check(door)
        if not door.latched:
            dz = float(r[2]) * door.swing_sign
            desired = door.panel_angle + dz
            door.panel_angle = self._constrained_panel_angle(door.panel_angle, desired)

    def _advance_door(self, dt: float) -> None:
        door = self.door
        unlatch_check(door)
        welded = bool(self._welded_door_sides)
        if not welded and door.spring_closer_rate > 0 and door.panel_angle > 0 and not door.latched:
            desired = max(0.0, door.panel_angle - door.spring_closer_rate * dt)
            door.panel_angle = self._constrained_panel_angle(door.panel_angle, desired)
        else:
            # the body may still push the panel out of its way
            door.panel_angle = self._constrained_panel_angle(door.panel_angle, door.panel_angle)
        if (not welded and door.panel_angle <= 1e-9
                and door.mechanism_type.value in LATCHING_MECHANISMS
                and abs(door.handle_angle) < UNLATCH_HANDLE_ANGLE
                and door.depression < UNLATCH_DEPRESSION):
            door.latched = True
            door.panel_angle = 0.0
        for side in self._welded_door_sides:
            hand = self.hands[side]
            hand.pose = self.door.handle_pose().compose(hand.weld_offset)

    def _blocking_circles(self) -> list[np.ndarray]:
        circles = [self.shoulder_position(Side.LEFT)[:2], self.shoulder_position(Side.RIGHT)[:2]]
        for side, hand in self.hands.items():
            if not hand.welded:
                circles.append(hand.pose.position[:2])
        return circles

    def _panel_intersects_body(self, angle: float) -> bool:
        door = self.door
        a = door.hinge_point[:2]
        b = a + door.panel_width * door.panel_direction(angle)[:2]
        ab = b - a
        denom = float(np.dot(ab, ab))
        for c in self._blocking_circles():
            t = float(np.clip(np.dot(c - a, ab) / denom, 0.0, 1.0))
            closest = a + t * ab
            if float(np.linalg.norm(c - closest)) < BLOCK_CIRCLE_RADIUS:
                return True
        return False

    def _constrained_panel_angle(self, current: float, desired: float) -> float:
        """Closing stops at body contact; the body pushes the panel open."""
        desired = float(np.clip(desired, 0.0, self.door.max_open_angle))
        if desired < current and self._panel_intersects_body(desired):
            desired = current
        guard = 0
        while self._panel_intersects_body(desired) and desired < self.door.max_open_angle \
                and guard < 500:
            desired = min(desired + 0.005, self.door.max_open_angle)
            guard += 1
        return desired

    def _advance_walking(self, dt: float) -> None:
        walking = self.walking
        remaining = dt
        while remaining > 1e-12:
            if walking.phase is WalkPhase.STANDING:
                walking.sway = 0.0
                if not walking.queue:
                    return
                self._current_step = walking.queue[0]
                walking.phase = WalkPhase.TRANSFER
                walking.state_timer = 0.0
                walking.support_side = (Side.RIGHT if self._current_step.side is Side.LEFT
                                        else Side.LEFT).value
                continue
            step = self._current_step
            if walking.phase is WalkPhase.TRANSFER:
                budget = step.transfer_duration - walking.state_timer
                advance = min(budget, remaining)
                walking.state_timer += advance
                remaining -= advance
                amplitude = step.step_width / 2.0
                sign = 1.0 if walking.support_side == Side.LEFT.value else -1.0
                walking.sway = sign * amplitude * math.sin(
                    math.pi * walking.state_timer / step.transfer_duration)
                if walking.state_timer >= step.transfer_duration - 1e-12:
                    walking.phase = WalkPhase.SWING
                    walking.state_timer = 0.0
                    walking.swing_start = self.foot_poses[step.side].copy()
                    walking.sway = 0.0
                continue
            if walking.phase is WalkPhase.SWING:
                budget = step.swing_duration - walking.state_timer
                advance = min(budget, remaining)
                walking.state_timer += advance
                remaining -= advance
                tau = walking.state_timer / step.swing_duration
                pose = walking.swing_start.interpolate(step.target, _ease(tau))
                lift = 0.05 * math.sin(math.pi * min(tau, 1.0))
                pose = Pose(position=[pose.position[0], pose.position[1],
                                      step.target.position[2] + lift],
                            quaternion=pose.quaternion)
                self.foot_poses[step.side] = pose
                if walking.state_timer >= step.swing_duration - 1e-12:
                    self.foot_poses[step.side] = step.target.copy()
                    walking.queue.popleft()
                    self._current_step = None
                    if walking.queue:
                        self._current_step = walking.queue[0]
                        walking.phase = WalkPhase.TRANSFER
                        walking.state_timer = 0.0
                        walking.support_side = (Side.RIGHT if self._current_step.side is Side.LEFT
                                                else Side.LEFT).value
                    else:
                        walking.phase = WalkPhase.STANDING
                        walking.support_side = "Both"
                continue
        self.pelvis_pose = self._pelvis_from_feet()

    def _carry_idle_hands(self) -> None:
        for side, hand in self.hands.items():
            if hand.mode is HandMode.CARRIED and not hand.welded and hand.trajectory is None:
                hand.pose = self.pelvis_pose.compose(hand.carried_offset)

    # -- queries ---------------------------------------------------------------

    def traversal_progress(self) -> float:
        """Signed pelvis distance along the door-frame normal (0 at the plane)."""
        return float(self.pelvis_pose.position[0])

    def door_frame_collision_check(self) -> CollisionReport:
        pelvis_x = float(self.pelvis_pose.position[0])
        yaw = self.heading()
        sway_world_y = self.walking.sway * math.cos(yaw)
        shoulder_center_y = float(self.pelvis_pose.position[1]) + sway_world_y
        offset = abs(shoulder_center_y)
        clearance = self.door.frame_width / 2.0 - (offset + self.shoulder_span / 2.0)
        if abs(pelvis_x) > COLLISION_WINDOW:
            return CollisionReport(False, clearance, offset)
        return CollisionReport(clearance < 0.0, clearance, offset)

    def state_signature(self) -> tuple:
        """Compact deterministic digest of the mutable state (for hashing)."""
        door = self.door
        return (
            round(self.sim_time, 9),
            tuple(np.round(self.pelvis_pose.position, 9)),
            tuple(np.round(self.foot_poses[Side.LEFT].position, 9)),
            tuple(np.round(self.foot_poses[Side.RIGHT].position, 9)),
            tuple(np.round(self.hands[Side.LEFT].pose.position, 9)),
            tuple(np.round(self.hands[Side.RIGHT].pose.position, 9)),
            round(self.chest_yaw, 9),
            round(self.walking.sway, 9),
            round(door.panel_angle, 9),
            round(door.handle_angle, 9),
            round(door.depression, 9),
            door.latched,
        )


def unlatch_check(door: DoorState) -> DoorState:
    """Release the latch once the mechanism has travelled far enough."""
    if door.mechanism_type is MechanismType.PULL_HANDLE:
        door.latched = False
    elif door.mechanism_type in (MechanismType.KNOB, MechanismType.LEVER_HANDLE):
        if abs(door.handle_angle) >= UNLATCH_HANDLE_ANGLE:
            door.latched = False
    elif door.mechanism_type is MechanismType.PUSH_BAR:
        if door.depression >= UNLATCH_DEPRESSION:
            door.latched = False
    return door

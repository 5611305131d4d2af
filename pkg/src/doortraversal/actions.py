"""Primitive action parameters and the geometry behind them.

Covers footstep plans (pre-specified, goal-stance snapping, turn-walk-turn),
arm trajectories (preset joint angles or frame-relative hand pose via IK),
helical screw trajectories, chest/pelvis trajectories, hand configurations,
and waits. Parameter JSON keys defined here are part of the behavior schema.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .frames import FrameTree, Pose, ScrewAxis, wrap_angle

GRASP_RADIUS = 0.05  # weld a Closed hand to a handle within this distance
DEFAULT_WAIT_DURATION = 1.0
DEFAULT_HAND_ACTION_DURATION = 0.5
DEFAULT_SAMPLE_COUNT = 60
DEFAULT_ESTIMATED_STEP_COUNT = 6


class Side(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


class FootstepPlanMode(str, Enum):
    PRE_SPECIFIED = "PreSpecified"
    ONLINE_GOAL_STANCE = "OnlineGoalStance"
    TURN_WALK_TURN = "TurnWalkTurn"


class ArmTargetMode(str, Enum):
    PRESET_JOINT_ANGLES = "PresetJointAngles"
    FRAME_RELATIVE_HAND_POSE = "FrameRelativeHandPose"


class HandConfiguration(str, Enum):
    OPEN = "Open"
    CLOSED = "Closed"
    CUSTOM = "Custom"


class ActionParameterError(ValueError):
    """Malformed or inconsistent action parameters."""


@dataclass
class StanceGoal:
    frame_name: str
    point_to_stand_at: np.ndarray
    point_to_face: np.ndarray
    xy_yaw_adjustment: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.point_to_stand_at = np.asarray(self.point_to_stand_at, dtype=float)
        self.point_to_face = np.asarray(self.point_to_face, dtype=float)
        if np.allclose(self.point_to_stand_at, self.point_to_face):
            raise ActionParameterError("pointToFace must differ from pointToStandAt")

    @staticmethod
    def from_json(data: dict) -> "StanceGoal":
        return StanceGoal(
            frame_name=data["frameName"],
            point_to_stand_at=data["pointToStandAt"],
            point_to_face=data["pointToFace"],
            xy_yaw_adjustment=tuple(data.get("xyYawAdjustment", (0.0, 0.0, 0.0))),
        )

    def to_json(self) -> dict:
        return {
            "frameName": self.frame_name,
            "pointToStandAt": [float(v) for v in self.point_to_stand_at],
            "pointToFace": [float(v) for v in self.point_to_face],
            "xyYawAdjustment": [float(v) for v in self.xy_yaw_adjustment],
        }


@dataclass
class Footstep:
    side: Side
    pose: Pose

    def to_json(self, frame_name: str = "world") -> dict:
        return {"side": self.side.value, "frameName": frame_name, "pose": self.pose.to_json_dict()}


@dataclass
class FootstepPlanParams:
    plan_mode: FootstepPlanMode
    swing_duration: float = 0.6
    transfer_duration: float = 0.25
    step_width: float = 0.24
    step_length: float = 0.25
    turn_per_step: float = 0.4
    steps: list[tuple[Side, str, Pose]] = field(default_factory=list)  # (side, frame, pose)
    goal_stance: StanceGoal | None = None
    estimated_step_count: int = DEFAULT_ESTIMATED_STEP_COUNT

    def __post_init__(self):
        if self.swing_duration <= 0 or self.transfer_duration <= 0:
            raise ActionParameterError("swing and transfer durations must be positive")
        if self.plan_mode is FootstepPlanMode.PRE_SPECIFIED and not self.steps:
            raise ActionParameterError("PreSpecified footstep plan requires at least one step")
        if self.plan_mode is not FootstepPlanMode.PRE_SPECIFIED and self.goal_stance is None:
            raise ActionParameterError(f"{self.plan_mode.value} footstep plan requires a goalStance")

    @staticmethod
    def from_json(params: dict) -> "FootstepPlanParams":
        steps = [
            (Side(s["side"]), s.get("frameName", "world"), Pose.from_json_dict(s["pose"]))
            for s in params.get("steps", [])
        ]
        goal = params.get("goalStance")
        return FootstepPlanParams(
            plan_mode=FootstepPlanMode(params["planMode"]),
            swing_duration=params.get("swingDurationS", 0.6),
            transfer_duration=params.get("transferDurationS", 0.25),
            step_width=params.get("stepWidthM", 0.24),
            step_length=params.get("stepLengthM", 0.25),
            turn_per_step=params.get("turnPerStepRad", 0.4),
            steps=steps,
            goal_stance=StanceGoal.from_json(goal) if goal else None,
            estimated_step_count=params.get("estimatedStepCount", DEFAULT_ESTIMATED_STEP_COUNT),
        )

    def duration_for_step_count(self, count: int) -> float:
        # one transfer per step plus a final weight shift back to double support
        return count * (self.swing_duration + self.transfer_duration) + self.transfer_duration

    def nominal_duration_estimate(self) -> float:
        count = len(self.steps) if self.plan_mode is FootstepPlanMode.PRE_SPECIFIED else self.estimated_step_count
        return self.duration_for_step_count(max(1, count))


@dataclass
class ScrewTrajectoryParams:
    axis: ScrewAxis
    revolution_angle: float
    axial_translation: float
    duration: float
    sample_count: int = DEFAULT_SAMPLE_COUNT
    side: Side = Side.RIGHT

    def __post_init__(self):
        if self.duration <= 0:
            raise ActionParameterError("screw trajectory duration must be positive")
        if self.sample_count < 2:
            raise ActionParameterError("screw trajectory needs at least 2 samples")

    @staticmethod
    def from_json(params: dict) -> "ScrewTrajectoryParams":
        return ScrewTrajectoryParams(
            axis=ScrewAxis(
                origin_in_frame=params["axisOrigin"],
                direction_in_frame=params["axisDirection"],
                frame_name=params.get("frameName", "world"),
            ),
            revolution_angle=params["revolutionAngleRad"],
            axial_translation=params["axialTranslationM"],
            duration=params["durationS"],
            sample_count=params.get("sampleCount", DEFAULT_SAMPLE_COUNT),
            side=Side(params.get("side", "Right")),
        )


@dataclass
class ArmTrajectoryParams:
    side: Side
    target_mode: ArmTargetMode
    joint_angles: np.ndarray | None = None
    hand_pose: Pose | None = None
    frame_name: str = "world"
    trajectory_time: float = 2.0
    tracking_weight: float = 1.0

    def __post_init__(self):
        preset = self.target_mode is ArmTargetMode.PRESET_JOINT_ANGLES
        if preset and (self.joint_angles is None or self.hand_pose is not None):
            raise ActionParameterError("preset mode takes jointAnglesRad and no handPose")
        if not preset and (self.hand_pose is None or self.joint_angles is not None):
            raise ActionParameterError("hand-pose mode takes handPose and no jointAnglesRad")
        if self.tracking_weight < 0:
            raise ActionParameterError("trackingWeight must be >= 0")
        if self.joint_angles is not None:
            self.joint_angles = np.asarray(self.joint_angles, dtype=float)

    @staticmethod
    def from_json(params: dict) -> "ArmTrajectoryParams":
        mode = ArmTargetMode(params["targetMode"])
        return ArmTrajectoryParams(
            side=Side(params["side"]),
            target_mode=mode,
            joint_angles=params.get("jointAnglesRad"),
            hand_pose=Pose.from_json_dict(params["handPose"]) if "handPose" in params else None,
            frame_name=params.get("frameName", "world"),
            trajectory_time=params.get("trajectoryTimeS", 2.0),
            tracking_weight=params.get("trackingWeight", 1.0),
        )


@dataclass
class ChestPelvisTrajectoryParams:
    chest_yaw: float | None = None
    pelvis_height_delta: float | None = None
    trajectory_time: float = 2.0

    @staticmethod
    def from_json(params: dict) -> "ChestPelvisTrajectoryParams":
        return ChestPelvisTrajectoryParams(
            chest_yaw=params.get("chestYawRad"),
            pelvis_height_delta=params.get("pelvisHeightDeltaM"),
            trajectory_time=params.get("trajectoryTimeS", 2.0),
        )


@dataclass
class HandConfigurationParams:
    side: Side
    configuration: HandConfiguration
    knuckle_angles: np.ndarray | None = None
    max_torque: float = 2.0
    duration: float = DEFAULT_HAND_ACTION_DURATION

    def __post_init__(self):
        if self.max_torque < 0:
            raise ActionParameterError("maxTorqueNm must be >= 0")
        if self.configuration is HandConfiguration.CUSTOM and self.knuckle_angles is None:
            raise ActionParameterError("Custom hand configuration requires knuckleAnglesRad")
        if self.knuckle_angles is not None:
            self.knuckle_angles = np.asarray(self.knuckle_angles, dtype=float)

    @staticmethod
    def from_json(params: dict) -> "HandConfigurationParams":
        return HandConfigurationParams(
            side=Side(params["side"]),
            configuration=HandConfiguration(params["configuration"]),
            knuckle_angles=params.get("knuckleAnglesRad"),
            max_torque=params.get("maxTorqueNm", 2.0),
            duration=params.get("durationS", DEFAULT_HAND_ACTION_DURATION),
        )


@dataclass
class GraspEvent:
    side: Side
    closed: bool
    welded: bool


def execute_hand_configuration(params: HandConfigurationParams, world) -> GraspEvent:
    """Apply a hand configuration: Closed welds onto a handle within the grasp
    radius, Open releases any weld."""
    closed = params.configuration is HandConfiguration.CLOSED
    welded = world.set_hand_closed(params.side, closed)
    return GraspEvent(side=params.side, closed=closed, welded=welded)


# ---------------------------------------------------------------------------
# Screw trajectories
# ---------------------------------------------------------------------------

def screw_displacement(angle: float, translation: float, axis_origin, axis_direction) -> Pose:
    """World-frame displacement rotating about an axis line and sliding along it."""
    origin = np.asarray(axis_origin, dtype=float)
    direction = np.asarray(axis_direction, dtype=float)
    rot = Pose.from_axis_angle(direction, angle)
    position = origin - rot.rotate_vector(origin) + translation * direction
    return Pose(position=position, quaternion=rot.quaternion)


def generate_screw_trajectory(
    start_hand_pose: Pose,
    params: ScrewTrajectoryParams,
    frames: FrameTree,
) -> list[tuple[float, Pose]]:
    """Timed pose samples of a helical screw starting at the current hand pose.

    Sample k at phase s = k/(N-1) is ScrewDisplacement(s*angle, s*translation)
    composed onto the start pose, so sample 0 is exactly the start pose and the
    displacement itself is independent of the grasp.
    """
    origin, direction = params.axis.resolved_in_world(frames)
    samples: list[tuple[float, Pose]] = []
    n = params.sample_count
    for k in range(n):
        s = k / (n - 1)
        disp = screw_displacement(s * params.revolution_angle, s * params.axial_translation,
                                  origin, direction)
        samples.append((s * params.duration, disp.compose(start_hand_pose)))
    return samples


# ---------------------------------------------------------------------------
# Stance snapping and turn-walk-turn planning
# ---------------------------------------------------------------------------

def snap_stance_to_ground(
    goal: StanceGoal,
    mechanism_pose: Pose,
    ground_height: float,
    step_width: float,
) -> tuple[Pose, Pose]:
    """Project a frame-relative goal stance vertically onto flat ground.

    The stance midpoint lands at the stand-at point, yaw faces the face point
    (both projected to the horizontal plane), feet are offset laterally by half
    the step width, the operator X-Y-yaw adjustment is applied last in the
    stance frame, and the foot poses come out flat (zero roll/pitch).
    """
    stand = mechanism_pose.transform_point(goal.point_to_stand_at)
    face = mechanism_pose.transform_point(goal.point_to_face)
    dx, dy = face[0] - stand[0], face[1] - stand[1]
    if math.hypot(dx, dy) < 1e-9:
        raise ActionParameterError("pointToFace is horizontally coincident with pointToStandAt")
    yaw = math.atan2(dy, dx)
    stance = Pose.from_xy_yaw(stand[0], stand[1], yaw, z=ground_height)
    adj_x, adj_y, adj_yaw = goal.xy_yaw_adjustment
    stance = stance.compose(Pose.from_xy_yaw(adj_x, adj_y, adj_yaw))
    stance = Pose.from_xy_yaw(stance.position[0], stance.position[1], stance.yaw(), z=ground_height)
    left = stance.compose(Pose.from_translation(0.0, step_width / 2.0, 0.0))
    right = stance.compose(Pose.from_translation(0.0, -step_width / 2.0, 0.0))
    return (
        Pose.from_xy_yaw(left.position[0], left.position[1], stance.yaw(), z=ground_height),
        Pose.from_xy_yaw(right.position[0], right.position[1], stance.yaw(), z=ground_height),
    )


def _stance_center(left: Pose, right: Pose) -> tuple[np.ndarray, float]:
    mid = 0.5 * (left.position + right.position)
    fwd = left.rotate_vector([1, 0, 0]) + right.rotate_vector([1, 0, 0])
    return mid, math.atan2(fwd[1], fwd[0])


def _foot_pose(mid, yaw: float, side: Side, step_width: float, ground: float) -> Pose:
    lateral = step_width / 2.0 if side is Side.LEFT else -step_width / 2.0
    x = mid[0] - lateral * math.sin(yaw)
    y = mid[1] + lateral * math.cos(yaw)
    return Pose.from_xy_yaw(x, y, yaw, z=ground)


def plan_turn_walk_turn(
    start_stance: tuple[Pose, Pose],
    goal_stance: tuple[Pose, Pose],
    step_length: float,
    step_width: float,
    turn_per_step: float,
) -> list[Footstep]:
    """Procedural flat-ground plan: rotate in place, walk straight, rotate again.

    Every emitted step advances the stance by at most `step_length` and rotates
    it by at most `turn_per_step`; turn phases change yaw monotonically. The
    final stance matches the goal within 1 cm / 1 degree.
    """
    mid, yaw = _stance_center(*start_stance)
    goal_mid, goal_yaw = _stance_center(*goal_stance)
    ground = float(goal_stance[0].position[2])
    delta = goal_mid[:2] - mid[:2]
    distance = float(np.hypot(delta[0], delta[1]))

    steps: list[Footstep] = []
    last_side: Side | None = None

    def emit(side: Side, stance_mid, stance_yaw: float):
        nonlocal last_side
        steps.append(Footstep(side, _foot_pose(stance_mid, stance_yaw, side, step_width, ground)))
        last_side = side

    def other(side: Side) -> Side:
        return Side.RIGHT if side is Side.LEFT else Side.LEFT

    def rotate_to(target_yaw: float, stance_mid, square_up: bool):
        nonlocal yaw
        remaining = wrap_angle(target_yaw - yaw)
        if abs(remaining) < 1e-9:
            return
        direction = 1.0 if remaining > 0 else -1.0
        side = Side.LEFT if direction > 0 else Side.RIGHT
        if last_side is not None:
            side = other(last_side)
        while abs(wrap_angle(target_yaw - yaw)) > 1e-9:
            yaw = yaw + direction * min(turn_per_step, abs(wrap_angle(target_yaw - yaw)))
            emit(side, stance_mid, yaw)
            side = other(side)
        if square_up:
            emit(side, stance_mid, yaw)  # level the trailing foot

    if distance >= 1e-6:
        heading = math.atan2(delta[1], delta[0])
        # the first walking step levels the trailing foot's yaw, so no square-up
        rotate_to(heading, mid, square_up=False)
        direction = np.array([math.cos(heading), math.sin(heading), 0.0])
        travelled = 0.0
        side = other(last_side) if last_side is not None else Side.LEFT
        while distance - travelled > 1e-9:
            travelled = min(travelled + step_length, distance)
            emit(side, mid + travelled * direction, heading)
            side = other(side)
        emit(side, mid + distance * direction, heading)  # closing step
        mid = mid + distance * direction
        yaw = heading

    rotate_to(goal_yaw, mid, square_up=True)
    return steps

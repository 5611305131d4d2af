"""Scenario configuration: door, robot start, synthetic sensor, tick rate."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

from .frames import Pose
from .simworld import DoorState, HingeSide, MechanismType, SimWorld, SwingDirection
from .synthcam import CameraIntrinsics, ClutterPatch, SensorNoise

DEFAULT_TICK_RATE = 120.0
DEFAULT_MAX_SIM_TIME = 90.0


@dataclass
class RobotStart:
    x: float
    y: float
    yaw: float = 0.0
    step_width: float = 0.24
    shoulder_span: float | None = None  # defaults to 0.85 * frame width

    def stance(self) -> tuple[Pose, Pose]:
        lat_x = -math.sin(self.yaw) * self.step_width / 2.0
        lat_y = math.cos(self.yaw) * self.step_width / 2.0
        return (
            Pose.from_xy_yaw(self.x + lat_x, self.y + lat_y, self.yaw),
            Pose.from_xy_yaw(self.x - lat_x, self.y - lat_y, self.yaw),
        )


@dataclass
class SensorConfig:
    tilt_deg: float = 43.0
    rate_hz: float = 30.0
    width_px: int = 192
    height_px: int = 144
    hfov_deg: float = 100.0
    noise: SensorNoise = field(default_factory=SensorNoise)
    erosion_iterations: int = 2
    alpha: float = 0.2
    sample_limit: int = 256

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics.from_fov(self.width_px, self.height_px, self.hfov_deg)


@dataclass
class ScenarioConfig:
    door: DoorState
    robot_start: RobotStart
    sensor: SensorConfig
    tick_rate: float = DEFAULT_TICK_RATE
    max_sim_time: float = DEFAULT_MAX_SIM_TIME
    clutter: list[ClutterPatch] = field(default_factory=list)

    @staticmethod
    def from_json(text: str) -> "ScenarioConfig":
        doc = json.loads(text)
        d = doc["door"]
        door = DoorState(
            hinge_side=HingeSide(d["hingeSide"]),
            swing_direction=SwingDirection(d["swingDirection"]),
            mechanism_type=MechanismType(d["mechanismType"]),
            frame_width=d.get("frameWidthM", 1.0),
            panel_width=d.get("panelWidthM", 0.92),
            spring_closer_rate=d.get("springCloserRateRadS", 0.0),
            max_open_angle=d.get("maxOpenAngleRad", 2.1),
        )
        if d.get("unlatched", False):
            door.latched = False
            door.panel_angle = d.get("panelAngleRad", 0.0)
        r = doc.get("robotStart", {})
        robot = RobotStart(
            x=r.get("x", -1.5), y=r.get("y", 0.0), yaw=r.get("yawRad", 0.0),
            step_width=r.get("stepWidthM", 0.24),
            shoulder_span=r.get("shoulderSpanM"),
        )
        s = doc.get("sensor", {})
        sensor = SensorConfig(
            tilt_deg=s.get("tiltDeg", 43.0),
            rate_hz=s.get("rateHz", 30.0),
            width_px=s.get("widthPx", 192),
            height_px=s.get("heightPx", 144),
            hfov_deg=s.get("hfovDeg", 100.0),
            noise=SensorNoise.from_json(s.get("noise", {})),
            erosion_iterations=s.get("erosionIterations", 2),
            alpha=s.get("alpha", 0.2),
            sample_limit=s.get("sampleLimit", 256),
        )
        clutter = [ClutterPatch.from_json(c) for c in doc.get("clutter", [])]
        return ScenarioConfig(
            door=door, robot_start=robot, sensor=sensor,
            tick_rate=doc.get("tickRateHz", DEFAULT_TICK_RATE),
            max_sim_time=doc.get("maxSimTimeS", DEFAULT_MAX_SIM_TIME),
            clutter=clutter,
        )

    @staticmethod
    def from_path(path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return ScenarioConfig.from_json(fh.read())

    def build_world(self) -> SimWorld:
        # each world gets its own door so repeated builds stay independent
        return SimWorld(copy.deepcopy(self.door), self.robot_start.stance(),
                        shoulder_span=self.robot_start.shoulder_span)

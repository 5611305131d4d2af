"""Composes frames, behavior, engine, sim world, perception, and telemetry
into a deterministic tick loop, runnable headless or under the service.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import armkin
from .actions import (
    ArmTargetMode,
    ArmTrajectoryParams,
    ChestPelvisTrajectoryParams,
    Footstep,
    FootstepPlanMode,
    FootstepPlanParams,
    HandConfiguration,
    HandConfigurationParams,
    ScrewTrajectoryParams,
    Side,
    execute_hand_configuration,
    generate_screw_trajectory,
    plan_turn_walk_turn,
    snap_stance_to_ground,
)
from .behavior import (
    ActionStatus,
    BehaviorNode,
    NodeKind,
    TraversalPhase,
    load_tree_from_path,
)
from .controller import BehaviorController, BehaviorOutcome
from .engine import ConditionReport, ExecutionMode, makespan_seconds, run_duration_model
from .frames import FrameTree, Pose
from .perception import CSV_HEADER, PerceptionConfig, PerceptionPipeline, SensorFrame
from .scenario import ScenarioConfig
from .simworld import SimWorld, WalkPhase
from .synthcam import render_sensor_frame
from .telemetry import RunMetrics, TrackingSample

MECHANISM_FRAME = "mechanism"
POSITION_EXIT_TOLERANCE = 0.01
ORIENTATION_EXIT_TOLERANCE = math.radians(5.0)
EXIT_TIMEOUT_FACTOR = 1.5
PLANNER_RANGE = 6.0


def _params_cache(action: BehaviorNode):
    return action.parameters


class SimActionExecutor:
    """Starts and monitors primitive actions against the sim world."""

    def __init__(self, world: SimWorld, frames: FrameTree, tick_rate: float):
        self.world = world
        self.frames = frames
        self.tick_rate = tick_rate
        self.goals: dict[int, dict] = {}

    def elapsed(self, action: BehaviorNode, tick: int) -> float:
        return (tick - action.state.start_tick) / self.tick_rate

    # -- entry conditions -----------------------------------------------------

    def evaluate_entry(self, action: BehaviorNode) -> ConditionReport:
        try:
            ok, detail = self._entry(action)
        except Exception as exc:  # malformed parameters surface as entry failures
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        return ConditionReport(action.id, ok, detail=detail)

    def _entry(self, action: BehaviorNode) -> tuple[bool, str]:
        kind = action.kind
        params = action.parameters
        if kind is NodeKind.WAIT or kind is NodeKind.HAND_CONFIGURATION:
            return True, ""
        if kind is NodeKind.CHEST_PELVIS_TRAJECTORY:
            return True, ""
        if kind is NodeKind.SCREW_TRAJECTORY:
            frame = params.get("frameName", "world")
            if not self.frames.has_frame(frame):
                return False, f"missing frame '{frame}'"
            return True, ""
        if kind is NodeKind.ARM_TRAJECTORY:
            parsed = ArmTrajectoryParams.from_json(params)
            if parsed.target_mode is ArmTargetMode.PRESET_JOINT_ANGLES:
                return True, ""
            if not self.frames.has_frame(parsed.frame_name):
                return False, f"missing frame '{parsed.frame_name}'"
            target = self.frames.world_pose(parsed.frame_name).compose(parsed.hand_pose)
            shoulder = self.world.shoulder_position(parsed.side)
            reach = float(np.linalg.norm(target.position - shoulder))
            if reach > armkin.REACH:
                return False, f"target {reach:.3f} m from shoulder exceeds reach {armkin.REACH:.3f} m"
            base = self.world.arm_base_pose(parsed.side)
            local_target = base.inverse().compose(target)
            result = armkin.solve_ik(local_target, self.world.arm_joint_angles[parsed.side])
            if not result.converged:
                return False, (f"IK did not converge (residual {result.position_error:.4f} m, "
                               f"{math.degrees(result.orientation_error):.1f} deg)")
            return True, ""
        if kind is NodeKind.FOOTSTEP_PLAN:
            parsed = FootstepPlanParams.from_json(params)
            if parsed.plan_mode is FootstepPlanMode.PRE_SPECIFIED:
                for _, frame, _ in parsed.steps:
                    if not self.frames.has_frame(frame):
                        return False, f"missing frame '{frame}'"
                return True, ""
            if not self.frames.has_frame(parsed.goal_stance.frame_name):
                return False, f"missing frame '{parsed.goal_stance.frame_name}'"
            mech = self.frames.world_pose(parsed.goal_stance.frame_name)
            stand = mech.transform_point(parsed.goal_stance.point_to_stand_at)
            pelvis = self.world.pelvis_pose.position
            if math.hypot(stand[0] - pelvis[0], stand[1] - pelvis[1]) > PLANNER_RANGE:
                return False, "goal stance beyond planner range"
            return True, ""
        return False, f"unknown action kind {kind}"

    # -- starting actions -------------------------------------------------------

    def start(self, action: BehaviorNode, tick: int) -> None:
        kind = action.kind
        params = action.parameters
        world = self.world
        if kind is NodeKind.WAIT:
            duration = float(params.get("durationS", 1.0))
            action.state.nominal_duration = duration
            self.goals[action.id] = {"kind": kind}
        elif kind is NodeKind.HAND_CONFIGURATION:
            parsed = HandConfigurationParams.from_json(params)
            event = execute_hand_configuration(parsed, world)
            action.state.nominal_duration = parsed.duration
            self.goals[action.id] = {"kind": kind, "params": parsed, "event": event}
        elif kind is NodeKind.CHEST_PELVIS_TRAJECTORY:
            parsed = ChestPelvisTrajectoryParams.from_json(params)
            if parsed.chest_yaw is not None:
                world.start_chest_trajectory(parsed.chest_yaw, parsed.trajectory_time)
            if parsed.pelvis_height_delta is not None:
                world.start_pelvis_trajectory(parsed.pelvis_height_delta, parsed.trajectory_time)
            action.state.nominal_duration = parsed.trajectory_time
            self.goals[action.id] = {"kind": kind, "params": parsed}
        elif kind is NodeKind.SCREW_TRAJECTORY:
            parsed = ScrewTrajectoryParams.from_json(params)
            hand = world.hands[parsed.side]
            samples = generate_screw_trajectory(hand.pose, parsed, self.frames)
            world.start_hand_trajectory(parsed.side, samples)
            action.state.nominal_duration = parsed.duration
            self.goals[action.id] = {"kind": kind, "params": parsed, "side": parsed.side,
                                     "goal": samples[-1][1]}
        elif kind is NodeKind.ARM_TRAJECTORY:
            parsed = ArmTrajectoryParams.from_json(params)
            if parsed.target_mode is ArmTargetMode.PRESET_JOINT_ANGLES:
                world.start_joint_trajectory(parsed.side, parsed.joint_angles,
                                             parsed.trajectory_time)
                base = world.arm_base_pose(parsed.side)
                goal = base.compose(armkin.forward_kinematics(parsed.joint_angles))
            else:
                goal = self.frames.world_pose(parsed.frame_name).compose(parsed.hand_pose)
                hand = world.hands[parsed.side]
                samples = [(0.0, hand.pose.copy()), (parsed.trajectory_time, goal)]
                world.start_hand_trajectory(parsed.side, samples)
            action.state.nominal_duration = parsed.trajectory_time
            self.goals[action.id] = {"kind": kind, "params": parsed, "side": parsed.side,
                                     "goal": goal, "mode": parsed.target_mode}
        elif kind is NodeKind.FOOTSTEP_PLAN:
            parsed = FootstepPlanParams.from_json(params)
            steps = self._resolve_footsteps(parsed)
            world.queue_footsteps(steps, parsed.swing_duration, parsed.transfer_duration,
                                  parsed.step_width, action.id)
            action.state.nominal_duration = parsed.duration_for_step_count(len(steps))
            goal_mid = (0.5 * (steps[-1].pose.position + steps[-2].pose.position)
                        if len(steps) >= 2 else world.pelvis_pose.position)
            self.goals[action.id] = {"kind": kind, "params": parsed, "steps": steps,
                                     "goal_mid": np.asarray(goal_mid)}
        else:
            raise ValueError(f"cannot start node kind {kind}")

    def _resolve_footsteps(self, parsed: FootstepPlanParams) -> list[Footstep]:
        if parsed.plan_mode is FootstepPlanMode.PRE_SPECIFIED:
            steps = []
            for side, frame_name, pose in parsed.steps:
                world_pose = self.frames.world_pose(frame_name).compose(pose)
                flat = Pose.from_xy_yaw(world_pose.position[0], world_pose.position[1],
                                        world_pose.yaw(), z=0.0)
                steps.append(Footstep(side, flat))
            return steps
        mech = self.frames.world_pose(parsed.goal_stance.frame_name)
        goal = snap_stance_to_ground(parsed.goal_stance, mech, 0.0, parsed.step_width)
        current = (self.world.foot_poses[Side.LEFT], self.world.foot_poses[Side.RIGHT])
        return plan_turn_walk_turn(current, goal, parsed.step_length, parsed.step_width,
                                   parsed.turn_per_step)

    # -- exit conditions --------------------------------------------------------

    def poll(self, action: BehaviorNode, tick: int):
        goal = self.goals.get(action.id)
        if goal is None:
            return True, "no goal recorded"
        kind = goal["kind"]
        elapsed = self.elapsed(action, tick)
        nominal = action.state.nominal_duration
        if kind is NodeKind.WAIT:
            return (True, "") if elapsed >= nominal else None
        if kind is NodeKind.HAND_CONFIGURATION:
            if elapsed < nominal:
                return None
            parsed = goal["params"]
            if parsed.configuration is HandConfiguration.CLOSED:
                if self.world.hands[parsed.side].welded:
                    return True, "grasp welded"
                return False, "no handle within grasp radius"
            return True, ""
        if kind is NodeKind.CHEST_PELVIS_TRAJECTORY:
            if elapsed < nominal:
                return None
            parsed = goal["params"]
            if parsed.chest_yaw is not None and abs(self.world.chest_yaw - parsed.chest_yaw) > 0.02:
                return False, "chest yaw did not settle"
            return True, ""
        if kind in (NodeKind.SCREW_TRAJECTORY, NodeKind.ARM_TRAJECTORY):
            if elapsed < nominal:
                return None
            side = goal["side"]
            target: Pose = goal["goal"]
            hand = self.world.hands[side]
            pos_err = hand.pose.distance_to(target)
            rot_err = hand.pose.rotation_angle_to(target)
            if pos_err <= POSITION_EXIT_TOLERANCE and rot_err <= ORIENTATION_EXIT_TOLERANCE:
                return True, f"terminal error {pos_err * 1000:.1f} mm"
            if elapsed >= EXIT_TIMEOUT_FACTOR * nominal:
                return False, (f"tracking timeout: {pos_err:.3f} m / "
                               f"{math.degrees(rot_err):.1f} deg from goal")
            return None
        if kind is NodeKind.FOOTSTEP_PLAN:
            done = (self.world.steps_remaining(action.id) == 0
                    and (self.world._current_step is None
                         or self.world._current_step.action_id != action.id))
            if done:
                return True, ""
            if elapsed >= EXIT_TIMEOUT_FACTOR * max(nominal, 1e-6):
                return False, "footstep queue did not drain in time"
            return None
        return True, ""

    # -- tracking ---------------------------------------------------------------

    def tracking_sample(self, action: BehaviorNode, tick: int) -> TrackingSample | None:
        goal = self.goals.get(action.id)
        if goal is None:
            return None
        kind = goal["kind"]
        remaining = max(0.0, action.state.nominal_duration - self.elapsed(action, tick))
        if kind in (NodeKind.SCREW_TRAJECTORY, NodeKind.ARM_TRAJECTORY):
            hand = self.world.hands[goal["side"]]
            target: Pose = goal["goal"]
            return TrackingSample(tick, action.id, hand.pose.distance_to(target),
                                  hand.pose.rotation_angle_to(target), remaining)
        if kind is NodeKind.FOOTSTEP_PLAN:
            feet = self.world.foot_poses
            mid = 0.5 * (feet[Side.LEFT].position + feet[Side.RIGHT].position)
            # feet only move at touchdown, so this trace steps discretely
            mid = np.array([mid[0], mid[1], 0.0])
            goal_mid = goal["goal_mid"]
            dist = float(np.linalg.norm(mid[:2] - goal_mid[:2]))
            return TrackingSample(tick, action.id, dist, 0.0, remaining)
        if kind is NodeKind.CHEST_PELVIS_TRAJECTORY:
            parsed = goal["params"]
            err = abs(self.world.chest_yaw - parsed.chest_yaw) if parsed.chest_yaw is not None else 0.0
            return TrackingSample(tick, action.id, 0.0, err, remaining)
        return None

    def preview(self, action: BehaviorNode) -> list[dict]:
        """Sampled poses of the action's upcoming motion (no world mutation)."""
        kind = action.kind
        params = action.parameters
        if kind is NodeKind.SCREW_TRAJECTORY:
            parsed = ScrewTrajectoryParams.from_json(params)
            hand = self.world.hands[parsed.side]
            samples = generate_screw_trajectory(hand.pose, parsed, self.frames)
            return [{"timeS": t, "pose": p.to_json_dict()} for t, p in samples]
        if kind is NodeKind.ARM_TRAJECTORY:
            parsed = ArmTrajectoryParams.from_json(params)
            if parsed.target_mode is ArmTargetMode.PRESET_JOINT_ANGLES:
                goal = self.world.arm_base_pose(parsed.side).compose(
                    armkin.forward_kinematics(parsed.joint_angles))
            else:
                goal = self.frames.world_pose(parsed.frame_name).compose(parsed.hand_pose)
            start = self.world.hands[parsed.side].pose
            return [{"timeS": 0.0, "pose": start.to_json_dict()},
                    {"timeS": parsed.trajectory_time, "pose": goal.to_json_dict()}]
        if kind is NodeKind.FOOTSTEP_PLAN:
            parsed = FootstepPlanParams.from_json(params)
            steps = self._resolve_footsteps(parsed)
            return [{"side": s.side.value, "pose": s.pose.to_json_dict()} for s in steps]
        return []


@dataclass
class RuntimeConfig:
    behavior_path: str
    scenario_path: str
    mode: str = "auto"  # auto | manual
    seed: int = 0
    metrics_path: str | None = None
    events_path: str | None = None
    tracking_path: str | None = None
    perception_csv_path: str | None = None
    concurrency_allowed: bool = True
    max_sim_time: float | None = None
    realtime_factor: float | None = None


class Runtime:
    """Owns the tree and world; advanced one tick at a time."""

    def __init__(self, config: RuntimeConfig):
        self.config = config
        self.scenario = ScenarioConfig.from_path(config.scenario_path)
        self.root = load_tree_from_path(config.behavior_path)
        self.rng = np.random.default_rng(config.seed)
        self.frames = FrameTree()
        self.world = self.scenario.build_world()
        self.tick_rate = self.scenario.tick_rate
        self.dt = 1.0 / self.tick_rate
        sensor = self.scenario.sensor
        self.sensor_every = max(1, round(self.tick_rate / sensor.rate_hz))
        self.pipeline = PerceptionPipeline(PerceptionConfig(
            alpha=sensor.alpha, erosion_iterations=sensor.erosion_iterations,
            sample_limit=sensor.sample_limit, sensor_rate=sensor.rate_hz))
        mode = ExecutionMode.AUTONOMOUS if config.mode == "auto" else ExecutionMode.MANUAL_STEP
        self.controller = BehaviorController(self.root, mode=mode)
        self.executor = SimActionExecutor(self.world, self.frames, self.tick_rate)
        self.metrics = RunMetrics()
        self.perception_rows: list[str] = []
        self.tick_index = 0
        self.tree_dirty = True  # structural change flag for snapshots
        self._publish_robot_frames()

    # -- frame publication -----------------------------------------------------

    def _publish_robot_frames(self) -> None:
        w = self.world
        self.frames.add_or_update_frame("pelvis", "world", w.pelvis_pose)
        self.frames.add_or_update_frame("leftHand", "world", w.hands[Side.LEFT].pose)
        self.frames.add_or_update_frame("rightHand", "world", w.hands[Side.RIGHT].pose)
        self.frames.add_or_update_frame("leftFoot", "world", w.foot_poses[Side.LEFT])
        self.frames.add_or_update_frame("rightFoot", "world", w.foot_poses[Side.RIGHT])

    def _publish_mechanism_frame(self) -> None:
        # the task anchor: updated while stable during the approach; frozen once
        # manipulation starts so authored frame-relative targets stay put
        phase = self.controller.coordinator_state.phase
        if phase not in (TraversalPhase.APPROACH, TraversalPhase.DONE) \
                and self.controller.coordinator_state.selected_child_id is not None \
                and self.frames.has_frame(MECHANISM_FRAME):
            return
        for detection in self.pipeline.detection_list():
            if detection.stable and detection.filtered_centroid is not None \
                    and detection.orientation is not None:
                pose = Pose(position=detection.filtered_centroid,
                            quaternion=detection.orientation.quaternion)
                self.frames.add_or_update_frame(MECHANISM_FRAME, "world", pose)
                break

    # -- one tick ----------------------------------------------------------------

    def tick(self):
        sensor = self.scenario.sensor
        if self.tick_index % self.sensor_every == 0:
            depth, masks, camera_pose, ts = render_sensor_frame(
                self.world, sensor.intrinsics(), math.radians(sensor.tilt_deg),
                self.world.sim_time, sensor.noise, self.rng, clutter=self.scenario.clutter)
            frame = SensorFrame(ts, depth, masks, sensor.intrinsics(), camera_pose)
            for record in self.pipeline.process_frame(frame, self.rng):
                self.perception_rows.append(record.csv_row())
            self._publish_mechanism_frame()

        self._publish_robot_frames()
        result = self.controller.tick(self.pipeline.detection_list(), self.executor,
                                      self.tick_index)
        self.world.step(self.dt)

        events = list(result.events)
        for started in result.started_ids:
            node = self.root.find(started)
            events.append(f"start:{started}")
            self.metrics.log(self.tick_index, "info", started,
                             f"started {node.kind.value} '{node.name}'")
        for report in result.finished:
            events.append(f"end:{report.action_id}:{report.exit_result}")
            level = "info" if report.exit_result == "Success" else "error"
            self.metrics.log(self.tick_index, level, report.action_id,
                             f"finished with {report.exit_result}"
                             + (f": {report.detail}" if report.detail else ""))
        if self.world.collision_flag:
            events.append("collision")
        samples = []
        queue = self.controller.queue
        if queue is not None:
            for node in queue.executing():
                sample = self.executor.tracking_sample(node, self.tick_index)
                if sample is not None:
                    samples.append(sample)
        self.metrics.record_tracking(self.world.sim_time, samples)
        self.metrics.record_tick(self.world.sim_time, self.world.traversal_progress(),
                                 result.phase.value, events)
        self.tick_index += 1
        return result

    # -- headless loop -------------------------------------------------------------

    def run_headless(self) -> int:
        max_time = self.config.max_sim_time or self.scenario.max_sim_time
        max_ticks = round(max_time * self.tick_rate)
        while self.tick_index < max_ticks:
            self.tick()
            if self.controller.outcome in (BehaviorOutcome.SUCCEEDED, BehaviorOutcome.FAILED,
                                           BehaviorOutcome.ABORTED):
                break
        self.export()
        if self.controller.outcome is BehaviorOutcome.SUCCEEDED:
            return 0
        if self.controller.outcome is BehaviorOutcome.RUNNING:
            return 2  # timed out
        return 1

    def export(self) -> None:
        cfg = self.config
        self.metrics.export(cfg.metrics_path, cfg.events_path, cfg.tracking_path)
        if cfg.perception_csv_path:
            with open(cfg.perception_csv_path, "w", encoding="utf-8") as fh:
                fh.write(CSV_HEADER + "\n")
                fh.write("\n".join(self.perception_rows) + ("\n" if self.perception_rows else ""))


def measure_makespans(behavior_path: str, tick_rate: float = 120.0) -> tuple[float, float]:
    """(layered, serial) makespans of a behavior's action queue under the
    duration model, driven through the real dispatch engine."""
    root = load_tree_from_path(behavior_path)
    actions = _primary_action_list(root)
    _assign_nominal_durations(actions)
    layered = makespan_seconds(run_duration_model(actions, tick_rate), tick_rate)
    serial = makespan_seconds(run_duration_model(actions, tick_rate, serial=True), tick_rate)
    return layered, serial


def _primary_action_list(root: BehaviorNode) -> list[BehaviorNode]:
    if root.kind is NodeKind.DOOR_TRAVERSAL_COORDINATOR and root.children:
        return root.children[0].action_leaves()
    return root.action_leaves()


def _assign_nominal_durations(actions: list[BehaviorNode]) -> None:
    for action in actions:
        params = action.parameters
        if action.kind is NodeKind.WAIT:
            action.state.nominal_duration = float(params.get("durationS", 1.0))
        elif action.kind is NodeKind.HAND_CONFIGURATION:
            action.state.nominal_duration = float(params.get("durationS", 0.5))
        elif action.kind is NodeKind.CHEST_PELVIS_TRAJECTORY:
            action.state.nominal_duration = float(params.get("trajectoryTimeS", 2.0))
        elif action.kind is NodeKind.ARM_TRAJECTORY:
            action.state.nominal_duration = float(params.get("trajectoryTimeS", 2.0))
        elif action.kind is NodeKind.SCREW_TRAJECTORY:
            action.state.nominal_duration = float(params.get("durationS", 2.0))
        elif action.kind is NodeKind.FOOTSTEP_PLAN:
            parsed = FootstepPlanParams.from_json(params)
            action.state.nominal_duration = parsed.nominal_duration_estimate()

#!/usr/bin/env python3
"""Author the six door-traversal behavior fixtures and their scenarios.

All manipulation targets are expressed in the detected mechanism frame
(+x out of the door toward the robot, z up) so the behaviors transfer to any
door pose; this script computes those frame-relative numbers from the door
geometry and writes the JSON files under src/doortraversal/fixtures/.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from doortraversal.behavior import load_tree, save_tree
from doortraversal.simworld import DoorState, HingeSide, MechanismType, SwingDirection

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "doortraversal" / "fixtures"

SWING = 0.5
TRANSFER = 0.2
STEP_LENGTH = 0.35
TURN_PER_STEP = 0.6
STRADDLE_WIDTH = 0.12


def mech_basis(door: DoorState):
    """World->mechanism-frame converters for the closed door."""
    origin = door.handle_point(0.0)

    def to_local(p):
        return [float(-(p[0] - origin[0])), float(-(p[1] - origin[1])), float(p[2] - origin[2])]

    def dir_local(d):
        return [float(-d[0]), float(-d[1]), float(d[2])]

    return origin, to_local, dir_local


def pose_json(position, quaternion=(0.0, 0.0, 0.0, 1.0)):
    return {"position": [float(v) for v in position],
            "orientationQuaternion": [float(v) for v in quaternion]}


def action(node_id, kind, name, params, execute_after, phase):
    return {
        "id": node_id,
        "kind": kind,
        "name": name,
        "parameters": {**params, "phase": phase},
        "executeAfterId": execute_after,
        "children": [],
    }


def footstep_goal(node_id, name, stand_local, face_local, execute_after, phase,
                  estimated_steps, step_width=0.24):
    return action(node_id, "FootstepPlanAction", name, {
        "planMode": "OnlineGoalStance",
        "swingDurationS": SWING,
        "transferDurationS": TRANSFER,
        "stepWidthM": step_width,
        "stepLengthM": STEP_LENGTH,
        "turnPerStepRad": TURN_PER_STEP,
        "estimatedStepCount": estimated_steps,
        "goalStance": {
            "frameName": "mechanism",
            "pointToStandAt": stand_local,
            "pointToFace": face_local,
            "xyYawAdjustment": [0.0, 0.0, 0.0],
        },
    }, execute_after, phase)


def straddle_steps(node_id, name, xs, to_local, execute_after, phase, mirror):
    steps = []
    side = "Left"
    for i, x in enumerate(xs):
        y = (0.06 if side == "Left" else -0.06) * mirror
        if i == len(xs) - 1:
            y = (0.06 if side == "Left" else -0.06) * mirror
        steps.append({"side": side, "frameName": "mechanism",
                      "pose": pose_json(to_local((x, y, 0.0)))})
        side = "Right" if side == "Left" else "Left"
    return action(node_id, "FootstepPlanAction", name, {
        "planMode": "PreSpecified",
        "swingDurationS": SWING,
        "transferDurationS": TRANSFER,
        "stepWidthM": STRADDLE_WIDTH,
        "steps": steps,
    }, execute_after, phase)


def mirrored(p, mirror):
    return (p[0], p[1] * mirror, p[2])


def build_pull_lever(hinge: HingeSide, mechanism=MechanismType.LEVER_HANDLE,
                     unlatch_angle=0.6):
    """Pull-door behavior: side stance, chest-yaw-assisted cross reach, two
    screw primitives, reposition to the corridor, straddle through."""
    mirror = 1.0 if hinge is HingeSide.RIGHT else -1.0
    door = DoorState(hinge, SwingDirection.PULL, mechanism)
    origin, to_local, dir_local = mech_basis(door)
    arm = "Right" if hinge is HingeSide.RIGHT else "Left"
    chest_yaw = 1.0 * mirror
    sign = door.swing_sign

    stand = mirrored((-0.31, 1.10, 0.0), mirror)
    yaw = -math.pi / 4 * mirror
    face = (stand[0] + math.cos(yaw), stand[1] + math.sin(yaw), 0.0)
    corridor = (-0.75, 0.0, 0.0)
    corridor_face = (0.25, 0.0, 0.0)
    hinge_local = to_local(door.hinge_point)

    nodes = [
        action(10, "WaitAction", "let detection settle", {"durationS": 3.5},
               -1, "Approach"),
        footstep_goal(11, "walk to grasp-side stance", to_local(stand), to_local(face),
                      -1, "Approach", estimated_steps=8),
        action(12, "HandConfigurationAction", f"open {arm.lower()} hand",
               {"side": arm, "configuration": "Open", "maxTorqueNm": 2.0, "durationS": 1.5},
               -1, "Approach"),
        action(14, "WaitAction", "refine handle pose up close", {"durationS": 1.5},
               11, "Approach"),
        action(13, "ChestPelvisTrajectoryAction", "yaw chest toward handle",
               {"chestYawRad": chest_yaw, "trajectoryTimeS": 2.0}, 14, "Approach"),
        action(15, "ArmTrajectoryAction", "reach pre-grasp",
               {"side": arm, "targetMode": "FrameRelativeHandPose", "frameName": "mechanism",
                "handPose": pose_json((0.15, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)), "trajectoryTimeS": 1.2,
                "trackingWeight": 1.0}, 13, "UnlatchAndOpen"),
        action(16, "ArmTrajectoryAction", "close in on handle",
               {"side": arm, "targetMode": "FrameRelativeHandPose", "frameName": "mechanism",
                "handPose": pose_json((0.03, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)), "trajectoryTimeS": 0.8,
                "trackingWeight": 1.0}, 15, "UnlatchAndOpen"),
        action(17, "HandConfigurationAction", "grasp handle",
               {"side": arm, "configuration": "Closed", "maxTorqueNm": 4.0, "durationS": 0.5,
                "retryFromId": 15}, 16, "UnlatchAndOpen"),
        action(18, "ScrewTrajectoryAction", "turn handle to unlatch",
               {"frameName": "mechanism", "axisOrigin": [0.0, 0.0, 0.0],
                "axisDirection": [1.0, 0.0, 0.0],
                "revolutionAngleRad": -unlatch_angle * mirror, "axialTranslationM": 0.0,
                "durationS": 1.0, "side": arm}, 17, "UnlatchAndOpen"),
        action(19, "ScrewTrajectoryAction", "swing panel open",
               {"frameName": "mechanism", "axisOrigin": hinge_local,
                "axisDirection": [0.0, 0.0, 1.0],
                "revolutionAngleRad": 1.5 * sign, "axialTranslationM": 0.0,
                "durationS": 3.0, "side": arm}, 18, "UnlatchAndOpen"),
        # walks while the open screw is still swinging the panel (layered)
        footstep_goal(20, "reposition to corridor", to_local(mirrored(corridor, mirror)),
                      to_local(mirrored(corridor_face, mirror)), 18, "WalkThrough",
                      estimated_steps=11),
        action(21, "HandConfigurationAction", f"release {arm.lower()} hand",
               {"side": arm, "configuration": "Open", "maxTorqueNm": 2.0, "durationS": 0.5},
               20, "WalkThrough"),
        straddle_steps(22, "straddle the threshold",
                       [-0.55, -0.37, -0.19, -0.01, 0.17, 0.35, 0.53, 0.53],
                       to_local, 20, "WalkThrough", mirror),
        action(23, "ArmTrajectoryAction", "retract arm",
               {"side": arm, "targetMode": "PresetJointAngles",
                "jointAnglesRad": [0.0, 0.45, 0.0, 1.1, 0.0, 0.0, 0.0],
                "trajectoryTimeS": 2.5, "trackingWeight": 1.0}, 21, "WalkThrough"),
        action(24, "ChestPelvisTrajectoryAction", "square chest",
               {"chestYawRad": 0.0, "trajectoryTimeS": 2.5}, 21, "WalkThrough"),
    ]
    return wrap_tree(nodes, mechanism.value, "pull")


def build_push_bar(hinge: HingeSide):
    """Push-door behavior: squared stance at the bar, depress + swing screws,
    straddle through while the panel is still swinging open."""
    mirror = 1.0 if hinge is HingeSide.RIGHT else -1.0
    door = DoorState(hinge, SwingDirection.PUSH, MechanismType.PUSH_BAR)
    origin, to_local, dir_local = mech_basis(door)
    arm = "Right" if hinge is HingeSide.RIGHT else "Left"
    sign = door.swing_sign
    grasp_y = -0.26 * mirror  # near-shoulder point on the bar

    stand = mirrored((-0.46, -0.10, 0.0), mirror)
    face = (stand[0] + 1.0, stand[1], 0.0)
    hinge_local = to_local(door.hinge_point)

    nodes = [
        action(10, "WaitAction", "let detection settle", {"durationS": 2.0}, -1, "Approach"),
        footstep_goal(11, "walk up to the bar", to_local(stand), to_local(face), -1,
                      "Approach", estimated_steps=6),
        action(12, "HandConfigurationAction", f"open {arm.lower()} hand",
               {"side": arm, "configuration": "Open", "maxTorqueNm": 2.0, "durationS": 1.0},
               -1, "Approach"),
        action(13, "ArmTrajectoryAction", "reach toward bar",
               {"side": arm, "targetMode": "FrameRelativeHandPose", "frameName": "mechanism",
                "handPose": pose_json((0.14, -grasp_y, 0.0), (0.0, 0.0, 1.0, 0.0)), "trajectoryTimeS": 1.2,
                "trackingWeight": 1.0}, 11, "UnlatchAndOpen"),
        action(14, "ArmTrajectoryAction", "contact bar",
               {"side": arm, "targetMode": "FrameRelativeHandPose", "frameName": "mechanism",
                "handPose": pose_json((0.02, -grasp_y, 0.0), (0.0, 0.0, 1.0, 0.0)), "trajectoryTimeS": 0.8,
                "trackingWeight": 1.0}, 13, "UnlatchAndOpen"),
        action(15, "HandConfigurationAction", "grip bar",
               {"side": arm, "configuration": "Closed", "maxTorqueNm": 4.0, "durationS": 0.5,
                "retryFromId": 13}, 14, "UnlatchAndOpen"),
        action(16, "ScrewTrajectoryAction", "depress bar",
               {"frameName": "mechanism", "axisOrigin": [0.0, 0.0, 0.0],
                "axisDirection": [1.0, 0.0, 0.0], "revolutionAngleRad": 0.0,
                "axialTranslationM": -0.03, "durationS": 0.8, "side": arm},
               15, "UnlatchAndOpen"),
        action(17, "ScrewTrajectoryAction", "push panel open",
               {"frameName": "mechanism", "axisOrigin": hinge_local,
                "axisDirection": [0.0, 0.0, 1.0], "revolutionAngleRad": 1.4 * sign,
                "axialTranslationM": 0.0, "durationS": 3.0, "side": arm},
               16, "UnlatchAndOpen"),
        straddle_steps(18, "straddle the threshold",
                       [-0.30, -0.13, 0.04, 0.21, 0.38, 0.55, 0.55],
                       to_local, 16, "WalkThrough", mirror),
        action(19, "HandConfigurationAction", f"release {arm.lower()} hand",
               {"side": arm, "configuration": "Open", "maxTorqueNm": 2.0, "durationS": 0.5},
               17, "WalkThrough"),
        action(20, "ArmTrajectoryAction", "retract arm",
               {"side": arm, "targetMode": "PresetJointAngles",
                "jointAnglesRad": [0.0, 0.45, 0.0, 1.1, 0.0, 0.0, 0.0],
                "trajectoryTimeS": 2.0, "trackingWeight": 1.0}, 19, "WalkThrough"),
    ]
    return wrap_tree(nodes, "PushBar", "push")


def build_push_knob(hinge: HingeSide):
    """Push door with a knob: grasp near the free edge, turn, swing, go."""
    mirror = 1.0 if hinge is HingeSide.RIGHT else -1.0
    door = DoorState(hinge, SwingDirection.PUSH, MechanismType.KNOB)
    origin, to_local, dir_local = mech_basis(door)
    arm = "Right" if hinge is HingeSide.RIGHT else "Left"
    sign = door.swing_sign
    chest_yaw = 0.5 * mirror

    stand = mirrored((-0.46, 0.50, 0.0), mirror)
    yaw = -0.15 * mirror
    face = (stand[0] + math.cos(yaw), stand[1] + math.sin(yaw), 0.0)
    corridor = mirrored((-0.72, 0.0, 0.0), mirror)
    corridor_face = mirrored((0.25, 0.0, 0.0), mirror)
    hinge_local = to_local(door.hinge_point)

    nodes = [
        action(10, "WaitAction", "let detection settle", {"durationS": 2.0}, -1, "Approach"),
        footstep_goal(11, "walk to knob-side stance", to_local(stand), to_local(face), -1,
                      "Approach", estimated_steps=7),
        action(12, "HandConfigurationAction", f"open {arm.lower()} hand",
               {"side": arm, "configuration": "Open", "maxTorqueNm": 2.0, "durationS": 1.0},
               -1, "Approach"),
        action(13, "ChestPelvisTrajectoryAction", "lean chest toward knob",
               {"chestYawRad": chest_yaw, "trajectoryTimeS": 1.5}, 11, "Approach"),
        action(14, "ArmTrajectoryAction", "reach pre-grasp",
               {"side": arm, "targetMode": "FrameRelativeHandPose", "frameName": "mechanism",
                "handPose": pose_json((0.15, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)), "trajectoryTimeS": 1.2,
                "trackingWeight": 1.0}, 13, "UnlatchAndOpen"),
        action(15, "ArmTrajectoryAction", "close in on knob",
               {"side": arm, "targetMode": "FrameRelativeHandPose", "frameName": "mechanism",
                "handPose": pose_json((0.03, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)), "trajectoryTimeS": 0.8,
                "trackingWeight": 1.0}, 14, "UnlatchAndOpen"),
        action(16, "HandConfigurationAction", "grasp knob",
               {"side": arm, "configuration": "Closed", "maxTorqueNm": 4.0, "durationS": 0.5,
                "retryFromId": 14}, 15, "UnlatchAndOpen"),
        action(17, "ScrewTrajectoryAction", "turn knob",
               {"frameName": "mechanism", "axisOrigin": [0.0, 0.0, 0.0],
                "axisDirection": [1.0, 0.0, 0.0],
                "revolutionAngleRad": -0.9 * mirror, "axialTranslationM": 0.0,
                "durationS": 1.0, "side": arm}, 16, "UnlatchAndOpen"),
        action(18, "ScrewTrajectoryAction", "push panel open",
               {"frameName": "mechanism", "axisOrigin": hinge_local,
                "axisDirection": [0.0, 0.0, 1.0], "revolutionAngleRad": 1.5 * sign,
                "axialTranslationM": 0.0, "durationS": 3.0, "side": arm},
               17, "UnlatchAndOpen"),
        action(19, "HandConfigurationAction", f"release {arm.lower()} hand",
               {"side": arm, "configuration": "Open", "maxTorqueNm": 2.0, "durationS": 0.5},
               18, "WalkThrough"),
        footstep_goal(20, "reposition to corridor", to_local(corridor),
                      to_local(corridor_face), 18, "WalkThrough", estimated_steps=8),
        straddle_steps(21, "straddle the threshold",
                       [-0.52, -0.35, -0.18, -0.01, 0.16, 0.33, 0.50, 0.50],
                       to_local, 20, "WalkThrough", mirror),
        action(22, "ChestPelvisTrajectoryAction", "square chest",
               {"chestYawRad": 0.0, "trajectoryTimeS": 2.0}, 19, "WalkThrough"),
        action(23, "ArmTrajectoryAction", "retract arm",
               {"side": arm, "targetMode": "PresetJointAngles",
                "jointAnglesRad": [0.0, 0.45, 0.0, 1.1, 0.0, 0.0, 0.0],
                "trajectoryTimeS": 2.0, "trackingWeight": 1.0}, 19, "WalkThrough"),
    ]
    return wrap_tree(nodes, "Knob", "push")


def wrap_tree(nodes, door_type, label):
    return {
        "version": 1,
        "root": {
            "id": 0,
            "kind": "DoorTraversalCoordinator",
            "name": f"{label} {door_type} door traversal",
            "parameters": {"maxRetries": 2},
            "children": [
                {
                    "id": 1,
                    "kind": "ActionSequence",
                    "name": f"{label} sequence",
                    "parameters": {"doorType": door_type, "strategy": "primary"},
                    "children": nodes,
                }
            ],
        },
    }


def scenario(door_kwargs, start, max_time=60.0, spring=0.0, erosion=1):
    return {
        "door": {**door_kwargs, "frameWidthM": 1.0, "panelWidthM": 0.92,
                 "springCloserRateRadS": spring},
        "robotStart": {"x": start[0], "y": start[1], "yawRad": start[2],
                       "stepWidthM": 0.24},
        "sensor": {"tiltDeg": 43.0, "rateHz": 30.0, "widthPx": 192, "heightPx": 144,
                   "hfovDeg": 100.0, "noise": {"depthSigmaM": 0.0, "missProbability": 0.0},
                   "erosionIterations": erosion, "alpha": 0.2, "sampleLimit": 256},
        "tickRateHz": 120.0,
        "maxSimTimeS": max_time,
    }


def main():
    behaviors = {
        "pull_lever_right": build_pull_lever(HingeSide.RIGHT),
        "pull_lever_left": build_pull_lever(HingeSide.LEFT),
        "pull_knob_right": build_pull_lever(HingeSide.RIGHT, MechanismType.KNOB,
                                            unlatch_angle=0.9),
        "push_bar_right": build_push_bar(HingeSide.RIGHT),
        "push_bar_left": build_push_bar(HingeSide.LEFT),
        "push_knob_right": build_push_knob(HingeSide.RIGHT),
    }
    scenarios = {
        "pull_lever_right": scenario(
            {"hingeSide": "Right", "swingDirection": "Pull", "mechanismType": "LeverHandle"},
            (-1.60, 1.05, -0.35), spring=0.4),
        "pull_lever_left": scenario(
            {"hingeSide": "Left", "swingDirection": "Pull", "mechanismType": "LeverHandle"},
            (-1.60, -1.05, 0.35), spring=0.4),
        "pull_knob_right": scenario(
            {"hingeSide": "Right", "swingDirection": "Pull", "mechanismType": "Knob"},
            (-1.60, 1.05, -0.35), spring=0.4),
        "push_bar_right": scenario(
            {"hingeSide": "Right", "swingDirection": "Push", "mechanismType": "PushBar"},
            (-2.05, -0.10, 0.0)),
        "push_bar_left": scenario(
            {"hingeSide": "Left", "swingDirection": "Push", "mechanismType": "PushBar"},
            (-2.05, 0.10, 0.0)),
        "push_knob_right": scenario(
            {"hingeSide": "Right", "swingDirection": "Push", "mechanismType": "Knob"},
            (-1.70, 0.55, -0.15)),
    }
    (FIXTURES / "behaviors").mkdir(parents=True, exist_ok=True)
    (FIXTURES / "scenarios").mkdir(parents=True, exist_ok=True)
    for name, doc in behaviors.items():
        # round-trip through the loader for validation and canonical formatting
        text = save_tree(load_tree(json.dumps(doc)))
        (FIXTURES / "behaviors" / f"{name}.json").write_text(text)
        print(f"behavior {name}: {len(text)} bytes")
    for name, doc in scenarios.items():
        (FIXTURES / "scenarios" / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"scenario {name}")


if __name__ == "__main__":
    main()

from __future__ import annotations

import math

import numpy as np
import pytest

from doortraversal.actions import Footstep, Side
from doortraversal.frames import FrameTree, Pose, ScrewAxis
from doortraversal.actions import ScrewTrajectoryParams, generate_screw_trajectory
from doortraversal.simworld import (
    DoorState,
    HingeSide,
    MechanismType,
    SimWorld,
    SwingDirection,
    WalkPhase,
    unlatch_check,
    UNLATCH_HANDLE_ANGLE,
)

DT = 1.0 / 120.0


def flat_stance(x, y, yaw=0.0, width=0.24):
    lat = np.array([-math.sin(yaw), math.cos(yaw), 0.0]) * (width / 2)
    return (
        Pose.from_xy_yaw(x + lat[0], y + lat[1], yaw),
        Pose.from_xy_yaw(x - lat[0], y - lat[1], yaw),
    )


def make_world(mechanism=MechanismType.LEVER_HANDLE, hinge=HingeSide.RIGHT,
               swing=SwingDirection.PULL, start=(-1.5, 0.3), spring=0.0, **door_kwargs):
    door = DoorState(hinge_side=hinge, swing_direction=swing, mechanism_type=mechanism,
                     spring_closer_rate=spring, **door_kwargs)
    return SimWorld(door, flat_stance(*start))


def run(world, seconds):
    for _ in range(round(seconds / DT)):
        world.step(DT)


class TestUnlatch:
    def test_lever_past_threshold_unlatches(self):
        door = DoorState(HingeSide.RIGHT, SwingDirection.PULL, MechanismType.LEVER_HANDLE)
        door.handle_angle = 0.6
        assert not unlatch_check(door).latched

    def test_knob_at_zero_stays_latched(self):
        door = DoorState(HingeSide.RIGHT, SwingDirection.PULL, MechanismType.KNOB)
        assert unlatch_check(door).latched

    def test_hands_free_pull_handle_starts_unlatched(self):
        door = DoorState(HingeSide.RIGHT, SwingDirection.PULL, MechanismType.PULL_HANDLE)
        assert not door.latched

    def test_push_bar_depression(self):
        door = DoorState(HingeSide.LEFT, SwingDirection.PUSH, MechanismType.PUSH_BAR)
        door.depression = 0.025
        assert not unlatch_check(door).latched


class TestWalking:
    def test_empty_queue_remains_standing(self):
        world = make_world()
        before = world.state_signature()
        run(world, 0.5)
        assert world.walking.phase is WalkPhase.STANDING
        # only the clock moved
        assert before[1:] == world.state_signature()[1:]

    def test_single_step_lands_after_transfer_plus_swing(self):
        world = make_world()
        target = Pose.from_xy_yaw(-1.2, 0.42, 0.0)
        world.queue_footsteps([Footstep(Side.LEFT, target)], swing=0.6, transfer=0.25,
                              step_width=0.24, action_id=1)
        run(world, 0.84)
        assert world.foot_poses[Side.LEFT].distance_to(target) > 1e-6
        run(world, 0.02)
        assert world.foot_poses[Side.LEFT].distance_to(target) < 1e-12
        assert world.walking.phase is WalkPhase.STANDING

    def test_support_alternates_strictly(self):
        world = make_world()
        steps = []
        for i in range(10):
            side = Side.LEFT if i % 2 == 0 else Side.RIGHT
            y = 0.42 if side is Side.LEFT else 0.18
            steps.append(Footstep(side, Pose.from_xy_yaw(-1.5 + 0.2 * (i + 1), y, 0.0)))
        world.queue_footsteps(steps, 0.5, 0.25, 0.24, action_id=1)
        supports = []
        for _ in range(round(10 * 0.75 / DT) + 10):
            world.step(DT)
            if world.walking.phase is WalkPhase.SWING:
                if not supports or supports[-1] != world.walking.support_side:
                    supports.append(world.walking.support_side)
        assert supports == ["Right", "Left"] * 5

    def test_sway_peaks_mid_transfer_toward_support(self):
        world = make_world()
        world.queue_footsteps([Footstep(Side.LEFT, Pose.from_xy_yaw(-1.3, 0.42, 0.0))],
                              swing=0.6, transfer=0.4, step_width=0.24, action_id=1)
        sways = []
        for _ in range(round(0.4 / DT)):
            world.step(DT)
            sways.append(world.walking.sway)
        # stepping with the left foot -> support right -> sway negative (rightward)
        assert min(sways) == pytest.approx(-0.12, abs=1e-3)
        assert abs(sways[-1]) < 1e-6


class TestDoorMechanics:
    def test_spring_closer_linear_closure(self):
        world = make_world(spring=0.4)
        world.door.latched = False
        world.door.panel_angle = 0.5
        world.step(DT)
        assert world.door.panel_angle == pytest.approx(0.5 - 0.4 * DT, abs=1e-12)

    def test_welded_screw_drives_handle_angle(self):
        world = make_world()
        hand = world.hands[Side.RIGHT]
        # place the hand on the lever and close it
        hand.pose = Pose(position=world.door.handle_point())
        hand.mode = None
        assert world.set_hand_closed(Side.RIGHT, True)
        frames = FrameTree()
        spindle = world.door.face_normal()
        params = ScrewTrajectoryParams(
            axis=ScrewAxis(origin_in_frame=world.door.handle_point(),
                           direction_in_frame=spindle),
            revolution_angle=0.6, axial_translation=0.0, duration=1.0)
        samples = generate_screw_trajectory(hand.pose, params, frames)
        world.start_hand_trajectory(Side.RIGHT, samples)
        run(world, 1.05)
        assert world.door.handle_angle == pytest.approx(0.6, abs=1e-6)
        assert not world.door.latched

    def test_weld_rigidity(self):
        world = make_world()
        hand = world.hands[Side.RIGHT]
        hand.pose = Pose(position=world.door.handle_point() + [0.02, 0.0, 0.0])
        world.set_hand_closed(Side.RIGHT, True)
        offset0 = world.door.handle_pose().inverse().compose(hand.pose)
        world.door.latched = False
        frames = FrameTree()
        params = ScrewTrajectoryParams(
            axis=ScrewAxis(origin_in_frame=world.door.hinge_point, direction_in_frame=[0, 0, 1]),
            revolution_angle=1.0 * world.door.swing_sign, axial_translation=0.0, duration=1.5)
        world.start_hand_trajectory(Side.RIGHT, generate_screw_trajectory(hand.pose, params, frames))
        for _ in range(round(1.5 / DT)):
            world.step(DT)
            rel = world.door.handle_pose().inverse().compose(world.hands[Side.RIGHT].pose)
            assert np.linalg.norm(rel.position - offset0.position) < 1e-9
            assert rel.rotation_angle_to(offset0) < 1e-9
        assert world.door.panel_angle == pytest.approx(1.0, abs=1e-6)

    def test_open_hand_releases_and_spring_closes(self):
        world = make_world(spring=0.5)
        hand = world.hands[Side.RIGHT]
        hand.pose = Pose(position=world.door.handle_point())
        world.set_hand_closed(Side.RIGHT, True)
        world.door.latched = False
        world.door.panel_angle = 0.8
        world.set_hand_closed(Side.RIGHT, False)
        assert not hand.welded
        run(world, 0.5)
        assert world.door.panel_angle < 0.8 - 0.2

    def test_panel_clamps_on_blocking_arm(self):
        world = make_world(spring=1.0, start=(-2.5, 1.5))
        world.door.latched = False
        world.door.panel_angle = 1.2
        # park a free hand where the closing panel must stop
        blocker = world.door.hinge_point + 0.6 * world.door.panel_direction(0.7)
        blocker[2] = 1.0
        world.hands[Side.LEFT].pose = Pose(position=blocker)
        world.hands[Side.LEFT].mode = None
        world.hands[Side.LEFT].carried_offset = None
        world.hands[Side.LEFT].trajectory = None
        # prevent carrying from moving the blocker
        world.hands[Side.LEFT].mode = "frozen"
        run(world, 3.0)
        assert world.door.panel_angle > 0.6
        assert not world.door.latched

    def test_relatch_when_fully_closed(self):
        world = make_world(spring=2.0, start=(-3.0, 2.0))
        world.door.latched = False
        world.door.panel_angle = 0.3
        run(world, 1.0)
        assert world.door.panel_angle == 0.0
        assert world.door.latched


class TestCollision:
    def test_centered_no_sway_has_published_clearance(self):
        world = make_world(start=(0.0, 0.0), frame_width=1.0)
        report = world.door_frame_collision_check()
        assert not report.collision
        assert report.clearance == pytest.approx(0.075 * 1.0, abs=1e-9)

    def test_sway_beyond_clearance_flags_collision(self):
        world = make_world(start=(0.0, 0.0), frame_width=1.0)
        world.walking.sway = 0.12  # nominal 0.24 m step width peak
        assert world.door_frame_collision_check().collision

    def test_outside_window_not_checked(self):
        world = make_world(start=(-1.5, 0.0), frame_width=1.0)
        world.walking.sway = 0.3
        assert not world.door_frame_collision_check().collision

    def test_narrow_step_sway_clears(self):
        world = make_world(start=(0.0, 0.0), frame_width=1.0)
        world.walking.sway = 0.07  # straddling 0.14 m step width peak
        assert not world.door_frame_collision_check().collision


class TestProgress:
    def test_progress_signed_distance(self):
        world = make_world(start=(-1.5, 0.0))
        assert world.traversal_progress() == pytest.approx(-1.5)
        world2 = make_world(start=(0.0, 0.0))
        assert world2.traversal_progress() == pytest.approx(0.0)

    def test_determinism_same_inputs_same_signature(self):
        def build():
            world = make_world(spring=0.4)
            world.door.latched = False
            world.door.panel_angle = 1.0
            world.queue_footsteps(
                [Footstep(Side.LEFT, Pose.from_xy_yaw(-1.2, 0.42, 0.0)),
                 Footstep(Side.RIGHT, Pose.from_xy_yaw(-1.0, 0.18, 0.0))],
                0.6, 0.25, 0.24, action_id=1)
            sigs = []
            for _ in range(240):
                world.step(DT)
                sigs.append(world.state_signature())
            return sigs

        assert build() == build()

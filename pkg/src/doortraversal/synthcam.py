"""Synthetic depth + segmentation sensor.

Stands in for the neural detector: ray-casts the door world into a depth image
and per-mechanism segmentation masks, with configurable per-frame miss
probability and depth noise. Camera convention: +x right, +y down, +z optical
axis; depth is the camera-z distance (pinhole convention).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import Pose
from .simworld import DOOR_HEIGHT, DoorState, SimWorld


@dataclass
class CameraIntrinsics:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    @staticmethod
    def from_fov(width: int, height: int, hfov_deg: float) -> "CameraIntrinsics":
        fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return CameraIntrinsics(width, height, fx, fx, (width - 1) / 2.0, (height - 1) / 2.0)


@dataclass
class RectPatch:
    """A finite plane patch: center plus two in-plane half-extent directions."""

    center: np.ndarray
    u_dir: np.ndarray
    v_dir: np.ndarray
    half_u: float
    half_v: float
    surface_id: int
    label: str = ""

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.u_dir, self.v_dir)
        return n / np.linalg.norm(n)


@dataclass
class ClutterPatch:
    center: tuple[float, float, float]
    yaw_deg: float = 0.0
    width: float = 0.4
    height: float = 0.3

    @staticmethod
    def from_json(data: dict) -> "ClutterPatch":
        return ClutterPatch(center=tuple(data["centerXYZ"]), yaw_deg=data.get("yawDeg", 0.0),
                            width=data.get("widthM", 0.4), height=data.get("heightM", 0.3))


@dataclass
class SensorNoise:
    depth_sigma: float = 0.0
    miss_probability: float = 0.0

    @staticmethod
    def from_json(data: dict) -> "SensorNoise":
        return SensorNoise(depth_sigma=data.get("depthSigmaM", 0.0),
                           miss_probability=data.get("missProbability", 0.0))


UP = np.array([0.0, 0.0, 1.0])
MECHANISM_SURFACE_ID = 100


def door_scene_patches(door: DoorState, clutter: list[ClutterPatch] = ()) -> list[RectPatch]:
    w = door.frame_width
    patches = [
        RectPatch(np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]),
                  np.array([0.0, 1.0, 0.0]), 12.0, 12.0, 0, "floor"),
        RectPatch(np.array([0.0, w / 2 + 2.0, 1.3]), np.array([0.0, 1.0, 0.0]),
                  UP, 2.0, 1.3, 1, "wall"),
        RectPatch(np.array([0.0, -w / 2 - 2.0, 1.3]), np.array([0.0, 1.0, 0.0]),
                  UP, 2.0, 1.3, 2, "wall"),
        RectPatch(np.array([0.0, 0.0, DOOR_HEIGHT + 0.3]), np.array([0.0, 1.0, 0.0]),
                  UP, w / 2, 0.3, 3, "header"),
    ]
    panel_dir = door.panel_direction()
    panel_center = (door.hinge_point + (door.panel_width / 2.0) * panel_dir
                    + np.array([0.0, 0.0, DOOR_HEIGHT / 2.0]))
    patches.append(RectPatch(panel_center, panel_dir.copy(), UP,
                             door.panel_width / 2.0, DOOR_HEIGHT / 2.0, 4, "panel"))
    a, b = door.handle_segment()
    center = 0.5 * (a + b)
    along = b - a
    half_u = float(np.linalg.norm(along)) / 2.0
    u_dir = along / (2.0 * half_u) if half_u > 1e-9 else panel_dir.copy()
    v_dir = np.cross(door.face_normal(), u_dir)
    v_dir /= np.linalg.norm(v_dir)
    half_v = 0.03 if abs(float(np.dot(u_dir, UP))) < 0.9 else 0.02
    patches.append(RectPatch(center, u_dir, v_dir, half_u, half_v,
                             MECHANISM_SURFACE_ID, door.mechanism_type.value))
    for i, c in enumerate(clutter):
        yaw = math.radians(c.yaw_deg)
        u = np.array([-math.sin(yaw), math.cos(yaw), 0.0])
        patches.append(RectPatch(np.asarray(c.center, dtype=float), u, UP.copy(),
                                 c.width / 2.0, c.height / 2.0, 200 + i, "clutter"))
    return patches


_RAY_GRID_CACHE: dict[tuple, np.ndarray] = {}


def _ray_grid(intrinsics: CameraIntrinsics) -> np.ndarray:
    key = (intrinsics.width, intrinsics.height, intrinsics.fx, intrinsics.fy,
           intrinsics.cx, intrinsics.cy)
    grid = _RAY_GRID_CACHE.get(key)
    if grid is None:
        us = (np.arange(intrinsics.width) - intrinsics.cx) / intrinsics.fx
        vs = (np.arange(intrinsics.height) - intrinsics.cy) / intrinsics.fy
        xs, ys = np.meshgrid(us, vs)
        grid = np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)], axis=-1)  # (n, 3), z = 1
        _RAY_GRID_CACHE[key] = grid
    return grid


def render_depth(
    patches: list[RectPatch],
    camera_pose: Pose,
    intrinsics: CameraIntrinsics,
) -> tuple[np.ndarray, np.ndarray]:
    """Ray-cast the patches; returns (depth image, surface-id image).

    Depth is the camera-z coordinate of the nearest hit; pixels with no hit
    hold 0 (the invalid marker). The id image holds -1 where nothing was hit.
    """
    h, w = intrinsics.height, intrinsics.width
    dirs_world = _ray_grid(intrinsics) @ camera_pose.rotation_matrix().T  # (n, 3)
    origin = camera_pose.position

    # one gemm per basis across all patches; bounds tests via projections so
    # no per-patch (n, 3) hit-point temporaries are materialized
    normals = np.stack([p.normal for p in patches])  # (P, 3)
    u_dirs = np.stack([p.u_dir for p in patches])
    v_dirs = np.stack([p.v_dir for p in patches])
    centers = np.stack([p.center for p in patches])
    dn = dirs_world @ normals.T  # (n, P)
    du = dirs_world @ u_dirs.T
    dv = dirs_world @ v_dirs.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((centers - origin) * normals).sum(axis=1) / dn  # (n, P)
    rel = origin - centers  # (P, 3)
    proj_u = (rel * u_dirs).sum(axis=1) + t * du
    proj_v = (rel * v_dirs).sum(axis=1) + t * dv
    half_u = np.array([p.half_u for p in patches])
    half_v = np.array([p.half_v for p in patches])
    valid = (t > 1e-6) & np.isfinite(t) & (np.abs(proj_u) <= half_u) & (np.abs(proj_v) <= half_v)
    t = np.where(valid, t, np.inf)
    best = np.argmin(t, axis=1)
    rows = np.arange(t.shape[0])
    depth = t[rows, best]
    surface_ids = np.array([p.surface_id for p in patches], dtype=np.int32)
    ids = np.where(np.isfinite(depth), surface_ids[best], -1).astype(np.int32)
    depth = np.where(np.isfinite(depth), depth, 0.0)
    return depth.reshape(h, w), ids.reshape(h, w)


def render_sensor_frame(
    world: SimWorld,
    intrinsics: CameraIntrinsics,
    tilt_rad: float,
    timestamp: float,
    noise: SensorNoise,
    rng: np.random.Generator,
    clutter: list[ClutterPatch] = (),
):
    """One synthetic frame: depth plus the mechanism segmentation mask."""
    camera_pose = world.camera_pose(tilt_rad)
    patches = door_scene_patches(world.door, clutter)
    depth, ids = render_depth(patches, camera_pose, intrinsics)
    if noise.depth_sigma > 0:
        jitter = rng.normal(0.0, noise.depth_sigma, size=depth.shape)
        depth = np.where(depth > 0, np.maximum(depth + jitter, 0.01), 0.0)
    masks: dict[str, np.ndarray] = {}
    mech_mask = ids == MECHANISM_SURFACE_ID
    missed = noise.miss_probability > 0 and rng.random() < noise.miss_probability
    if mech_mask.any() and not missed:
        masks[world.door.mechanism_type.value] = mech_mask
    return depth, masks, camera_pose, timestamp

"""Door-mechanism detection pipeline.

Per sensor frame: erode the segmentation mask, deproject the masked depth
pixels and take a subsampled centroid, alpha-filter it, extract planar regions
from the depth image by sampled consensus, associate the nearest plausible
door-panel plane (nearby, normal perpendicular to gravity, sufficiently
large), and gate the result with the 60% / one-second stability window.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .frames import Pose, quat_from_matrix
from .synthcam import CameraIntrinsics

DEFAULT_ALPHA = 0.2
DEFAULT_EROSION_ITERATIONS = 2
DEFAULT_SAMPLE_LIMIT = 256
DEFAULT_SENSOR_RATE = 30.0
STABILITY_WINDOW_SECONDS = 1.0
STABILITY_FRACTION_NUM = 3  # 60% as the exact rational 3/5
STABILITY_FRACTION_DEN = 5
PLANE_INLIER_DISTANCE = 0.01
PLANE_MIN_INLIERS = 500
PLANE_MAX_COUNT = 4
PLANE_CANDIDATES = 30
PLANE_SCORE_SAMPLE = 4000
ASSOCIATION_MAX_DISTANCE = 0.10
ASSOCIATION_MAX_VERTICAL_DOT = math.sin(math.radians(15.0))
ASSOCIATION_MIN_AREA = 0.30

UP = np.array([0.0, 0.0, 1.0])


@dataclass
class SensorFrame:
    timestamp: float
    depth: np.ndarray  # HxW, meters; 0 marks invalid
    masks: dict[str, np.ndarray]  # per mechanism class; absent = missed detection
    intrinsics: CameraIntrinsics
    camera_pose: Pose


@dataclass
class PlanarRegion:
    normal: np.ndarray
    point_on_plane: np.ndarray
    inlier_count: int
    area_estimate: float

    def distance_to(self, point: np.ndarray) -> float:
        return abs(float(np.dot(point - self.point_on_plane, self.normal)))


@dataclass
class MechanismDetection:
    mechanism_type: str
    window_size: int
    filtered_centroid: np.ndarray | None = None
    raw_centroid: np.ndarray | None = None
    plane_normal: np.ndarray | None = None
    orientation: Pose | None = None
    stable: bool = False
    window: deque = field(default_factory=deque)

    def hits(self) -> int:
        return sum(1 for h in self.window if h)


@dataclass
class FrameRecord:
    """Per-frame debug row: the CSV dump columns."""

    timestamp: float
    mechanism_type: str
    raw_centroid: np.ndarray | None
    filtered_centroid: np.ndarray | None
    plane_normal: np.ndarray | None
    stable: bool

    def csv_row(self) -> str:
        def vec(v):
            return ",".join("" if v is None else f"{x:.6f}" for x in (v if v is not None else (0, 0, 0)))

        return (f"{self.timestamp:.6f},{self.mechanism_type},{vec(self.raw_centroid)},"
                f"{vec(self.filtered_centroid)},{vec(self.plane_normal)},{int(self.stable)}")


CSV_HEADER = ("timestamp,mechanism,raw_x,raw_y,raw_z,filtered_x,filtered_y,filtered_z,"
              "normal_x,normal_y,normal_z,stable")


def erode_mask(mask: np.ndarray, iterations: int) -> np.ndarray:
    """4-connected morphological erosion (border pixels erode away)."""
    if iterations < 0:
        raise ValueError("erosion iterations must be >= 0")
    out = mask.astype(bool)
    for _ in range(iterations):
        padded = np.zeros((out.shape[0] + 2, out.shape[1] + 2), dtype=bool)
        padded[1:-1, 1:-1] = out
        out = (padded[1:-1, 1:-1] & padded[:-2, 1:-1] & padded[2:, 1:-1]
               & padded[1:-1, :-2] & padded[1:-1, 2:])
    return out


def deproject(depth: np.ndarray, intrinsics: CameraIntrinsics, camera_pose: Pose,
              pixel_mask: np.ndarray) -> np.ndarray:
    """World-frame points of the masked valid-depth pixels, (N, 3)."""
    vs, us = np.nonzero(pixel_mask & (depth > 0))
    z = depth[vs, us]
    x = (us - intrinsics.cx) / intrinsics.fx * z
    y = (vs - intrinsics.cy) / intrinsics.fy * z
    pts_cam = np.stack([x, y, z], axis=-1)
    return pts_cam @ camera_pose.rotation_matrix().T + camera_pose.position


def mask_centroid(mask: np.ndarray, depth: np.ndarray, intrinsics: CameraIntrinsics,
                  camera_pose: Pose, sample_limit: int = DEFAULT_SAMPLE_LIMIT) -> np.ndarray | None:
    """Centroid of the masked depth points in the world frame; None if empty."""
    points = deproject(depth, intrinsics, camera_pose, mask)
    if len(points) == 0:
        return None
    if len(points) > sample_limit:
        idx = np.round(np.linspace(0, len(points) - 1, sample_limit)).astype(int)
        points = points[idx]
    return points.mean(axis=0)


def alpha_filter(previous: np.ndarray | None, measurement: np.ndarray, alpha: float) -> np.ndarray:
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if previous is None:
        return np.asarray(measurement, dtype=float).copy()
    previous = np.asarray(previous, dtype=float)
    return previous + alpha * (np.asarray(measurement, dtype=float) - previous)


def extract_planes(
    depth: np.ndarray,
    intrinsics: CameraIntrinsics,
    camera_pose: Pose,
    rng: np.random.Generator,
    max_planes: int = PLANE_MAX_COUNT,
    inlier_distance: float = PLANE_INLIER_DISTANCE,
    min_inliers: int = PLANE_MIN_INLIERS,
    candidates: int = PLANE_CANDIDATES,
) -> list[PlanarRegion]:
    """Iterative sampled-consensus plane fitting over the full depth image.

    Candidate planes are scored on a subsample for speed; accepted planes are
    refined by a least-squares fit over their full inlier set before removal.
    """
    valid = depth > 0
    vs, us = np.nonzero(valid)
    if len(vs) < 3:
        return []
    z = depth[vs, us]
    x = (us - intrinsics.cx) / intrinsics.fx * z
    y = (vs - intrinsics.cy) / intrinsics.fy * z
    points = np.stack([x, y, z], axis=-1) @ camera_pose.rotation_matrix().T + camera_pose.position
    cam_z = z
    active = np.ones(len(points), dtype=bool)
    regions: list[PlanarRegion] = []
    footprint_scale = 1.0 / (intrinsics.fx * intrinsics.fy)

    for _ in range(max_planes):
        idx_active = np.nonzero(active)[0]
        if len(idx_active) < min_inliers:
            break
        pts_active = points[idx_active]
        if len(idx_active) <= PLANE_SCORE_SAMPLE:
            score_pts = pts_active
        else:
            score_pts = pts_active[rng.integers(0, len(idx_active), PLANE_SCORE_SAMPLE)]
        triads = rng.integers(0, len(idx_active), size=(candidates, 3))
        tri = pts_active[triads]  # (C, 3, 3)
        normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norms = np.linalg.norm(normals, axis=1)
        ok = norms > 1e-9
        if not ok.any():
            break
        normals = normals[ok] / norms[ok, None]
        anchors = tri[ok, 0]
        # scores for every candidate in one pass: |p.n - anchor.n| per column
        dists = np.abs(score_pts @ normals.T - (anchors * normals).sum(axis=1))
        scores = (dists < inlier_distance).sum(axis=0)
        pick = int(np.argmax(scores))
        n, p0 = normals[pick], anchors[pick]
        inlier_mask = np.abs((pts_active - p0) @ n) < inlier_distance
        if int(inlier_mask.sum()) < min_inliers:
            break
        inlier_pts = pts_active[inlier_mask]
        centroid = inlier_pts.mean(axis=0)
        centered = inlier_pts - centroid
        # plane normal = smallest principal axis of the inlier covariance
        _, eigvecs = np.linalg.eigh(centered.T @ centered)
        n = eigvecs[:, 0]
        refined_mask = np.abs((pts_active - centroid) @ n) < inlier_distance
        inliers = idx_active[refined_mask]
        if len(inliers) < min_inliers:
            break
        if float(np.dot(n, camera_pose.position - centroid)) < 0:
            n = -n  # face the camera
        mean_depth = float(cam_z[inliers].mean())
        area = len(inliers) * mean_depth * mean_depth * footprint_scale
        regions.append(PlanarRegion(normal=n, point_on_plane=points[inliers].mean(axis=0),
                                    inlier_count=int(len(inliers)), area_estimate=area))
        active[inliers] = False
    return regions


def associate_mechanism_plane(
    centroid: np.ndarray,
    regions: list[PlanarRegion],
    max_distance: float = ASSOCIATION_MAX_DISTANCE,
    max_vertical_dot: float = ASSOCIATION_MAX_VERTICAL_DOT,
    min_area: float = ASSOCIATION_MIN_AREA,
) -> PlanarRegion | None:
    """Nearest region that is close, vertical (normal perpendicular to
    gravity), and large enough to plausibly be the door panel."""
    best = None
    for region in regions:
        d = region.distance_to(centroid)
        if d > max_distance:
            continue
        if abs(float(np.dot(region.normal, UP))) > max_vertical_dot:
            continue
        if region.area_estimate < min_area:
            continue
        if best is None or d < best[0]:
            best = (d, region)
    return None if best is None else best[1]


def update_stability(detection: MechanismDetection, frame_ok: bool) -> MechanismDetection:
    """Ring-buffer update of the 60% / one-second stability gate."""
    detection.window.append(bool(frame_ok))
    while len(detection.window) > detection.window_size:
        detection.window.popleft()
    hits = detection.hits()
    detection.stable = (hits * STABILITY_FRACTION_DEN
                        >= detection.window_size * STABILITY_FRACTION_NUM)
    return detection


def orientation_from_normal(normal: np.ndarray, camera_position: np.ndarray,
                            point: np.ndarray) -> Pose:
    """Mechanism orientation: zero roll, yaw from the normal's horizontal
    projection, normal flipped to face the camera."""
    n = np.asarray(normal, dtype=float).copy()
    if float(np.dot(n, camera_position - point)) < 0:
        n = -n
    horiz = np.array([n[0], n[1], 0.0])
    norm = float(np.linalg.norm(horiz))
    if norm < 1e-9:
        horiz = np.array([1.0, 0.0, 0.0])
        norm = 1.0
    x = horiz / norm
    z = UP
    y = np.cross(z, x)
    return Pose(quaternion=quat_from_matrix(np.column_stack([x, y, z])))


@dataclass
class PerceptionConfig:
    alpha: float = DEFAULT_ALPHA
    erosion_iterations: int = DEFAULT_EROSION_ITERATIONS
    sample_limit: int = DEFAULT_SAMPLE_LIMIT
    sensor_rate: float = DEFAULT_SENSOR_RATE

    @property
    def window_size(self) -> int:
        return max(1, round(STABILITY_WINDOW_SECONDS * self.sensor_rate))


class PerceptionPipeline:
    """Holds the filter and stability state between frames (single owner)."""

    def __init__(self, config: PerceptionConfig | None = None):
        self.config = config or PerceptionConfig()
        self.detections: dict[str, MechanismDetection] = {}

    def detection_list(self) -> list[MechanismDetection]:
        return list(self.detections.values())

    def process_frame(self, frame: SensorFrame, rng: np.random.Generator) -> list[FrameRecord]:
        cfg = self.config
        regions: list[PlanarRegion] | None = None  # extracted once, on demand
        records: list[FrameRecord] = []
        seen = set(frame.masks)
        for mech_type in set(self.detections) | seen:
            detection = self.detections.setdefault(
                mech_type, MechanismDetection(mech_type, cfg.window_size))
            raw = None
            region = None
            mask = frame.masks.get(mech_type)
            if mask is not None:
                eroded = erode_mask(mask, cfg.erosion_iterations)
                raw = mask_centroid(eroded, frame.depth, frame.intrinsics,
                                    frame.camera_pose, cfg.sample_limit)
            if raw is not None:
                detection.filtered_centroid = alpha_filter(detection.filtered_centroid,
                                                           raw, cfg.alpha)
                detection.raw_centroid = raw
                if regions is None:
                    regions = extract_planes(frame.depth, frame.intrinsics,
                                             frame.camera_pose, rng)
                region = associate_mechanism_plane(detection.filtered_centroid, regions)
                if region is not None:
                    detection.plane_normal = region.normal
                    detection.orientation = orientation_from_normal(
                        region.normal, frame.camera_pose.position, detection.filtered_centroid)
            update_stability(detection, raw is not None and region is not None)
            records.append(FrameRecord(frame.timestamp, mech_type, raw,
                                       detection.filtered_centroid,
                                       detection.plane_normal, detection.stable))
        return records

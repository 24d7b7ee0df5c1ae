"""Camera-control motion prompts.

A metric depth map is unprojected to a point cloud in the reference camera
frame (which doubles as the world frame), swept along a path of rigid
world-to-camera poses, and reprojected with z-buffered occlusion flags.
Camera convention: x right, y down, z forward; world up is -y.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from mptk.mouse import MouseRecording
from mptk.rotation import is_rotation_matrix, rotation_about_axis
from mptk.tracks import TrackSet, quantize_half_up

__all__ = [
    "Intrinsics",
    "PinholeCamera",
    "DepthScene",
    "PointCloud",
    "CameraPath",
    "ZBufferParams",
    "unproject",
    "make_orbit_path",
    "make_arc_path",
    "mouse_to_camera_path",
    "project_tracks",
    "default_zbuffer_params",
]

WORLD_UP = np.array([0.0, -1.0, 0.0])


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


def _identity_pose() -> tuple[np.ndarray, np.ndarray]:
    return np.eye(3), np.zeros(3)


@dataclass(frozen=True)
class PinholeCamera:
    """Intrinsics plus a rigid world-to-camera pose."""

    intrinsics: Intrinsics
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        rot = np.array(self.rotation, dtype=np.float64)
        trans = np.array(self.translation, dtype=np.float64)
        if not is_rotation_matrix(rot):
            raise ValueError("rotation must be orthonormal with determinant +1")
        if trans.shape != (3,) or not np.isfinite(trans).all():
            raise ValueError("translation must be a finite 3-vector")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class DepthScene:
    """Per-pixel metric depth with the intrinsics that produced it."""

    depth: np.ndarray
    intrinsics: Intrinsics

    def __post_init__(self) -> None:
        depth = np.array(self.depth, dtype=np.float32)
        if depth.ndim != 2:
            raise ValueError(f"depth must be a 2-d map, got shape {depth.shape}")
        if not np.isfinite(depth).all() or (depth <= 0).any():
            raise ValueError("depths must be positive and finite")
        depth.setflags(write=False)
        object.__setattr__(self, "depth", depth)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class PointCloud:
    """3D points in the reference camera frame with source-pixel provenance."""

    points: np.ndarray
    source_pixels: np.ndarray
    intrinsics: Intrinsics

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        pixels = np.array(self.source_pixels, dtype=np.int64).reshape(-1, 2)
        if pixels.shape[0] != points.shape[0]:
            raise ValueError("one source pixel per point required")
        if not np.isfinite(points).all():
            raise ValueError("point coordinates must be finite")
        points.setflags(write=False)
        pixels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "source_pixels", pixels)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class CameraPath:
    """Sequence of rigid world-to-camera poses, one per frame."""

    rotations: np.ndarray
    translations: np.ndarray

    def __post_init__(self) -> None:
        rot = np.array(self.rotations, dtype=np.float64)
        trans = np.array(self.translations, dtype=np.float64)
        if rot.ndim != 3 or rot.shape[1:] != (3, 3) or trans.shape != (rot.shape[0], 3):
            raise ValueError("need (T, 3, 3) rotations and (T, 3) translations")
        for i, mat in enumerate(rot):
            if not is_rotation_matrix(mat):
                raise ValueError(f"pose {i}: rotation is not orthonormal with det +1")
        if not np.isfinite(trans).all():
            raise ValueError("translations must be finite")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "translations", trans)

    @property
    def n_frames(self) -> int:
        return self.rotations.shape[0]


@dataclass(frozen=True)
class ZBufferParams:
    """Occlusion test controls: cell radius of the square neighborhood and the
    depth slack under which a farther point still counts as visible."""

    neighborhood_radius: int = 1
    depth_slack: float = 0.05

    def __post_init__(self) -> None:
        if self.neighborhood_radius <= 0:
            raise ValueError("neighborhood_radius must be positive")
        if self.depth_slack <= 0:
            raise ValueError("depth_slack must be positive")


def default_zbuffer_params(cloud: PointCloud) -> ZBufferParams:
    """Pinned defaults: radius 1 px, slack 2% of the cloud's median depth."""
    median = float(np.median(cloud.points[:, 2]))
    return ZBufferParams(neighborhood_radius=1, depth_slack=0.02 * median)


def unproject(scene: DepthScene, sample_stride: int = 1) -> PointCloud:
    """Lift depth pixels to 3D points in the reference camera frame.

    Pixel (u, v) with depth d maps to ((u-cx)d/fx, (v-cy)d/fy, d). A stride
    larger than 1 samples every stride-th pixel in both axes. Non-positive
    depths are skipped with a warning.
    """
    if sample_stride < 1:
        raise ValueError("sample_stride must be at least 1")
    intr = scene.intrinsics
    us = np.arange(0, scene.width, sample_stride)
    vs = np.arange(0, scene.height, sample_stride)
    uu, vv = np.meshgrid(us, vs, indexing="xy")
    uu = uu.ravel()
    vv = vv.ravel()
    depth = scene.depth[vv, uu].astype(np.float64)
    valid = depth > 0
    skipped = int((~valid).sum())
    if skipped:
        warnings.warn(f"skipped {skipped} pixels with non-positive depth")
        uu, vv, depth = uu[valid], vv[valid], depth[valid]
    x = (uu - intr.cx) * depth / intr.fx
    y = (vv - intr.cy) * depth / intr.fy
    points = np.stack([x, y, depth], axis=-1)
    pixels = np.stack([uu, vv], axis=-1)
    return PointCloud(points, pixels, intr)


def _rigid_path_about_axis(
    pivot: np.ndarray,
    axis: np.ndarray,
    total_angle: float,
    n_frames: int,
    reference: PinholeCamera | None,
) -> CameraPath:
    """Sweep the reference pose rigidly about an axis through pivot.

    Pose 0 is exactly the reference pose; a full turn returns to it. The
    camera keeps its orientation relative to the pivot, so a camera aimed at
    the pivot stays aimed at it (look-at behavior without re-derivation).
    """
    if n_frames < 1:
        raise ValueError("n_frames must be at least 1")
    pivot = np.asarray(pivot, dtype=np.float64)
    if reference is None:
        ref_rot, ref_trans = _identity_pose()
    else:
        ref_rot, ref_trans = reference.rotation, reference.translation
    center = -ref_rot.T @ ref_trans

    offset = center - pivot
    radial = offset - axis * np.dot(offset, axis)
    if np.linalg.norm(radial) < 1e-12:
        raise ValueError("degenerate path: camera center lies on the sweep axis")

    rotations = np.empty((n_frames, 3, 3))
    translations = np.empty((n_frames, 3))
    for t in range(n_frames):
        theta = total_angle * (t / (n_frames - 1)) if n_frames > 1 else 0.0
        sweep = rotation_about_axis(axis, theta)
        new_center = pivot + sweep @ offset
        new_rot = ref_rot @ sweep.T
        rotations[t] = new_rot
        translations[t] = -new_rot @ new_center
    return CameraPath(rotations, translations)


def make_orbit_path(
    pivot: np.ndarray,
    total_angle: float,
    n_frames: int,
    reference: PinholeCamera | None = None,
) -> CameraPath:
    """Circle the camera about the vertical axis through pivot.

    total_angle is in radians; positive angles move the camera screen-right.
    Pose 0 equals the reference pose (identity by default) and a 2*pi sweep
    closes the loop.
    """
    return _rigid_path_about_axis(pivot, WORLD_UP, total_angle, n_frames, reference)


def make_arc_path(
    pivot: np.ndarray,
    total_angle: float,
    n_frames: int,
    reference: PinholeCamera | None = None,
) -> CameraPath:
    """Sweep the camera vertically about the horizontal axis through pivot.

    Positive total_angle (radians) arcs the camera upward while it keeps
    facing the pivot. Pose 0 equals the reference pose.
    """
    return _rigid_path_about_axis(
        pivot, np.array([1.0, 0.0, 0.0]), -total_angle, n_frames, reference
    )


def mouse_to_camera_path(
    rec: MouseRecording, scene: DepthScene, anchor_pixel: tuple[int, int]
) -> CameraPath:
    """Translate the camera so the anchor's 3D point stays under the cursor.

    The camera keeps the reference orientation and its center stays in the
    z = 0 vertical plane; per frame the center is
    (X - (u_t - cx) Z / fx, Y - (v_t - cy) Z / fy, 0) where (X, Y, Z) is the
    anchor's 3D point. Holding the cursor at the anchor's own projection gives
    the identity path.
    """
    u0, v0 = anchor_pixel
    if not (0 <= u0 < scene.width and 0 <= v0 < scene.height):
        raise ValueError(f"anchor pixel {anchor_pixel} outside the depth map")
    depth = float(scene.depth[v0, u0])
    if not np.isfinite(depth) or depth <= 0:
        raise ValueError(f"anchor pixel {anchor_pixel} has invalid depth {depth}")
    intr = scene.intrinsics
    x = (u0 - intr.cx) * depth / intr.fx
    y = (v0 - intr.cy) * depth / intr.fy

    t_dim = rec.n_samples
    rotations = np.tile(np.eye(3), (t_dim, 1, 1))
    translations = np.empty((t_dim, 3))
    for t in range(t_dim):
        center = np.array(
            [
                x - (rec.xs[t] - intr.cx) * depth / intr.fx,
                y - (rec.ys[t] - intr.cy) * depth / intr.fy,
                0.0,
            ]
        )
        translations[t] = -center
    return CameraPath(rotations, translations)


def project_tracks(
    cloud: PointCloud,
    path: CameraPath,
    zb: ZBufferParams,
    dims: tuple[int, int, int],
) -> TrackSet:
    """Reproject the cloud through every pose with z-buffered visibility.

    dims is (T, W, H). A point is visible at a frame when it is in front of
    the camera, lands inside the frame, and no point within the square
    neighborhood (side 2*radius+1 on the quantized pixel grid) is more than
    depth_slack nearer. Occluded and behind-camera points keep positions so
    disocclusions stay representable; behind-camera points hold their last
    projectable position.
    """
    t_dim, width, height = dims
    if path.n_frames != t_dim:
        raise ValueError(f"path has {path.n_frames} poses but {t_dim} frames requested")
    intr = cloud.intrinsics
    n = cloud.n_points
    positions = np.empty((n, t_dim, 2))
    visibility = np.zeros((n, t_dim), dtype=np.uint8)
    prev = cloud.source_pixels.astype(np.float64)

    for t in range(t_dim):
        cam = cloud.points @ path.rotations[t].T + path.translations[t]
        z = cam[:, 2]
        in_front = z > 1e-9
        u = np.where(in_front, intr.fx * cam[:, 0] / np.where(in_front, z, 1.0) + intr.cx, prev[:, 0])
        v = np.where(in_front, intr.fy * cam[:, 1] / np.where(in_front, z, 1.0) + intr.cy, prev[:, 1])
        positions[:, t, 0] = u
        positions[:, t, 1] = v
        prev = positions[:, t].copy()

        if in_front.any():
            visible = _zbuffer_visible(
                u[in_front], v[in_front], z[in_front], zb
            )
            in_frame = (
                (u[in_front] >= 0)
                & (u[in_front] < width)
                & (v[in_front] >= 0)
                & (v[in_front] < height)
            )
            flags = np.zeros(n, dtype=np.uint8)
            flags[np.nonzero(in_front)[0]] = (visible & in_frame).astype(np.uint8)
            visibility[:, t] = flags
    return TrackSet(positions, visibility, width, height)


def _zbuffer_visible(
    u: np.ndarray, v: np.ndarray, z: np.ndarray, zb: ZBufferParams
) -> np.ndarray:
    """Visibility of in-front points: keep a point when nothing within the
    square cell neighborhood is more than depth_slack nearer."""
    radius = zb.neighborhood_radius
    # Quantized cells; clamp wild projections so the integer key stays sane.
    cx = np.clip(quantize_half_up(u), -(2**30), 2**30)
    cy = np.clip(quantize_half_up(v), -(2**30), 2**30)
    xmin = cx.min()
    ymin = cy.min()
    span = int(cx.max() - xmin) + 2 * radius + 2
    key = (cy - ymin) * span + (cx - xmin)

    order = np.argsort(key, kind="stable")
    sorted_key = key[order]
    uniq, starts = np.unique(sorted_key, return_index=True)
    cell_min = np.minimum.reduceat(z[order], starts)

    nearest = np.full(z.shape, np.inf)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            query = key + dy * span + dx
            pos = np.searchsorted(uniq, query)
            pos = np.clip(pos, 0, uniq.size - 1)
            hit = uniq[pos] == query
            candidate = np.where(hit, cell_min[pos], np.inf)
            nearest = np.minimum(nearest, candidate)
    return z <= nearest + zb.depth_slack

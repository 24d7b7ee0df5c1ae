"""Object-control tracks from a mouse-spun sphere primitive.

Points sampled on a sphere are rotated so the surface point under the initial
mouse press follows the cursor, then orthographically projected to 2D tracks.
Screen convention: x right, y down, z toward the viewer; the visible
hemisphere is z >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mptk.rotation import AmbiguousRotationError, rotation_between
from mptk.mouse import MouseRecording
from mptk.tracks import TrackSet

__all__ = ["SphereSpec", "mouse_to_rotations", "sphere_tracks", "AmbiguousRotationError"]


@dataclass(frozen=True)
class SphereSpec:
    """User-placed sphere: screen-space center and radius in pixels."""

    center: tuple[float, float]
    radius: float
    n_points: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.n_points < 1:
            raise ValueError("n_points must be at least 1")


def _lift_to_surface(x: float, y: float, sphere: SphereSpec) -> np.ndarray:
    """Lift a cursor position onto the front hemisphere, clamping positions
    outside the projected disc to its boundary."""
    dx = x - sphere.center[0]
    dy = y - sphere.center[1]
    dist = np.hypot(dx, dy)
    if dist > sphere.radius:
        scale = sphere.radius / dist
        dx *= scale
        dy *= scale
    dz = np.sqrt(max(sphere.radius**2 - dx**2 - dy**2, 0.0))
    return np.array([dx, dy, dz])


def mouse_to_rotations(rec: MouseRecording, sphere: SphereSpec) -> np.ndarray:
    """Per-frame rotations that carry the initially pressed surface point to
    the current cursor's surface point.

    Each frame gets the single rotation with axis initial x current and angle
    equal to the angle between the two directions. Frames before the first
    press are identity; frames after a release hold the last pressed rotation.
    Returns a (T, 3, 3) array.
    """
    t_dim = rec.n_samples
    rotations = np.tile(np.eye(3), (t_dim, 1, 1))
    pressed_idx = np.nonzero(rec.pressed)[0]
    if pressed_idx.size == 0:
        return rotations

    first = int(pressed_idx[0])
    dx = rec.xs[first] - sphere.center[0]
    dy = rec.ys[first] - sphere.center[1]
    if np.hypot(dx, dy) > sphere.radius * (1 + 1e-9):
        raise ValueError(
            "initial pressed sample must lie within the sphere's projected disc"
        )
    initial = _lift_to_surface(rec.xs[first], rec.ys[first], sphere)

    current = np.eye(3)
    for t in range(first, t_dim):
        if rec.pressed[t]:
            target = _lift_to_surface(rec.xs[t], rec.ys[t], sphere)
            current = rotation_between(initial, target)
        rotations[t] = current
    return rotations


def sample_sphere_points(sphere: SphereSpec) -> np.ndarray:
    """Seeded area-uniform surface samples: uniform z, uniform azimuth."""
    rng = np.random.default_rng(sphere.seed)
    z = rng.uniform(-sphere.radius, sphere.radius, size=sphere.n_points)
    azimuth = rng.uniform(0.0, 2.0 * np.pi, size=sphere.n_points)
    rho = np.sqrt(np.maximum(sphere.radius**2 - z**2, 0.0))
    return np.stack([rho * np.cos(azimuth), rho * np.sin(azimuth), z], axis=-1)


def sphere_tracks(
    rotations: np.ndarray, sphere: SphereSpec, dims: tuple[int, int, int]
) -> TrackSet:
    """Rotate sampled surface points per frame and project orthographically.

    dims is (T, W, H). Projection drops z about the sphere center; points on
    the back hemisphere (z < 0) are emitted with visibility 0 so a later
    rotation can re-reveal them.
    """
    t_dim, width, height = dims
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.shape != (t_dim, 3, 3):
        raise ValueError(
            f"need {t_dim} rotation matrices, got shape {rotations.shape}"
        )
    points = sample_sphere_points(sphere)
    # (T, n, 3): rotate every sample by every frame's rotation
    rotated = np.einsum("tij,nj->tni", rotations, points)
    xs = sphere.center[0] + rotated[:, :, 0]
    ys = sphere.center[1] + rotated[:, :, 1]
    positions = np.stack([xs, ys], axis=-1).transpose(1, 0, 2)
    visibility = (rotated[:, :, 2] >= 0).T.astype(np.uint8)
    return TrackSet(positions, visibility, width, height)

"""Synthetic textured scenes with analytic ground-truth tracks.

Used by the benchmark runner and the acceptance suite: each scene is a smooth
noise texture plus a parametric motion field (translation, rotation, zoom,
shear, swirl) sampled on a dense inset grid. The scene's ground-truth video is
the reference warp of the dense tracks, so a faithful generator can be
measured against it at any conditioning density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from mptk.formats import VideoFrames
from mptk.tracks import TrackSet
from mptk.warp import render_warp

__all__ = ["SceneItem", "SCENE_KINDS", "make_scene", "make_benchmark_dataset"]

SCENE_KINDS = ("translate", "rotate", "zoom", "swirl", "wave")


@dataclass(frozen=True)
class SceneItem:
    first_frame: np.ndarray
    gt_video: VideoFrames
    gt_tracks: TrackSet
    caption: str


def _texture(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    channels = []
    for _ in range(3):
        noise = gaussian_filter(rng.normal(size=(height, width)), 1.2)
        noise -= noise.min()
        noise /= max(noise.max(), 1e-9)
        channels.append(noise * 255.0)
    return np.rint(np.stack(channels, axis=-1)).astype(np.uint8)


def _grid(width: int, height: int, margin: float, spacing: float) -> np.ndarray:
    xs = np.arange(margin, width - margin + 1e-9, spacing)
    ys = np.arange(margin, height - margin + 1e-9, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def _displacement(kind: str, points: np.ndarray, progress: float, width: int, height: int):
    """Analytic displacement of each point at a motion progress in [0, 1]."""
    center = np.array([(width - 1) / 2.0, (height - 1) / 2.0])
    rel = points - center
    if kind == "translate":
        return np.broadcast_to(progress * np.array([9.0, 4.0]), points.shape)
    if kind == "rotate":
        angle = progress * 0.16
        cos, sin = np.cos(angle), np.sin(angle)
        rotated = np.stack(
            [cos * rel[:, 0] - sin * rel[:, 1], sin * rel[:, 0] + cos * rel[:, 1]],
            axis=-1,
        )
        return rotated - rel
    if kind == "zoom":
        return progress * 0.14 * rel
    if kind == "swirl":
        r2 = (rel**2).sum(axis=1)
        sigma = 0.20 * min(width, height)
        angle = progress * 0.70 * np.exp(-r2 / (2 * sigma**2))
        cos, sin = np.cos(angle), np.sin(angle)
        rotated = np.stack(
            [cos * rel[:, 0] - sin * rel[:, 1], sin * rel[:, 0] + cos * rel[:, 1]],
            axis=-1,
        )
        return rotated - rel
    if kind == "wave":
        # curved field: needs dense anchors to reconstruct at patch scale
        wavelength = 44.0
        wave = np.empty_like(points)
        wave[:, 0] = np.sin(2 * np.pi * points[:, 1] / wavelength)
        wave[:, 1] = np.cos(2 * np.pi * points[:, 0] / wavelength)
        return progress * 2.5 * wave
    raise ValueError(f"unknown scene kind {kind!r}")


def make_scene(
    kind: str,
    dims: tuple[int, int, int],
    seed: int,
    margin: float = 12.0,
    spacing: float = 1.5,
) -> SceneItem:
    """Build one scene: texture, dense analytic tracks, and its warp video."""
    t_dim, width, height = dims
    rng = np.random.default_rng(seed)
    frame = _texture(rng, width, height)
    start = _grid(width, height, margin, spacing)
    positions = np.empty((start.shape[0], t_dim, 2))
    for t in range(t_dim):
        progress = t / (t_dim - 1) if t_dim > 1 else 0.0
        positions[:, t] = start + _displacement(kind, start, progress, width, height)
    tracks = TrackSet(
        positions, np.ones((start.shape[0], t_dim), dtype=np.uint8), width, height
    )
    video = render_warp(frame, tracks, dims)
    return SceneItem(frame, video, tracks, caption=kind)


def make_benchmark_dataset(
    dims: tuple[int, int, int], seed: int, kinds: tuple[str, ...] = SCENE_KINDS
) -> list[SceneItem]:
    return [make_scene(kind, dims, seed + i) for i, kind in enumerate(kinds)]

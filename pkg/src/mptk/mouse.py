"""Expand recorded mouse drags into grid-of-track motion prompts.

While the mouse is dragged, a square grid of tracks centered on the cursor
moves rigidly with it. Each separate press interval spawns its own grid, so
drags in different places at different times stay independent. Static pin
grids hold a background region in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mptk.tracks import TrackSet, concat_tracks

__all__ = [
    "MouseRecording",
    "GridSpec",
    "Rect",
    "expand_drag_to_grid",
    "add_static_pins",
    "press_intervals",
]


@dataclass(frozen=True)
class MouseRecording:
    """Timed cursor samples, one per output frame, with a pressed flag each."""

    xs: np.ndarray
    ys: np.ndarray
    pressed: np.ndarray
    fps: float = 16.0

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=np.float64)
        ys = np.array(self.ys, dtype=np.float64)
        pressed = np.array(self.pressed, dtype=bool)
        if not (xs.shape == ys.shape == pressed.shape) or xs.ndim != 1:
            raise ValueError("xs, ys, pressed must be 1-d arrays of equal length")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise ValueError("cursor samples must be finite")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        for arr in (xs, ys, pressed):
            arr.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "pressed", pressed)

    @property
    def n_samples(self) -> int:
        return self.xs.shape[0]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, half-open in both axes."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def is_empty(self) -> bool:
        return self.width <= 0 or self.height <= 0

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x >= self.x0) & (x < self.x1) & (y >= self.y0) & (y < self.y1)


@dataclass(frozen=True)
class GridSpec:
    """Square drag grid: points per side, spacing, and persistence.

    persist keeps the grid visible (frozen at the drag endpoints) before and
    after the drag instead of hiding it. static_pins optionally bundles a
    background pin grid applied after expansion.
    """

    grid_side: int
    stride: float
    persist: bool = False
    static_pins: tuple["GridSpec", Rect] | None = None

    def __post_init__(self) -> None:
        if self.grid_side < 1:
            raise ValueError("grid_side must be at least 1")
        if self.stride < 1:
            raise ValueError("stride must be at least 1 pixel")


def press_intervals(pressed: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end] index runs where pressed is True (inclusive)."""
    pressed = np.asarray(pressed, dtype=bool)
    if not pressed.any():
        return []
    padded = np.concatenate([[False], pressed, [False]]).astype(np.int8)
    edges = np.diff(padded)
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0] - 1
    return list(zip(starts.tolist(), ends.tolist()))


def _grid_offsets(spec: GridSpec) -> np.ndarray:
    """(grid_side^2, 2) offsets centered on the cursor."""
    line = (np.arange(spec.grid_side, dtype=np.float64) - (spec.grid_side - 1) / 2.0)
    line = line * spec.stride
    ox, oy = np.meshgrid(line, line, indexing="xy")
    return np.stack([ox.ravel(), oy.ravel()], axis=-1)


def expand_drag_to_grid(
    rec: MouseRecording, spec: GridSpec, dims: tuple[int, int, int]
) -> TrackSet:
    """Turn a mouse recording into drag-grid tracks.

    dims is (T, W, H). Every press interval spawns grid_side^2 tracks that ride
    rigidly on the cursor while pressed. Without persist they are invisible
    outside the press interval (held at the nearest drag position); with
    persist they stay visible, frozen at the drag's first position before it
    and at its last position after it. Grid points that leave the frame are
    kept but marked invisible.
    """
    t_dim, width, height = dims
    if rec.n_samples != t_dim:
        raise ValueError(
            f"recording has {rec.n_samples} samples but {t_dim} frames requested"
        )
    offsets = _grid_offsets(spec)
    intervals = press_intervals(rec.pressed)

    all_pos = []
    all_vis = []
    frames = np.arange(t_dim)
    for start, end in intervals:
        anchor = np.clip(frames, start, end)
        cursor = np.stack([rec.xs[anchor], rec.ys[anchor]], axis=-1)
        pos = cursor[None, :, :] + offsets[:, None, :]
        in_window = (frames >= start) & (frames <= end)
        vis = in_window[None, :] | spec.persist
        in_bounds = (
            (pos[:, :, 0] >= 0)
            & (pos[:, :, 0] < width)
            & (pos[:, :, 1] >= 0)
            & (pos[:, :, 1] < height)
        )
        all_pos.append(pos)
        all_vis.append(vis & in_bounds)

    if all_pos:
        positions = np.concatenate(all_pos, axis=0)
        visibility = np.concatenate(all_vis, axis=0).astype(np.uint8)
    else:
        positions = np.zeros((0, t_dim, 2))
        visibility = np.zeros((0, t_dim), dtype=np.uint8)
    tracks = TrackSet(positions, visibility, width, height)

    if spec.static_pins is not None:
        pin_spec, region = spec.static_pins
        tracks = add_static_pins(tracks, region, pin_spec)
    return tracks


def add_static_pins(tracks: TrackSet, region: Rect, pin_grid: GridSpec) -> TrackSet:
    """Append constant always-visible tracks on a grid covering region.

    The grid is anchored at the region's corner with pin_grid.stride spacing,
    ceil(width / stride) by ceil(height / stride) points. Existing tracks are
    untouched.
    """
    if region.is_empty():
        raise ValueError(f"pin region is empty: {region}")
    nx = math.ceil(region.width / pin_grid.stride)
    ny = math.ceil(region.height / pin_grid.stride)
    px = region.x0 + np.arange(nx, dtype=np.float64) * pin_grid.stride
    py = region.y0 + np.arange(ny, dtype=np.float64) * pin_grid.stride
    gx, gy = np.meshgrid(px, py, indexing="xy")
    points = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    positions = np.repeat(points[:, None, :], tracks.n_frames, axis=1)
    visibility = np.ones((points.shape[0], tracks.n_frames), dtype=np.uint8)
    pins = TrackSet(positions, visibility, tracks.width, tracks.height)
    return concat_tracks(tracks, pins)

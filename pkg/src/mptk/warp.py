"""Reference video synthesizer: forward-warp a first frame along tracks.

Stands in for a learned video generator so pipelines and metrics can run end
to end. Visible track displacements are interpolated to a dense per-frame
field (inverse-distance weighting over the nearest anchors), then source
pixels are forward-splatted with bilinear weights; uncovered pixels are filled
from the nearest covered pixel. Everything is deterministic.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import distance_transform_edt
from scipy.spatial import cKDTree

from mptk.formats import VideoFrames
from mptk.tracks import TrackSet, to_displacements

__all__ = ["interpolate_field", "render_warp"]

_IDW_NEIGHBORS = 16
_IDW_EPS = 1e-12


def interpolate_field(tracks: TrackSet, dims: tuple[int, int]) -> np.ndarray:
    """Dense per-frame displacement fields from sparse track displacements.

    dims is (W, H); returns (T, H, W, 2) float64. Each frame interpolates the
    displacements of tracks visible at that frame, anchored at their frame-0
    positions, with inverse-square-distance weights over the nearest anchors.
    The field is exact at anchor pixels. Frames with no visible track get a
    zero field.
    """
    width, height = dims
    t_dim = tracks.n_frames
    fields = np.zeros((t_dim, height, width, 2))
    if tracks.n_tracks == 0:
        return fields

    disp = to_displacements(tracks)
    anchors = tracks.positions[:, 0].astype(np.float64)
    xs, ys = np.meshgrid(np.arange(width), np.arange(height), indexing="xy")
    pixels = np.stack([xs.ravel(), ys.ravel()], axis=-1).astype(np.float64)

    for t in range(t_dim):
        vis = np.nonzero(tracks.visibility[:, t])[0]
        if vis.size == 0:
            continue
        if vis.size == 1:
            fields[t] = disp[vis[0], t]
            continue
        tree = cKDTree(anchors[vis])
        k = min(_IDW_NEIGHBORS, vis.size)
        dist, idx = tree.query(pixels, k=k)
        weights = 1.0 / (dist**2 + _IDW_EPS)
        values = disp[vis, t][idx]
        field = (weights[:, :, None] * values).sum(axis=1) / weights.sum(axis=1)[:, None]
        fields[t] = field.reshape(height, width, 2)
    return fields


def render_warp(
    first_frame: np.ndarray, tracks: TrackSet, dims: tuple[int, int, int], fps: float = 16.0
) -> VideoFrames:
    """Forward-warp first_frame along the tracks' dense displacement field.

    dims is (T, W, H). Frame 0 is the input unchanged; each later frame splats
    every source pixel to its displaced position with bilinear weight
    accumulation and weight normalization, then fills holes from the nearest
    covered pixel.
    """
    t_dim, width, height = dims
    first_frame = np.asarray(first_frame)
    if first_frame.shape != (height, width, 3) or first_frame.dtype != np.uint8:
        raise ValueError(
            f"first frame must be ({height}, {width}, 3) uint8, got "
            f"{first_frame.shape} {first_frame.dtype}"
        )
    if tracks.n_frames != t_dim:
        raise ValueError(f"tracks have {tracks.n_frames} frames, dims ask for {t_dim}")

    fields = interpolate_field(tracks, (width, height))
    source = first_frame.astype(np.float64)
    xs, ys = np.meshgrid(np.arange(width), np.arange(height), indexing="xy")

    frames = np.empty((t_dim, height, width, 3), dtype=np.uint8)
    frames[0] = first_frame
    for t in range(1, t_dim):
        dest_x = (xs + fields[t, :, :, 0]).ravel()
        dest_y = (ys + fields[t, :, :, 1]).ravel()
        frames[t] = _splat(source, dest_x, dest_y, width, height)
    return VideoFrames(frames, fps=fps)


def _splat(
    source: np.ndarray, dest_x: np.ndarray, dest_y: np.ndarray, width: int, height: int
) -> np.ndarray:
    """Bilinear forward splat of all source pixels, normalized by accumulated
    weight, with nearest-covered-pixel hole fill."""
    colors = source.reshape(-1, 3)
    x0 = np.floor(dest_x).astype(np.int64)
    y0 = np.floor(dest_y).astype(np.int64)
    fx = dest_x - x0
    fy = dest_y - y0

    acc = np.zeros((height, width, 3))
    weight = np.zeros((height, width))
    for dx, dy, w in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        cx = x0 + dx
        cy = y0 + dy
        ok = (cx >= 0) & (cx < width) & (cy >= 0) & (cy < height) & (w > 0)
        np.add.at(acc, (cy[ok], cx[ok]), w[ok, None] * colors[ok])
        np.add.at(weight, (cy[ok], cx[ok]), w[ok])

    covered = weight > 1e-8
    out = np.zeros((height, width, 3))
    out[covered] = acc[covered] / weight[covered, None]
    if not covered.all():
        if not covered.any():
            out[:] = source
        else:
            _, (iy, ix) = distance_transform_edt(~covered, return_indices=True)
            out[~covered] = out[iy[~covered], ix[~covered]]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)

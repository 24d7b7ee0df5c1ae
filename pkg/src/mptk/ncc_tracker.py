"""Patch tracker using zero-mean normalized cross-correlation on luma.

Desk-scale stand-in for a learned point tracker: each query's frame-0 patch is
matched in a search window around its previous position, frame by frame. The
best match position is appended with a confidence flag; matches below the NCC
threshold (or with untextured, degenerate patches) are marked invisible.
Everything is deterministic.
"""

from __future__ import annotations

import warnings

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from mptk.formats import VideoFrames
from mptk.tracks import TrackSet

__all__ = ["track_ncc"]

_CHUNK = 128
_DEGENERATE = 1e-8


def _luma(frames: np.ndarray) -> np.ndarray:
    return (
        0.299 * frames[..., 0] + 0.587 * frames[..., 1] + 0.114 * frames[..., 2]
    ).astype(np.float64)


def track_ncc(
    video: VideoFrames,
    queries: np.ndarray,
    patch: int = 11,
    search: int = 8,
    threshold: float = 0.5,
    subpixel: bool = True,
) -> TrackSet:
    """Track frame-0 query points through the video.

    queries is (n, 2) pixel positions on frame 0. Queries too close to the
    border are clamped inward (with a warning) so the patch and search window
    fit. Returns a TrackSet whose frame-0 positions are the (clamped) queries.
    """
    if patch % 2 != 1 or patch < 3:
        raise ValueError("patch must be an odd size of at least 3")
    if search < 1:
        raise ValueError("search radius must be at least 1 pixel")
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 2)
    n = queries.shape[0]
    height, width = video.height, video.width
    half = patch // 2
    margin = half + search
    if width <= 2 * margin or height <= 2 * margin:
        raise ValueError(
            f"video {width}x{height} too small for patch {patch} + search {search}"
        )

    lo = np.array([half, half], dtype=np.float64)
    hi = np.array([width - 1 - half, height - 1 - half], dtype=np.float64)
    clamped = np.clip(queries, lo, hi)
    n_clamped = int((clamped != queries).any(axis=1).sum())
    if n_clamped:
        warnings.warn(f"clamped {n_clamped} queries to keep the patch inside the frame")

    luma = _luma(video.frames)
    t_dim = video.n_frames
    positions = np.empty((n, t_dim, 2))
    visibility = np.zeros((n, t_dim), dtype=np.uint8)
    positions[:, 0] = clamped
    visibility[:, 0] = 1

    # fixed frame-0 templates, zero-meaned once
    ci0 = np.rint(clamped).astype(np.int64)
    rows0 = ci0[:, 1, None] + np.arange(-half, half + 1)
    cols0 = ci0[:, 0, None] + np.arange(-half, half + 1)
    templates = luma[0][rows0[:, :, None], cols0[:, None, :]]
    t_mean = templates.mean(axis=(1, 2), keepdims=True)
    tz = templates - t_mean
    t_norm = np.sqrt((tz**2).sum(axis=(1, 2)))
    degenerate = t_norm < _DEGENERATE

    current = clamped.copy()
    for t in range(1, t_dim):
        new_pos = current.copy()
        vis = np.zeros(n, dtype=np.uint8)
        for start in range(0, n, _CHUNK):
            sel = slice(start, min(start + _CHUNK, n))
            pos, ok = _match_chunk(
                luma[t], current[sel], tz[sel], t_norm[sel], degenerate[sel],
                patch, search, threshold, subpixel, width, height,
            )
            new_pos[sel] = pos
            vis[sel] = ok
        positions[:, t] = new_pos
        visibility[:, t] = vis
        current = new_pos
    return TrackSet(positions, visibility, width, height)


def _match_chunk(
    luma, centers, tz, t_norm, degenerate, patch, search, threshold, subpixel,
    width, height,
):
    half = patch // 2
    margin = half + search
    n = centers.shape[0]
    span = 2 * search + 1

    ci = np.rint(centers).astype(np.int64)
    ci[:, 0] = np.clip(ci[:, 0], margin, width - 1 - margin)
    ci[:, 1] = np.clip(ci[:, 1], margin, height - 1 - margin)

    size = patch + 2 * search
    rows = ci[:, 1, None] - margin + np.arange(size)
    cols = ci[:, 0, None] - margin + np.arange(size)
    regions = luma[rows[:, :, None], cols[:, None, :]]
    windows = sliding_window_view(regions, (patch, patch), axis=(1, 2))

    # template is zero-mean, so the correlation numerator is a plain dot product
    cross = np.einsum("nabij,nij->nab", windows, tz)
    w_sum = np.einsum("nabij->nab", windows)
    w_sq = np.einsum("nabij,nabij->nab", windows, windows)
    w_var = w_sq - w_sum**2 / (patch * patch)
    den = np.sqrt(np.maximum(w_var, 0.0)) * t_norm[:, None, None]
    valid = den > _DEGENERATE
    ncc = np.where(valid, cross / np.where(valid, den, 1.0), -2.0)
    ncc[degenerate] = -2.0

    flat = ncc.reshape(n, -1)
    best = flat.argmax(axis=1)
    best_val = flat[np.arange(n), best]
    ay, ax = np.unravel_index(best, (span, span))

    matched = best_val > -2.0
    pos = centers.copy()
    offsets = np.stack([ax - search, ay - search], axis=-1).astype(np.float64)
    if subpixel:
        # a (near-)perfect peak is already exact; refining it only adds bias
        refine = best_val < 1.0 - 1e-9
        offsets[:, 0] += np.where(refine, _parabolic(ncc, ay, ax, axis=1), 0.0)
        offsets[:, 1] += np.where(refine, _parabolic(ncc, ay, ax, axis=0), 0.0)
    pos[matched] = ci[matched] + offsets[matched]
    ok = (matched & (best_val >= threshold)).astype(np.uint8)
    return pos, ok


def _parabolic(ncc, ay, ax, axis):
    """Single-axis parabolic peak refinement, clamped to half a pixel."""
    n, span = ncc.shape[0], ncc.shape[1]
    idx = ax if axis == 1 else ay
    inner = (idx > 0) & (idx < span - 1)
    out = np.zeros(n)
    rows = np.arange(n)
    if axis == 1:
        left = ncc[rows, ay, np.maximum(ax - 1, 0)]
        mid = ncc[rows, ay, ax]
        right = ncc[rows, ay, np.minimum(ax + 1, span - 1)]
    else:
        left = ncc[rows, np.maximum(ay - 1, 0), ax]
        mid = ncc[rows, ay, ax]
        right = ncc[rows, np.minimum(ay + 1, span - 1), ax]
    denom = left - 2.0 * mid + right
    safe = inner & (np.abs(denom) > 1e-12)
    out[safe] = 0.5 * (left[safe] - right[safe]) / denom[safe]
    return np.clip(out, -0.5, 0.5)

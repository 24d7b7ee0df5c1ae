"""Combining prompts: camera/object composition, motion transfer retargeting,
and motion magnification.

Composition converts object tracks to displacements and adds those deltas onto
camera tracks inside a region. The 2D addition is an approximation that holds
for small to moderate camera motion; no 3D consistency correction is
attempted. Magnification smooths displacements with a truncated Gaussian over
time and across tracks before scaling, so the effective gain can fall short of
the requested factor; measure it with effective_gain.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter1d

from mptk.mouse import Rect
from mptk.tracks import TrackSet, subsample_tracks, to_displacements

__all__ = ["compose", "transfer_retarget", "magnify", "effective_gain"]


def compose(camera: TrackSet, object_tracks: TrackSet, region: Rect) -> TrackSet:
    """Add object-track displacements onto camera tracks rooted in region.

    Each camera track whose frame-0 position lies in region picks up the
    displacement of the nearest object track (by frame-0 distance) at every
    frame, and its visibility becomes the AND of both sources. Camera tracks
    outside region pass through unchanged.
    """
    if camera.n_frames != object_tracks.n_frames:
        raise ValueError(
            f"frame counts differ: camera {camera.n_frames}, "
            f"object {object_tracks.n_frames}"
        )
    start = camera.positions[:, 0]
    affected = np.nonzero(region.contains(start[:, 0], start[:, 1]))[0]
    if affected.size == 0:
        return camera
    if object_tracks.n_tracks == 0:
        raise ValueError("no object tracks to define displacements over the region")

    obj_start = object_tracks.positions[:, 0].astype(np.float64)
    deltas = to_displacements(object_tracks)
    positions = camera.positions.astype(np.float64)
    visibility = camera.visibility.copy()
    for i in affected:
        d2 = ((obj_start - positions[i, 0]) ** 2).sum(axis=1)
        nearest = int(np.argmin(d2))
        positions[i] += deltas[nearest]
        visibility[i] &= object_tracks.visibility[nearest]
    return TrackSet(positions, visibility, camera.width, camera.height)


def transfer_retarget(
    source_tracks: TrackSet, target_dims: tuple[int, int], k: int, seed: int
) -> TrackSet:
    """Rescale source-video tracks onto a new frame size and thin them to k.

    Positions scale by (target W / source W, target H / source H), preserving
    normalized coordinates exactly. Fewer tracks tolerate misalignment between
    the source motion and the new first frame; dense sets give more control.
    """
    width, height = target_dims
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be positive")
    sx = width / source_tracks.width
    sy = height / source_tracks.height
    positions = source_tracks.positions.astype(np.float64)
    scaled = np.stack([positions[:, :, 0] * sx, positions[:, :, 1] * sy], axis=-1)
    out = TrackSet(scaled, source_tracks.visibility, width, height)
    if k == out.n_tracks:
        return out
    return subsample_tracks(out, k, seed)


def magnify(
    tracks: TrackSet, alpha: float, sigma_space: float, sigma_time: float
) -> TrackSet:
    """Smooth displacements over time and across tracks, then scale by alpha.

    Output positions are frame-0 positions plus alpha times the smoothed
    displacement; visibility is preserved. Kernels are Gaussians truncated at
    3 sigma and renormalized; spatial weights come from frame-0 proximity and
    are fixed once. Zero sigmas skip smoothing, so alpha=1 is the identity.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if sigma_space < 0 or sigma_time < 0:
        raise ValueError("smoothing sigmas must be non-negative")
    disp = to_displacements(tracks)

    if sigma_time > 0 and tracks.n_frames > 1:
        smoothed = gaussian_filter1d(
            disp, sigma_time, axis=1, mode="constant", cval=0.0, truncate=3.0
        )
        norm = gaussian_filter1d(
            np.ones(tracks.n_frames), sigma_time, mode="constant", cval=0.0, truncate=3.0
        )
        disp = smoothed / norm[None, :, None]

    if sigma_space > 0 and tracks.n_tracks > 1:
        start = tracks.positions[:, 0].astype(np.float64)
        d2 = ((start[:, None] - start[None, :]) ** 2).sum(axis=-1)
        weights = np.exp(-0.5 * d2 / sigma_space**2)
        weights[d2 > (3.0 * sigma_space) ** 2] = 0.0
        weights /= weights.sum(axis=1, keepdims=True)
        disp = np.einsum("ij,jtc->itc", weights, disp)

    positions = tracks.positions[:, :1].astype(np.float64) + alpha * disp
    return TrackSet(positions, tracks.visibility, tracks.width, tracks.height)


def effective_gain(original: TrackSet, magnified: TrackSet) -> float:
    """Achieved magnification: RMS magnified displacement over RMS original.

    Smoothing shrinks displacements, so this is typically below the requested
    alpha. Undefined (raises) for motionless originals.
    """
    d_in = to_displacements(original)
    d_out = to_displacements(magnified)
    rms_in = float(np.sqrt((d_in**2).mean()))
    rms_out = float(np.sqrt((d_out**2).mean()))
    if rms_in == 0:
        raise ValueError("original tracks have no motion to measure gain against")
    return rms_out / rms_in

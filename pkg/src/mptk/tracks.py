"""Point-track containers, per-track embeddings, and the conditioning-volume encoder.

A motion prompt is a set of N point trajectories over T frames, each with a
per-frame visibility flag. Tracks are encoded for the downstream generator by
scattering a unique per-track embedding vector into a T x H x W x C volume at
every visited, visible, quantized location; overlapping tracks sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "TrackSet",
    "EmbeddingTable",
    "ConditioningVolume",
    "assign_embeddings",
    "sinusoidal_embedding",
    "encode_conditioning",
    "subsample_tracks",
    "to_displacements",
    "concat_tracks",
    "quantize_half_up",
]


def quantize_half_up(values: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, ties (x.5) rounding toward +inf."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class TrackSet:
    """N point trajectories over T frames in a width x height pixel frame.

    positions holds (x, y) pixel coordinates indexed [track, frame]; visibility
    is 1 where the point is on-screen and unoccluded, else 0. Positions are
    retained for invisible points (occluded or off-screen) so later prompts can
    re-reveal them; the encoder simply skips them. Visible positions are
    normally inside [0, width) x [0, height), but off-screen-but-tracked points
    are representable and get dropped at encode time rather than rejected here.

    Arrays are normalized to float32/uint8 and frozen; instances are safe to
    share across threads.
    """

    positions: np.ndarray
    visibility: np.ndarray
    width: int
    height: int

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=np.float32)
        vis = np.array(self.visibility, dtype=np.uint8)
        if pos.ndim != 3 or pos.shape[2] != 2:
            raise ValueError(f"positions must have shape (n, t, 2), got {pos.shape}")
        if vis.shape != pos.shape[:2]:
            raise ValueError(
                f"visibility shape {vis.shape} does not match positions {pos.shape[:2]}"
            )
        if pos.shape[1] < 1:
            raise ValueError("a TrackSet needs at least one frame")
        if not np.isfinite(pos).all():
            raise ValueError("positions must be finite")
        if vis.size and not np.isin(vis, (0, 1)).all():
            raise ValueError("visibility values must be exactly 0 or 1")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        pos.setflags(write=False)
        vis.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "visibility", vis)

    @property
    def n_tracks(self) -> int:
        return self.positions.shape[0]

    @property
    def n_frames(self) -> int:
        return self.positions.shape[1]

    def with_positions(self, positions: np.ndarray) -> "TrackSet":
        return TrackSet(positions, self.visibility, self.width, self.height)


@dataclass(frozen=True)
class EmbeddingTable:
    """Injective assignment of track indices to embedding ids in [0, max_index).

    Row n of `vectors` is the sinusoidal encoding of ids[n], C float32
    components in [-1, 1].
    """

    channels: int
    max_index: int
    ids: np.ndarray

    def __post_init__(self) -> None:
        ids = np.array(self.ids, dtype=np.int64)
        if ids.ndim != 1:
            raise ValueError("ids must be a 1-d array")
        if self.channels < 2 or self.channels % 2 != 0:
            raise ValueError("channels must be a positive even count")
        if ids.size and (ids.min() < 0 or ids.max() >= self.max_index):
            raise ValueError("ids must lie in [0, max_index)")
        if np.unique(ids).size != ids.size:
            raise ValueError("ids must be distinct (assignment is injective)")
        ids.setflags(write=False)
        object.__setattr__(self, "ids", ids)

    @property
    def n_tracks(self) -> int:
        return self.ids.shape[0]

    @cached_property
    def vectors(self) -> np.ndarray:
        vecs = sinusoidal_embedding(self.ids, self.channels)
        vecs.setflags(write=False)
        return vecs

    def __getitem__(self, index: slice | np.ndarray | list) -> "EmbeddingTable":
        return EmbeddingTable(self.channels, self.max_index, self.ids[index])


@dataclass(frozen=True)
class ConditioningVolume:
    """Dense T x H x W x C float32 conditioning signal built from a TrackSet.

    A cell is nonzero only where at least one visible, in-bounds track point
    quantizes to it; colliding tracks have their embeddings summed.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.ndim != 4:
            raise ValueError(f"values must have shape (t, h, w, c), got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def channels(self) -> int:
        return self.values.shape[3]


def sinusoidal_embedding(ids: np.ndarray, channels: int) -> np.ndarray:
    """Standard interleaved sin/cos positional encoding of integer ids.

    Channel pair i of id k is sin(k / 10000^(2i/C)) followed by
    cos(k / 10000^(2i/C)).
    """
    if channels < 2 or channels % 2 != 0:
        raise ValueError("channels must be a positive even count")
    ids = np.asarray(ids, dtype=np.float64).reshape(-1, 1)
    pair = np.arange(channels // 2, dtype=np.float64)
    angle = ids / np.power(10000.0, 2.0 * pair / channels)
    out = np.empty((ids.shape[0], channels), dtype=np.float32)
    out[:, 0::2] = np.sin(angle)
    out[:, 1::2] = np.cos(angle)
    return out


def assign_embeddings(
    n_tracks: int, channels: int, max_index: int, seed: int
) -> EmbeddingTable:
    """Draw one embedding id per track, uniformly without replacement.

    Assignment is random regardless of any spatial information and is
    deterministic for a fixed seed.
    """
    if n_tracks > max_index:
        raise ValueError(
            f"cannot assign {n_tracks} distinct ids from a pool of {max_index}"
        )
    if n_tracks < 0:
        raise ValueError("n_tracks must be non-negative")
    rng = np.random.default_rng(seed)
    ids = _sample_without_replacement(rng, max_index, n_tracks)
    return EmbeddingTable(channels=channels, max_index=max_index, ids=ids)


def _sample_without_replacement(
    rng: np.random.Generator, n: int, k: int
) -> np.ndarray:
    """First k entries of a Fisher-Yates shuffle of range(n), in draw order.

    Only the first k swap steps are executed; they fully determine the first k
    entries, so a full reference shuffle with the same seed agrees on
    membership.
    """
    idx = np.arange(n, dtype=np.int64)
    for i in range(min(k, n - 1)):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k].copy()


def encode_conditioning(
    tracks: TrackSet, table: EmbeddingTable, dims: tuple[int, int, int]
) -> ConditioningVolume:
    """Scatter per-track embeddings into a zero-initialized (T, H, W, C) volume.

    dims is (T, H, W), mirroring the volume layout. For each (track, frame)
    with visibility 1, the track's embedding is added at
    [t, round(y), round(x)], coordinates rounded half-up. Visible points that
    quantize outside the volume are dropped, not clamped. Collisions are summed
    in ascending track-index order so the result is deterministic.
    """
    t_dim, height, width = dims
    if tracks.n_frames != t_dim:
        raise ValueError(
            f"track set has {tracks.n_frames} frames but volume wants {t_dim}"
        )
    if table.n_tracks < tracks.n_tracks:
        raise ValueError(
            f"embedding table covers {table.n_tracks} tracks, need {tracks.n_tracks}"
        )
    values = np.zeros((t_dim, height, width, table.channels), dtype=np.float32)
    if tracks.n_tracks == 0:
        return ConditioningVolume(values)

    qx = quantize_half_up(tracks.positions[:, :, 0])
    qy = quantize_half_up(tracks.positions[:, :, 1])
    visible = tracks.visibility.astype(bool)
    in_bounds = (qx >= 0) & (qx < width) & (qy >= 0) & (qy < height)
    vectors = table.vectors
    for n in range(tracks.n_tracks):
        frames = np.nonzero(visible[n] & in_bounds[n])[0]
        if frames.size:
            values[frames, qy[n, frames], qx[n, frames]] += vectors[n]
    return ConditioningVolume(values)


def subsample_tracks(tracks: TrackSet, k: int, seed: int) -> TrackSet:
    """Keep a uniform random subset of k tracks, preserving relative order."""
    n = tracks.n_tracks
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    keep = np.sort(_sample_without_replacement(rng, n, k))
    return TrackSet(
        tracks.positions[keep], tracks.visibility[keep], tracks.width, tracks.height
    )


def to_displacements(tracks: TrackSet) -> np.ndarray:
    """Per-frame displacement of every track from its first-frame position.

    Returns an (n, t, 2) float64 array (wide enough that adding a displacement
    back onto the first-frame position reproduces the stored float32 position
    exactly); column t=0 is exactly zero.
    """
    pos = tracks.positions.astype(np.float64)
    disp = pos - pos[:, :1]
    disp[:, 0] = 0.0
    return disp


def concat_tracks(a: TrackSet, b: TrackSet) -> TrackSet:
    """Append the tracks of b after those of a (same frame count and frame)."""
    if a.n_frames != b.n_frames:
        raise ValueError("cannot concatenate track sets with different frame counts")
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("cannot concatenate track sets with different frames")
    return TrackSet(
        np.concatenate([a.positions, b.positions], axis=0),
        np.concatenate([a.visibility, b.visibility], axis=0),
        a.width,
        a.height,
    )

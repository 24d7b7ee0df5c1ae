"""Bit-exact file formats: binary tracks, PFM depth scenes, camera paths,
PNG frame directories, mouse recordings, and conditioning-volume rasters.

All multi-byte integers are little-endian. Readers validate every format
invariant and raise FormatError naming the offending offset or field.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from mptk.camera import CameraPath, DepthScene, Intrinsics
from mptk.mouse import MouseRecording
from mptk.rotation import is_rotation_matrix
from mptk.tracks import ConditioningVolume, TrackSet

__all__ = [
    "FormatError",
    "VideoFrames",
    "tracks_to_bytes",
    "tracks_from_bytes",
    "write_tracks",
    "read_tracks",
    "write_depth_scene",
    "read_depth_scene",
    "write_camera_path",
    "read_camera_path",
    "write_video_frames",
    "read_video_frames",
    "write_mouse_recording",
    "read_mouse_recording",
    "write_volume",
    "read_volume",
]

TRACK_MAGIC = b"MPTK"
VOLUME_MAGIC = b"MPCV"
TRACK_VERSION = 1
VOLUME_VERSION = 1
_TRACK_HEADER = struct.Struct("<4sIIIII")
_TRACK_RECORD = np.dtype([("x", "<f4"), ("y", "<f4"), ("visible", "u1")])
_VOLUME_HEADER = struct.Struct("<4sIIIIIII")


class FormatError(ValueError):
    """Malformed file content; carries the byte offset or field path."""

    def __init__(self, message: str, *, offset: int | None = None, field: str | None = None):
        parts = [message]
        if offset is not None:
            parts.append(f"at byte offset {offset}")
        if field is not None:
            parts.append(f"in field {field}")
        super().__init__(" ".join(parts))
        self.offset = offset
        self.field = field


@dataclass(frozen=True)
class VideoFrames:
    """In-memory 8-bit RGB video: (T, H, W, 3) uint8 plus frame rate."""

    frames: np.ndarray
    fps: float = 16.0

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
            raise ValueError(
                f"frames must be (t, h, w, 3) uint8, got {frames.shape} {frames.dtype}"
            )
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


# ---------------------------------------------------------------------------
# binary track files


def tracks_to_bytes(tracks: TrackSet) -> bytes:
    header = _TRACK_HEADER.pack(
        TRACK_MAGIC,
        TRACK_VERSION,
        tracks.n_tracks,
        tracks.n_frames,
        tracks.width,
        tracks.height,
    )
    records = np.empty(tracks.n_tracks * tracks.n_frames, dtype=_TRACK_RECORD)
    records["x"] = tracks.positions[:, :, 0].ravel()
    records["y"] = tracks.positions[:, :, 1].ravel()
    records["visible"] = tracks.visibility.ravel()
    return header + records.tobytes()


def tracks_from_bytes(data: bytes) -> TrackSet:
    if len(data) < _TRACK_HEADER.size:
        raise FormatError("truncated track file header", offset=len(data))
    magic, version, n_tracks, n_frames, width, height = _TRACK_HEADER.unpack_from(data)
    if magic != TRACK_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != TRACK_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    expected = _TRACK_HEADER.size + _TRACK_RECORD.itemsize * n_tracks * n_frames
    if len(data) != expected:
        raise FormatError(
            f"length mismatch: expected {expected} bytes, got {len(data)}",
            offset=min(len(data), expected),
        )
    if n_frames < 1:
        raise FormatError("n_frames must be at least 1", offset=12)
    records = np.frombuffer(data, dtype=_TRACK_RECORD, offset=_TRACK_HEADER.size)
    visible = records["visible"].reshape(n_tracks, n_frames)
    bad = np.nonzero((visible != 0) & (visible != 1))
    if bad[0].size:
        n, t = int(bad[0][0]), int(bad[1][0])
        raise FormatError(
            f"visible flag is {int(visible[n, t])}, not 0/1",
            offset=_TRACK_HEADER.size + _TRACK_RECORD.itemsize * (n * n_frames + t) + 8,
            field=f"records[{n * n_frames + t}].visible",
        )
    positions = np.empty((n_tracks, n_frames, 2), dtype=np.float32)
    positions[:, :, 0] = records["x"].reshape(n_tracks, n_frames)
    positions[:, :, 1] = records["y"].reshape(n_tracks, n_frames)
    if not np.isfinite(positions).all():
        n, t, _ = [int(i[0]) for i in np.nonzero(~np.isfinite(positions))]
        raise FormatError(
            "non-finite position",
            offset=_TRACK_HEADER.size + _TRACK_RECORD.itemsize * (n * n_frames + t),
            field=f"records[{n * n_frames + t}]",
        )
    return TrackSet(positions, visible, width, height)


def write_tracks(path: str | Path, tracks: TrackSet) -> None:
    Path(path).write_bytes(tracks_to_bytes(tracks))


def read_tracks(path: str | Path) -> TrackSet:
    return tracks_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# depth scenes: PFM raster plus JSON intrinsics sidecar


def _intrinsics_path(pfm_path: Path) -> Path:
    return pfm_path.with_suffix(".intrinsics.json")


def write_pfm(path: str | Path, data: np.ndarray) -> None:
    """Grayscale little-endian PFM, rows stored bottom-to-top per convention."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError("PFM writer expects a 2-d grayscale raster")
    height, width = data.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens: list[bytes] = []
    offset = 0
    while len(tokens) < 4 and offset < len(raw):
        end = offset
        while end < len(raw) and raw[end] not in b" \t\r\n":
            end += 1
        if end > offset:
            tokens.append(raw[offset:end])
        offset = end + 1
    if len(tokens) < 4:
        raise FormatError("truncated PFM header", offset=len(raw))
    if tokens[0] != b"Pf":
        raise FormatError(f"bad PFM magic {tokens[0]!r} (grayscale 'Pf' required)", offset=0)
    try:
        width, height = int(tokens[1]), int(tokens[2])
        scale = float(tokens[3])
    except ValueError as exc:
        raise FormatError(f"malformed PFM header: {exc}", offset=3) from exc
    if scale == 0:
        raise FormatError("PFM scale must be nonzero", field="scale")
    expected = width * height * 4
    body = raw[offset:]
    if len(body) != expected:
        raise FormatError(
            f"length mismatch: expected {expected} raster bytes, got {len(body)}",
            offset=offset + min(len(body), expected),
        )
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return np.flipud(data).astype(np.float32)


def write_depth_scene(
    pfm_path: str | Path, scene: DepthScene, intrinsics_path: str | Path | None = None
) -> None:
    pfm_path = Path(pfm_path)
    write_pfm(pfm_path, scene.depth)
    sidecar = Path(intrinsics_path) if intrinsics_path else _intrinsics_path(pfm_path)
    intr = scene.intrinsics
    payload = {"fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy}
    sidecar.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_depth_scene(
    pfm_path: str | Path, intrinsics_path: str | Path | None = None
) -> DepthScene:
    pfm_path = Path(pfm_path)
    depth = read_pfm(pfm_path)
    if not np.isfinite(depth).all() or (depth <= 0).any():
        raise FormatError("depths must be positive and finite", field="depth")
    sidecar = Path(intrinsics_path) if intrinsics_path else _intrinsics_path(pfm_path)
    try:
        payload = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed intrinsics JSON: {exc}", field="intrinsics") from exc
    for key in ("fx", "fy", "cx", "cy"):
        if key not in payload or not isinstance(payload[key], (int, float)):
            raise FormatError("missing or non-numeric intrinsic", field=key)
    if payload["fx"] <= 0 or payload["fy"] <= 0:
        raise FormatError("focal lengths must be positive", field="fx/fy")
    intr = Intrinsics(payload["fx"], payload["fy"], payload["cx"], payload["cy"])
    return DepthScene(depth, intr)


# ---------------------------------------------------------------------------
# camera paths


def write_camera_path(path: str | Path, cam_path: CameraPath) -> None:
    poses = [
        {
            "rotation": [float(v) for v in cam_path.rotations[i].ravel()],
            "translation": [float(v) for v in cam_path.translations[i]],
        }
        for i in range(cam_path.n_frames)
    ]
    Path(path).write_text(json.dumps({"poses": poses}, sort_keys=True, indent=2) + "\n")


def read_camera_path(path: str | Path) -> CameraPath:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed camera path JSON: {exc}") from exc
    poses = payload.get("poses")
    if not isinstance(poses, list) or not poses:
        raise FormatError("camera path needs a non-empty 'poses' list", field="poses")
    rotations = np.empty((len(poses), 3, 3))
    translations = np.empty((len(poses), 3))
    for i, pose in enumerate(poses):
        rot = pose.get("rotation")
        trans = pose.get("translation")
        if not isinstance(rot, list) or len(rot) != 9:
            raise FormatError("rotation must be 9 row-major reals", field=f"poses[{i}].rotation")
        if not isinstance(trans, list) or len(trans) != 3:
            raise FormatError("translation must be 3 reals", field=f"poses[{i}].translation")
        mat = np.array(rot, dtype=np.float64).reshape(3, 3)
        vec = np.array(trans, dtype=np.float64)
        if not np.isfinite(mat).all() or not np.isfinite(vec).all():
            raise FormatError("non-finite pose entries", field=f"poses[{i}]")
        if not is_rotation_matrix(mat):
            raise FormatError(
                "rotation is not orthonormal with determinant +1 (tolerance 1e-6)",
                field=f"poses[{i}].rotation",
            )
        rotations[i] = mat
        translations[i] = vec
    return CameraPath(rotations, translations)


# ---------------------------------------------------------------------------
# video frame directories


def write_video_frames(directory: str | Path, video: VideoFrames) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(video.n_frames):
        Image.fromarray(video.frames[i], mode="RGB").save(
            directory / f"frame_{i:05d}.png"
        )
    meta = {
        "fps": video.fps,
        "n_frames": video.n_frames,
        "width": video.width,
        "height": video.height,
    }
    (directory / "metadata.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n"
    )


def read_video_frames(directory: str | Path) -> VideoFrames:
    directory = Path(directory)
    meta_path = directory / "metadata.json"
    if not meta_path.exists():
        raise FormatError("missing metadata.json", field="metadata")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed metadata JSON: {exc}", field="metadata") from exc
    for key in ("fps", "n_frames", "width", "height"):
        if key not in meta:
            raise FormatError(f"metadata missing {key}", field=key)
    frames = []
    for i in range(int(meta["n_frames"])):
        frame_path = directory / f"frame_{i:05d}.png"
        if not frame_path.exists():
            raise FormatError(
                f"frame count mismatch: {frame_path.name} missing", field=f"frames[{i}]"
            )
        img = np.asarray(Image.open(frame_path).convert("RGB"))
        if img.shape != (meta["height"], meta["width"], 3):
            raise FormatError(
                f"frame {i} is {img.shape[1]}x{img.shape[0]}, metadata says "
                f"{meta['width']}x{meta['height']}",
                field=f"frames[{i}]",
            )
        frames.append(img)
    return VideoFrames(np.stack(frames), fps=float(meta["fps"]))


# ---------------------------------------------------------------------------
# mouse recordings


def write_mouse_recording(path: str | Path, rec: MouseRecording) -> None:
    samples = [
        {"x": float(rec.xs[i]), "y": float(rec.ys[i]), "pressed": bool(rec.pressed[i])}
        for i in range(rec.n_samples)
    ]
    payload = {"fps": rec.fps, "samples": samples}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_mouse_recording(path: str | Path) -> MouseRecording:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed recording JSON: {exc}") from exc
    samples = payload.get("samples")
    if not isinstance(samples, list) or not samples:
        raise FormatError("recording needs a non-empty 'samples' list", field="samples")
    fps = payload.get("fps", 16)
    if not isinstance(fps, (int, float)) or fps <= 0:
        raise FormatError("fps must be a positive number", field="fps")
    xs = np.empty(len(samples))
    ys = np.empty(len(samples))
    pressed = np.empty(len(samples), dtype=bool)
    for i, sample in enumerate(samples):
        if not isinstance(sample, dict) or not {"x", "y", "pressed"} <= sample.keys():
            raise FormatError("sample needs x, y, pressed", field=f"samples[{i}]")
        if not isinstance(sample["pressed"], bool):
            raise FormatError("pressed must be a boolean", field=f"samples[{i}].pressed")
        xs[i] = sample["x"]
        ys[i] = sample["y"]
        pressed[i] = sample["pressed"]
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise FormatError("non-finite cursor sample", field="samples")
    return MouseRecording(xs, ys, pressed, fps=float(fps))


# ---------------------------------------------------------------------------
# conditioning-volume rasters


def write_volume(path: str | Path, volume: ConditioningVolume) -> None:
    """Little-endian f32 raster with an 8-field header:
    magic, version, T, H, W, C, dtype tag (0 = f32), reserved."""
    header = _VOLUME_HEADER.pack(
        VOLUME_MAGIC,
        VOLUME_VERSION,
        volume.n_frames,
        volume.height,
        volume.width,
        volume.channels,
        0,
        0,
    )
    Path(path).write_bytes(header + volume.values.astype("<f4").tobytes())


def read_volume(path: str | Path) -> ConditioningVolume:
    data = Path(path).read_bytes()
    if len(data) < _VOLUME_HEADER.size:
        raise FormatError("truncated volume header", offset=len(data))
    magic, version, t, h, w, c, dtype_tag, _ = _VOLUME_HEADER.unpack_from(data)
    if magic != VOLUME_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VOLUME_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if dtype_tag != 0:
        raise FormatError(f"unknown dtype tag {dtype_tag}", offset=24)
    expected = _VOLUME_HEADER.size + 4 * t * h * w * c
    if len(data) != expected:
        raise FormatError(
            f"length mismatch: expected {expected} bytes, got {len(data)}",
            offset=min(len(data), expected),
        )
    values = np.frombuffer(data, dtype="<f4", offset=_VOLUME_HEADER.size)
    return ConditioningVolume(values.reshape(t, h, w, c).copy())

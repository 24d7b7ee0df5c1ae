"""HTTP facade for the browser companion.

Sessions (first frame plus optional depth scene) and track artifacts are
stored on local disk under content-addressed directories; there is no
database, and no mutable global state beyond the session store. Binary
payloads travel base64-encoded inside JSON, which keeps the browser side to
plain fetch + canvas.toDataURL. All expansion requests take an explicit seed
and identical requests produce identical artifact ids.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import io
import json
import threading
import zipfile
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from PIL import Image
from pydantic import BaseModel, Field

from mptk import formats
from mptk.camera import (
    ZBufferParams,
    make_arc_path,
    make_orbit_path,
    mouse_to_camera_path,
    project_tracks,
    unproject,
)
from mptk.compose import compose, magnify, transfer_retarget
from mptk.mouse import GridSpec, MouseRecording, Rect, add_static_pins, expand_drag_to_grid
from mptk.sphere import SphereSpec, mouse_to_rotations, sphere_tracks
from mptk.tracks import TrackSet, subsample_tracks
from mptk.warp import render_warp

__all__ = ["create_app"]

EXPAND_KINDS = ("mouse", "sphere", "camera", "compose", "transfer", "magnify")


class SampleModel(BaseModel):
    x: float
    y: float
    pressed: bool


class RecordingModel(BaseModel):
    fps: float = 16.0
    samples: list[SampleModel] = Field(min_length=1)


class SessionRequest(BaseModel):
    first_frame_png: str
    depth_pfm: str | None = None
    intrinsics: dict[str, float] | None = None


class ExpandRequest(BaseModel):
    kind: str
    seed: int = 0
    n_frames: int | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    recording: RecordingModel | None = None


def _invariant_error(field: str, message: str):
    return HTTPException(
        status_code=422, detail={"field": field, "message": message}
    )


def _require(params: dict, field: str):
    if field not in params:
        raise _invariant_error(f"params.{field}", "missing required parameter")
    return params[field]


def _decode_b64(payload: str, field: str) -> bytes:
    try:
        return base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError):
        raise HTTPException(status_code=400, detail=f"{field} is not valid base64")


class SessionStore:
    """Content-addressed on-disk sessions with per-session locks."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_dir(self, session_id: str) -> Path:
        path = self.root / session_id
        if not path.is_dir():
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return path

    def create(self, frame_png: bytes, depth_pfm: bytes | None, intrinsics: dict | None) -> str:
        digest = hashlib.sha256()
        digest.update(frame_png)
        if depth_pfm:
            digest.update(depth_pfm)
        if intrinsics:
            digest.update(json.dumps(intrinsics, sort_keys=True).encode())
        session_id = digest.hexdigest()[:16]
        path = self.root / session_id
        path.mkdir(parents=True, exist_ok=True)
        (path / "first.png").write_bytes(frame_png)
        if depth_pfm:
            (path / "depth.pfm").write_bytes(depth_pfm)
        if intrinsics:
            (path / "depth.intrinsics.json").write_text(
                json.dumps(intrinsics, sort_keys=True, indent=2) + "\n"
            )
        (path / "tracks").mkdir(exist_ok=True)
        return session_id

    def first_frame(self, session_id: str) -> np.ndarray:
        img = Image.open(self.session_dir(session_id) / "first.png").convert("RGB")
        return np.asarray(img)

    def depth_scene(self, session_id: str):
        pfm = self.session_dir(session_id) / "depth.pfm"
        if not pfm.exists():
            raise _invariant_error("depth", "session has no depth scene uploaded")
        return formats.read_depth_scene(pfm)

    def store_tracks(self, session_id: str, tracks: TrackSet) -> str:
        data = formats.tracks_to_bytes(tracks)
        track_id = hashlib.sha256(data).hexdigest()[:16]
        (self.session_dir(session_id) / "tracks" / f"{track_id}.mptk").write_bytes(data)
        return track_id

    def find_tracks(self, track_id: str) -> tuple[str, TrackSet]:
        for candidate in sorted(self.root.glob(f"*/tracks/{track_id}.mptk")):
            return candidate.parent.parent.name, formats.tracks_from_bytes(
                candidate.read_bytes()
            )
        raise HTTPException(status_code=404, detail=f"unknown track artifact {track_id}")

    def load_tracks(self, session_id: str, track_id: str) -> TrackSet:
        path = self.session_dir(session_id) / "tracks" / f"{track_id}.mptk"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"unknown track artifact {track_id}")
        return formats.tracks_from_bytes(path.read_bytes())

    def artifacts(self, session_id: str) -> list[str]:
        track_dir = self.session_dir(session_id) / "tracks"
        return sorted(p.stem for p in track_dir.glob("*.mptk"))


def _to_recording(model: RecordingModel | None) -> MouseRecording:
    if model is None:
        raise _invariant_error("recording", "this expansion kind needs a recording")
    return MouseRecording(
        np.array([s.x for s in model.samples]),
        np.array([s.y for s in model.samples]),
        np.array([s.pressed for s in model.samples]),
        fps=model.fps,
    )


def _expand(store: SessionStore, session_id: str, req: ExpandRequest, dims) -> TrackSet:
    t_dim, width, height = dims
    params = req.params
    try:
        if req.kind == "mouse":
            rec = _to_recording(req.recording)
            spec = GridSpec(
                int(params.get("grid_side", 3)),
                float(params.get("stride", 4.0)),
                persist=bool(params.get("persist", False)),
            )
            tracks = expand_drag_to_grid(rec, spec, (rec.n_samples, width, height))
            pins = params.get("pins")
            if pins:
                region = Rect(*(float(v) for v in _require(pins, "region")))
                tracks = add_static_pins(
                    tracks, region, GridSpec(1, float(pins.get("stride", 16.0)))
                )
            return tracks
        if req.kind == "sphere":
            rec = _to_recording(req.recording)
            center = _require(params, "center")
            sphere = SphereSpec(
                (float(center[0]), float(center[1])),
                float(_require(params, "radius")),
                int(params.get("n_points", 300)),
                seed=req.seed,
            )
            rotations = mouse_to_rotations(rec, sphere)
            return sphere_tracks(rotations, sphere, (rec.n_samples, width, height))
        if req.kind == "camera":
            scene = store.depth_scene(session_id)
            cloud = unproject(scene, sample_stride=int(params.get("sample_stride", 1)))
            path_kind = str(params.get("path", "orbit"))
            if path_kind == "mouse":
                rec = _to_recording(req.recording)
                anchor = _require(params, "anchor")
                path = mouse_to_camera_path(rec, scene, (int(anchor[0]), int(anchor[1])))
                t_dim = path.n_frames
            else:
                pivot = params.get("pivot") or cloud.points.mean(axis=0).tolist()
                angle = np.deg2rad(float(params.get("angle_deg", 360.0)))
                maker = make_orbit_path if path_kind == "orbit" else make_arc_path
                path = maker(np.asarray(pivot, dtype=float), angle, t_dim)
            slack = params.get("zb_slack") or 0.02 * float(np.median(cloud.points[:, 2]))
            zb = ZBufferParams(int(params.get("zb_radius", 1)), float(slack))
            tracks = project_tracks(cloud, path, zb, (t_dim, width, height))
            k = int(params.get("k", 1024))
            if k < tracks.n_tracks:
                tracks = subsample_tracks(tracks, k, seed=req.seed)
            return tracks
        if req.kind == "compose":
            camera = store.load_tracks(session_id, str(_require(params, "camera_tracks")))
            objects = store.load_tracks(session_id, str(_require(params, "object_tracks")))
            region = Rect(*(float(v) for v in _require(params, "region")))
            return compose(camera, objects, region)
        if req.kind == "transfer":
            source = store.load_tracks(session_id, str(_require(params, "source_tracks")))
            k = int(params.get("k", source.n_tracks))
            return transfer_retarget(source, (width, height), k, seed=req.seed)
        if req.kind == "magnify":
            tracks = store.load_tracks(session_id, str(_require(params, "tracks")))
            return magnify(
                tracks,
                float(_require(params, "alpha")),
                float(params.get("sigma_space", 0.0)),
                float(params.get("sigma_time", 0.0)),
            )
    except ValueError as exc:
        raise _invariant_error(f"params[{req.kind}]", str(exc))
    raise _invariant_error("kind", f"unknown expansion kind {req.kind!r}")


def create_app(session_root: str | Path = "mptk_sessions") -> FastAPI:
    app = FastAPI(title="mptk service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(session_root)

    @app.post("/api/session")
    def create_session(req: SessionRequest):
        frame_bytes = _decode_b64(req.first_frame_png, "first_frame_png")
        try:
            img = Image.open(io.BytesIO(frame_bytes))
            img.verify()
        except Exception:
            raise HTTPException(status_code=400, detail="first_frame_png is not a valid image")
        depth_bytes = None
        if req.depth_pfm is not None:
            depth_bytes = _decode_b64(req.depth_pfm, "depth_pfm")
        session_id = store.create(frame_bytes, depth_bytes, req.intrinsics)
        if depth_bytes is not None:
            try:
                store.depth_scene(session_id)
            except formats.FormatError as exc:
                raise _invariant_error("depth_pfm", str(exc))
        return {"session_id": session_id}

    @app.get("/api/session/{session_id}")
    def session_state(session_id: str):
        frame = store.first_frame(session_id)
        has_depth = (store.session_dir(session_id) / "depth.pfm").exists()
        return {
            "session_id": session_id,
            "width": int(frame.shape[1]),
            "height": int(frame.shape[0]),
            "has_depth": has_depth,
            "artifacts": store.artifacts(session_id),
        }

    @app.post("/api/session/{session_id}/expand")
    def expand(session_id: str, req: ExpandRequest):
        if req.kind not in EXPAND_KINDS:
            raise _invariant_error("kind", f"kind must be one of {EXPAND_KINDS}")
        frame = store.first_frame(session_id)
        height, width = frame.shape[:2]
        t_dim = req.n_frames or 80
        with store.lock(session_id):
            tracks = _expand(store, session_id, req, (t_dim, width, height))
            track_id = store.store_tracks(session_id, tracks)
        return {
            "track_id": track_id,
            "n_tracks": tracks.n_tracks,
            "n_frames": tracks.n_frames,
        }

    @app.get("/api/tracks/{track_id}")
    def track_geometry(track_id: str):
        _, tracks = store.find_tracks(track_id)
        return {
            "track_id": track_id,
            "n_tracks": tracks.n_tracks,
            "n_frames": tracks.n_frames,
            "width": tracks.width,
            "height": tracks.height,
            "positions": tracks.positions.tolist(),
            "visibility": tracks.visibility.tolist(),
        }

    @app.post("/api/tracks/{track_id}/preview")
    def preview(track_id: str):
        session_id, tracks = store.find_tracks(track_id)
        frame = store.first_frame(session_id)
        height, width = frame.shape[:2]
        if (width, height) != (tracks.width, tracks.height):
            raise _invariant_error(
                "tracks", f"track frame {tracks.width}x{tracks.height} does not match "
                f"session frame {width}x{height}"
            )
        with store.lock(session_id):
            video = render_warp(frame, tracks, (tracks.n_frames, width, height))
        payload = io.BytesIO()
        with zipfile.ZipFile(payload, "w", zipfile.ZIP_DEFLATED) as archive:
            for i in range(video.n_frames):
                frame_png = io.BytesIO()
                Image.fromarray(video.frames[i], mode="RGB").save(frame_png, format="PNG")
                info = zipfile.ZipInfo(f"frame_{i:05d}.png", date_time=(1980, 1, 1, 0, 0, 0))
                archive.writestr(info, frame_png.getvalue())
            meta = {
                "fps": video.fps,
                "n_frames": video.n_frames,
                "width": width,
                "height": height,
            }
            info = zipfile.ZipInfo("metadata.json", date_time=(1980, 1, 1, 0, 0, 0))
            archive.writestr(info, json.dumps(meta, sort_keys=True, indent=2) + "\n")
        return Response(content=payload.getvalue(), media_type="application/zip")

    return app

"""Command-line entry point exposing every pipeline.

Every subcommand is deterministic given --seed: rerunning writes byte-identical
outputs. Global --dims is TxWxH (default 80x128x128).
"""

from __future__ import annotations

import argparse
import colorsys
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from mptk import formats
from mptk.camera import (
    make_arc_path,
    make_orbit_path,
    mouse_to_camera_path,
    project_tracks,
    unproject,
    ZBufferParams,
)
from mptk.compose import compose, magnify, transfer_retarget
from mptk.metrics import DEFAULT_DENSITIES, epe, psnr, run_benchmark, ssim
from mptk.mouse import GridSpec, Rect, add_static_pins, expand_drag_to_grid
from mptk.ncc_tracker import track_ncc
from mptk.scenes import make_benchmark_dataset
from mptk.sphere import SphereSpec, mouse_to_rotations, sphere_tracks
from mptk.tracks import TrackSet, assign_embeddings, encode_conditioning, subsample_tracks
from mptk.warp import render_warp


def _parse_dims(text: str) -> tuple[int, int, int]:
    try:
        t, w, h = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 80x128x128, got {text!r}")
    if t < 1 or w < 1 or h < 1:
        raise argparse.ArgumentTypeError("dims must be positive")
    return t, w, h


def _parse_floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"{what} needs {n} comma-separated values")
    return tuple(float(p) for p in parts)


def cmd_encode(args) -> int:
    tracks = formats.read_tracks(args.tracks)
    t_dim, width, height = args.dims
    table = assign_embeddings(tracks.n_tracks, args.channels, args.max_index, args.seed)
    volume = encode_conditioning(tracks, table, (t_dim, height, width))
    formats.write_volume(args.out, volume)
    print(f"wrote {args.out}: {t_dim}x{height}x{width}x{args.channels} volume")
    return 0


def cmd_expand_mouse(args) -> int:
    rec = formats.read_mouse_recording(args.recording)
    t_dim, width, height = args.dims
    spec = GridSpec(args.grid_side, args.stride, persist=args.persist)
    tracks = expand_drag_to_grid(rec, spec, (t_dim, width, height))
    if args.pin_region:
        region = Rect(*_parse_floats(args.pin_region, 4, "--pin-region"))
        tracks = add_static_pins(tracks, region, GridSpec(1, args.pin_stride))
    formats.write_tracks(args.out, tracks)
    print(f"wrote {args.out}: {tracks.n_tracks} tracks over {tracks.n_frames} frames")
    return 0


def cmd_expand_sphere(args) -> int:
    rec = formats.read_mouse_recording(args.recording)
    t_dim, width, height = args.dims
    center = _parse_floats(args.center, 2, "--center")
    sphere = SphereSpec(center, args.radius, args.points, seed=args.seed)
    rotations = mouse_to_rotations(rec, sphere)
    tracks = sphere_tracks(rotations, sphere, (t_dim, width, height))
    formats.write_tracks(args.out, tracks)
    print(f"wrote {args.out}: {tracks.n_tracks} sphere tracks")
    return 0


def cmd_expand_camera(args) -> int:
    scene = formats.read_depth_scene(args.depth, args.intrinsics)
    t_dim, width, height = args.dims
    if args.frames:
        t_dim = args.frames
    cloud = unproject(scene, sample_stride=args.sample_stride)

    if args.camera_path:
        path = formats.read_camera_path(args.camera_path)
        if path.n_frames != t_dim:
            print(
                f"error: camera path has {path.n_frames} poses, need {t_dim}",
                file=sys.stderr,
            )
            return 1
    elif args.path == "mouse":
        if not args.recording or not args.anchor:
            print("error: --path mouse needs --recording and --anchor", file=sys.stderr)
            return 1
        rec = formats.read_mouse_recording(args.recording)
        anchor = tuple(int(v) for v in _parse_floats(args.anchor, 2, "--anchor"))
        path = mouse_to_camera_path(rec, scene, anchor)
        t_dim = path.n_frames
    else:
        pivot = (
            np.array(_parse_floats(args.pivot, 3, "--pivot"))
            if args.pivot
            else cloud.points.mean(axis=0)
        )
        angle = np.deg2rad(args.angle)
        maker = make_orbit_path if args.path == "orbit" else make_arc_path
        path = maker(pivot, angle, t_dim)

    if args.save_path:
        formats.write_camera_path(args.save_path, path)
    slack = args.zb_slack or 0.02 * float(np.median(cloud.points[:, 2]))
    zb = ZBufferParams(args.zb_radius, slack)
    tracks = project_tracks(cloud, path, zb, (t_dim, width, height))
    if args.k and args.k < tracks.n_tracks:
        tracks = subsample_tracks(tracks, args.k, seed=args.seed)
    formats.write_tracks(args.out, tracks)
    print(f"wrote {args.out}: {tracks.n_tracks} camera tracks over {t_dim} frames")
    return 0


def cmd_compose(args) -> int:
    camera = formats.read_tracks(args.camera)
    objects = formats.read_tracks(args.object)
    region = Rect(*_parse_floats(args.region, 4, "--region"))
    formats.write_tracks(args.out, compose(camera, objects, region))
    print(f"wrote {args.out}")
    return 0


def cmd_transfer(args) -> int:
    source = formats.read_tracks(args.tracks)
    k = args.k or source.n_tracks
    out = transfer_retarget(source, (args.width, args.height), k, seed=args.seed)
    formats.write_tracks(args.out, out)
    print(f"wrote {args.out}: {out.n_tracks} tracks at {args.width}x{args.height}")
    return 0


def cmd_magnify(args) -> int:
    tracks = formats.read_tracks(args.tracks)
    out = magnify(tracks, args.alpha, args.sigma_space, args.sigma_time)
    formats.write_tracks(args.out, out)
    print(f"wrote {args.out}")
    return 0


def cmd_render(args) -> int:
    tracks = formats.read_tracks(args.tracks)
    frame = np.asarray(Image.open(args.frame).convert("RGB"))
    t_dim = tracks.n_frames
    video = render_warp(frame, tracks, (t_dim, frame.shape[1], frame.shape[0]), fps=args.fps)
    formats.write_video_frames(args.out, video)
    print(f"wrote {args.out}: {t_dim} frames")
    return 0


def cmd_track(args) -> int:
    video = formats.read_video_frames(args.video)
    if args.queries_from:
        queries = formats.read_tracks(args.queries_from).positions[:, 0]
    else:
        margin = args.patch // 2 + args.search
        xs = np.arange(margin, video.width - margin, args.grid_stride, dtype=np.float64)
        ys = np.arange(margin, video.height - margin, args.grid_stride, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        queries = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    tracks = track_ncc(
        video, queries, patch=args.patch, search=args.search, threshold=args.threshold
    )
    formats.write_tracks(args.out, tracks)
    print(f"wrote {args.out}: {tracks.n_tracks} tracks")
    return 0


def cmd_eval(args) -> int:
    gt = formats.read_tracks(args.gt)
    est = formats.read_tracks(args.est)
    print(f"EPE: {epe(gt, est):.4f}")
    if args.gt_video and args.est_video:
        video_gt = formats.read_video_frames(args.gt_video)
        video_est = formats.read_video_frames(args.est_video)
        print(f"PSNR: {psnr(video_est, video_gt):.4f}")
        print(f"SSIM: {ssim(video_est, video_gt):.4f}")
    return 0


def cmd_bench(args) -> int:
    densities = [int(d) for d in args.densities.split(",")]
    t_dim, width, height = args.dims
    dataset = make_benchmark_dataset((t_dim, width, height), seed=args.seed)
    report = run_benchmark(dataset, densities=densities, seed=args.seed)
    text = report.to_text()
    print(text, end="")
    if args.out:
        Path(args.out).write_text(report.to_json())
        print(f"wrote {args.out}")
    return 0


def cmd_overlay(args) -> int:
    tracks = formats.read_tracks(args.tracks)
    if args.frame:
        image = Image.open(args.frame).convert("RGB")
    else:
        image = Image.new("RGB", (tracks.width, tracks.height), (0, 0, 0))
    scale = args.scale
    if scale != 1:
        image = image.resize((image.width * scale, image.height * scale), Image.NEAREST)
    draw = ImageDraw.Draw(image)
    for i in range(tracks.n_tracks):
        hue = (i * 0.61803) % 1.0
        rgb = tuple(int(255 * c) for c in colorsys.hsv_to_rgb(hue, 0.9, 1.0))
        pos = tracks.positions[i] * scale
        vis = tracks.visibility[i]
        for t in range(1, tracks.n_frames):
            if vis[t - 1] and vis[t]:
                draw.line(
                    [tuple(pos[t - 1]), tuple(pos[t])], fill=rgb, width=1
                )
    image.save(args.out)
    print(f"wrote {args.out}: trails for {tracks.n_tracks} tracks")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from mptk.service import create_app

    app = create_app(args.root)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mptk", description="point-track motion prompt toolkit"
    )
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument(
        "--dims",
        type=_parse_dims,
        default=(80, 128, 128),
        help="frames x width x height (default 80x128x128)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode tracks into a conditioning volume")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--max-index", type=int, default=16384)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("expand-mouse", help="expand a mouse recording into drag grids")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid-side", type=int, default=3)
    p.add_argument("--stride", type=float, default=4.0)
    p.add_argument("--persist", action="store_true")
    p.add_argument("--pin-region", help="x0,y0,x1,y1 static pin region")
    p.add_argument("--pin-stride", type=float, default=16.0)
    p.set_defaults(func=cmd_expand_mouse)

    p = sub.add_parser("expand-sphere", help="spin a sphere primitive with the mouse")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--center", required=True, help="x,y sphere center in pixels")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--points", type=int, default=300)
    p.set_defaults(func=cmd_expand_sphere)

    p = sub.add_parser("expand-camera", help="sweep a camera over an unprojected depth scene")
    p.add_argument("--depth", required=True, help="PFM depth map")
    p.add_argument("--intrinsics", help="intrinsics sidecar (default: alongside depth)")
    p.add_argument("--out", required=True)
    p.add_argument("--path", choices=("orbit", "arc", "mouse"), default="orbit")
    p.add_argument("--angle", type=float, default=360.0, help="sweep angle in degrees")
    p.add_argument("--frames", type=int, help="override frame count from --dims")
    p.add_argument("--pivot", help="x,y,z pivot (default: cloud centroid)")
    p.add_argument("--recording", help="mouse recording (for --path mouse)")
    p.add_argument("--anchor", help="u,v anchor pixel (for --path mouse)")
    p.add_argument("--camera-path", help="reuse an existing camera path file")
    p.add_argument("--save-path", help="also write the camera path file here")
    p.add_argument("--sample-stride", type=int, default=1)
    p.add_argument("--k", type=int, default=1024, help="subsample to this many tracks")
    p.add_argument("--zb-radius", type=int, default=1)
    p.add_argument("--zb-slack", type=float, help="depth slack (default: 2%% of median)")
    p.set_defaults(func=cmd_expand_camera)

    p = sub.add_parser("compose", help="add object displacements onto camera tracks")
    p.add_argument("--camera", required=True)
    p.add_argument("--object", required=True)
    p.add_argument("--region", required=True, help="x0,y0,x1,y1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("transfer", help="retarget source tracks to a new frame size")
    p.add_argument("--tracks", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--k", type=int, help="subsample count (default: keep all)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("magnify", help="smooth and magnify track motion")
    p.add_argument("--tracks", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma-space", type=float, default=0.0)
    p.add_argument("--sigma-time", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_magnify)

    p = sub.add_parser("render", help="forward-warp a first frame along tracks")
    p.add_argument("--frame", required=True, help="first frame PNG")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True, help="output frame directory")
    p.add_argument("--fps", type=float, default=16.0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("track", help="NCC-track query points through a video")
    p.add_argument("--video", required=True, help="frame directory")
    p.add_argument("--out", required=True)
    p.add_argument("--queries-from", help="take frame-0 positions from this track file")
    p.add_argument("--grid-stride", type=int, default=8)
    p.add_argument("--patch", type=int, default=11)
    p.add_argument("--search", type=int, default=8)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score estimated tracks (and optionally videos)")
    p.add_argument("--gt", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--gt-video")
    p.add_argument("--est-video")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="density-sweep benchmark on synthetic scenes")
    p.add_argument(
        "--densities", default=",".join(str(d) for d in DEFAULT_DENSITIES)
    )
    p.add_argument("--out", help="write machine-readable JSON report here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("overlay", help="debug PNG with colored track trails")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame", help="draw over this first frame")
    p.add_argument("--scale", type=int, default=1)
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("serve", help="run the HTTP authoring service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--root", default="mptk_sessions")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Independent reference implementations used to freeze expected test values.

Everything here is deliberately written as plain scalar loops (or all-pairs
matrix math) so it shares no code path with the package implementations it
checks.
"""

import math

import numpy as np


def brute_force_volume(tracks, table, dims):
    """Triple loop over (t, y, x); at each cell, sum embeddings of every
    visible track that quantizes there, in ascending track order."""
    t_dim, height, width = dims
    vecs = table.vectors
    vol = np.zeros((t_dim, height, width, table.channels), dtype=np.float32)
    for t in range(t_dim):
        for y in range(height):
            for x in range(width):
                acc = np.zeros(table.channels, dtype=np.float32)
                for n in range(tracks.n_tracks):
                    if tracks.visibility[n, t] != 1:
                        continue
                    qx = math.floor(float(tracks.positions[n, t, 0]) + 0.5)
                    qy = math.floor(float(tracks.positions[n, t, 1]) + 0.5)
                    if qx == x and qy == y:
                        acc = acc + vecs[n]
                vol[t, y, x] = acc
    return vol


def count_hit_cells(tracks, dims):
    """Number of distinct (t, qy, qx) cells hit by visible in-bounds points."""
    t_dim, height, width = dims
    hit = set()
    for n in range(tracks.n_tracks):
        for t in range(t_dim):
            if tracks.visibility[n, t] != 1:
                continue
            qx = math.floor(float(tracks.positions[n, t, 0]) + 0.5)
            qy = math.floor(float(tracks.positions[n, t, 1]) + 0.5)
            if 0 <= qx < width and 0 <= qy < height:
                hit.add((t, qy, qx))
    return len(hit)


def scalar_sinusoid(track_id, channels):
    """Positional-encoding row evaluated one scalar at a time."""
    out = []
    for i in range(channels // 2):
        angle = track_id / 10000.0 ** (2.0 * i / channels)
        out.append(math.sin(angle))
        out.append(math.cos(angle))
    return np.array(out, dtype=np.float64)


def fisher_yates_first_k(n, k, seed):
    """Full shuffle of range(n) via the textbook swap loop; first k entries.

    Consumes draws from numpy's default generator exactly like a left-to-right
    Fisher-Yates, so the first k entries match any implementation that stops
    after k swap steps.
    """
    rng = np.random.default_rng(seed)
    idx = list(range(n))
    for i in range(n - 1):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]


def pairwise_zbuffer_visibility(cells_x, cells_y, depths, in_front, radius, slack):
    """All-pairs occlusion test on quantized cells.

    Point i is occluded iff some in-front point j lies within Chebyshev
    `radius` cells of it and is more than `slack` nearer to the camera.
    Behind-camera points are never visible and never occlude.
    """
    n = len(depths)
    visible = np.zeros(n, dtype=bool)
    for i in range(n):
        if not in_front[i]:
            continue
        occluded = False
        for j in range(n):
            if i == j or not in_front[j]:
                continue
            if (
                abs(cells_x[j] - cells_x[i]) <= radius
                and abs(cells_y[j] - cells_y[i]) <= radius
                and depths[j] < depths[i] - slack
            ):
                occluded = True
                break
        visible[i] = not occluded
    return visible


def pairwise_zbuffer_visibility_dense(cells_x, cells_y, depths, in_front, radius, slack):
    """Same all-pairs occlusion rule as pairwise_zbuffer_visibility, written
    with (P, P) broadcast matrices so 200-point clouds stay fast."""
    near_x = np.abs(cells_x[None, :] - cells_x[:, None]) <= radius
    near_y = np.abs(cells_y[None, :] - cells_y[:, None]) <= radius
    closer = depths[None, :] < depths[:, None] - slack
    occluder = near_x & near_y & closer & in_front[None, :]
    np.fill_diagonal(occluder, False)
    return in_front & ~occluder.any(axis=1)


def mean_epe_scalar(cond_pos, cond_vis, est_pos):
    """Double-loop mean L2 distance over conditioning-visible points."""
    total = 0.0
    count = 0
    for n in range(cond_pos.shape[0]):
        for t in range(cond_pos.shape[1]):
            if cond_vis[n, t] != 1:
                continue
            dx = float(cond_pos[n, t, 0]) - float(est_pos[n, t, 0])
            dy = float(cond_pos[n, t, 1]) - float(est_pos[n, t, 1])
            total += math.hypot(dx, dy)
            count += 1
    return total / count

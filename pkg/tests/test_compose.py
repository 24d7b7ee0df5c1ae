import numpy as np
import pytest

from mptk.compose import compose, effective_gain, magnify, transfer_retarget
from mptk.mouse import Rect
from mptk.tracks import TrackSet, concat_tracks

from conftest import make_random_trackset


def static_tracks(points, t=4, width=128, height=128):
    pos = np.repeat(np.asarray(points, dtype=np.float64)[:, None, :], t, axis=1)
    return TrackSet(pos, np.ones((len(points), t)), width, height)


def moving_track(start, per_frame_delta, t=4, width=128, height=128):
    start = np.asarray(start, dtype=np.float64)
    pos = start[None, None, :] + np.arange(t)[None, :, None] * np.asarray(per_frame_delta)
    return TrackSet(pos, np.ones((1, t)), width, height)


class TestCompose:
    def test_static_object_is_identity(self):
        camera = static_tracks([(10, 10), (50, 50), (90, 90)])
        obj = static_tracks([(12, 12)])
        out = compose(camera, obj, Rect(0, 0, 128, 128))
        np.testing.assert_array_equal(out.positions, camera.positions)
        np.testing.assert_array_equal(out.visibility, camera.visibility)

    def test_single_delta_applied_in_region(self):
        camera = static_tracks([(10, 10), (50, 50)], t=2)
        obj = TrackSet(
            np.array([[[10.0, 10.0], [15.0, 10.0]]]), np.ones((1, 2)), 128, 128
        )
        out = compose(camera, obj, Rect(5, 5, 15, 15))
        np.testing.assert_array_equal(out.positions[0, 1], [15.0, 10.0])
        np.testing.assert_array_equal(out.positions[0, 0], [10.0, 10.0])
        np.testing.assert_array_equal(out.positions[1], camera.positions[1])

    def test_nearest_object_track_wins(self):
        camera = static_tracks([(10, 10)], t=2)
        near = moving_track((11, 11), (3, 0), t=2)
        far = moving_track((40, 40), (0, 9), t=2)
        out = compose(camera, concat_tracks(near, far), Rect(0, 0, 128, 128))
        np.testing.assert_array_equal(out.positions[0, 1], [13.0, 10.0])

    def test_visibility_is_and_of_sources(self):
        camera = static_tracks([(10, 10)], t=3)
        obj = TrackSet(
            np.tile([[12.0, 12.0]], (1, 3, 1)), np.array([[1, 0, 1]]), 128, 128
        )
        out = compose(camera, obj, Rect(0, 0, 128, 128))
        np.testing.assert_array_equal(out.visibility[0], [1, 0, 1])

    def test_disjoint_region_partition(self):
        camera = static_tracks([(10, 10), (12, 8), (100, 100), (104, 102)], t=3)
        obj_b = moving_track((11, 9), (3, 0), t=3)
        obj_c = moving_track((102, 101), (0, 4), t=3)
        rect_b = Rect(0, 0, 30, 30)
        rect_c = Rect(90, 90, 120, 120)
        sequential = compose(compose(camera, obj_b, rect_b), obj_c, rect_c)
        unioned = compose(
            camera, concat_tracks(obj_b, obj_c), Rect(0, 0, 120, 120)
        )
        np.testing.assert_array_equal(sequential.positions, unioned.positions)
        np.testing.assert_array_equal(sequential.visibility, unioned.visibility)

    def test_frame_count_mismatch(self):
        with pytest.raises(ValueError):
            compose(static_tracks([(1, 1)], t=3), static_tracks([(1, 1)], t=4), Rect(0, 0, 9, 9))

    def test_empty_object_set_over_occupied_region(self):
        camera = static_tracks([(10, 10)])
        empty = TrackSet(np.zeros((0, 4, 2)), np.zeros((0, 4)), 128, 128)
        with pytest.raises(ValueError):
            compose(camera, empty, Rect(0, 0, 128, 128))


class TestTransferRetarget:
    def test_identity_when_same_dims_and_all_tracks(self, rng):
        src = make_random_trackset(rng, 7, 5)
        out = transfer_retarget(src, (src.width, src.height), k=7, seed=0)
        np.testing.assert_array_equal(out.positions, src.positions)

    def test_halving_scales_coordinates_exactly(self, rng):
        src = make_random_trackset(rng, 6, 4, width=256, height=256)
        out = transfer_retarget(src, (128, 128), k=6, seed=0)
        np.testing.assert_array_equal(out.positions, src.positions / 2.0)

    def test_normalized_coordinates_preserved(self, rng):
        src = make_random_trackset(rng, 5, 4, width=128, height=64)
        out = transfer_retarget(src, (96, 80), k=5, seed=0)
        np.testing.assert_allclose(
            out.positions[:, :, 0] / 96.0, src.positions[:, :, 0] / 128.0, atol=1e-6
        )
        np.testing.assert_allclose(
            out.positions[:, :, 1] / 80.0, src.positions[:, :, 1] / 64.0, atol=1e-6
        )

    def test_dense_source_thinned_to_1500(self, rng):
        src = make_random_trackset(rng, 4000, 2)
        out = transfer_retarget(src, (128, 128), k=1500, seed=1)
        assert out.n_tracks == 1500

    def test_zero_target_dims_rejected(self, rng):
        src = make_random_trackset(rng, 3, 2)
        with pytest.raises(ValueError):
            transfer_retarget(src, (0, 128), k=3, seed=0)


class TestMagnify:
    def sinusoid(self, amplitude=5.0, t=32):
        phase = np.linspace(0, 4 * np.pi, t)
        pos = np.zeros((1, t, 2))
        pos[0, :, 0] = 64.0 + amplitude * np.sin(phase)
        pos[0, :, 1] = 64.0
        return TrackSet(pos, np.ones((1, t)), 128, 128)

    def test_unit_alpha_no_smoothing_is_identity(self, rng):
        ts = make_random_trackset(rng, 5, 6)
        out = magnify(ts, alpha=1.0, sigma_space=0.0, sigma_time=0.0)
        np.testing.assert_array_equal(out.positions, ts.positions)
        np.testing.assert_array_equal(out.visibility, ts.visibility)

    def test_zero_alpha_freezes_tracks(self, rng):
        ts = make_random_trackset(rng, 4, 6)
        out = magnify(ts, alpha=0.0, sigma_space=2.0, sigma_time=1.0)
        for t in range(6):
            np.testing.assert_array_equal(out.positions[:, t], ts.positions[:, 0])

    def test_sinusoid_amplitude_tripled(self):
        ts = self.sinusoid(amplitude=5.0)
        out = magnify(ts, alpha=3.0, sigma_space=0.0, sigma_time=0.0)
        got = out.positions[0, :, 0] - 64.0
        want = 3.0 * (ts.positions[0, :, 0].astype(np.float64) - 64.0)
        np.testing.assert_allclose(got, want, atol=1e-4)

    def test_linear_in_alpha(self, rng):
        ts = make_random_trackset(rng, 8, 16)
        lo = magnify(ts, alpha=1.3, sigma_space=4.0, sigma_time=1.5)
        hi = magnify(ts, alpha=2.6, sigma_space=4.0, sigma_time=1.5)
        base = ts.positions[:, :1].astype(np.float64)
        got = hi.positions.astype(np.float64) - base
        want = 2.0 * (lo.positions.astype(np.float64) - base)
        err = np.linalg.norm(got - want, axis=-1)
        scale = np.linalg.norm(want, axis=-1).max()
        assert (err / scale).max() <= 1e-6

    def test_smoothing_changes_effective_gain(self):
        ts = self.sinusoid(amplitude=5.0, t=48)
        sharp = magnify(ts, alpha=2.0, sigma_space=0.0, sigma_time=0.0)
        smooth = magnify(ts, alpha=2.0, sigma_space=0.0, sigma_time=4.0)
        assert abs(effective_gain(ts, sharp) - 2.0) < 1e-6
        # smoothing shifts the achieved gain away from the requested alpha
        assert abs(effective_gain(ts, smooth) - 2.0) > 0.01

    def test_negative_alpha_rejected(self, rng):
        with pytest.raises(ValueError):
            magnify(make_random_trackset(rng, 2, 3), -1.0, 0.0, 0.0)

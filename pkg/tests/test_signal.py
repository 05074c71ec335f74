from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tracksync.config import SyncConfig
from tracksync.ingest import TrackingTable
from tracksync.model import ALIVE, DEAD, Position, TrackingFrame
from tracksync.signal import (
    FilterError,
    derive_kinematics,
    find_extrema,
    savitzky_golay,
    segment_episodes,
)


def direct_sg_fit(series: np.ndarray, window: int, order: int) -> np.ndarray:
    """Independent oracle: least-squares polynomial fit per window.

    Interior points evaluate the centered-window fit at its center; boundary
    points evaluate the nearest full window's polynomial at their offset.
    """
    n = len(series)
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - window)
        t = np.arange(lo, lo + window)
        coeffs = np.polyfit(t, series[lo : lo + window], order)
        out[i] = np.polyval(coeffs, i)
    return out


class TestSavitzkyGolay:
    def test_constant_series_unchanged(self):
        series = np.array([5.0] * 7)
        assert np.allclose(savitzky_golay(series, 5, 2), series)

    def test_cubic_reproduced_exactly(self):
        t = np.linspace(0.0, 2.0, 50)
        series = t**3 - 2 * t**2 + 0.5
        smoothed = savitzky_golay(series, 7, 3)
        assert np.max(np.abs(smoothed - series)) < 1e-9
        oracle = direct_sg_fit(series, 7, 3)
        assert np.max(np.abs(smoothed - oracle)) < 1e-9

    def test_matches_direct_fit_on_noisy_data(self):
        rng = np.random.default_rng(3)
        series = np.sin(np.linspace(0, 6, 80)) + rng.normal(0, 0.3, 80)
        smoothed = savitzky_golay(series, 11, 2)
        oracle = direct_sg_fit(series, 11, 2)
        assert np.max(np.abs(smoothed - oracle)) < 1e-9

    def test_noise_variance_reduced(self):
        t = np.linspace(0, 1, 101)
        base = 4 * t**3
        reductions = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            noisy = base + rng.normal(0, 0.5, len(t))
            smoothed = savitzky_golay(noisy, 11, 2)
            interior = slice(10, -10)
            reductions.append(
                np.var((smoothed - base)[interior]) < np.var((noisy - base)[interior])
            )
        assert all(reductions)

    def test_window_longer_than_series_rejected(self):
        with pytest.raises(FilterError):
            savitzky_golay(np.zeros(5), 7, 2)

    def test_even_window_rejected(self):
        with pytest.raises(FilterError):
            savitzky_golay(np.zeros(10), 4, 2)


def make_table(ball_xyz, players, fps=25, alive=None, period=1, first_frame=0):
    n = len(ball_xyz)
    if alive is None:
        alive = np.ones(n, dtype=bool)
    return TrackingTable(
        period=np.full(n, period, dtype=int),
        frame=np.arange(first_frame, first_frame + n),
        fps=fps,
        ball_xyz=np.asarray(ball_xyz, dtype=float),
        alive=np.asarray(alive, dtype=bool),
        players={k: np.asarray(v, dtype=float) for k, v in players.items()},
        teams={},
    )


class TestDeriveKinematics:
    def test_constant_velocity_ball(self):
        fps = 25
        t = np.arange(200) / fps
        ball = np.stack([2.0 * t, np.zeros_like(t), np.zeros_like(t)], axis=1)
        player = np.stack([np.full_like(t, 10.0), np.full_like(t, 10.0)], axis=1)
        sig = derive_kinematics(make_table(ball, {"p1": player}), fps)
        assert np.allclose(sig.ball.speed[15:-15], 2.0, atol=1e-6)
        assert np.all(sig.ball.accel[15:-15] < 1e-6)

    def test_direction_change_seen_only_by_norm_acceleration(self):
        # constant 5 m/s, instant 90 degree turn mid-series
        fps = 25
        n = 300
        pos = np.zeros((n, 3))
        for i in range(1, n):
            v = (5.0, 0.0) if i <= n // 2 else (0.0, 5.0)
            pos[i, 0] = pos[i - 1, 0] + v[0] / fps
            pos[i, 1] = pos[i - 1, 1] + v[1] / fps
        sig = derive_kinematics(make_table(pos, {}), fps)
        mid = n // 2
        assert sig.ball.accel[mid] > 5.0
        assert np.max(np.abs(sig.ball.speed_accel[mid - 5 : mid + 5])) < 1.0
        # away from the turn both stay near zero
        assert np.all(sig.ball.accel[30 : mid - 30] < 1e-6)

    def test_planar_distance_and_height(self):
        ball = np.tile([3.0, 4.0, 2.0], (40, 1))
        player = np.tile([0.0, 0.0], (40, 1))
        sig = derive_kinematics(make_table(ball, {"p1": player}), 25)
        assert np.allclose(sig.distance("p1"), 5.0)
        assert np.allclose(sig.ball_height, 2.0)

    def test_norm_acceleration_bounds_speed_acceleration(self):
        # smooth noise-free trajectory: accelerating curve
        fps = 25
        t = np.arange(400) / fps
        pos = np.stack([0.3 * t**2, 2.0 * np.sin(0.5 * t), np.zeros_like(t)], axis=1)
        sig = derive_kinematics(make_table(pos, {}), fps)
        interior = slice(15, -15)
        assert np.all(
            sig.ball.accel[interior] >= np.abs(sig.ball.speed_accel[interior]) - 1e-6
        )

    def test_gap_splits_series(self):
        fps = 25
        n = 120
        t = np.arange(n) / fps
        ball = np.stack([2.0 * t, np.zeros_like(t), np.zeros_like(t)], axis=1)
        table = make_table(ball, {})
        table.frame = np.concatenate([np.arange(60), np.arange(100, 160)])
        sig = derive_kinematics(table, fps)
        assert sig.segments == [(0, 60), (60, 120)]
        # no derivative bridges the gap: speeds stay finite and small
        assert np.all(sig.ball.speed < 5.0)


class TestFindExtrema:
    def test_simple_maxima(self):
        found = find_extrema([0, 1, 0, 2, 0], "local_max", 0.5)
        assert found.frames.tolist() == [1, 3]

    def test_monotone_has_none(self):
        assert find_extrema(np.arange(10.0), "local_max").frames.size == 0
        assert find_extrema(np.arange(10.0), "local_min").frames.size == 0

    def test_plateau_center(self):
        found = find_extrema([0, 3, 3, 3, 0], "local_max")
        assert found.frames.tolist() == [2]

    def test_even_plateau_rounds_half_down(self):
        found = find_extrema([0, 3, 3, 0], "local_max")
        assert found.frames.tolist() == [1]

    def test_prominence_filters(self):
        series = [0, 1, 0.8, 1.1, 0, 5, 0]
        frames = find_extrema(series, "local_max", min_prominence=2.0).frames
        assert frames.tolist() == [5]

    def test_frames_axis_respected(self):
        found = find_extrema([0, 1, 0, 2, 0], "local_max", frames=np.arange(100, 105))
        assert found.frames.tolist() == [101, 103]

    @given(
        hnp.arrays(
            np.float64,
            st.integers(5, 40),
            elements=st.floats(-50, 50, allow_nan=False),
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_min_max_duality(self, series):
        mins = find_extrema(series, "local_min", 0.3).frames
        maxs = find_extrema(-series, "local_max", 0.3).frames
        assert mins.tolist() == maxs.tolist()


def frames_from_states(states, fps=25):
    out = []
    for i, s in enumerate(states):
        out.append(
            TrackingFrame(
                frame_index=i,
                period=1,
                fps=fps,
                players={"p": Position(1.0, 1.0)},
                ball=Position(0.0, 0.0, 0.0),
                ball_state=ALIVE if s == "A" else DEAD,
            )
        )
    return out


class TestSegmentEpisodes:
    def test_basic_runs(self):
        # at 10 FPS the 2-frame gap is exactly 0.2 s: not short enough to merge
        eps = segment_episodes(frames_from_states("AAADDAA", fps=10))
        assert [(e.start_frame, e.end_frame) for e in eps] == [(0, 2), (5, 6)]

    def test_all_alive_single_episode(self):
        eps = segment_episodes(frames_from_states("A" * 40))
        assert [(e.start_frame, e.end_frame) for e in eps] == [(0, 39)]

    def test_short_run_merges_across_tiny_gaps(self):
        # 20 alive, 1 dead, 3 alive, 1 dead, 20 alive at 25 FPS -> one episode
        states = "A" * 20 + "D" + "AAA" + "D" + "A" * 20
        eps = segment_episodes(frames_from_states(states))
        assert len(eps) == 1
        assert (eps[0].start_frame, eps[0].end_frame) == (0, 44)
        assert eps[0].absorbed_gaps == ((20, 20), (24, 24))

    def test_short_isolated_run_kept(self):
        # gaps of 10 frames (0.4 s) exceed the merge threshold
        states = "A" * 20 + "D" * 10 + "AAA" + "D" * 10 + "A" * 20
        eps = segment_episodes(frames_from_states(states))
        assert len(eps) == 3

    def test_episodes_partition_alive_frames(self):
        rng = np.random.default_rng(7)
        states = "".join(rng.choice(["A", "D"], p=[0.8, 0.2]) for _ in range(300))
        frames = frames_from_states(states)
        eps = segment_episodes(frames)
        covered = set()
        absorbed = set()
        for e in eps:
            covered.update(range(e.start_frame, e.end_frame + 1))
            for lo, hi in e.absorbed_gaps:
                absorbed.update(range(lo, hi + 1))
        alive_frames = {i for i, s in enumerate(states) if s == "A"}
        assert covered - absorbed == alive_frames
        # episodes are ordered and non-overlapping
        for a, b in zip(eps, eps[1:]):
            assert a.end_frame < b.start_frame

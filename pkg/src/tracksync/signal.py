"""Smoothed kinematic series, local extrema and episode segmentation.

Velocities come from central finite differences of raw positions and are
Savitzky-Golay smoothed componentwise; acceleration is the norm of the
smoothed velocity's derivative (so direction changes register), smoothed
again. A scalar speed derivative is kept alongside for diagnostics only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks, savgol_filter

from .config import SyncConfig
from .model import ALIVE, Episode, TrackingFrame


class FilterError(ValueError):
    """Raised when smoothing parameters cannot be applied to a series."""


def savitzky_golay(series, window_length: int, poly_order: int):
    """Least-squares polynomial smoothing over a centered window.

    Interior points are fitted over the full window; points near the edges
    are evaluated from a polynomial fitted to the nearest complete window,
    so polynomials of degree <= poly_order are reproduced exactly
    everywhere, boundaries included.
    """
    series = np.asarray(series, dtype=float)
    if window_length % 2 == 0 or window_length < 3:
        raise FilterError(f"window_length must be odd and >= 3, got {window_length}")
    if poly_order >= window_length:
        raise FilterError(
            f"poly_order {poly_order} must be smaller than window {window_length}"
        )
    if series.shape[0] < window_length:
        raise FilterError(
            f"series of length {series.shape[0]} shorter than window {window_length}"
        )
    return savgol_filter(series, window_length, poly_order, axis=0, mode="interp")


def _smooth_segment(values: np.ndarray, window: int, poly_order: int) -> np.ndarray:
    """Apply SG smoothing, shrinking the window on short segments."""
    n = values.shape[0]
    if n < 3:
        return values.copy()
    w = min(window, n if n % 2 == 1 else n - 1)
    if w < 3:
        return values.copy()
    order = min(poly_order, w - 1)
    return savgol_filter(values, w, order, axis=0, mode="interp")


@dataclass
class EntityKinematics:
    """Per-entity series aligned to the owning SignalSet's frame axis."""

    pos: np.ndarray  # (N, 2) players / (N, 3) ball
    vel: np.ndarray  # smoothed, same width as pos
    speed: np.ndarray  # norm of smoothed velocity
    accel: np.ndarray  # norm of velocity derivative, smoothed, >= 0
    speed_accel: np.ndarray  # signed derivative of speed (diagnostics)


@dataclass
class SignalSet:
    """All kinematic series of one period plus player-ball distances."""

    period: int
    fps: int
    frames: np.ndarray  # sorted frame indices
    alive: np.ndarray  # bool per frame
    ball: EntityKinematics
    players: dict[str, EntityKinematics]
    ball_height: np.ndarray
    distances: dict[str, np.ndarray]  # planar player-ball distance
    segments: list[tuple[int, int]]  # [start, end) row ranges of contiguous frames

    def index_of(self, frame: int) -> int:
        i = int(np.searchsorted(self.frames, frame))
        if i >= len(self.frames) or self.frames[i] != frame:
            raise KeyError(f"frame {frame} not in period {self.period}")
        return i

    def row_range(self, start_frame: int, end_frame: int) -> tuple[int, int]:
        """Rows covering frames in [start_frame, end_frame], clamped."""
        lo = int(np.searchsorted(self.frames, start_frame, side="left"))
        hi = int(np.searchsorted(self.frames, end_frame, side="right"))
        return lo, hi

    def distance(self, player_id: str) -> np.ndarray:
        return self.distances[player_id]

    def relative_speed(self, player_id: str) -> np.ndarray:
        """Norm of (ball velocity - player velocity) on the ground plane."""
        rel = self.ball.vel[:, :2] - self.players[player_id].vel
        return np.linalg.norm(rel, axis=1)


def _segment_bounds(frames: np.ndarray) -> list[tuple[int, int]]:
    """Split rows into [start, end) ranges of consecutive frame indices."""
    if len(frames) == 0:
        return []
    breaks = np.nonzero(np.diff(frames) != 1)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks + 1, [len(frames)]))
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def _kinematics_for(
    pos: np.ndarray,
    fps: int,
    window: int,
    poly_order: int,
    segments: Sequence[tuple[int, int]],
) -> EntityKinematics:
    n = pos.shape[0]
    vel = np.zeros_like(pos)
    accel = np.zeros(n)
    speed_accel = np.zeros(n)
    for s, e in segments:
        seg = pos[s:e]
        if e - s < 2:
            continue
        v = np.gradient(seg, axis=0) * fps
        v = _smooth_segment(v, window, poly_order)
        vel[s:e] = v
        a_vec = np.gradient(v, axis=0) * fps
        a = np.linalg.norm(a_vec, axis=1)
        accel[s:e] = np.maximum(_smooth_segment(a, window, poly_order), 0.0)
        # scalar speed as arc-length rate: immune to direction changes, so
        # its derivative isolates genuine slow-downs and speed-ups
        steps = np.linalg.norm(np.diff(seg, axis=0), axis=1) * fps
        arc = np.empty(e - s)
        arc[0] = steps[0]
        arc[-1] = steps[-1]
        arc[1:-1] = 0.5 * (steps[:-1] + steps[1:])
        arc = _smooth_segment(arc, window, poly_order)
        sba = np.gradient(arc) * fps
        speed_accel[s:e] = _smooth_segment(sba, window, poly_order)
    speed = np.linalg.norm(vel, axis=1)
    return EntityKinematics(
        pos=pos, vel=vel, speed=speed, accel=accel, speed_accel=speed_accel
    )


def derive_kinematics(frames, fps: int, config: Optional[SyncConfig] = None) -> SignalSet:
    """Build the full SignalSet for one period.

    ``frames`` is either a list of TrackingFrame or an (already period-sliced)
    columnar table from :mod:`tracksync.ingest`. Gaps in the frame index
    split the series into segments; derivatives never straddle a gap.
    """
    config = config or SyncConfig()
    from .ingest import TrackingTable  # deferred to avoid a cycle

    if isinstance(frames, TrackingTable):
        table = frames
    else:
        table = TrackingTable.from_frames(list(frames))
    if len(table.frame) == 0:
        raise ValueError("cannot derive kinematics from an empty period")
    periods = np.unique(table.period)
    if len(periods) != 1:
        raise ValueError(f"expected one period, got {sorted(periods.tolist())}")

    window = config.sg_window(fps)
    segments = _segment_bounds(table.frame)
    ball = _kinematics_for(table.ball_xyz, fps, window, config.sg_poly_order, segments)
    players: dict[str, EntityKinematics] = {}
    distances: dict[str, np.ndarray] = {}
    ball_xy = table.ball_xyz[:, :2]
    for pid, xy in table.players.items():
        players[pid] = _kinematics_for(
            xy, fps, window, config.sg_poly_order, segments
        )
        distances[pid] = np.linalg.norm(xy - ball_xy, axis=1)
    return SignalSet(
        period=int(periods[0]),
        fps=fps,
        frames=table.frame.copy(),
        alive=table.alive.copy(),
        ball=ball,
        players=players,
        ball_height=table.ball_xyz[:, 2].copy(),
        distances=distances,
        segments=segments,
    )


@dataclass(frozen=True)
class ExtremaIndex:
    series_id: str
    kind: str  # "local_min" | "local_max"
    frames: np.ndarray


def _segment_extrema(values: np.ndarray, min_prominence: float) -> np.ndarray:
    """Strict local maxima (plateau centers, rounded half down) by position."""
    if len(values) < 3:
        return np.array([], dtype=int)
    peaks, props = find_peaks(values, prominence=min_prominence, plateau_size=1)
    # find_peaks reports ceil-middles of even plateaus; round half down instead.
    lefts = props.get("left_edges")
    rights = props.get("right_edges")
    if lefts is not None:
        peaks = (lefts + rights) // 2
    return peaks.astype(int)


def find_extrema(
    series,
    kind: str,
    min_prominence: float = 0.0,
    frames: Optional[np.ndarray] = None,
    series_id: str = "",
) -> ExtremaIndex:
    """Locate strict local extrema with at least the given prominence.

    Flat plateaus report their center element once (round half down). When a
    ``frames`` axis with gaps is supplied, extrema are found per contiguous
    segment and reported as frame indices; otherwise positions are returned.
    """
    values = np.asarray(series, dtype=float)
    if kind not in ("local_min", "local_max"):
        raise ValueError(f"kind must be local_min or local_max, got {kind!r}")
    signed = -values if kind == "local_min" else values
    if frames is None:
        frames = np.arange(len(values))
    segs = _segment_bounds(np.asarray(frames))
    out: list[np.ndarray] = []
    for s, e in segs:
        pos = _segment_extrema(signed[s:e], min_prominence)
        if len(pos):
            out.append(np.asarray(frames)[s:e][pos])
    found = np.concatenate(out) if out else np.array([], dtype=int)
    return ExtremaIndex(series_id=series_id, kind=kind, frames=np.sort(found))


def segment_episodes(frames, config: Optional[SyncConfig] = None) -> list[Episode]:
    """Segment one period's frames into episodes of uninterrupted open play.

    Episodes shorter than the minimum duration merge into a neighbor when the
    separating dead gap is short enough; absorbed gaps are recorded on the
    resulting episode.
    """
    config = config or SyncConfig()
    from .ingest import TrackingTable

    if isinstance(frames, TrackingTable):
        frame_idx, alive, fps = frames.frame, frames.alive, frames.fps
    else:
        frames = list(frames)
        if not frames:
            return []
        frame_idx = np.array([f.frame_index for f in frames])
        alive = np.array([f.ball_state == ALIVE for f in frames])
        fps = frames[0].fps

    runs: list[dict] = []  # {start, end, gaps: list}
    current: Optional[dict] = None
    for idx, is_alive in zip(frame_idx.tolist(), alive.tolist()):
        if is_alive:
            if current is None:
                current = {"start": idx, "end": idx, "gaps": []}
            else:
                current["end"] = idx
        elif current is not None:
            runs.append(current)
            current = None
    if current is not None:
        runs.append(current)

    min_frames = config.min_episode_s * fps
    gap_frames = config.merge_gap_s * fps

    def duration(run: dict) -> int:
        return run["end"] - run["start"] + 1

    def merge_span(a: int, b: int) -> dict:
        merged = dict(runs[a])
        merged["gaps"] = list(runs[a]["gaps"])
        for j in range(a + 1, b + 1):
            merged["gaps"].append((runs[j - 1]["end"] + 1, runs[j]["start"] - 1))
            merged["gaps"].extend(runs[j]["gaps"])
            merged["end"] = runs[j]["end"]
        return merged

    changed = True
    while changed and len(runs) > 1:
        changed = False
        for i, run in enumerate(runs):
            if duration(run) >= min_frames:
                continue
            prev_ok = i > 0 and run["start"] - runs[i - 1]["end"] - 1 < gap_frames
            next_ok = (
                i + 1 < len(runs)
                and runs[i + 1]["start"] - run["end"] - 1 < gap_frames
            )
            if not (prev_ok or next_ok):
                continue
            a = i - 1 if prev_ok else i
            b = i + 1 if next_ok else i
            runs[a : b + 1] = [merge_span(a, b)]
            changed = True
            break

    return [
        Episode(
            episode_id=i,
            start_frame=run["start"],
            end_frame=run["end"],
            absorbed_gaps=tuple(run["gaps"]),
        )
        for i, run in enumerate(runs)
    ]


def series_table(signals: SignalSet, names: Iterable[str]) -> "pandas.DataFrame":
    """Tabulate requested series for export (plotting / inspection).

    Valid names: ``ball_accel``, ``ball_speed``, ``ball_height``,
    ``dist:<player_id>``, ``speed:<player_id>``, ``accel:<player_id>``.
    """
    import pandas as pd

    cols: dict[str, np.ndarray] = {"frame": signals.frames}
    for name in names:
        if name == "ball_accel":
            cols[name] = signals.ball.accel
        elif name == "ball_speed":
            cols[name] = signals.ball.speed
        elif name == "ball_height":
            cols[name] = signals.ball_height
        elif name.startswith("dist:"):
            cols[name] = signals.distance(name.split(":", 1)[1])
        elif name.startswith("speed:"):
            cols[name] = signals.players[name.split(":", 1)[1]].speed
        elif name.startswith("accel:"):
            cols[name] = signals.players[name.split(":", 1)[1]].accel
        else:
            raise KeyError(f"unknown series {name!r}")
    return pd.DataFrame(cols)

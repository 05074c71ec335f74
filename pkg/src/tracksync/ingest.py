"""File ingestion, coordinate normalization and kick-off clock alignment.

Tracking files are long-format delimited text (one row per entity per
frame); event files are one row per annotated action. A schema config maps
provider column names and type strings so different exports fit without
code changes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from .config import SchemaConfig, SyncConfig
from .model import (
    ALIVE,
    CENTER_MARK,
    DEAD,
    PITCH_LENGTH,
    PITCH_WIDTH,
    Event,
    EventType,
    Position,
    TrackingFrame,
)
from .signal import SignalSet, find_extrema

log = logging.getLogger(__name__)

SUPPORTED_FPS = (10, 25)


class IngestError(ValueError):
    pass


class SchemaError(IngestError):
    pass


class ValidationError(IngestError):
    pass


class OrientationError(IngestError):
    pass


class KickoffNotFoundError(IngestError):
    pass


@dataclass
class TrackingTable:
    """Columnar tracking store: one row per frame, entities as columns.

    Player coordinates are NaN on frames where the entity is absent. This is
    the representation every numeric stage runs on; ``to_frames`` materializes
    the row-per-frame objects when object semantics are wanted.
    """

    period: np.ndarray  # (N,) int
    frame: np.ndarray  # (N,) int, sorted by (period, frame)
    fps: int
    ball_xyz: np.ndarray  # (N, 3)
    alive: np.ndarray  # (N,) bool
    players: dict[str, np.ndarray]  # pid -> (N, 2)
    teams: dict[str, str]  # pid -> team id

    def period_slice(self, period: int) -> "TrackingTable":
        mask = self.period == period
        return TrackingTable(
            period=self.period[mask],
            frame=self.frame[mask],
            fps=self.fps,
            ball_xyz=self.ball_xyz[mask],
            alive=self.alive[mask],
            players={p: xy[mask] for p, xy in self.players.items()},
            teams=self.teams,
        )

    def periods(self) -> list[int]:
        return sorted(int(p) for p in np.unique(self.period))

    def frame_range(self, period: int) -> tuple[int, int]:
        mask = self.period == period
        frames = self.frame[mask]
        return int(frames[0]), int(frames[-1])

    def to_frames(self) -> list[TrackingFrame]:
        out = []
        for i in range(len(self.frame)):
            players = {}
            for pid, xy in self.players.items():
                if not np.isnan(xy[i, 0]):
                    players[pid] = Position(float(xy[i, 0]), float(xy[i, 1]))
            out.append(
                TrackingFrame(
                    frame_index=int(self.frame[i]),
                    period=int(self.period[i]),
                    fps=self.fps,
                    players=players,
                    ball=Position(*map(float, self.ball_xyz[i])),
                    ball_state=ALIVE if self.alive[i] else DEAD,
                )
            )
        return out

    @classmethod
    def from_frames(cls, frames: Sequence[TrackingFrame]) -> "TrackingTable":
        if not frames:
            raise ValueError("no frames")
        n = len(frames)
        pids = sorted({p for f in frames for p in f.players})
        players = {p: np.full((n, 2), np.nan) for p in pids}
        ball = np.zeros((n, 3))
        period = np.zeros(n, dtype=int)
        frame = np.zeros(n, dtype=int)
        alive = np.zeros(n, dtype=bool)
        for i, f in enumerate(frames):
            period[i] = f.period
            frame[i] = f.frame_index
            ball[i] = (f.ball.x, f.ball.y, f.ball.z)
            alive[i] = f.ball_state == ALIVE
            for pid, pos in f.players.items():
                players[pid][i] = (pos.x, pos.y)
        return cls(
            period=period,
            frame=frame,
            fps=frames[0].fps,
            ball_xyz=ball,
            alive=alive,
            players=players,
            teams={},
        )


@dataclass
class MatchMetadata:
    match_id: str
    fps: int
    home_team: str
    away_team: str
    pitch_length: float
    pitch_width: float


@dataclass
class MatchData:
    """Everything one match contributes to the pipeline."""

    table: TrackingTable
    events: list[Event]
    metadata: MatchMetadata
    rosters: dict[str, tuple[str, ...]] = field(default_factory=dict)
    goalkeepers: dict[str, str] = field(default_factory=dict)

    def events_for(self, period: int) -> list[Event]:
        return [e for e in self.events if e.period == period]

    def frames_for(self, period: int) -> list[TrackingFrame]:
        return self.table.period_slice(period).to_frames()

    def team_of(self, player_id: str) -> str:
        return self.table.teams[player_id]


def _require_columns(df: pd.DataFrame, mapping: dict[str, str], required: Iterable[str], path) -> None:
    missing = [mapping[k] for k in required if mapping.get(k) not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required column(s) {missing}")


def _infer_fps(times: np.ndarray, frames: np.ndarray, periods: np.ndarray) -> int:
    deltas = []
    for p in np.unique(periods):
        mask = periods == p
        t = times[mask]
        f = frames[mask]
        step = np.diff(f)
        dt = np.diff(t)
        good = step > 0
        if good.any():
            deltas.append(dt[good] / step[good])
    if not deltas:
        raise SchemaError("cannot infer fps: no consecutive timestamped frames")
    median = float(np.median(np.concatenate(deltas)))
    if median <= 0:
        raise SchemaError(f"cannot infer fps from median frame delta {median}")
    fps = 1.0 / median
    for candidate in SUPPORTED_FPS:
        if abs(fps - candidate) < 0.5:
            return candidate
    raise SchemaError(f"inferred fps {fps:.2f} is not one of {SUPPORTED_FPS}")


def parse_tracking(path: str | Path, schema: SchemaConfig) -> TrackingTable:
    """Parse a long-format tracking file into a columnar table.

    Frames come out sorted by (period, frame); duplicate rows for the same
    (period, frame, entity) are rejected, as are alive frames with no ball.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"tracking file not found: {path}")
    cols = schema.tracking_columns
    try:
        df = pd.read_csv(path)
    except Exception as exc:  # malformed beyond repair
        raise IngestError(f"{path}: cannot parse: {exc}") from exc
    _require_columns(
        df, cols, ("period", "frame", "entity_id", "x", "y", "ball_state"), path
    )

    bad = df[cols["x"]].isna() | df[cols["y"]].isna()
    if bad.any():
        line = int(df.index[bad][0]) + 2  # header + 1-based
        raise IngestError(f"{path}: malformed row at line {line}: missing coordinate")

    dup = df.duplicated(subset=[cols["period"], cols["frame"], cols["entity_id"]])
    if dup.any():
        row = df[dup].iloc[0]
        raise ValidationError(
            f"{path}: duplicate row for period={row[cols['period']]} "
            f"frame={row[cols['frame']]} entity={row[cols['entity_id']]}"
        )

    df = df.sort_values([cols["period"], cols["frame"]], kind="stable")
    periods_all = df[cols["period"]].to_numpy(dtype=int)
    frames_all = df[cols["frame"]].to_numpy(dtype=int)

    ts_col = cols.get("timestamp")
    if ts_col and ts_col in df.columns:
        fps = _infer_fps(df[ts_col].to_numpy(dtype=float), frames_all, periods_all)
        if schema.fps is not None and schema.fps != fps:
            raise SchemaError(
                f"{path}: schema declares fps={schema.fps} but timestamps imply {fps}"
            )
    elif schema.fps is not None:
        fps = int(schema.fps)
        if fps not in SUPPORTED_FPS:
            raise SchemaError(f"fps must be one of {SUPPORTED_FPS}, got {fps}")
    else:
        raise SchemaError(
            f"{path}: no timestamp column {ts_col!r} and no fps declared in schema"
        )

    ball_mask = df[cols["entity_id"]].astype(str) == schema.ball_entity
    ball_df = df[ball_mask]
    player_df = df[~ball_mask]

    # unique (period, frame) axis
    pf = df[[cols["period"], cols["frame"]]].drop_duplicates()
    period = pf[cols["period"]].to_numpy(dtype=int)
    frame = pf[cols["frame"]].to_numpy(dtype=int)
    n = len(pf)
    index = {
        (int(p), int(f)): i for i, (p, f) in enumerate(zip(period, frame))
    }

    ball_xyz = np.full((n, 3), np.nan)
    alive = np.zeros(n, dtype=bool)
    z_col = cols.get("z")
    has_z = z_col and z_col in df.columns
    rows = [
        index[(int(p), int(f))]
        for p, f in zip(ball_df[cols["period"]], ball_df[cols["frame"]])
    ]
    ball_xyz[rows, 0] = ball_df[cols["x"]].to_numpy(dtype=float)
    ball_xyz[rows, 1] = ball_df[cols["y"]].to_numpy(dtype=float)
    ball_xyz[rows, 2] = (
        ball_df[z_col].to_numpy(dtype=float) if has_z else 0.0
    )
    alive[rows] = (
        ball_df[cols["ball_state"]].astype(str) == schema.alive_value
    ).to_numpy()

    if np.isnan(ball_xyz[alive, 0]).any():
        raise ValidationError(f"{path}: alive frame without a ball row")
    missing_ball = np.isnan(ball_xyz[:, 0])
    if missing_ball.any():
        # dead frames may lack a ball row; hold the last known position
        idx = np.where(~missing_ball, np.arange(n), -1)
        np.maximum.accumulate(idx, out=idx)
        first = ball_xyz[~missing_ball][0] if (~missing_ball).any() else np.zeros(3)
        ball_xyz = np.where(idx[:, None] >= 0, ball_xyz[np.maximum(idx, 0)], first)

    players: dict[str, np.ndarray] = {}
    teams: dict[str, str] = {}
    has_team = cols.get("team_id") and cols["team_id"] in df.columns
    for pid, group in player_df.groupby(cols["entity_id"], sort=True):
        pid = str(pid)
        xy = np.full((n, 2), np.nan)
        rows = [
            index[(int(p), int(f))]
            for p, f in zip(group[cols["period"]], group[cols["frame"]])
        ]
        xy[rows, 0] = group[cols["x"]].to_numpy(dtype=float)
        xy[rows, 1] = group[cols["y"]].to_numpy(dtype=float)
        players[pid] = xy
        if has_team:
            teams[pid] = str(group[cols["team_id"]].iloc[0])

    for p in np.unique(period):
        mask = (period == p) & alive
        if mask.any():
            counts = sum(
                (~np.isnan(xy[mask, 0])).astype(int) for xy in players.values()
            )
            if (counts == 0).any():
                raise ValidationError(
                    f"{path}: alive frame with empty player map in period {p}"
                )

    return TrackingTable(
        period=period,
        frame=frame,
        fps=fps,
        ball_xyz=ball_xyz,
        alive=alive,
        players=players,
        teams=teams,
    )


def parse_events(path: str | Path, schema: SchemaConfig) -> list[Event]:
    """Parse an event file; unmapped provider types are dropped with a warning."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"event file not found: {path}")
    cols = schema.event_columns
    df = pd.read_csv(path)
    _require_columns(
        df, cols, ("event_id", "period", "time", "type", "player", "team", "outcome"), path
    )
    if (df[cols["time"]].to_numpy(dtype=float) < 0).any():
        raise ValidationError(f"{path}: negative annotated time")

    events: list[Event] = []
    dropped: dict[str, int] = {}
    has_loc = cols.get("x") in df.columns and cols.get("y") in df.columns
    for _, row in df.iterrows():
        mapped = schema.map_type(str(row[cols["type"]]))
        if mapped is None:
            key = str(row[cols["type"]])
            dropped[key] = dropped.get(key, 0) + 1
            continue
        loc = None
        if has_loc and not pd.isna(row[cols["x"]]) and not pd.isna(row[cols["y"]]):
            loc = Position(float(row[cols["x"]]), float(row[cols["y"]]))
        outcome = (
            "success" if str(row[cols["outcome"]]) == schema.success_value else "failure"
        )
        events.append(
            Event(
                event_id=str(row[cols["event_id"]]),
                period=int(row[cols["period"]]),
                annotated_time=float(row[cols["time"]]),
                event_type=EventType(mapped),
                player_id=str(row[cols["player"]]),
                team_id=str(row[cols["team"]]),
                outcome=outcome,
                annotated_location=loc,
            )
        )
    if dropped:
        total = sum(dropped.values())
        log.warning(
            "%s: dropped %d event(s) with unmapped type(s): %s",
            path,
            total,
            sorted(dropped),
        )
    events.sort(key=lambda e: (e.period, e.annotated_time))
    return events


def load_match(
    tracking_path: str | Path, events_path: str | Path, schema: SchemaConfig
) -> MatchData:
    table = parse_tracking(tracking_path, schema)
    events = parse_events(events_path, schema)
    teams = sorted(set(table.teams.values()))
    home = schema.home_team or (teams[0] if teams else "home")
    away = schema.away_team or (teams[1] if len(teams) > 1 else "away")
    rosters: dict[str, list[str]] = {}
    for pid, team in table.teams.items():
        rosters.setdefault(team, []).append(pid)
    return MatchData(
        table=table,
        events=events,
        metadata=MatchMetadata(
            match_id=schema.match_id,
            fps=table.fps,
            home_team=home,
            away_team=away,
            pitch_length=schema.pitch_length,
            pitch_width=schema.pitch_width,
        ),
        rosters={t: tuple(sorted(ps)) for t, ps in rosters.items()},
        goalkeepers=dict(schema.goalkeepers),
    )


def _orientation_flip(
    table: TrackingTable, period: int, home_team: str, away_team: str,
    goalkeepers: dict[str, str], fps: int,
) -> bool:
    """True when the home team attacks right-to-left in this period."""
    sliced = table.period_slice(period)
    alive_rows = np.nonzero(sliced.alive)[0]
    if len(alive_rows) == 0:
        raise OrientationError(f"period {period} has no alive frames")
    window = alive_rows[: int(30 * fps)]

    def mean_x(pids: list[str]) -> float:
        vals = []
        for pid in pids:
            xy = sliced.players.get(pid)
            if xy is not None:
                x = xy[window, 0]
                vals.append(x[~np.isnan(x)])
        merged = np.concatenate(vals) if vals else np.array([])
        return float(np.mean(merged)) if len(merged) else np.nan

    gk_home = goalkeepers.get(home_team)
    gk_away = goalkeepers.get(away_team)
    if gk_home and gk_home in sliced.players:
        home_x = mean_x([gk_home])
        if not np.isnan(home_x):
            mid = PITCH_LENGTH / 2
            return home_x > mid

    home_pids = [p for p, t in table.teams.items() if t == home_team]
    away_pids = [p for p, t in table.teams.items() if t == away_team]
    home_x = mean_x(home_pids)
    away_x = mean_x(away_pids)
    if np.isnan(home_x) or np.isnan(away_x) or abs(home_x - away_x) < 2.0:
        raise OrientationError(
            f"period {period}: cannot determine attack direction "
            f"(home mean x {home_x:.2f}, away mean x {away_x:.2f})"
        )
    return home_x > away_x


def normalize(match: MatchData, config: Optional[SyncConfig] = None) -> MatchData:
    """Rescale to the 105 x 68 pitch and orient home left-to-right.

    Periods where the home team defends the right goal are reflected through
    the pitch center for every entity (and any annotated event locations, so
    files round-trip consistently). Player positions clamp to the pitch;
    the ball is allowed 1 m of out-of-bounds margin.
    """
    table = match.table
    meta = match.metadata
    sx = PITCH_LENGTH / meta.pitch_length
    sy = PITCH_WIDTH / meta.pitch_width

    ball = table.ball_xyz.copy()
    ball[:, 0] *= sx
    ball[:, 1] *= sy
    players = {p: xy * np.array([sx, sy]) for p, xy in table.players.items()}
    events = [replace(e) for e in match.events]
    for e in events:
        if e.annotated_location is not None:
            e.annotated_location = Position(
                e.annotated_location.x * sx,
                e.annotated_location.y * sy,
                e.annotated_location.z,
            )

    scaled = TrackingTable(
        period=table.period,
        frame=table.frame,
        fps=table.fps,
        ball_xyz=ball,
        alive=table.alive,
        players=players,
        teams=table.teams,
    )

    goalkeepers = match.goalkeepers or {}
    for period in scaled.periods():
        flip = _orientation_flip(
            scaled, period, meta.home_team, meta.away_team, goalkeepers, table.fps
        )
        if flip:
            mask = scaled.period == period
            ball[mask, 0] = PITCH_LENGTH - ball[mask, 0]
            ball[mask, 1] = PITCH_WIDTH - ball[mask, 1]
            for xy in players.values():
                xy[mask, 0] = PITCH_LENGTH - xy[mask, 0]
                xy[mask, 1] = PITCH_WIDTH - xy[mask, 1]
            for e in events:
                if e.period == period and e.annotated_location is not None:
                    e.annotated_location = Position(
                        PITCH_LENGTH - e.annotated_location.x,
                        PITCH_WIDTH - e.annotated_location.y,
                        e.annotated_location.z,
                    )

    for xy in players.values():
        np.clip(xy[:, 0], 0.0, PITCH_LENGTH, out=xy[:, 0])
        np.clip(xy[:, 1], 0.0, PITCH_WIDTH, out=xy[:, 1])
    np.clip(ball[:, 0], -1.0, PITCH_LENGTH + 1.0, out=ball[:, 0])
    np.clip(ball[:, 1], -1.0, PITCH_WIDTH + 1.0, out=ball[:, 1])
    np.clip(ball[:, 2], 0.0, None, out=ball[:, 2])

    return MatchData(
        table=scaled,
        events=events,
        metadata=replace(meta, pitch_length=PITCH_LENGTH, pitch_width=PITCH_WIDTH),
        rosters=match.rosters,
        goalkeepers=match.goalkeepers,
    )


def detect_kickoff(
    table: TrackingTable,
    signals: SignalSet,
    period: int,
    match: MatchData,
    config: Optional[SyncConfig] = None,
) -> int:
    """Find the kick-off frame of a period.

    The kick-off is the first smoothed-ball-acceleration peak of at least the
    configured magnitude at which the ball was near the center mark within
    the last second and at least 90% of each team's players were inside
    their own half one second earlier.
    """
    config = config or SyncConfig()
    sliced = table.period_slice(period)
    fps = table.fps
    lookback = int(round(config.kickoff_lookback_s * fps))
    cx, cy = CENTER_MARK
    mid = PITCH_LENGTH / 2

    center_dist = np.hypot(
        sliced.ball_xyz[:, 0] - cx, sliced.ball_xyz[:, 1] - cy
    )
    peaks = find_extrema(
        signals.ball.accel,
        "local_max",
        config.accel_prominence,
        frames=signals.frames,
        series_id="ball_accel",
    ).frames

    home = match.metadata.home_team
    for frame in peaks.tolist():
        i = signals.index_of(frame)
        if signals.ball.accel[i] < config.kickoff_min_accel:
            continue
        lo = max(0, i - lookback)
        if center_dist[lo : i + 1].min() > config.kickoff_center_radius:
            continue
        j = lo  # one second before the peak (or period start)
        ok = True
        for team in (match.metadata.home_team, match.metadata.away_team):
            xs = []
            for pid in match.rosters.get(team, ()):
                xy = sliced.players.get(pid)
                if xy is not None and not np.isnan(xy[j, 0]):
                    xs.append(xy[j, 0])
            if not xs:
                ok = False
                break
            xs = np.array(xs)
            own = (xs <= mid) if team == home else (xs >= mid)
            if own.mean() < config.kickoff_own_half_frac:
                ok = False
                break
        if ok:
            return int(frame)
    raise KickoffNotFoundError(f"no kick-off frame found in period {period}")


def apply_offset(
    events: Sequence[Event], kickoff_frame: int, kickoff_event_time: float, fps: int
) -> list[Event]:
    """Shift annotated times so the first event lands on the kick-off frame.

    The shift is constant, so inter-event gaps are preserved exactly; each
    event also gains its derived annotated frame.
    """
    shift = kickoff_frame / fps - kickoff_event_time
    out = []
    for e in events:
        t = e.annotated_time + shift
        out.append(
            replace(e, annotated_time=t, annotated_frame=int(round(t * fps)))
        )
    return out

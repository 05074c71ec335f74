"""Runtime configuration: thresholds, clip bounds, coefficients, file schemas.

Precedence when resolving values: command-line override > schema-config file
``overrides`` section > the built-in defaults below.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .model import EventType

STAGE_ORDERS = (
    "all-before-receive",
    "minors-after-receive",
    "incoming-and-minors-after-receive",
)
DEFAULT_STAGE_ORDER = "minors-after-receive"


@dataclass
class SyncConfig:
    """All tunable knobs of the synchronizer, with their defaults."""

    # Savitzky-Golay smoothing (window scales with frame rate)
    sg_window_25: int = 11
    sg_window_10: int = 5
    sg_poly_order: int = 2

    # extrema detection
    accel_prominence: float = 1.0
    distance_prominence: float = 0.2
    height_prominence: float = 0.2

    # candidate filters
    max_player_ball_dist: float = 3.0
    max_ball_height: float = 3.5

    # qualifying windows
    window_half_s: float = 5.0
    setpiece_window_s: float = 1.0

    # episode segmentation
    min_episode_s: float = 0.5
    merge_gap_s: float = 0.2

    # kick-off detection
    kickoff_center_radius: float = 3.0
    kickoff_own_half_frac: float = 0.9
    kickoff_min_accel: float = 3.0
    kickoff_lookback_s: float = 1.0

    # receive detection
    goal_restart_radius: float = 3.0

    # clip bounds of the scoring functions
    clip_pbd: float = 3.0
    clip_ba: float = 20.0
    clip_post_kd: float = 5.0
    clip_pre_kd: float = 5.0
    clip_fd_s: float = 5.0
    clip_cpbd: float = 3.0
    clip_npbd: float = 3.0
    clip_tobd: float = 3.0
    clip_pms_lo: float = 2.0
    clip_pms_hi: float = 7.0
    clip_pds: float = 3.0
    clip_poac_deg: float = 90.0
    clip_rba: float = 10.0

    # pipeline staging
    stage_order: str = DEFAULT_STAGE_ORDER

    def __post_init__(self) -> None:
        if self.stage_order not in STAGE_ORDERS:
            raise ValueError(
                f"stage_order must be one of {STAGE_ORDERS}, got {self.stage_order!r}"
            )

    def sg_window(self, fps: int) -> int:
        return self.sg_window_25 if fps == 25 else self.sg_window_10

    def with_overrides(self, overrides: dict[str, Any]) -> "SyncConfig":
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown config override(s): {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# Canonical tracking / event file columns. A schema config may rename any of
# them to fit a provider's export without code changes.
DEFAULT_TRACKING_COLUMNS = {
    "period": "period",
    "frame": "frame",
    "timestamp": "t",  # optional; used to infer fps
    "entity_id": "entity_id",
    "team_id": "team_id",
    "x": "x",
    "y": "y",
    "z": "z",  # optional; defaults to 0
    "ball_state": "ball_state",
}

DEFAULT_EVENT_COLUMNS = {
    "event_id": "event_id",
    "period": "period",
    "time": "time_s",
    "type": "type",
    "player": "player_id",
    "team": "team_id",
    "outcome": "outcome",
    "x": "x",  # optional
    "y": "y",  # optional
}

# Provider type strings -> canonical event types. Keys are compared after
# lowercasing and turning spaces into underscores, so "Ball Recovery" and
# "ball_recovery" both resolve. Includes the common SPADL aliases whose
# spelling differs from ours.
DEFAULT_TYPE_MAP = {t.value: t.value for t in EventType}
DEFAULT_TYPE_MAP.update(
    {
        "keeper_pick_up": "keeper_pickup",
        "goalkick": "goal_kick",
        "shot_penalty": "penalty_shot",
        "shot_freekick": "freekick_shot",
    }
)


@dataclass
class SchemaConfig:
    """Declares how to read one provider's files: column names, the provider
    type -> event type mapping, pitch dimensions and threshold overrides."""

    tracking_columns: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_TRACKING_COLUMNS)
    )
    event_columns: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_EVENT_COLUMNS)
    )
    type_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_TYPE_MAP))
    pitch_length: float = 105.0
    pitch_width: float = 68.0
    fps: Optional[int] = None  # required when no timestamp column exists
    ball_entity: str = "BALL"
    alive_value: str = "alive"
    dead_value: str = "dead"
    success_value: str = "success"
    home_team: Optional[str] = None
    away_team: Optional[str] = None
    goalkeepers: dict[str, str] = field(default_factory=dict)
    match_id: str = "match"
    overrides: dict[str, Any] = field(default_factory=dict)

    def map_type(self, provider_type: str) -> Optional[str]:
        key = provider_type.strip().lower().replace(" ", "_")
        return self.type_map.get(key)


def load_schema(path: str | Path) -> SchemaConfig:
    """Read a YAML schema config, merging partial sections over defaults."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    schema = SchemaConfig()
    if "tracking" in raw:
        schema.tracking_columns.update(raw["tracking"])
    if "events" in raw:
        schema.event_columns.update(raw["events"])
    if "type_map" in raw:
        for k, v in raw["type_map"].items():
            schema.type_map[str(k).strip().lower().replace(" ", "_")] = v
    pitch = raw.get("pitch", {})
    schema.pitch_length = float(pitch.get("length", schema.pitch_length))
    schema.pitch_width = float(pitch.get("width", schema.pitch_width))
    if raw.get("fps") is not None:
        schema.fps = int(raw["fps"])
    for key in (
        "ball_entity",
        "alive_value",
        "dead_value",
        "success_value",
        "home_team",
        "away_team",
        "match_id",
    ):
        if raw.get(key) is not None:
            setattr(schema, key, raw[key])
    if "goalkeepers" in raw:
        schema.goalkeepers = {str(k): str(v) for k, v in raw["goalkeepers"].items()}
    if "overrides" in raw:
        schema.overrides = dict(raw["overrides"])
    return schema


def save_schema(schema: SchemaConfig, path: str | Path) -> None:
    doc = {
        "tracking": schema.tracking_columns,
        "events": schema.event_columns,
        "type_map": schema.type_map,
        "pitch": {"length": schema.pitch_length, "width": schema.pitch_width},
        "fps": schema.fps,
        "ball_entity": schema.ball_entity,
        "alive_value": schema.alive_value,
        "dead_value": schema.dead_value,
        "success_value": schema.success_value,
        "home_team": schema.home_team,
        "away_team": schema.away_team,
        "goalkeepers": schema.goalkeepers,
        "match_id": schema.match_id,
        "overrides": schema.overrides,
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))


def resolve_config(
    schema: Optional[SchemaConfig] = None,
    cli_overrides: Optional[dict[str, Any]] = None,
) -> SyncConfig:
    """Apply precedence: defaults < schema overrides < CLI overrides."""
    cfg = SyncConfig()
    if schema is not None and schema.overrides:
        cfg = cfg.with_overrides(schema.overrides)
    if cli_overrides:
        cfg = cfg.with_overrides(cli_overrides)
    return cfg

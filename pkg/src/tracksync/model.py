"""Domain types shared by every stage of the synchronization pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

PITCH_LENGTH = 105.0
PITCH_WIDTH = 68.0
CENTER_MARK = (52.5, 34.0)

# Receiver sentinels for pass-like events that do not end at a player.
OUT = "OUT"
GOAL = "GOAL"

ALIVE = "alive"
DEAD = "dead"


class Category(str, Enum):
    """Four-way event partition driving stage membership and reporting."""

    PASS_LIKE = "pass_like"
    SET_PIECE = "set_piece"
    INCOMING = "incoming"
    MINOR = "minor"


class EventType(str, Enum):
    # open-play pass-like
    PASS = "pass"
    CROSS = "cross"
    SHOT = "shot"
    CLEARANCE = "clearance"
    KEEPER_PUNCH = "keeper_punch"
    SHOT_BLOCK = "shot_block"
    # set-piece pass-like
    THROW_IN = "throw_in"
    GOAL_KICK = "goal_kick"
    CORNER_SHORT = "corner_short"
    CORNER_CROSSED = "corner_crossed"
    FREEKICK_SHORT = "freekick_short"
    FREEKICK_CROSSED = "freekick_crossed"
    FREEKICK_SHOT = "freekick_shot"
    PENALTY_SHOT = "penalty_shot"
    # incoming (ball-gaining)
    INTERCEPTION = "interception"
    KEEPER_SAVE = "keeper_save"
    KEEPER_CLAIM = "keeper_claim"
    KEEPER_PICKUP = "keeper_pickup"
    KEEPER_SWEEP = "keeper_sweep"
    BALL_RECOVERY = "ball_recovery"
    # minor (contested / low-signal)
    TACKLE = "tackle"
    FOUL = "foul"
    BAD_TOUCH = "bad_touch"
    TAKE_ON = "take_on"
    DISPOSSESSED = "dispossessed"

    @property
    def category(self) -> Category:
        return _CATEGORY_OF[self]

    @property
    def sends_ball(self) -> bool:
        """True for every event that sends the ball away and therefore has an
        end frame and a receiver (open-play pass-like and set-piece types)."""
        cat = _CATEGORY_OF[self]
        return cat is Category.PASS_LIKE or cat is Category.SET_PIECE

    @property
    def is_shot(self) -> bool:
        return self in _SHOT_TYPES


_CATEGORY_OF: dict[EventType, Category] = {}
for _et in (
    EventType.PASS,
    EventType.CROSS,
    EventType.SHOT,
    EventType.CLEARANCE,
    EventType.KEEPER_PUNCH,
    EventType.SHOT_BLOCK,
):
    _CATEGORY_OF[_et] = Category.PASS_LIKE
for _et in (
    EventType.THROW_IN,
    EventType.GOAL_KICK,
    EventType.CORNER_SHORT,
    EventType.CORNER_CROSSED,
    EventType.FREEKICK_SHORT,
    EventType.FREEKICK_CROSSED,
    EventType.FREEKICK_SHOT,
    EventType.PENALTY_SHOT,
):
    _CATEGORY_OF[_et] = Category.SET_PIECE
for _et in (
    EventType.INTERCEPTION,
    EventType.KEEPER_SAVE,
    EventType.KEEPER_CLAIM,
    EventType.KEEPER_PICKUP,
    EventType.KEEPER_SWEEP,
    EventType.BALL_RECOVERY,
):
    _CATEGORY_OF[_et] = Category.INCOMING
for _et in (
    EventType.TACKLE,
    EventType.FOUL,
    EventType.BAD_TOUCH,
    EventType.TAKE_ON,
    EventType.DISPOSSESSED,
):
    _CATEGORY_OF[_et] = Category.MINOR

_SHOT_TYPES = frozenset(
    {EventType.SHOT, EventType.FREEKICK_SHOT, EventType.PENALTY_SHOT}
)

# Types that, when they follow a pass-like event, mark its reception directly.
RECEIVE_LIKE_TYPES = frozenset(
    {EventType.SHOT_BLOCK, EventType.KEEPER_PUNCH}
    | {t for t, c in _CATEGORY_OF.items() if c is Category.INCOMING}
)


@dataclass(frozen=True)
class Position:
    """Pitch coordinates in meters. Players live on the ground plane (z = 0);
    only the ball carries height."""

    x: float
    y: float
    z: float = 0.0


@dataclass(frozen=True)
class TrackingFrame:
    """One time-sampled snapshot of everything on the pitch."""

    frame_index: int
    period: int
    fps: int
    players: Mapping[str, Position]
    ball: Position
    ball_state: str  # ALIVE or DEAD


@dataclass
class Event:
    """One annotated on-the-ball action.

    ``annotated_location`` is carried through for file round-trips only; the
    synchronizer never reads it. ``annotated_frame`` is derived once the
    kick-off offset has been removed.
    """

    event_id: str
    period: int
    annotated_time: float
    event_type: EventType
    player_id: str
    team_id: str
    outcome: str  # "success" | "failure"
    annotated_location: Optional[Position] = None
    annotated_frame: Optional[int] = None

    @property
    def category(self) -> Category:
        return self.event_type.category


@dataclass(frozen=True)
class Episode:
    """Maximal run of open-play frames. ``absorbed_gaps`` lists short dead
    gaps swallowed by the merge rule, so alive-frame accounting stays exact."""

    episode_id: int
    start_frame: int
    end_frame: int
    absorbed_gaps: tuple = ()

    def contains(self, frame: int) -> bool:
        return self.start_frame <= frame <= self.end_frame


@dataclass
class SyncResult:
    """Synchronizer output for one event.

    ``start_frame is None`` exactly when ``valid`` is False: no candidate
    survived filtering. ``end_frame``/``receiver`` are set for pass-like
    events only; ``receiver`` is a player id or the OUT/GOAL sentinel.
    """

    event_id: str
    start_frame: Optional[int] = None
    end_frame: Optional[int] = None
    receiver: Optional[str] = None
    score: float = 0.0
    valid: bool = False

    def __post_init__(self) -> None:
        if self.valid != (self.start_frame is not None):
            raise ValueError(
                f"{self.event_id}: valid={self.valid} inconsistent with "
                f"start_frame={self.start_frame}"
            )
        if self.end_frame is not None and self.start_frame is not None:
            if self.end_frame < self.start_frame:
                raise ValueError(
                    f"{self.event_id}: end_frame {self.end_frame} precedes "
                    f"start_frame {self.start_frame}"
                )


@dataclass(frozen=True)
class ScoreCoefficients:
    """Scaling coefficients for the additive candidate score. Any subset
    active in one scoring context sums to 100 so totals stay in [0, 100].

    lam1 player-ball distance, lam2 ball acceleration, lam3 post-event kick
    distance, lam4 pre-event kick distance, lam5 frame delay, lam6 closest
    player-ball distance, lam7 next player-ball distance.
    """

    lam1: float = 0.0
    lam2: float = 0.0
    lam3: float = 0.0
    lam4: float = 0.0
    lam5: float = 0.0
    lam6: float = 0.0
    lam7: float = 0.0

    @classmethod
    def for_pass_like(cls) -> "ScoreCoefficients":
        return cls(lam1=20.0, lam2=20.0, lam3=20.0, lam4=0.0, lam5=40.0)

    @classmethod
    def for_incoming(cls) -> "ScoreCoefficients":
        return cls(lam1=20.0, lam2=20.0, lam3=0.0, lam4=20.0, lam5=40.0)

    @classmethod
    def for_receive(cls) -> "ScoreCoefficients":
        return cls(lam2=25.0, lam4=25.0, lam6=25.0, lam7=25.0)

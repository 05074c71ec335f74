"""Clipped-linear feature scores for candidate frames.

Every score is a coefficient times a clipped linear map of one motion
feature. This module sees numbers only: annotated event locations are not
reachable from here, which is what makes the synchronizer location-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .config import SyncConfig
from .model import EventType


class ScoringError(ValueError):
    pass


def clip_linear(x: float, x0: float, x1: float) -> float:
    """Map x to [0, 1]: 0 at or below x0, 1 at or above x1, linear between."""
    if x0 >= x1:
        raise ScoringError(f"clip bounds must satisfy x0 < x1, got ({x0}, {x1})")
    if x <= x0:
        return 0.0
    if x >= x1:
        return 1.0
    return (x - x0) / (x1 - x0)


def score_pbd(d: float, lam: float, clip: float = 3.0) -> float:
    """Player-ball distance: touching the ball scores full, far scores zero."""
    return lam * (1.0 - clip_linear(d, 0.0, clip))


def score_ba(a: float, lam: float, clip: float = 20.0) -> float:
    """Ball acceleration: abrupt trajectory changes score high."""
    return lam * clip_linear(a, 0.0, clip)


def score_post_kd(max_d_after: float, lam: float, clip: float = 5.0) -> float:
    """Post-event kick distance: how far the ball gets away afterwards.

    High values separate a kick from a dribble touch.
    """
    return lam * clip_linear(max_d_after, 0.0, clip)


def score_pre_kd(max_d_before: float, lam: float, clip: float = 5.0) -> float:
    """Pre-event kick distance: how far the ball was beforehand.

    High values separate a first touch from follow-up touches.
    """
    return lam * clip_linear(max_d_before, 0.0, clip)


def score_fd(t_k: int, t_a: int, fps: int, lam: float, clip_s: float = 5.0) -> float:
    """Frame delay: penalize candidates later than the annotated frame."""
    delay_s = max((t_k - t_a) / fps, 0.0)
    return lam * (1.0 - clip_linear(delay_s, 0.0, clip_s))


def score_cpbd(min_dist: float, lam: float, clip: float = 3.0) -> float:
    """Closest candidate-receiver distance (receive detection)."""
    return lam * (1.0 - clip_linear(min_dist, 0.0, clip))


def score_npbd(dist_next_player: float, lam: float, clip: float = 3.0) -> float:
    """Next event player's ball distance (receive detection)."""
    return lam * (1.0 - clip_linear(dist_next_player, 0.0, clip))


# Feature sets per minor event type, in scoring order.
MINOR_FEATURES = {
    EventType.TACKLE: ("PBD", "BA", "TOBD"),
    EventType.TAKE_ON: ("BA", "TOBD", "PMS", "PDS", "POAC"),
    EventType.DISPOSSESSED: ("PBD", "PostKD", "RBA"),
}


def score_minor_features(
    features: Mapping[str, float],
    event_type: EventType,
    config: Optional[SyncConfig] = None,
) -> float:
    """Equal-weight clipped-linear score for a minor event candidate.

    Directions: TOBD decreasing; PMS, PDS, POAC and RBA increasing; PBD,
    BA and PostKD behave as in the main scores. Coefficients are equal
    within a type and sum to 100.
    """
    config = config or SyncConfig()
    try:
        names = MINOR_FEATURES[event_type]
    except KeyError:
        raise ScoringError(f"{event_type.value} has no minor feature set")
    missing = [n for n in names if n not in features]
    if missing:
        raise ScoringError(f"{event_type.value} candidate missing {missing}")
    lam = 100.0 / len(names)
    total = 0.0
    for name in names:
        x = features[name]
        if name == "PBD":
            total += score_pbd(x, lam, config.clip_pbd)
        elif name == "BA":
            total += score_ba(x, lam, config.clip_ba)
        elif name == "PostKD":
            total += score_post_kd(x, lam, config.clip_post_kd)
        elif name == "TOBD":
            total += lam * (1.0 - clip_linear(x, 0.0, config.clip_tobd))
        elif name == "PMS":
            total += lam * clip_linear(x, config.clip_pms_lo, config.clip_pms_hi)
        elif name == "PDS":
            total += lam * clip_linear(x, 0.0, config.clip_pds)
        elif name == "POAC":
            total += lam * clip_linear(x, 0.0, config.clip_poac_deg)
        elif name == "RBA":
            total += lam * clip_linear(x, 0.0, config.clip_rba)
    return total


@dataclass
class CandidateFrame:
    """One scored candidate: raw feature values and the weighted total."""

    frame: int
    features: dict[str, float] = field(default_factory=dict)
    total_score: float = 0.0

"""tracksync: align soccer event annotations with tracking data using
motion features derived from the tracking stream alone."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Category,
    Episode,
    Event,
    EventType,
    Position,
    ScoreCoefficients,
    SyncResult,
    TrackingFrame,
)

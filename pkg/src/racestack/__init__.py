"""racestack: closed-loop autonomous racing stack on cone-delimited tracks."""

__version__ = "0.1.0"

from .core import Cone, ConeColor, Pose2, RandomStream, TrackDefinition  # noqa: F401

"""Exception types shared across the simulator."""


class GlidesimError(Exception):
    """Base class for all simulator errors."""


class MalformedMap(GlidesimError):
    """Map file violates the on-disk schema."""


class InvariantViolation(GlidesimError):
    """A loaded map breaks a structural invariant (dangling edge, blocked polyline, ...)."""


class NotAJunction(GlidesimError):
    """Node has no exits other than the one we arrived through."""


class OriginOccupied(GlidesimError):
    """Raycast or scan origin lies inside an occupied cell."""


class NoPath(GlidesimError):
    """Global planner found no route between start and goal."""


class PlanExhausted(GlidesimError):
    """Pose projects beyond the final waypoint without having arrived."""


class AllZeroLikelihood(GlidesimError):
    """Every particle scored zero likelihood; filter was reset."""


class ScriptExhausted(GlidesimError):
    """Scripted route ran out of turns before the run finished."""


class DanglingEdge(GlidesimError):
    """Junction exit references an edge missing from the graph."""


class GuidanceFault(GlidesimError):
    """Mode state machine hit an unrecoverable condition."""


class SimTimeout(GlidesimError):
    """Run exceeded its simulated-time budget."""


class CorruptLog(GlidesimError):
    """Event log failed to parse or is truncated."""

    def __init__(self, message, last_valid_tick=None):
        super().__init__(message)
        self.last_valid_tick = last_valid_tick

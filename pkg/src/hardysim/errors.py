"""Exception hierarchy.

Precondition failures derive from ``ValueError`` so callers can treat them
like any bad argument; :class:`InvariantError` signals an internal bug.
"""


class HardyError(Exception):
    pass


class StageError(HardyError, ValueError):
    """A state, projector or map was used at the wrong interferometer stage."""


class ZeroProbabilityError(HardyError, ValueError):
    """Conditioning on an outcome that cannot occur."""


class PartitionError(HardyError, ValueError):
    pass


class ScheduleError(HardyError, ValueError):
    pass


class ContradictoryClaims(HardyError, ValueError):
    pass


class InvariantError(HardyError, RuntimeError):
    """An internal consistency check failed."""

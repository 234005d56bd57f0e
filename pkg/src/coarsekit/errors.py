"""Exception types shared across the toolkit."""

from __future__ import annotations


class CoarseKitError(Exception):
    """Base class for all toolkit errors."""


class MetricViolation(CoarseKitError):
    """A distance matrix breaks a metric axiom.

    kind is one of: shape, negative, diagonal, asymmetry, zero_offdiag,
    triangle, overflow. where holds the offending indices.
    """

    def __init__(self, kind: str, where: tuple[int, ...] = (), message: str | None = None):
        self.kind = kind
        self.where = where
        super().__init__(message or f"metric violation: {kind} at {where}")


class AmbientMismatch(CoarseKitError):
    """Operands live in different ambient spaces."""


class InvalidScale(CoarseKitError):
    """A scale parameter was not a positive rational."""


class SizeLimitExceeded(CoarseKitError):
    """Exhaustive search requested beyond the configured point limit."""


class ScheduleError(CoarseKitError):
    """A challenge schedule is empty, non-increasing, or exhausted."""


class ControlError(CoarseKitError):
    """A coarse-map control function is invalid or violated by the map."""


class GenerationError(CoarseKitError):
    """A space generator could not produce a valid space."""


class MoveRejected(CoarseKitError):
    """A game move failed legality checks; carries the engine verdict.

    witness_pair, when set, holds the two offending point lists so user
    interfaces can highlight them.
    """

    def __init__(self, reason: str, verdict=None):
        self.reason = reason
        self.verdict = verdict
        self.witness_pair: list[list[int]] | None = None
        super().__init__(reason)


class StageAssertionFailure(CoarseKitError):
    """An amalgamation stage broke one of the asserted properties."""

    def __init__(self, stage: int, prop: str, witness=None):
        self.stage = stage
        self.prop = prop
        self.witness = witness
        super().__init__(f"amalgamation stage {stage} failed property {prop}: {witness}")


class DegenerateTree(CoarseKitError):
    """A witness normalizer came out zero; the partition tree is unusable."""

"""Exception types raised across the library.

Every error that callers are expected to catch derives from SecAggError;
plain ValueError/TypeError are reserved for caller programming mistakes.
"""

from __future__ import annotations


class SecAggError(Exception):
    """Base class for all protocol and arithmetic errors."""


class ZeroInverse(SecAggError):
    """Multiplicative inverse of zero requested in a prime field."""


class LengthMismatch(SecAggError):
    """Vector operands (or a vector and its declared length) disagree."""


class InvalidThreshold(SecAggError):
    """Secret-sharing threshold t outside 1 <= t <= n."""


class InsufficientShares(SecAggError):
    """Fewer distinct shares supplied than the reconstruction threshold."""


class DuplicateEvaluationPoint(SecAggError):
    """Two shares carry the same evaluation point x."""


class InvalidPublicElement(SecAggError):
    """Byte string is not a valid public element of the key-agreement group."""


class AuthenticationFailure(SecAggError):
    """A sealed box failed to open: wrong key, wrong context, or tampering.

    ``sender`` carries the claimed originator of the offending box when the
    failure surfaces during share delivery.
    """

    def __init__(self, message: str = "authentication failure", sender: int | None = None):
        super().__init__(message)
        self.sender = sender


class MissingSeed(SecAggError):
    """A pairwise seed table lacks an entry for a required peer."""


class PhaseViolation(SecAggError):
    """A state machine was driven out of its monotone phase order."""


class InsufficientParticipants(SecAggError):
    """A round's participant set is too small (or missing a required member).

    ``ids`` carries the offending participant set for diagnostics.
    """

    def __init__(self, message: str, ids: tuple[int, ...] = ()):
        super().__init__(f"{message} (participants: {sorted(ids)})" if ids else message)
        self.ids = tuple(sorted(ids))


class ThresholdNotMet(SecAggError):
    """Fewer than t live participants at some round; the protocol aborts."""


class ReconstructionFailure(SecAggError):
    """Fewer than t usable shares for a secret the server must rebuild."""


class MalformedMessage(SecAggError):
    """Wire bytes cannot be decoded.

    ``reason`` is one of ``"truncated"``, ``"unknown_tag"``,
    ``"length_mismatch"`` so callers can distinguish the failure mode.
    """

    TRUNCATED = "truncated"
    UNKNOWN_TAG = "unknown_tag"
    LENGTH_MISMATCH = "length_mismatch"

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason

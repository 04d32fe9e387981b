"""Shared exception types mapped to CLI exit codes (see cli module)."""


class ConfigError(ValueError):
    """Bad scenario/parameter configuration; CLI exit code 2."""


class InvalidStateError(RuntimeError):
    """Operation applied in the wrong lifecycle state."""


class ProofRejectedError(RuntimeError):
    """A VRF proof failed verification where one was required."""


class SearchBoundError(ValueError):
    """Exhaustive search asked to exceed its factorial/exponential bound."""


class TraceError(ValueError):
    """Event trace is truncated or structurally malformed."""

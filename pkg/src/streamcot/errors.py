"""Exception types shared across the toolkit."""


class StreamcotError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(StreamcotError):
    """An arrangement or run configuration violates its invariants."""


class OnsetBeforeInformation(ConfigError):
    """A word-indexed reasoning onset falls outside [1, N)."""


class SequenceBudgetError(StreamcotError, OverflowError):
    """Token placement exhausted the frame-length budget."""


class MalformedStream(StreamcotError):
    """A monologue stream cannot be parsed into ASR/CoT/response regions."""


class OracleUnavailable(StreamcotError):
    """The remote scoring service could not be reached after retries."""


class SchemaError(StreamcotError):
    """A wire-format payload does not match the expected schema."""


class ResidualTarget(StreamcotError):
    """A target token fell into the truncated residual probability bucket."""


class SupportMismatch(StreamcotError):
    """Two prefix scores cover target sequences of different lengths."""


class EmptyTarget(StreamcotError):
    """A completeness curve was requested for an empty (R, A) target."""


class EmptyMask(StreamcotError):
    """A scoring mask selects no frames."""


class TokenNotInVocab(StreamcotError):
    """A tabular policy was asked about a token outside its vocabulary."""


class DivergenceError(StreamcotError):
    """Training loss became non-finite."""


class NoResponse(StreamcotError):
    """Latency requested for an arrangement without a response."""


class MissingStartCot(StreamcotError):
    """Start-CoT gap requested for an arrangement without a CoT marker."""


class EmptyReference(StreamcotError):
    """WER requested against an empty reference."""


class JudgeUnavailable(StreamcotError):
    """The remote judge service could not be reached."""

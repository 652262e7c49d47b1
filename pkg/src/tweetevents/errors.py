"""Exception types shared across the package."""


class TweetEventsError(Exception):
    """Base class for all package-specific errors."""


class ParseError(TweetEventsError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(TweetEventsError):
    """Well-formed input that violates the data model (unknown event,
    unknown subtask id, label outside the label set, ...)."""


class ValidationError(TweetEventsError):
    """A value failed an integrity check (bad offsets, substring mismatch)."""


class AlignmentError(TweetEventsError):
    """A candidate chunk could not be located in the tokenized tweet."""


class ChunkerError(TweetEventsError):
    """A chunker backend failed; carries the tweet id it failed on."""

    def __init__(self, message, tweet_id=None):
        if tweet_id is not None:
            message = f"tweet {tweet_id}: {message}"
        super().__init__(message)
        self.tweet_id = tweet_id


class TransportError(TweetEventsError):
    """A fetcher failed to reach its backend. Retryable; distinct from a
    tweet that is definitively gone (NOT_FOUND, modeled as ``None``)."""


class ConfigError(TweetEventsError):
    """Run configuration is missing or inconsistent."""


class FingerprintMismatchError(TweetEventsError):
    """An artifact was produced under a different config fingerprint."""

"""Exception types shared across the harness."""


class CasbenchError(Exception):
    """Base class for all harness errors."""


class SchemaError(CasbenchError):
    """A record file violates its schema. Carries the offending line number."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class ConfigError(CasbenchError):
    """Invalid run configuration. Carries the offending field path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(CasbenchError):
    """Answer string falls outside the supported grammar subset."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if expected else ""
        super().__init__(f"at offset {offset}: {message}{detail}")


class NoCodeBlock(CasbenchError):
    """Completion contained no fenced guest-language code block."""


class NoBoxedAnswer(CasbenchError):
    """No balanced \\boxed{...} span found in the text."""


class InvalidState(CasbenchError):
    """An operation was called in a state its contract forbids."""


class TransportError(CasbenchError):
    """Live backend failed at the transport level after exhausting retries."""

    def __init__(self, message, request_tag=""):
        self.request_tag = request_tag
        super().__init__(f"{message} [request {request_tag}]" if request_tag else message)


class AuthError(TransportError):
    """Live backend rejected the credential."""


class ProviderError(TransportError):
    """Live backend returned a non-retryable error or an unusable body."""


class CassetteMiss(CasbenchError):
    """Replay backend holds no entry for the request key."""

    def __init__(self, key, request_tag=""):
        self.key = key
        self.request_tag = request_tag
        super().__init__(f"no cassette entry for key {key} [request {request_tag}]")


class SandboxError(CasbenchError):
    """The sandbox worker failed to start, violated the protocol, or died without a report."""


class EmptyRun(CasbenchError):
    """Metrics were requested over zero episodes."""


class UnknownEpisodeId(CasbenchError):
    """An episode log references a problem id absent from the corpus."""


class DivisionByZero(CasbenchError):
    """Guard for metric ratios with a zero denominator."""

"""Exception types, grouped by the failure category the CLI maps to exit codes."""


class HighlightForgeError(Exception):
    """Base class for everything raised by this package."""


class GeometryError(HighlightForgeError, ValueError):
    """A box or scale operation violated a geometric invariant."""


class ParseError(HighlightForgeError, ValueError):
    """Malformed input text; the message carries line/column context."""


class UnknownLabelError(ParseError):
    """A label outside the four-event vocabulary."""


class ConfigError(HighlightForgeError, ValueError):
    """Bad configuration value, unknown key, or missing input file."""


class ToolNotFoundError(HighlightForgeError, RuntimeError):
    """A required external tool is not on PATH."""


class TransportError(HighlightForgeError, RuntimeError):
    """The sidecar connection failed or dropped. Retryable."""


class WireProtocolError(HighlightForgeError, RuntimeError):
    """The sidecar sent a malformed or mismatched response. Fatal for the frame."""


class CommandFailedError(HighlightForgeError, RuntimeError):
    """An external command exited nonzero."""

"""Exception hierarchy.

Every error raised on purpose by the package derives from ``PMVOSError``.
File-format errors carry a short ``code`` string so callers (and the CLI)
can tell malformed-file cases apart without parsing messages.
"""


class PMVOSError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PMVOSError, ValueError):
    """Input data is malformed (non-finite values, wrong layout)."""


class InvalidArgumentError(PMVOSError, ValueError):
    """An argument is out of range or shapes do not agree."""


class PreconditionError(PMVOSError, RuntimeError):
    """An operation was called on a state that does not support it."""


class EmptyTargetError(InvalidArgumentError):
    """The initial mask contains no foreground pixels."""


class FormatError(PMVOSError, ValueError):
    code = "format"


class BadMagicError(FormatError):
    code = "bad-magic"


class TruncatedPayloadError(FormatError):
    code = "truncated-payload"


class NonFiniteError(FormatError):
    code = "non-finite"


class LabelRangeError(FormatError):
    code = "label-range"


class ConfigError(FormatError):
    code = "config"

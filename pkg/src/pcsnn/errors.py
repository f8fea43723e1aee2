"""Exception types shared across the package."""


class InputError(ValueError):
    """Rejected input: wrong shape, out-of-range value, or broken invariant."""


class FormatError(ValueError):
    """A byte or text payload does not follow its container format."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid experiment configuration, optionally pinned to a source line."""

    def __init__(self, message, line=None, lineno=None):
        self.line = line
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}: {line.strip()!r}"
        super().__init__(message)

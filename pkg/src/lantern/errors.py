"""Exception types shared across the stack."""


class LanternError(Exception):
    pass


class DomainError(LanternError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(LanternError, ValueError):
    """A configuration value or parameter set violates an invariant."""


class StreamError(LanternError):
    """A sensor stream is malformed (e.g. non-monotone timestamps)."""


class ProtocolError(LanternError):
    """A wire message could not be decoded."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail

"""Exception hierarchy shared by every module."""


class SyncPermError(Exception):
    """Base class for library errors."""


class InvalidInputError(SyncPermError, ValueError):
    """Malformed or out-of-domain input (NaN, negative x, too few observations)."""


class UnsupportedDesignError(SyncPermError):
    """The layout is outside what a procedure supports (e.g. CSP/USP unbalance)."""


class ConfigError(SyncPermError, ValueError):
    """Invalid simulation configuration."""

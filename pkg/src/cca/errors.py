"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error records without string matching.
"""

from __future__ import annotations


class CcaError(ValueError):
    """Base class for all library errors."""

    code = "cca_error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def record(self) -> dict:
        return {"error": self.code, "message": str(self)}


class NoBoundPairError(CcaError):
    code = "no_bound_pair"


class ZeroGapError(CcaError):
    code = "zero_gap"


class RegimeError(CcaError):
    code = "regime_mismatch"


class ConfigError(CcaError):
    """Config parse/validation failure, located by line number and key."""

    code = "config_error"

    def __init__(self, message: str, line: int | None = None, key: str | None = None,
                 code: str | None = None):
        super().__init__(message, code)
        self.line = line
        self.key = key

    def record(self) -> dict:
        rec = super().record()
        rec["line"] = self.line
        rec["key"] = self.key
        return rec

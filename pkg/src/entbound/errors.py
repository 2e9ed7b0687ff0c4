"""Exception types shared across the package.

Loaders and validators raise typed errors so the CLI can map them onto
exit codes: input/format/resource problems exit 2, physics/consistency
failures exit 1.
"""
from __future__ import annotations


class EntboundError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(EntboundError):
    """Malformed input file (bad header, bad cell, bad magic, truncation).

    ``code`` distinguishes machine-checkable failure modes, e.g.
    ``bad-magic``, ``truncated``, ``grid-mismatch``, ``bad-header``,
    ``bad-cell``, ``bad-version``, ``unknown-field``, ``missing-field``.
    """

    def __init__(self, message: str, *, path: str | None = None,
                 line: int | None = None, code: str | None = None):
        self.path = path
        self.line = line
        self.code = code
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}:"
        elif line is not None:
            loc = f"line {line}: "
        super().__init__(f"{loc} {message}".strip() if loc else message)


class ValidationError(EntboundError):
    """Input passed parsing but violates a physical or structural precondition."""


class InputError(EntboundError):
    """Required input is missing or arguments are inconsistent."""


class ResourceError(EntboundError):
    """Problem size exceeds a configured cap."""


class NumericError(EntboundError):
    """A numeric result failed an internal sanity check (residues, convergence)."""


class InternalConsistencyError(NumericError):
    """Two independent evaluation paths disagreed beyond tolerance."""

"""Shared exception hierarchy.

Modules define their own subclasses close to where they are raised; the CLI
maps these bases to exit codes.
"""

from __future__ import annotations


class AuthorKGError(Exception):
    """Base class for all package errors."""


class UserError(AuthorKGError):
    """Bad input supplied by the operator (config, arguments, missing files)."""


class DependencyError(AuthorKGError):
    """A pipeline stage was run before (or against stale) upstream outputs."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class NotFoundError(AuthorKGError):
    """A referenced entity (author, descriptor) is not in the index."""


class RetriableError(AuthorKGError):
    """Transient failure, safe to retry (network, remote endpoint)."""

"""HTTP service wrapping the solvers."""

from .app import app

__all__ = ["app"]

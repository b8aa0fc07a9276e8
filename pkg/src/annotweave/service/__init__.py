"""HTTP API for the browser UI."""

from .app import create_app, serve
from .sessions import SessionManager

__all__ = ["SessionManager", "create_app", "serve"]

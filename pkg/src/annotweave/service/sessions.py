"""Server-side session state: open projects and GrabCut refinement sessions."""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import AnnotweaveError, IoFailure
from ..masks.grabcut import GrabCutResult
from ..model import AnnotationStore, Project
from ..storage import (
    LoadedProject,
    ProjectLock,
    ProjectSettings,
    backup_annotations,
    load_project,
    load_settings,
)

GRABCUT_TTL_SECONDS = 600.0


class NotFound(AnnotweaveError):
    """Unknown project, frame, object, or session token."""


@dataclass
class GrabCutSession:
    token: str
    frame_index: int
    result: GrabCutResult
    touched: float = field(default_factory=time.monotonic)

    def touch(self):
        self.touched = time.monotonic()

    @property
    def expired(self) -> bool:
        return time.monotonic() - self.touched > GRABCUT_TTL_SECONDS


@dataclass
class ProjectSession:
    id: str
    project: Project
    store: AnnotationStore
    settings: ProjectSettings
    lock: ProjectLock
    problems: list[str]
    mutex: threading.RLock = field(default_factory=threading.RLock)
    grabcut: dict[str, GrabCutSession] = field(default_factory=dict)

    @property
    def root(self) -> Path:
        return Path(self.project.root_dir)

    def purge_grabcut(self) -> None:
        for token in [t for t, s in self.grabcut.items() if s.expired]:
            del self.grabcut[token]

    def grabcut_session(self, token: str) -> GrabCutSession:
        self.purge_grabcut()
        session = self.grabcut.get(token)
        if session is None:
            raise NotFound(f"no GrabCut session {token!r} (expired or never created)")
        session.touch()
        return session

    def add_grabcut(self, frame_index: int, result: GrabCutResult) -> GrabCutSession:
        self.purge_grabcut()
        token = secrets.token_hex(8)
        session = GrabCutSession(token, frame_index, result)
        self.grabcut[token] = session
        return session


class SessionManager:
    """Open projects keyed by session ID; one writable session per root."""

    def __init__(self, projects_root: Optional[Path] = None):
        self.projects_root = Path(projects_root).resolve() if projects_root else None
        self.sessions: dict[str, ProjectSession] = {}
        self._mutex = threading.Lock()

    def resolve_root(self, root: str) -> Path:
        path = Path(root)
        if not path.is_absolute():
            base = self.projects_root or Path.cwd()
            path = base / path
        path = path.resolve()
        if self.projects_root is not None and not path.is_relative_to(self.projects_root):
            raise IoFailure(f"{root!r} is outside the configured projects root")
        return path

    def open(self, root: str, settings: Optional[ProjectSettings] = None) -> ProjectSession:
        path = self.resolve_root(root)
        backup_annotations(path)  # timestamped copy on every open
        lock = ProjectLock(path).acquire()
        try:
            loaded: LoadedProject = load_project(path, settings)
        except Exception:
            lock.release()
            raise
        session = ProjectSession(
            id=secrets.token_hex(8),
            project=loaded.project,
            store=loaded.store,
            settings=settings or load_settings(path),
            lock=lock,
            problems=loaded.problems,
        )
        with self._mutex:
            self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> ProjectSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFound(f"no open project with id {session_id!r}")
        return session

    def close(self, session_id: str) -> None:
        with self._mutex:
            session = self.sessions.pop(session_id, None)
        if session is not None:
            session.lock.release()

    def close_all(self) -> None:
        for session_id in list(self.sessions):
            self.close(session_id)

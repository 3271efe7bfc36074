"""HTTP service exposing generation, test delivery, review, and reports."""

from .app import AppState, create_app
from .study_store import Conflict, StudyStore

__all__ = ["AppState", "Conflict", "StudyStore", "create_app"]

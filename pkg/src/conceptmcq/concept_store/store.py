"""SQLite-backed concept store.

Scalar fields (keys, titles, grades, ordinals) live in real columns so they
can be indexed and queried; nested pedagogical payloads live in JSON columns.
Misconception text is additionally mirrored into an FTS5 index for keyword
search. Imports replace the whole map atomically.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from datetime import datetime, timezone
from pathlib import Path

from .document import MapValidationError, load_map_document, map_to_document
from .model import ConceptMap, ContextBundle, Subtopic, Topic, Unit
from . import document as _document


class UnknownGrade(LookupError):
    """Requested grade is not part of the stored map."""


class TopicNotFound(LookupError):
    """Requested topic key does not exist in the stored map."""


class CorruptSubtopic(ValueError):
    """Stored subtopic payload failed to parse; names the offending row."""


_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS grades (
    grade INTEGER PRIMARY KEY
);
CREATE TABLE IF NOT EXISTS units (
    key TEXT PRIMARY KEY,
    title TEXT NOT NULL,
    grade INTEGER NOT NULL REFERENCES grades(grade),
    ordinal INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS topics (
    key TEXT PRIMARY KEY,
    unit_key TEXT NOT NULL REFERENCES units(key),
    title TEXT NOT NULL,
    overview TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS subtopics (
    key TEXT NOT NULL,
    topic_key TEXT NOT NULL REFERENCES topics(key),
    title TEXT NOT NULL,
    payload TEXT NOT NULL,
    PRIMARY KEY (topic_key, key)
);
CREATE INDEX IF NOT EXISTS idx_subtopics_topic ON subtopics(topic_key);
CREATE INDEX IF NOT EXISTS idx_units_grade ON units(grade);
CREATE VIRTUAL TABLE IF NOT EXISTS misconceptions_fts USING fts5(
    topic_key UNINDEXED,
    subtopic_key UNINDEXED,
    text
);
"""


class ConceptStore:
    """Persistent concept map with deterministic context retrieval.

    Every read goes through ``_audit`` so tests can assert which tables a
    retrieval touched; the audit log is a plain list of (table, key) pairs.
    """

    def __init__(self, path: "str | Path" = ":memory:"):
        self._path = str(path)
        self._conn = sqlite3.connect(self._path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.executescript(_SCHEMA)
        self._lock = threading.RLock()
        self.query_audit: list[tuple[str, str]] = []

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "ConceptStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _audit(self, table: str, key: str) -> None:
        self.query_audit.append((table, key))

    # -- import / export ----------------------------------------------------

    def import_document(self, doc: dict) -> ConceptMap:
        """Validate and load a map document, replacing any stored map atomically."""
        cmap = load_map_document(doc)  # raises MapValidationError with all issues
        with self._lock, self._conn:
            c = self._conn
            c.execute("DELETE FROM misconceptions_fts")
            c.execute("DELETE FROM subtopics")
            c.execute("DELETE FROM topics")
            c.execute("DELETE FROM units")
            c.execute("DELETE FROM grades")
            c.execute("DELETE FROM meta")
            c.execute(
                "INSERT INTO meta(key, value) VALUES (?, ?), (?, ?), (?, ?)",
                (
                    "title", cmap.title,
                    "schema_version", str(_document.SCHEMA_VERSION),
                    "imported_at", datetime.now(timezone.utc).isoformat(),
                ),
            )
            c.executemany("INSERT INTO grades(grade) VALUES (?)", [(g,) for g in cmap.grades])
            for unit in cmap.units:
                c.execute(
                    "INSERT INTO units(key, title, grade, ordinal) VALUES (?, ?, ?, ?)",
                    (unit.key, unit.title, unit.grade, unit.ordinal),
                )
                for topic in unit.topics:
                    c.execute(
                        "INSERT INTO topics(key, unit_key, title, overview) VALUES (?, ?, ?, ?)",
                        (topic.key, unit.key, topic.title, topic.overview),
                    )
                    for sub in topic.subtopics:
                        payload = json.dumps(
                            _document._subtopic_to(sub), ensure_ascii=False, sort_keys=True
                        )
                        c.execute(
                            "INSERT INTO subtopics(key, topic_key, title, payload)"
                            " VALUES (?, ?, ?, ?)",
                            (sub.key, topic.key, sub.title, payload),
                        )
                        for text in sub.misconceptions:
                            c.execute(
                                "INSERT INTO misconceptions_fts(topic_key, subtopic_key, text)"
                                " VALUES (?, ?, ?)",
                                (topic.key, sub.key, text),
                            )
        return cmap

    def export_map(self) -> ConceptMap:
        """Reconstruct the full map from storage."""
        with self._lock:
            grades = tuple(
                r["grade"] for r in self._conn.execute("SELECT grade FROM grades ORDER BY grade")
            )
            title_row = self._conn.execute(
                "SELECT value FROM meta WHERE key = 'title'"
            ).fetchone()
            units = []
            for urow in self._conn.execute(
                "SELECT key, title, grade, ordinal FROM units ORDER BY ordinal, key"
            ):
                topics = []
                for trow in self._conn.execute(
                    "SELECT key, title, overview FROM topics WHERE unit_key = ? ORDER BY key",
                    (urow["key"],),
                ):
                    topics.append(
                        Topic(
                            key=trow["key"],
                            title=trow["title"],
                            overview=trow["overview"],
                            subtopics=self._load_subtopics(trow["key"]),
                        )
                    )
                units.append(
                    Unit(
                        key=urow["key"],
                        title=urow["title"],
                        grade=urow["grade"],
                        ordinal=urow["ordinal"],
                        topics=tuple(topics),
                    )
                )
        return ConceptMap(
            grades=grades,
            units=tuple(units),
            title=title_row["value"] if title_row else "Concept map",
        )

    def export_document(self) -> dict:
        return map_to_document(self.export_map())

    def _load_subtopics(self, topic_key: str) -> tuple[Subtopic, ...]:
        subs = []
        for row in self._conn.execute(
            "SELECT key, payload FROM subtopics WHERE topic_key = ? ORDER BY key",
            (topic_key,),
        ):
            try:
                data = json.loads(row["payload"])
                subs.append(_document._subtopic_from(data))
            except (ValueError, KeyError, TypeError) as exc:
                raise CorruptSubtopic(
                    f"subtopic {row['key']!r} under topic {topic_key!r}"
                    f" has an unreadable payload: {exc}"
                ) from exc
        return tuple(subs)

    # -- queries ------------------------------------------------------------

    def list_grades(self) -> tuple[int, ...]:
        with self._lock:
            self._audit("grades", "*")
            return tuple(
                r["grade"] for r in self._conn.execute("SELECT grade FROM grades ORDER BY grade")
            )

    def list_units(self, grade: "int | None" = None) -> tuple[Unit, ...]:
        with self._lock:
            if grade is not None:
                self._audit("grades", str(grade))
                known = self._conn.execute(
                    "SELECT 1 FROM grades WHERE grade = ?", (grade,)
                ).fetchone()
                if known is None:
                    raise UnknownGrade(f"grade {grade} is not in the stored map")
                rows = self._conn.execute(
                    "SELECT key, title, grade, ordinal FROM units WHERE grade = ?"
                    " ORDER BY ordinal, key",
                    (grade,),
                ).fetchall()
            else:
                rows = self._conn.execute(
                    "SELECT key, title, grade, ordinal FROM units ORDER BY ordinal, key"
                ).fetchall()
            self._audit("units", "*" if grade is None else f"grade={grade}")
            return tuple(
                Unit(key=r["key"], title=r["title"], grade=r["grade"], ordinal=r["ordinal"])
                for r in rows
            )

    def list_topics(self, unit_key: "str | None" = None) -> tuple[tuple[str, str], ...]:
        """(key, title) pairs, sorted by key."""
        with self._lock:
            self._audit("topics", unit_key or "*")
            if unit_key is None:
                rows = self._conn.execute("SELECT key, title FROM topics ORDER BY key")
            else:
                rows = self._conn.execute(
                    "SELECT key, title FROM topics WHERE unit_key = ? ORDER BY key",
                    (unit_key,),
                )
            return tuple((r["key"], r["title"]) for r in rows)

    def topic_titles(self) -> dict[str, str]:
        """Lowercased title -> topic key, for exact-title matching."""
        with self._lock:
            self._audit("topics", "*")
            rows = self._conn.execute("SELECT key, title FROM topics").fetchall()
        return {r["title"].strip().lower(): r["key"] for r in rows}

    def retrieve_context(self, topic_key: str) -> ContextBundle:
        """Assemble the full context bundle for one topic.

        Deterministic with respect to map content: subtopics come back in
        key order and the bundle's prompt_text is byte-stable.
        """
        with self._lock:
            self._audit("topics", topic_key)
            trow = self._conn.execute(
                "SELECT key, unit_key, title FROM topics WHERE key = ?", (topic_key,)
            ).fetchone()
            if trow is None:
                raise TopicNotFound(f"topic {topic_key!r} is not in the stored map")
            self._audit("units", trow["unit_key"])
            urow = self._conn.execute(
                "SELECT title, grade FROM units WHERE key = ?", (trow["unit_key"],)
            ).fetchone()
            self._audit("subtopics", topic_key)
            subtopics = self._load_subtopics(topic_key)
        return ContextBundle(
            topic_key=topic_key,
            topic_title=trow["title"],
            unit_title=urow["title"],
            grade=urow["grade"],
            subtopics=subtopics,
        )

    def search_misconceptions(self, query: str) -> tuple[tuple[str, str, str], ...]:
        """Full-text search over misconception text; (topic, subtopic, text) rows."""
        with self._lock:
            self._audit("misconceptions_fts", query)
            rows = self._conn.execute(
                "SELECT topic_key, subtopic_key, text FROM misconceptions_fts"
                " WHERE misconceptions_fts MATCH ? ORDER BY rank",
                (query,),
            ).fetchall()
        return tuple((r["topic_key"], r["subtopic_key"], r["text"]) for r in rows)

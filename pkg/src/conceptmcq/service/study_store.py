"""SQLite persistence for the study workflow.

Holds the question bank, assembled test versions, learner responses,
expert annotations, and access sessions. Responses and annotations are
append-only: a resubmission marks the prior row superseded instead of
deleting it.
"""

from __future__ import annotations

import json
import secrets
import sqlite3
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..expert_eval import DistractorRating, ExpertAnnotation, TriState
from ..learner_eval import Difficulty, LearnerResponse
from ..taxonomy import SkillLevel

_SCHEMA = """
CREATE TABLE IF NOT EXISTS questions (
    id TEXT PRIMARY KEY,
    strategy TEXT NOT NULL,
    topic TEXT NOT NULL,
    skill TEXT NOT NULL,
    grade INTEGER NOT NULL,
    correct_label TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS versions (
    version_id TEXT PRIMARY KEY
);
CREATE TABLE IF NOT EXISTS version_items (
    version_id TEXT NOT NULL REFERENCES versions(version_id),
    position INTEGER NOT NULL,
    question_id TEXT NOT NULL REFERENCES questions(id),
    PRIMARY KEY (version_id, position)
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    role TEXT NOT NULL,
    student_id TEXT,
    rater_id TEXT,
    version_id TEXT,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS responses (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    student_id TEXT NOT NULL,
    question_id TEXT NOT NULL REFERENCES questions(id),
    version_id TEXT NOT NULL,
    strategy TEXT NOT NULL,
    attempted INTEGER NOT NULL,
    correct INTEGER NOT NULL,
    guessed INTEGER NOT NULL,
    difficulty INTEGER,
    response_time_s REAL,
    submitted_at TEXT NOT NULL,
    superseded INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS annotations (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    question_id TEXT NOT NULL REFERENCES questions(id),
    rater_id TEXT NOT NULL,
    payload TEXT NOT NULL,
    created_at TEXT NOT NULL,
    superseded INTEGER NOT NULL DEFAULT 0
);
"""


class Conflict(Exception):
    """The request refers to something that does not fit the stored state."""


class StudyStore:
    def __init__(self, path: "str | Path" = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.executescript(_SCHEMA)
        self._lock = threading.RLock()

    def close(self) -> None:
        self._conn.close()

    @staticmethod
    def _now() -> str:
        return datetime.now(timezone.utc).isoformat()

    # -- questions -------------------------------------------------------------

    def add_question(self, item: dict, strategy: str, topic: str, grade: int) -> None:
        """Store one assessment item document (idempotent on identical id)."""
        with self._lock, self._conn:
            existing = self._conn.execute(
                "SELECT payload FROM questions WHERE id = ?", (item["id"],)
            ).fetchone()
            if existing is not None:
                if json.loads(existing["payload"])["question"] != item["question"]:
                    raise Conflict(f"question id {item['id']!r} already stored with different text")
                return
            self._conn.execute(
                "INSERT INTO questions(id, strategy, topic, skill, grade, correct_label, payload)"
                " VALUES (?, ?, ?, ?, ?, ?, ?)",
                (
                    item["id"],
                    strategy,
                    topic,
                    item["skill"],
                    grade,
                    item["correct_label"],
                    json.dumps(item, ensure_ascii=False, sort_keys=True),
                ),
            )

    def get_question(self, question_id: str) -> "dict | None":
        with self._lock:
            row = self._conn.execute(
                "SELECT strategy, topic, grade, payload FROM questions WHERE id = ?",
                (question_id,),
            ).fetchone()
        if row is None:
            return None
        payload = json.loads(row["payload"])
        payload["strategy"] = row["strategy"]
        payload["topic"] = row["topic"]
        payload["grade"] = row["grade"]
        return payload

    def count_questions(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) AS n FROM questions").fetchone()["n"]

    # -- versions ---------------------------------------------------------------

    def register_version(self, version_id: str, question_ids: "list[str]") -> None:
        with self._lock, self._conn:
            if self._conn.execute(
                "SELECT 1 FROM versions WHERE version_id = ?", (version_id,)
            ).fetchone():
                raise Conflict(f"version {version_id!r} already registered")
            missing = [
                qid
                for qid in question_ids
                if not self._conn.execute(
                    "SELECT 1 FROM questions WHERE id = ?", (qid,)
                ).fetchone()
            ]
            if missing:
                raise Conflict(f"unknown question id(s): {', '.join(missing)}")
            self._conn.execute("INSERT INTO versions(version_id) VALUES (?)", (version_id,))
            self._conn.executemany(
                "INSERT INTO version_items(version_id, position, question_id) VALUES (?, ?, ?)",
                [(version_id, pos, qid) for pos, qid in enumerate(question_ids)],
            )

    def list_versions(self) -> "list[str]":
        with self._lock:
            rows = self._conn.execute("SELECT version_id FROM versions ORDER BY version_id")
            return [r["version_id"] for r in rows]

    def get_version_items(self, version_id: str) -> "list[dict] | None":
        with self._lock:
            if not self._conn.execute(
                "SELECT 1 FROM versions WHERE version_id = ?", (version_id,)
            ).fetchone():
                return None
            rows = self._conn.execute(
                "SELECT question_id FROM version_items WHERE version_id = ? ORDER BY position",
                (version_id,),
            ).fetchall()
        return [self.get_question(r["question_id"]) for r in rows]

    def version_question_ids(self, version_id: str) -> "set[str] | None":
        with self._lock:
            if not self._conn.execute(
                "SELECT 1 FROM versions WHERE version_id = ?", (version_id,)
            ).fetchone():
                return None
            rows = self._conn.execute(
                "SELECT question_id FROM version_items WHERE version_id = ?", (version_id,)
            ).fetchall()
        return {r["question_id"] for r in rows}

    # -- sessions ----------------------------------------------------------------

    def create_session(
        self,
        role: str,
        student_id: "str | None" = None,
        rater_id: "str | None" = None,
        version_id: "str | None" = None,
    ) -> str:
        token = secrets.token_urlsafe(24)
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO sessions(token, role, student_id, rater_id, version_id, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (token, role, student_id, rater_id, version_id, self._now()),
            )
        return token

    def get_session(self, token: str) -> "dict | None":
        with self._lock:
            row = self._conn.execute(
                "SELECT token, role, student_id, rater_id, version_id FROM sessions"
                " WHERE token = ?",
                (token,),
            ).fetchone()
        return dict(row) if row else None

    # -- responses ------------------------------------------------------------------

    def record_response(self, response: LearnerResponse, version_id: str) -> bool:
        """Insert one graded response; returns True when it supersedes a prior one."""
        with self._lock, self._conn:
            prior = self._conn.execute(
                "SELECT id FROM responses WHERE student_id = ? AND question_id = ?"
                " AND superseded = 0",
                (response.student_id, response.question_id),
            ).fetchall()
            for row in prior:
                self._conn.execute(
                    "UPDATE responses SET superseded = 1 WHERE id = ?", (row["id"],)
                )
            self._conn.execute(
                "INSERT INTO responses(student_id, question_id, version_id, strategy,"
                " attempted, correct, guessed, difficulty, response_time_s, submitted_at)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    response.student_id,
                    response.question_id,
                    version_id,
                    response.strategy,
                    int(response.attempted),
                    int(response.correct),
                    int(response.guessed),
                    int(response.difficulty) if response.difficulty is not None else None,
                    response.response_time_s,
                    self._now(),
                ),
            )
            return bool(prior)

    def list_responses(self) -> "list[LearnerResponse]":
        with self._lock:
            rows = self._conn.execute(
                "SELECT student_id, question_id, strategy, attempted, correct, guessed,"
                " difficulty, response_time_s FROM responses WHERE superseded = 0 ORDER BY id"
            ).fetchall()
        return [
            LearnerResponse(
                student_id=r["student_id"],
                question_id=r["question_id"],
                strategy=r["strategy"],
                attempted=bool(r["attempted"]),
                correct=bool(r["correct"]),
                guessed=bool(r["guessed"]),
                difficulty=Difficulty(r["difficulty"]) if r["difficulty"] is not None else None,
                response_time_s=r["response_time_s"],
            )
            for r in rows
        ]

    # -- annotations -------------------------------------------------------------------

    def record_annotation(self, annotation: ExpertAnnotation) -> bool:
        """Insert one annotation; returns True when it supersedes a prior one."""
        payload = {
            "relevance": annotation.relevance.value,
            "correctness": annotation.correctness.value,
            "grade_level": annotation.grade_level.value,
            "similarity": annotation.similarity.value,
            "blooms_level": (
                annotation.blooms_level.name.lower() if annotation.blooms_level else None
            ),
            "distractors": [
                {
                    "plausibility": d.plausibility.value,
                    "misconception": d.misconception.value,
                    "independence": d.independence.value,
                }
                for d in annotation.distractors
            ],
            "strategy": annotation.strategy,
        }
        with self._lock, self._conn:
            prior = self._conn.execute(
                "SELECT id FROM annotations WHERE question_id = ? AND rater_id = ?"
                " AND superseded = 0",
                (annotation.question_id, annotation.rater_id),
            ).fetchall()
            for row in prior:
                self._conn.execute(
                    "UPDATE annotations SET superseded = 1 WHERE id = ?", (row["id"],)
                )
            self._conn.execute(
                "INSERT INTO annotations(question_id, rater_id, payload, created_at)"
                " VALUES (?, ?, ?, ?)",
                (
                    annotation.question_id,
                    annotation.rater_id,
                    json.dumps(payload, ensure_ascii=False, sort_keys=True),
                    self._now(),
                ),
            )
            return bool(prior)

    def list_annotations(self) -> "list[ExpertAnnotation]":
        with self._lock:
            rows = self._conn.execute(
                "SELECT question_id, rater_id, payload FROM annotations"
                " WHERE superseded = 0 ORDER BY id"
            ).fetchall()
        out = []
        for r in rows:
            p = json.loads(r["payload"])
            out.append(
                ExpertAnnotation(
                    question_id=r["question_id"],
                    rater_id=r["rater_id"],
                    relevance=TriState(p["relevance"]),
                    correctness=TriState(p["correctness"]),
                    grade_level=TriState(p["grade_level"]),
                    similarity=TriState(p["similarity"]),
                    blooms_level=(
                        SkillLevel.parse(p["blooms_level"]) if p["blooms_level"] else None
                    ),
                    distractors=tuple(
                        DistractorRating(
                            plausibility=TriState(d["plausibility"]),
                            misconception=TriState(d["misconception"]),
                            independence=TriState(d["independence"]),
                        )
                        for d in p["distractors"]
                    ),
                    strategy=p.get("strategy"),
                )
            )
        return out

    def review_queue(self) -> "list[dict]":
        """Questions with fewer than two active annotations, oldest ids first."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT q.id AS id, q.strategy AS strategy, q.topic AS topic,"
                " COUNT(DISTINCT a.rater_id) AS raters"
                " FROM questions q LEFT JOIN annotations a"
                " ON a.question_id = q.id AND a.superseded = 0"
                " GROUP BY q.id HAVING raters < 2 ORDER BY q.id"
            ).fetchall()
        return [dict(r) for r in rows]

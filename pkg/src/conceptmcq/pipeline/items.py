"""Pydantic models for generated questions and assessments."""

from __future__ import annotations

import hashlib
from datetime import datetime
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..taxonomy import SkillLevel

OPTION_LABELS = ("A", "B", "C", "D")


class Strategy(str, Enum):
    """How a question was produced."""

    CONCEPT_MAP = "concept_map"
    BASE_LLM = "base_llm"


class MCQOption(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    text: str

    @field_validator("label")
    @classmethod
    def _label_known(cls, v: str) -> str:
        if v not in OPTION_LABELS:
            raise ValueError(f"option label must be one of {OPTION_LABELS}, got {v!r}")
        return v

    @field_validator("text")
    @classmethod
    def _text_nonempty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("option text must be non-empty")
        return v


class DistractorRationale(BaseModel):
    """Why one wrong option is tempting: the misconception it encodes."""

    model_config = ConfigDict(frozen=True)

    label: str
    misconception: str

    @field_validator("label")
    @classmethod
    def _label_known(cls, v: str) -> str:
        if v not in OPTION_LABELS:
            raise ValueError(f"rationale label must be one of {OPTION_LABELS}, got {v!r}")
        return v


class MCQItem(BaseModel):
    """One validated four-option question."""

    model_config = ConfigDict(frozen=True)

    id: str
    strategy: Strategy
    topic: str
    matched_topic_key: Optional[str] = None
    grade: int
    skill: SkillLevel
    question: str
    options: tuple[MCQOption, ...]
    correct_label: str
    explanation: str
    distractor_rationales: tuple[DistractorRationale, ...]
    attempts_used: int = 1
    was_fixed: bool = False

    @model_validator(mode="after")
    def _structure(self) -> "MCQItem":
        labels = [o.label for o in self.options]
        if labels != list(OPTION_LABELS):
            raise ValueError(f"options must be labelled {OPTION_LABELS} in order, got {labels}")
        if self.correct_label not in OPTION_LABELS:
            raise ValueError(f"correct_label must be one of {OPTION_LABELS}")
        expected = sorted(set(OPTION_LABELS) - {self.correct_label})
        got = sorted(r.label for r in self.distractor_rationales)
        if got != expected:
            raise ValueError(
                f"distractor rationales must cover exactly the wrong options"
                f" {expected}, got {got}"
            )
        if not self.question.strip():
            raise ValueError("question stem must be non-empty")
        return self

    @staticmethod
    def make_id(strategy: Strategy, topic: str, skill: SkillLevel, question: str) -> str:
        raw = f"{strategy.value}|{topic}|{skill.name}|{question}"
        return hashlib.sha1(raw.encode("utf-8")).hexdigest()[:12]


class EvaluationVerdict(BaseModel):
    """Joint outcome of the two validity checks on one candidate."""

    model_config = ConfigDict(frozen=True)

    unique: bool
    correct: bool
    issues: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.unique and self.correct


class Omission(BaseModel):
    """A skill the pipeline could not produce a valid question for."""

    model_config = ConfigDict(frozen=True)

    skill: SkillLevel
    reason: str
    detail: str = ""


class PipelineRequest(BaseModel):
    """What to generate: topic, grade, strategy, and the skills to cover."""

    model_config = ConfigDict(frozen=True)

    topic: str
    grade: int
    strategy: Strategy = Strategy.CONCEPT_MAP
    skills: tuple[SkillLevel, ...] = (
        SkillLevel.REMEMBER,
        SkillLevel.UNDERSTAND,
        SkillLevel.APPLY,
        SkillLevel.ANALYZE,
        SkillLevel.EVALUATE,
    )

    @field_validator("topic")
    @classmethod
    def _topic_nonempty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("topic must be non-empty")
        return v

    @field_validator("grade")
    @classmethod
    def _grade_range(cls, v: int) -> int:
        if not 1 <= v <= 12:
            raise ValueError(f"grade must be between 1 and 12, got {v}")
        return v

    @field_validator("skills")
    @classmethod
    def _skills_ordered(cls, v: tuple[SkillLevel, ...]) -> tuple[SkillLevel, ...]:
        if not v:
            raise ValueError("at least one skill is required")
        if len(set(v)) != len(v):
            raise ValueError("skills must not repeat")
        if list(v) != sorted(v):
            raise ValueError("skills must be in ascending order")
        if SkillLevel.CREATE in v:
            raise ValueError("the highest skill level is not supported for selection items")
        return v


class Assessment(BaseModel):
    """Result of one pipeline run."""

    model_config = ConfigDict(frozen=True)

    topic: str
    extracted_topic: str
    matched_topic_key: Optional[str]
    grade: int
    strategy: Strategy
    items: tuple[MCQItem, ...]
    omissions: tuple[Omission, ...]
    transcript_digest: str
    created_at: datetime


ASSESSMENT_FORMAT = "phyq"
ASSESSMENT_VERSION = 1


def assessment_to_document(a: Assessment) -> dict:
    """Serialize an assessment to its interchange document."""
    return {
        "format": ASSESSMENT_FORMAT,
        "version": ASSESSMENT_VERSION,
        "topic": a.topic,
        "extracted_topic": a.extracted_topic,
        "matched_topic_key": a.matched_topic_key,
        "grade": a.grade,
        "strategy": a.strategy.value,
        "created_at": a.created_at.isoformat(),
        "transcript_digest": a.transcript_digest,
        "items": [
            {
                "id": q.id,
                "skill": q.skill.name.lower(),
                "question": q.question,
                "options": [{"label": o.label, "text": o.text} for o in q.options],
                "correct_label": q.correct_label,
                "explanation": q.explanation,
                "distractor_rationales": [
                    {"label": r.label, "misconception": r.misconception}
                    for r in q.distractor_rationales
                ],
                "attempts_used": q.attempts_used,
                "was_fixed": q.was_fixed,
            }
            for q in a.items
        ],
        "omissions": [
            {"skill": o.skill.name.lower(), "reason": o.reason, "detail": o.detail}
            for o in a.omissions
        ],
    }


def validate_assessment_document(doc: Any) -> list[str]:
    """Check an assessment document; returns a list of violations (empty = valid)."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        return ["document must be a JSON object"]
    if doc.get("format") != ASSESSMENT_FORMAT:
        problems.append(f"format must be {ASSESSMENT_FORMAT!r}, got {doc.get('format')!r}")
    if doc.get("version") != ASSESSMENT_VERSION:
        problems.append(f"version must be {ASSESSMENT_VERSION}, got {doc.get('version')!r}")
    if not isinstance(doc.get("topic"), str) or not doc.get("topic", "").strip():
        problems.append("topic must be a non-empty string")
    if not isinstance(doc.get("grade"), int):
        problems.append("grade must be an integer")
    try:
        Strategy(doc.get("strategy"))
    except ValueError:
        problems.append(f"unknown strategy {doc.get('strategy')!r}")
    items = doc.get("items")
    if not isinstance(items, list):
        problems.append("items must be a list")
        items = []
    seen_skills: list[str] = []
    seen_ids: set[str] = set()
    for n, item in enumerate(items):
        where = f"items[{n}]"
        if not isinstance(item, dict):
            problems.append(f"{where}: must be an object")
            continue
        qid = item.get("id")
        if not isinstance(qid, str) or not qid:
            problems.append(f"{where}.id: must be a non-empty string")
        elif qid in seen_ids:
            problems.append(f"{where}.id: duplicate id {qid!r}")
        else:
            seen_ids.add(qid)
        skill = item.get("skill")
        try:
            SkillLevel.parse(skill or "")
            seen_skills.append(skill)
        except ValueError:
            problems.append(f"{where}.skill: unknown skill {skill!r}")
        if not isinstance(item.get("question"), str) or not item["question"].strip():
            problems.append(f"{where}.question: must be a non-empty string")
        options = item.get("options")
        if (
            not isinstance(options, list)
            or [o.get("label") for o in options if isinstance(o, dict)] != list(OPTION_LABELS)
            or any(
                not isinstance(o, dict) or not isinstance(o.get("text"), str) or not o["text"].strip()
                for o in options
            )
        ):
            problems.append(f"{where}.options: must be four labelled options A-D with text")
        correct = item.get("correct_label")
        if correct not in OPTION_LABELS:
            problems.append(f"{where}.correct_label: must be one of {OPTION_LABELS}")
        rationales = item.get("distractor_rationales")
        if isinstance(rationales, list) and correct in OPTION_LABELS:
            got = sorted(
                r.get("label") for r in rationales if isinstance(r, dict)
            )
            expected = sorted(set(OPTION_LABELS) - {correct})
            if got != expected:
                problems.append(
                    f"{where}.distractor_rationales: must cover exactly {expected}, got {got}"
                )
        else:
            problems.append(f"{where}.distractor_rationales: must be a list")
    skill_ordinals = []
    for s in seen_skills:
        try:
            skill_ordinals.append(SkillLevel.parse(s).value)
        except ValueError:
            pass
    if skill_ordinals != sorted(skill_ordinals) or len(set(skill_ordinals)) != len(skill_ordinals):
        problems.append("items must cover distinct skills in ascending order")
    omissions = doc.get("omissions")
    if not isinstance(omissions, list):
        problems.append("omissions must be a list")
    else:
        for n, om in enumerate(omissions):
            if not isinstance(om, dict) or not isinstance(om.get("reason"), str):
                problems.append(f"omissions[{n}]: must be an object with a reason")
    return problems

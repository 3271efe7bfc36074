"""Wire models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..taxonomy import SkillLevel


class SessionRequest(BaseModel):
    role: Literal["student", "expert", "operator"]
    student_id: Optional[str] = None
    rater_id: Optional[str] = None
    version_id: Optional[str] = None

    @model_validator(mode="after")
    def _role_fields(self) -> "SessionRequest":
        if self.role == "student":
            if not self.student_id:
                raise ValueError("student sessions require a student_id")
            if not self.version_id:
                raise ValueError("student sessions require a version_id")
        if self.role == "expert" and not self.rater_id:
            raise ValueError("expert sessions require a rater_id")
        return self


class SessionReply(BaseModel):
    token: str
    role: str
    version_id: Optional[str] = None


class AssessmentRequest(BaseModel):
    topic: str
    grade: int
    strategy: Literal["concept_map", "base_llm"] = "concept_map"
    skills: Optional[list[str]] = None

    @field_validator("skills")
    @classmethod
    def _skills_known(cls, v: "Optional[list[str]]") -> "Optional[list[str]]":
        if v is not None:
            for s in v:
                SkillLevel.parse(s)
        return v


class PoolImportRequest(BaseModel):
    """Bulk import of previously generated assessment documents."""

    assessments: list[dict]


class DesignRegisterRequest(BaseModel):
    """A trial design document produced by the assembler."""

    model_config = ConfigDict(extra="allow")

    format: str
    version: int
    versions: list[dict]


class WireOption(BaseModel):
    label: str
    text: str


class StudentQuestion(BaseModel):
    """What a test-taker sees: no key, no explanation, no rationales."""

    id: str
    skill: str
    question: str
    options: list[WireOption]


class FullQuestion(StudentQuestion):
    strategy: str
    topic: str
    grade: int
    correct_label: str
    explanation: str
    distractor_rationales: list[dict]


class TestPayload(BaseModel):
    version_id: str
    items: list[StudentQuestion]


class FullTestPayload(BaseModel):
    version_id: str
    items: list[FullQuestion]


class ResponseRow(BaseModel):
    question_id: str
    attempted: bool
    answer_label: Optional[str] = None
    correct: Optional[bool] = None
    guessed: bool = False
    difficulty: Optional[int] = None
    response_time_s: Optional[float] = None

    @field_validator("difficulty")
    @classmethod
    def _difficulty_scale(cls, v: "Optional[int]") -> "Optional[int]":
        if v is not None and v not in (1, 3, 5):
            raise ValueError(f"difficulty must be 1, 3, or 5, got {v}")
        return v

    @field_validator("answer_label")
    @classmethod
    def _label_known(cls, v: "Optional[str]") -> "Optional[str]":
        if v is not None and v not in ("A", "B", "C", "D"):
            raise ValueError(f"answer_label must be A-D, got {v!r}")
        return v

    @model_validator(mode="after")
    def _consistency(self) -> "ResponseRow":
        if self.answer_label is not None and self.correct is not None:
            raise ValueError("send answer_label or correct, not both")
        if not self.attempted:
            if self.answer_label is not None:
                raise ValueError("an unattempted response cannot carry an answer")
            if self.correct:
                raise ValueError("an unattempted response cannot be correct")
            if self.guessed:
                raise ValueError("an unattempted response cannot be a guess")
        else:
            if self.answer_label is None and self.correct is None:
                raise ValueError("attempted responses need an answer_label (or a correct flag)")
            if self.difficulty is None:
                raise ValueError("attempted responses need a difficulty rating")
        if self.response_time_s is not None and self.response_time_s < 0:
            raise ValueError("response_time_s cannot be negative")
        return self


class ResponsesSubmit(BaseModel):
    student_id: Optional[str] = None
    rows: list[ResponseRow] = Field(min_length=1)


class ResponsesReply(BaseModel):
    recorded: int
    superseded: list[str]


class WireDistractorRating(BaseModel):
    plausibility: Literal["yes", "no", "na"]
    misconception: Literal["yes", "no", "na"]
    independence: Literal["yes", "no", "na"]


class AnnotationSubmit(BaseModel):
    rater_id: Optional[str] = None
    relevance: Literal["yes", "no"]
    correctness: Literal["yes", "no", "na"]
    grade_level: Literal["yes", "no", "na"]
    similarity: Literal["yes", "no", "na"]
    blooms_level: Optional[str] = None
    distractors: list[WireDistractorRating] = Field(min_length=3, max_length=3)

    @field_validator("blooms_level")
    @classmethod
    def _blooms_known(cls, v: "Optional[str]") -> "Optional[str]":
        if v is not None and v.strip().lower() not in ("", "na"):
            SkillLevel.parse(v)
            return v.strip().lower()
        return None


class AnnotationReply(BaseModel):
    recorded: bool
    superseded: bool


class QueueEntry(BaseModel):
    id: str
    strategy: str
    topic: str
    raters: int


class QueueReply(BaseModel):
    queue: list[QueueEntry]


class ImportReply(BaseModel):
    questions_stored: int


class DesignReply(BaseModel):
    versions_registered: list[str]

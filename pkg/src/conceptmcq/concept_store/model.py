"""Immutable domain objects for the hierarchical concept map.

The hierarchy is grade -> unit -> topic -> subtopic. Each subtopic carries
the pedagogical attributes that ground question generation: prerequisites,
mathematical formulations, common misconceptions, real-world applications,
crosscutting links to other topics, instructional analogies, and curriculum
references.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from ..taxonomy import KnowledgeDimension, SkillLevel


@dataclass(frozen=True)
class Variable:
    """One symbol in a formulation, with its meaning and SI unit."""

    symbol: str
    meaning: str
    unit: str = ""


@dataclass(frozen=True)
class Formulation:
    """A mathematical statement of the concept."""

    expression: str
    description: str
    variables: tuple[Variable, ...] = ()

    def render(self) -> str:
        parts = [f"{self.expression}  ({self.description})"]
        for v in self.variables:
            unit = f" [{v.unit}]" if v.unit else ""
            parts.append(f"    {v.symbol}: {v.meaning}{unit}")
        return "\n".join(parts)


@dataclass(frozen=True)
class CurriculumRef:
    """Pointer into a published curriculum."""

    source: str
    grade: int
    chapter: str


@dataclass(frozen=True)
class LearningObjective:
    """What a learner should be able to do, tagged by skill and knowledge kind."""

    statement: str
    skill: SkillLevel
    dimension: KnowledgeDimension


@dataclass(frozen=True)
class Subtopic:
    """Leaf node carrying the teachable substance of one concept."""

    key: str
    title: str
    description: str
    prerequisites: tuple[str, ...] = ()
    formulations: tuple[Formulation, ...] = ()
    misconceptions: tuple[str, ...] = ()
    applications: tuple[str, ...] = ()
    crosscutting: tuple[str, ...] = ()
    analogies: tuple[str, ...] = ()
    curriculum_refs: tuple[CurriculumRef, ...] = ()
    objectives: tuple[LearningObjective, ...] = ()


@dataclass(frozen=True)
class Topic:
    """Named cluster of subtopics inside a unit."""

    key: str
    title: str
    overview: str = ""
    subtopics: tuple[Subtopic, ...] = ()


@dataclass(frozen=True)
class Unit:
    """Curricular unit taught at one grade."""

    key: str
    title: str
    grade: int
    ordinal: int
    topics: tuple[Topic, ...] = ()


@dataclass(frozen=True)
class ConceptMap:
    """Complete map: every grade with its units."""

    grades: tuple[int, ...]
    units: tuple[Unit, ...]
    title: str = "Concept map"

    def units_for_grade(self, grade: int) -> tuple[Unit, ...]:
        return tuple(u for u in self.units if u.grade == grade)

    def find_topic(self, topic_key: str) -> tuple[Unit, Topic] | None:
        for unit in self.units:
            for topic in unit.topics:
                if topic.key == topic_key:
                    return unit, topic
        return None


_SECTION_ORDER = (
    "prerequisites",
    "formulations",
    "misconceptions",
    "applications",
    "crosscutting",
    "analogies",
)

_SECTION_HEADINGS = {
    "prerequisites": "Prerequisite concepts",
    "formulations": "Key formulations",
    "misconceptions": "Common misconceptions",
    "applications": "Real-world applications",
    "crosscutting": "Connections to other topics",
    "analogies": "Helpful analogies",
}


@dataclass(frozen=True)
class ContextBundle:
    """Everything retrieved for one topic, ready to splice into a prompt.

    ``prompt_text`` is deterministic: same map content, same bytes. The
    retrieval timestamp is carried for audit but excluded from the text.
    """

    topic_key: str
    topic_title: str
    unit_title: str
    grade: int
    subtopics: tuple[Subtopic, ...]
    retrieved_at: datetime = field(
        default_factory=lambda: datetime.now(timezone.utc), compare=False
    )

    @property
    def empty_topic(self) -> bool:
        return not self.subtopics

    def prompt_text(self) -> str:
        lines: list[str] = [
            f"Topic: {self.topic_title}",
            f"Unit: {self.unit_title} (grade {self.grade})",
        ]
        for sub in self.subtopics:
            lines.append("")
            lines.append(f"## {sub.title}")
            lines.append(sub.description)
            for section in _SECTION_ORDER:
                items = getattr(sub, section)
                if not items:
                    continue
                lines.append(f"{_SECTION_HEADINGS[section]}:")
                if section == "formulations":
                    for f in items:
                        lines.append(f"  - {f.render()}")
                else:
                    for item in items:
                        lines.append(f"  - {item}")
            if sub.curriculum_refs:
                refs = ", ".join(
                    f"{r.source} grade {r.grade}, {r.chapter}" for r in sub.curriculum_refs
                )
                lines.append(f"Curriculum references: {refs}")
        return "\n".join(lines)

"""Cognitive skill levels and knowledge dimensions used across the pipeline."""

from __future__ import annotations

from enum import Enum, IntEnum


class SkillLevel(IntEnum):
    """Six-level cognitive skill hierarchy, ordered lowest to highest."""

    REMEMBER = 1
    UNDERSTAND = 2
    APPLY = 3
    ANALYZE = 4
    EVALUATE = 5
    CREATE = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, value: "str | int | SkillLevel") -> "SkillLevel":
        if isinstance(value, SkillLevel):
            return value
        if isinstance(value, int):
            return cls(value)
        name = value.strip().upper()
        if name in cls.__members__:
            return cls[name]
        raise ValueError(f"unknown skill level: {value!r}")


SKILL_DEFINITIONS: dict[SkillLevel, str] = {
    SkillLevel.REMEMBER: (
        "Retrieve relevant facts, terminology, and basic concepts from memory, "
        "such as recalling definitions, laws, units, or standard values."
    ),
    SkillLevel.UNDERSTAND: (
        "Construct meaning from the concept by interpreting, classifying, "
        "summarizing, comparing, or explaining it in one's own words."
    ),
    SkillLevel.APPLY: (
        "Use the concept or its procedures in a concrete situation, such as "
        "carrying out a calculation or applying a law to a new scenario."
    ),
    SkillLevel.ANALYZE: (
        "Break material into parts and determine how the parts relate to one "
        "another and to the overall purpose, distinguishing relevant factors "
        "and examining cause-effect relationships."
    ),
    SkillLevel.EVALUATE: (
        "Make judgments based on criteria and standards, such as checking the "
        "consistency of a claim or critiquing a proposed solution."
    ),
    SkillLevel.CREATE: (
        "Put elements together to form a coherent whole or produce an "
        "original design, plan, or hypothesis."
    ),
}

# Question generation targets the first five levels; the sixth calls for
# open-ended production and does not fit a four-option selection format.
GENERATION_SKILLS: tuple[SkillLevel, ...] = (
    SkillLevel.REMEMBER,
    SkillLevel.UNDERSTAND,
    SkillLevel.APPLY,
    SkillLevel.ANALYZE,
    SkillLevel.EVALUATE,
)


class KnowledgeDimension(str, Enum):
    """Kind of knowledge a learning objective exercises."""

    FACTUAL = "factual"
    CONCEPTUAL = "conceptual"
    PROCEDURAL = "procedural"
    METACOGNITIVE = "metacognitive"

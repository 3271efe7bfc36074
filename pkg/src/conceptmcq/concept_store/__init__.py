"""Hierarchical domain concept map: model, interchange format, and storage."""

from .model import (
    ConceptMap,
    ContextBundle,
    CurriculumRef,
    Formulation,
    LearningObjective,
    Subtopic,
    Topic,
    Unit,
    Variable,
)
from .document import (
    SCHEMA_VERSION,
    MapValidationError,
    ValidationIssue,
    load_map_document,
    map_to_document,
    validate_map_document,
)
from .store import (
    ConceptStore,
    CorruptSubtopic,
    TopicNotFound,
    UnknownGrade,
)

__all__ = [
    "ConceptMap",
    "ConceptStore",
    "ContextBundle",
    "CorruptSubtopic",
    "CurriculumRef",
    "Formulation",
    "LearningObjective",
    "MapValidationError",
    "SCHEMA_VERSION",
    "Subtopic",
    "Topic",
    "TopicNotFound",
    "Unit",
    "UnknownGrade",
    "ValidationIssue",
    "Variable",
    "load_map_document",
    "map_to_document",
    "validate_map_document",
]

"""Question generation pipeline: models, prompts, parsing, and the engine."""

from .items import (
    Assessment,
    DistractorRationale,
    EvaluationVerdict,
    MCQItem,
    MCQOption,
    Omission,
    PipelineRequest,
    Strategy,
    assessment_to_document,
    validate_assessment_document,
)
from .parsing import NoObjectFound, ParseOutcome, SchemaViolation, extract_json_object, parse_mcq
from .engine import ExtractionFailed, NoMatch, Pipeline

__all__ = [
    "Assessment",
    "DistractorRationale",
    "EvaluationVerdict",
    "ExtractionFailed",
    "MCQItem",
    "MCQOption",
    "NoMatch",
    "NoObjectFound",
    "Omission",
    "ParseOutcome",
    "Pipeline",
    "PipelineRequest",
    "SchemaViolation",
    "Strategy",
    "assessment_to_document",
    "extract_json_object",
    "parse_mcq",
    "validate_assessment_document",
]

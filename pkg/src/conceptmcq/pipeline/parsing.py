"""Tolerant extraction and strict validation of model output.

Extraction is forgiving (fenced block, or first balanced JSON object found
by a string-aware brace scan); validation is strict and reports every
violation it finds, so a failed parse explains itself in one pass.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .items import OPTION_LABELS

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


class NoObjectFound(ValueError):
    """The completion contains no parseable JSON object at all."""


def extract_json_object(text: str) -> dict:
    """Pull the first JSON object out of a completion.

    Tries fenced blocks first, then scans for a balanced top-level object,
    skipping braces inside string literals.
    """
    candidates: list[str] = []
    for m in _FENCE_RE.finditer(text):
        candidates.append(m.group(1))
    candidates.append(text)

    for candidate in candidates:
        start = candidate.find("{")
        while start != -1:
            depth = 0
            in_string = False
            escaped = False
            for i in range(start, len(candidate)):
                ch = candidate[i]
                if in_string:
                    if escaped:
                        escaped = False
                    elif ch == "\\":
                        escaped = True
                    elif ch == '"':
                        in_string = False
                    continue
                if ch == '"':
                    in_string = True
                elif ch == "{":
                    depth += 1
                elif ch == "}":
                    depth -= 1
                    if depth == 0:
                        try:
                            obj = json.loads(candidate[start : i + 1])
                        except ValueError:
                            break
                        if isinstance(obj, dict):
                            return obj
                        break
            start = candidate.find("{", start + 1)
    raise NoObjectFound("completion contains no JSON object")


@dataclass
class SchemaViolation:
    """One reason a completion's JSON failed question validation."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass
class ParseOutcome:
    """Either a clean parsed question or the full list of problems."""

    question: Optional[str] = None
    options: Optional[dict[str, str]] = None
    correct_label: Optional[str] = None
    explanation: str = ""
    distractor_misconceptions: Optional[dict[str, str]] = None
    violations: list[SchemaViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _resolve_correct(value: Any, options: "dict[str, str] | None") -> "str | None":
    """Accept a bare label, a label with punctuation, or the exact option text."""
    if not isinstance(value, str):
        return None
    cleaned = value.strip()
    bare = cleaned.rstrip(".):").strip().upper()
    if bare in OPTION_LABELS:
        return bare
    if options:
        for label, text in options.items():
            if cleaned == text or cleaned.lower() == text.strip().lower():
                return label
        m = re.match(r"^([A-D])[.):\s]", cleaned.upper())
        if m and m.group(1) in options:
            return m.group(1)
    return None


def parse_mcq(text: str) -> ParseOutcome:
    """Validate a completion into MCQ fields, collecting every violation."""
    out = ParseOutcome()
    try:
        obj = extract_json_object(text)
    except NoObjectFound as exc:
        out.violations.append(SchemaViolation("$", str(exc)))
        return out

    question = obj.get("question")
    if not isinstance(question, str) or not question.strip():
        out.violations.append(SchemaViolation("question", "expected a non-empty string"))
    else:
        out.question = question.strip()

    options_raw = obj.get("options")
    options: dict[str, str] | None = None
    if isinstance(options_raw, dict):
        labels = sorted(str(k).strip().upper() for k in options_raw)
        if labels != sorted(OPTION_LABELS):
            out.violations.append(
                SchemaViolation("options", f"expected labels {sorted(OPTION_LABELS)}, got {labels}")
            )
        else:
            options = {}
            for k, v in options_raw.items():
                label = str(k).strip().upper()
                if not isinstance(v, str) or not v.strip():
                    out.violations.append(
                        SchemaViolation(f"options.{label}", "expected a non-empty string")
                    )
                else:
                    options[label] = v.strip()
            if len(options) != 4:
                options = None
    elif isinstance(options_raw, list):
        if len(options_raw) != 4 or not all(isinstance(o, str) and o.strip() for o in options_raw):
            out.violations.append(
                SchemaViolation("options", f"expected 4 options, got {len(options_raw)}")
            )
        else:
            options = {label: options_raw[i].strip() for i, label in enumerate(OPTION_LABELS)}
    else:
        out.violations.append(
            SchemaViolation("options", "expected an object mapping A-D to option text")
        )
    if options is not None:
        texts = [t.lower() for t in options.values()]
        if len(set(texts)) != 4:
            out.violations.append(SchemaViolation("options", "option texts must be distinct"))
        out.options = options

    correct = _resolve_correct(obj.get("correct_answer"), options)
    if correct is None:
        out.violations.append(
            SchemaViolation(
                "correct_answer",
                f"could not resolve {obj.get('correct_answer')!r} to an option label",
            )
        )
    else:
        out.correct_label = correct

    explanation = obj.get("explanation")
    if isinstance(explanation, str):
        out.explanation = explanation.strip()

    rationales_raw = obj.get("distractor_misconceptions")
    if correct is not None:
        expected = sorted(set(OPTION_LABELS) - {correct})
        if not isinstance(rationales_raw, dict):
            out.violations.append(
                SchemaViolation(
                    "distractor_misconceptions",
                    f"expected an object with keys {expected}",
                )
            )
        else:
            keys = sorted(str(k).strip().upper() for k in rationales_raw)
            if keys != expected:
                out.violations.append(
                    SchemaViolation(
                        "distractor_misconceptions",
                        f"expected keys {expected}, got {keys}",
                    )
                )
            elif not all(
                isinstance(v, str) and v.strip() for v in rationales_raw.values()
            ):
                out.violations.append(
                    SchemaViolation(
                        "distractor_misconceptions", "every entry must be a non-empty string"
                    )
                )
            else:
                out.distractor_misconceptions = {
                    str(k).strip().upper(): v.strip() for k, v in rationales_raw.items()
                }
    return out


def parse_answer_fix(text: str, options: "dict[str, str]") -> ParseOutcome:
    """Validate an answer-repair completion (new key, explanation, rationales)."""
    out = ParseOutcome()
    try:
        obj = extract_json_object(text)
    except NoObjectFound as exc:
        out.violations.append(SchemaViolation("$", str(exc)))
        return out
    correct = _resolve_correct(obj.get("correct_answer"), options)
    if correct is None:
        out.violations.append(
            SchemaViolation(
                "correct_answer",
                f"could not resolve {obj.get('correct_answer')!r} to an option label",
            )
        )
        return out
    out.correct_label = correct
    out.options = dict(options)
    explanation = obj.get("explanation")
    if not isinstance(explanation, str) or not explanation.strip():
        out.violations.append(SchemaViolation("explanation", "expected a non-empty string"))
    else:
        out.explanation = explanation.strip()
    expected = sorted(set(OPTION_LABELS) - {correct})
    rationales_raw = obj.get("distractor_misconceptions")
    if rationales_raw is None:
        out.distractor_misconceptions = None  # caller may keep relabelled originals
    elif isinstance(rationales_raw, dict):
        keys = sorted(str(k).strip().upper() for k in rationales_raw)
        if keys != expected or not all(
            isinstance(v, str) and v.strip() for v in rationales_raw.values()
        ):
            out.violations.append(
                SchemaViolation(
                    "distractor_misconceptions",
                    f"expected non-empty entries for keys {expected}, got {keys}",
                )
            )
        else:
            out.distractor_misconceptions = {
                str(k).strip().upper(): v.strip() for k, v in rationales_raw.items()
            }
    else:
        out.violations.append(
            SchemaViolation("distractor_misconceptions", f"expected an object or omission")
        )
    return out


def first_line_verdict(text: str) -> str:
    """First non-empty line of a judge reply, uppercased and stripped."""
    for line in text.splitlines():
        line = line.strip()
        if line:
            return line.upper()
    return ""

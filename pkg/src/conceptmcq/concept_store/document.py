"""JSON interchange format for concept maps.

A map document is a single JSON object with a schema version. Export is
deterministic: grades ascending, units by (ordinal, key), topics and
subtopics by key, and all object keys emitted in a fixed order, so that
exporting the same map twice yields identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from ..taxonomy import KnowledgeDimension, SkillLevel
from .model import (
    ConceptMap,
    CurriculumRef,
    Formulation,
    LearningObjective,
    Subtopic,
    Topic,
    Unit,
    Variable,
)

SCHEMA_VERSION = 1

_KEY_RE = r"^[a-z0-9][a-z0-9-]*$"


@dataclass(frozen=True)
class ValidationIssue:
    """One schema or consistency violation, located by JSON path."""

    path: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: [{self.rule}] {self.message}"


class MapValidationError(ValueError):
    """Raised when a map document fails validation; carries every issue found."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = issues
        lines = "\n".join(f"  {i}" for i in issues)
        super().__init__(f"concept map document is invalid ({len(issues)} issue(s)):\n{lines}")


def _is_key(value: Any) -> bool:
    import re

    return isinstance(value, str) and re.match(_KEY_RE, value) is not None


def _check_str_list(items: Any, path: str, issues: list[ValidationIssue]) -> None:
    if not isinstance(items, list) or not all(isinstance(x, str) and x.strip() for x in items):
        issues.append(ValidationIssue(path, "string-list", "must be a list of non-empty strings"))


def validate_map_document(doc: Any) -> list[ValidationIssue]:
    """Validate a parsed map document; returns every issue rather than the first."""
    issues: list[ValidationIssue] = []
    if not isinstance(doc, dict):
        return [ValidationIssue("$", "object", "document must be a JSON object")]
    if doc.get("schema_version") != SCHEMA_VERSION:
        issues.append(
            ValidationIssue(
                "$.schema_version",
                "schema-version",
                f"expected {SCHEMA_VERSION}, got {doc.get('schema_version')!r}",
            )
        )
    grades = doc.get("grades")
    if not isinstance(grades, list) or not all(isinstance(g, int) for g in grades):
        issues.append(ValidationIssue("$.grades", "grades", "must be a list of integers"))
        grades = []
    elif sorted(set(grades)) != grades:
        issues.append(
            ValidationIssue("$.grades", "grades", "must be strictly ascending with no duplicates")
        )
    units = doc.get("units")
    if not isinstance(units, list):
        issues.append(ValidationIssue("$.units", "units", "must be a list"))
        units = []

    seen_unit_keys: set[str] = set()
    seen_topic_keys: set[str] = set()
    grade_set = set(g for g in grades if isinstance(g, int))
    for ui, unit in enumerate(units):
        upath = f"$.units[{ui}]"
        if not isinstance(unit, dict):
            issues.append(ValidationIssue(upath, "object", "unit must be an object"))
            continue
        ukey = unit.get("key")
        if not _is_key(ukey):
            issues.append(ValidationIssue(f"{upath}.key", "key-format", f"bad key {ukey!r}"))
        elif ukey in seen_unit_keys:
            issues.append(ValidationIssue(f"{upath}.key", "unique-key", f"duplicate unit key {ukey!r}"))
        else:
            seen_unit_keys.add(ukey)
        if not isinstance(unit.get("title"), str) or not unit["title"].strip():
            issues.append(ValidationIssue(f"{upath}.title", "title", "must be a non-empty string"))
        grade = unit.get("grade")
        if not isinstance(grade, int):
            issues.append(ValidationIssue(f"{upath}.grade", "grade", "must be an integer"))
        elif grade_set and grade not in grade_set:
            issues.append(
                ValidationIssue(
                    f"{upath}.grade", "grade-listed", f"grade {grade} not in $.grades"
                )
            )
        if not isinstance(unit.get("ordinal"), int) or unit.get("ordinal", 0) < 1:
            issues.append(ValidationIssue(f"{upath}.ordinal", "ordinal", "must be an integer >= 1"))
        topics = unit.get("topics")
        if not isinstance(topics, list):
            issues.append(ValidationIssue(f"{upath}.topics", "topics", "must be a list"))
            continue
        for ti, topic in enumerate(topics):
            tpath = f"{upath}.topics[{ti}]"
            if not isinstance(topic, dict):
                issues.append(ValidationIssue(tpath, "object", "topic must be an object"))
                continue
            tkey = topic.get("key")
            if not _is_key(tkey):
                issues.append(ValidationIssue(f"{tpath}.key", "key-format", f"bad key {tkey!r}"))
            elif tkey in seen_topic_keys:
                issues.append(
                    ValidationIssue(f"{tpath}.key", "unique-key", f"duplicate topic key {tkey!r}")
                )
            else:
                seen_topic_keys.add(tkey)
            if not isinstance(topic.get("title"), str) or not topic["title"].strip():
                issues.append(ValidationIssue(f"{tpath}.title", "title", "must be a non-empty string"))
            subs = topic.get("subtopics")
            if not isinstance(subs, list):
                issues.append(ValidationIssue(f"{tpath}.subtopics", "subtopics", "must be a list"))
                continue
            seen_sub_keys: set[str] = set()
            for si, sub in enumerate(subs):
                spath = f"{tpath}.subtopics[{si}]"
                if not isinstance(sub, dict):
                    issues.append(ValidationIssue(spath, "object", "subtopic must be an object"))
                    continue
                skey = sub.get("key")
                if not _is_key(skey):
                    issues.append(ValidationIssue(f"{spath}.key", "key-format", f"bad key {skey!r}"))
                elif skey in seen_sub_keys:
                    issues.append(
                        ValidationIssue(
                            f"{spath}.key", "unique-key", f"duplicate subtopic key {skey!r}"
                        )
                    )
                else:
                    seen_sub_keys.add(skey)
                if not isinstance(sub.get("title"), str) or not sub["title"].strip():
                    issues.append(
                        ValidationIssue(f"{spath}.title", "title", "must be a non-empty string")
                    )
                if not isinstance(sub.get("description"), str) or not sub["description"].strip():
                    issues.append(
                        ValidationIssue(
                            f"{spath}.description", "description", "must be a non-empty string"
                        )
                    )
                for section in ("prerequisites", "misconceptions", "applications",
                                "crosscutting", "analogies"):
                    if section in sub:
                        _check_str_list(sub[section], f"{spath}.{section}", issues)
                for fi, form in enumerate(sub.get("formulations", []) or []):
                    fpath = f"{spath}.formulations[{fi}]"
                    if not isinstance(form, dict) or not isinstance(form.get("expression"), str):
                        issues.append(
                            ValidationIssue(fpath, "formulation", "must have a string expression")
                        )
                for ri, ref in enumerate(sub.get("curriculum_refs", []) or []):
                    rpath = f"{spath}.curriculum_refs[{ri}]"
                    if (
                        not isinstance(ref, dict)
                        or not isinstance(ref.get("source"), str)
                        or not isinstance(ref.get("grade"), int)
                    ):
                        issues.append(
                            ValidationIssue(
                                rpath, "curriculum-ref", "must have string source and integer grade"
                            )
                        )
                for oi, obj in enumerate(sub.get("objectives", []) or []):
                    opath = f"{spath}.objectives[{oi}]"
                    if not isinstance(obj, dict) or not isinstance(obj.get("statement"), str):
                        issues.append(
                            ValidationIssue(opath, "objective", "must have a string statement")
                        )
                        continue
                    try:
                        SkillLevel.parse(obj.get("skill", ""))
                    except ValueError:
                        issues.append(
                            ValidationIssue(
                                f"{opath}.skill", "skill", f"unknown skill {obj.get('skill')!r}"
                            )
                        )
                    try:
                        KnowledgeDimension(obj.get("dimension", ""))
                    except ValueError:
                        issues.append(
                            ValidationIssue(
                                f"{opath}.dimension",
                                "dimension",
                                f"unknown dimension {obj.get('dimension')!r}",
                            )
                        )
    return issues


def _variable_from(d: dict) -> Variable:
    return Variable(symbol=d["symbol"], meaning=d["meaning"], unit=d.get("unit", ""))


def _formulation_from(d: dict) -> Formulation:
    return Formulation(
        expression=d["expression"],
        description=d.get("description", ""),
        variables=tuple(_variable_from(v) for v in d.get("variables", [])),
    )


def _subtopic_from(d: dict) -> Subtopic:
    return Subtopic(
        key=d["key"],
        title=d["title"],
        description=d["description"],
        prerequisites=tuple(d.get("prerequisites", [])),
        formulations=tuple(_formulation_from(f) for f in d.get("formulations", [])),
        misconceptions=tuple(d.get("misconceptions", [])),
        applications=tuple(d.get("applications", [])),
        crosscutting=tuple(d.get("crosscutting", [])),
        analogies=tuple(d.get("analogies", [])),
        curriculum_refs=tuple(
            CurriculumRef(source=r["source"], grade=r["grade"], chapter=r.get("chapter", ""))
            for r in d.get("curriculum_refs", [])
        ),
        objectives=tuple(
            LearningObjective(
                statement=o["statement"],
                skill=SkillLevel.parse(o["skill"]),
                dimension=KnowledgeDimension(o["dimension"]),
            )
            for o in d.get("objectives", [])
        ),
    )


def load_map_document(doc: Any) -> ConceptMap:
    """Parse and validate a map document into a ConceptMap.

    Raises MapValidationError listing every violation if the document is bad.
    """
    issues = validate_map_document(doc)
    if issues:
        raise MapValidationError(issues)
    units = []
    for u in doc["units"]:
        topics = []
        for t in u["topics"]:
            topics.append(
                Topic(
                    key=t["key"],
                    title=t["title"],
                    overview=t.get("overview", ""),
                    subtopics=tuple(_subtopic_from(s) for s in t["subtopics"]),
                )
            )
        units.append(
            Unit(
                key=u["key"],
                title=u["title"],
                grade=u["grade"],
                ordinal=u["ordinal"],
                topics=tuple(sorted(topics, key=lambda t: t.key)),
            )
        )
    return ConceptMap(
        grades=tuple(doc["grades"]),
        units=tuple(sorted(units, key=lambda u: (u.ordinal, u.key))),
        title=doc.get("title", "Concept map"),
    )


def _variable_to(v: Variable) -> dict:
    return {"symbol": v.symbol, "meaning": v.meaning, "unit": v.unit}


def _formulation_to(f: Formulation) -> dict:
    return {
        "expression": f.expression,
        "description": f.description,
        "variables": [_variable_to(v) for v in f.variables],
    }


def _subtopic_to(s: Subtopic) -> dict:
    return {
        "key": s.key,
        "title": s.title,
        "description": s.description,
        "prerequisites": list(s.prerequisites),
        "formulations": [_formulation_to(f) for f in s.formulations],
        "misconceptions": list(s.misconceptions),
        "applications": list(s.applications),
        "crosscutting": list(s.crosscutting),
        "analogies": list(s.analogies),
        "curriculum_refs": [
            {"source": r.source, "grade": r.grade, "chapter": r.chapter}
            for r in s.curriculum_refs
        ],
        "objectives": [
            {"statement": o.statement, "skill": o.skill.name.lower(), "dimension": o.dimension.value}
            for o in s.objectives
        ],
    }


def map_to_document(cmap: ConceptMap) -> dict:
    """Serialize a ConceptMap to its canonical document form (deterministic order)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "title": cmap.title,
        "grades": sorted(cmap.grades),
        "units": [
            {
                "key": u.key,
                "title": u.title,
                "grade": u.grade,
                "ordinal": u.ordinal,
                "topics": [
                    {
                        "key": t.key,
                        "title": t.title,
                        "overview": t.overview,
                        "subtopics": [
                            _subtopic_to(s) for s in sorted(t.subtopics, key=lambda s: s.key)
                        ],
                    }
                    for t in sorted(u.topics, key=lambda t: t.key)
                ],
            }
            for u in sorted(cmap.units, key=lambda u: (u.ordinal, u.key))
        ],
    }


def dump_map_json(cmap: ConceptMap) -> str:
    """Canonical JSON text for a map; byte-stable across exports."""
    return json.dumps(map_to_document(cmap), indent=2, ensure_ascii=False, sort_keys=False) + "\n"

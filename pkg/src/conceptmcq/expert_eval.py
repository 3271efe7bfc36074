"""Expert review rubric, consensus, and inter-rater reliability.

Each question is reviewed by two raters against an eight-item rubric:
five question-level items (relevance, correctness, grade level fit,
similarity to validated items, and the question's cognitive skill level)
and three per-distractor items (plausibility, misconception grounding,
and independence). The first two items gate the rest: a No on relevance
or correctness makes every later item Not Applicable.

Reliability is reported as raw percent agreement (NA counts as a response)
and Cohen's kappa (units where either rater gave NA are dropped pairwise).
The skill-level item is ordinal, so its kappa is quadratically weighted
over the six levels.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .stats import UNDEFINED, Undefined
from .taxonomy import SkillLevel

FloatOrUndefined = Union[float, Undefined]


class TriState(str, Enum):
    YES = "yes"
    NO = "no"
    NA = "na"

    @classmethod
    def parse(cls, raw: str) -> "TriState":
        v = raw.strip().lower()
        aliases = {"y": "yes", "n": "no", "n/a": "na", "": "na", "-": "na"}
        v = aliases.get(v, v)
        try:
            return cls(v)
        except ValueError:
            raise ValueError(f"expected yes/no/na, got {raw!r}") from None


QUESTION_CRITERIA = ("relevance", "correctness", "grade_level", "similarity")
SKILL_CRITERION = "blooms_level"
DISTRACTOR_CRITERIA = (
    "distractor_plausibility",
    "distractor_misconception",
    "distractor_independence",
)
ALL_CRITERIA = QUESTION_CRITERIA + (SKILL_CRITERION,) + DISTRACTOR_CRITERIA

CRITERION_TITLES = {
    "relevance": "Relevance",
    "correctness": "Correctness",
    "grade_level": "Grade level",
    "similarity": "Similarity",
    "blooms_level": "Skill level",
    "distractor_plausibility": "Distractor plausibility",
    "distractor_misconception": "Distractor misconception",
    "distractor_independence": "Distractor independence",
}

HIGH_QUALITY = "high_quality"


@dataclass(frozen=True)
class DistractorRating:
    plausibility: TriState
    misconception: TriState
    independence: TriState

    def all_na(self) -> bool:
        return (
            self.plausibility is TriState.NA
            and self.misconception is TriState.NA
            and self.independence is TriState.NA
        )

    def any_na(self) -> bool:
        return (
            self.plausibility is TriState.NA
            or self.misconception is TriState.NA
            or self.independence is TriState.NA
        )


@dataclass(frozen=True)
class ExpertAnnotation:
    """One rater's complete rubric for one question."""

    question_id: str
    rater_id: str
    relevance: TriState
    correctness: TriState
    grade_level: TriState
    similarity: TriState
    blooms_level: Optional[SkillLevel]
    distractors: tuple[DistractorRating, DistractorRating, DistractorRating]
    strategy: Optional[str] = None

    def validate(self) -> list[str]:
        """Cascade rules; returns violations (empty = well-formed)."""
        problems: list[str] = []
        if self.relevance is TriState.NA:
            problems.append("relevance is the first gate and cannot be NA")
        gated = self.relevance is TriState.NO or self.correctness is TriState.NO
        if self.relevance is TriState.NO and self.correctness is not TriState.NA:
            problems.append("correctness must be NA when relevance is No")
        if self.relevance is TriState.YES and self.correctness is TriState.NA:
            problems.append("correctness cannot be NA when relevance is Yes")
        later = (
            ("grade_level", self.grade_level is TriState.NA),
            ("similarity", self.similarity is TriState.NA),
            ("blooms_level", self.blooms_level is None),
            ("distractors", all(d.all_na() for d in self.distractors)),
        )
        if gated:
            for name, is_na in later:
                if not is_na:
                    problems.append(f"{name} must be NA once a gate item is No")
        else:
            for name, is_na in (
                ("grade_level", self.grade_level is TriState.NA),
                ("similarity", self.similarity is TriState.NA),
                ("blooms_level", self.blooms_level is None),
            ):
                if is_na:
                    problems.append(f"{name} cannot be NA when both gates are Yes")
            if any(d.any_na() for d in self.distractors):
                problems.append("distractor ratings cannot be NA when both gates are Yes")
        return problems

    def response_for(self, criterion: str) -> str:
        """The rater's response as a category string, NA included."""
        if criterion in QUESTION_CRITERIA:
            return getattr(self, criterion).value
        if criterion == SKILL_CRITERION:
            return "na" if self.blooms_level is None else self.blooms_level.name.lower()
        raise ValueError(f"{criterion} is a distractor criterion; use distractor_responses")

    def distractor_responses(self, criterion: str) -> tuple[str, str, str]:
        attr = {
            "distractor_plausibility": "plausibility",
            "distractor_misconception": "misconception",
            "distractor_independence": "independence",
        }[criterion]
        return tuple(getattr(d, attr).value for d in self.distractors)


@dataclass
class AnnotationError(Exception):
    row: int
    message: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.message}"


_CSV_COLUMNS = [
    "question_id",
    "rater_id",
    "relevance",
    "correctness",
    "grade_level",
    "similarity",
    "blooms_level",
    "d1_plausibility",
    "d1_misconception",
    "d1_independence",
    "d2_plausibility",
    "d2_misconception",
    "d2_independence",
    "d3_plausibility",
    "d3_misconception",
    "d3_independence",
]


def _parse_blooms(raw: str) -> Optional[SkillLevel]:
    v = raw.strip().lower()
    if v in ("", "na", "n/a", "-"):
        return None
    try:
        return SkillLevel.parse(int(v) if v.isdigit() else v)
    except ValueError:
        raise ValueError(f"expected a skill level or na, got {raw!r}") from None


def load_annotations_csv(path: "str | Path") -> list[ExpertAnnotation]:
    """Read annotations; raises AnnotationError naming the first bad row."""
    annotations: list[ExpertAnnotation] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise AnnotationError(1, "file is empty")
        missing = [c for c in _CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise AnnotationError(1, f"missing columns: {', '.join(missing)}")
        for n, row in enumerate(reader, start=2):
            try:
                distractors = tuple(
                    DistractorRating(
                        plausibility=TriState.parse(row[f"d{i}_plausibility"]),
                        misconception=TriState.parse(row[f"d{i}_misconception"]),
                        independence=TriState.parse(row[f"d{i}_independence"]),
                    )
                    for i in (1, 2, 3)
                )
                ann = ExpertAnnotation(
                    question_id=row["question_id"].strip(),
                    rater_id=row["rater_id"].strip(),
                    relevance=TriState.parse(row["relevance"]),
                    correctness=TriState.parse(row["correctness"]),
                    grade_level=TriState.parse(row["grade_level"]),
                    similarity=TriState.parse(row["similarity"]),
                    blooms_level=_parse_blooms(row["blooms_level"]),
                    distractors=distractors,
                    strategy=(row.get("strategy") or "").strip() or None,
                )
            except (ValueError, KeyError) as exc:
                raise AnnotationError(n, str(exc)) from None
            if not ann.question_id:
                raise AnnotationError(n, "question_id must be non-empty")
            if not ann.rater_id:
                raise AnnotationError(n, "rater_id must be non-empty")
            problems = ann.validate()
            if problems:
                raise AnnotationError(n, "; ".join(problems))
            annotations.append(ann)
    return annotations


# -- pairing ------------------------------------------------------------------


def pair_annotations(
    annotations: Iterable[ExpertAnnotation],
) -> tuple[dict[str, tuple[ExpertAnnotation, ExpertAnnotation]], list[str]]:
    """Group by question; exactly two raters required, others dropped with a warning."""
    by_question: dict[str, list[ExpertAnnotation]] = defaultdict(list)
    for ann in annotations:
        by_question[ann.question_id].append(ann)
    pairs: dict[str, tuple[ExpertAnnotation, ExpertAnnotation]] = {}
    warnings: list[str] = []
    for qid in sorted(by_question):
        group = sorted(by_question[qid], key=lambda a: a.rater_id)
        raters = [a.rater_id for a in group]
        if len(raters) != len(set(raters)):
            warnings.append(f"question {qid}: duplicate rater rows; excluded")
            continue
        if len(group) != 2:
            warnings.append(f"question {qid}: expected 2 raters, got {len(group)}; excluded")
            continue
        pairs[qid] = (group[0], group[1])
    return pairs, warnings


# -- consensus -----------------------------------------------------------------


@dataclass(frozen=True)
class QuestionConsensus:
    """Two-rater consensus: a criterion is accepted only when both raters accept."""

    question_id: str
    strategy: Optional[str]
    accepted: dict[str, bool]
    skill_labels: tuple[str, str]
    skill_resolved: bool

    @property
    def high_quality(self) -> bool:
        return all(self.accepted[c] for c in ALL_CRITERIA)


def consensus_for_pair(
    a: ExpertAnnotation, b: ExpertAnnotation
) -> QuestionConsensus:
    accepted: dict[str, bool] = {}
    for criterion in QUESTION_CRITERIA:
        accepted[criterion] = (
            getattr(a, criterion) is TriState.YES and getattr(b, criterion) is TriState.YES
        )
    skill_resolved = (
        a.blooms_level is not None
        and b.blooms_level is not None
        and a.blooms_level == b.blooms_level
    )
    accepted[SKILL_CRITERION] = skill_resolved
    for criterion in DISTRACTOR_CRITERIA:
        ra = a.distractor_responses(criterion)
        rb = b.distractor_responses(criterion)
        accepted[criterion] = all(
            x == "yes" and y == "yes" for x, y in zip(ra, rb)
        )
    strategy = a.strategy or b.strategy
    return QuestionConsensus(
        question_id=a.question_id,
        strategy=strategy,
        accepted=accepted,
        skill_labels=(a.response_for(SKILL_CRITERION), b.response_for(SKILL_CRITERION)),
        skill_resolved=skill_resolved,
    )


def build_consensus(
    annotations: Iterable[ExpertAnnotation],
) -> tuple[list[QuestionConsensus], list[str]]:
    pairs, warnings = pair_annotations(annotations)
    return [consensus_for_pair(a, b) for a, b in pairs.values()], warnings


# -- agreement statistics ---------------------------------------------------------


def _units_for(
    pairs: "dict[str, tuple[ExpertAnnotation, ExpertAnnotation]]", criterion: str
) -> list[tuple[str, str]]:
    """Paired responses per unit: questions, or (question, distractor) slots."""
    units: list[tuple[str, str]] = []
    for qid in sorted(pairs):
        a, b = pairs[qid]
        if criterion in DISTRACTOR_CRITERIA:
            units.extend(zip(a.distractor_responses(criterion), b.distractor_responses(criterion)))
        else:
            units.append((a.response_for(criterion), b.response_for(criterion)))
    return units


def percent_agreement(units: Sequence[tuple[str, str]]) -> FloatOrUndefined:
    """Share of units where both responses match; NA is an ordinary response."""
    if not units:
        return UNDEFINED
    hits = sum(1 for x, y in units if x == y)
    return hits / len(units)


def confusion_matrix(
    units: Sequence[tuple[str, str]], categories: Sequence[str]
) -> list[list[int]]:
    index = {c: i for i, c in enumerate(categories)}
    m = [[0] * len(categories) for _ in categories]
    for x, y in units:
        m[index[x]][index[y]] += 1
    return m


def kappa_from_confusion(matrix: Sequence[Sequence[int]]) -> FloatOrUndefined:
    """Cohen's kappa from a k x k confusion matrix of paired ratings."""
    n = sum(sum(row) for row in matrix)
    if n == 0:
        return UNDEFINED
    k = len(matrix)
    po = sum(matrix[i][i] for i in range(k)) / n
    row = [sum(matrix[i]) for i in range(k)]
    col = [sum(matrix[i][j] for i in range(k)) for j in range(k)]
    pe = sum(row[i] * col[i] for i in range(k)) / (n * n)
    if pe == 1.0:
        return UNDEFINED
    return (po - pe) / (1.0 - pe)


def cohen_kappa(units: Sequence[tuple[str, str]]) -> FloatOrUndefined:
    """Kappa over yes/no units; units with an NA on either side are dropped."""
    kept = [(x, y) for x, y in units if x != "na" and y != "na"]
    if not kept:
        return UNDEFINED
    return kappa_from_confusion(confusion_matrix(kept, ("yes", "no")))


def weighted_kappa(
    matrix: Sequence[Sequence[int]], weights: Sequence[Sequence[float]]
) -> FloatOrUndefined:
    """Weighted kappa: 1 - (sum w*observed) / (sum w*expected)."""
    n = sum(sum(row) for row in matrix)
    if n == 0:
        return UNDEFINED
    k = len(matrix)
    row = [sum(matrix[i]) for i in range(k)]
    col = [sum(matrix[i][j] for i in range(k)) for j in range(k)]
    w_obs = sum(weights[i][j] * matrix[i][j] for i in range(k) for j in range(k))
    w_exp = sum(weights[i][j] * row[i] * col[j] / n for i in range(k) for j in range(k))
    if w_exp == 0.0:
        return UNDEFINED
    return 1.0 - w_obs / w_exp


def quadratic_weights(k: int) -> list[list[float]]:
    return [[((i - j) ** 2) / ((k - 1) ** 2) for j in range(k)] for i in range(k)]


_SKILL_CATEGORIES = tuple(s.name.lower() for s in SkillLevel)


def weighted_kappa_quadratic_skills(units: Sequence[tuple[str, str]]) -> FloatOrUndefined:
    """Quadratically weighted kappa over the six skill levels; NA pairs dropped."""
    kept = [(x, y) for x, y in units if x != "na" and y != "na"]
    if not kept:
        return UNDEFINED
    matrix = confusion_matrix(kept, _SKILL_CATEGORIES)
    return weighted_kappa(matrix, quadratic_weights(len(_SKILL_CATEGORIES)))


@dataclass(frozen=True)
class CriterionReliability:
    criterion: str
    agreement: FloatOrUndefined
    kappa: FloatOrUndefined
    n_units: int
    n_kappa_units: int


def reliability_report(
    annotations: Iterable[ExpertAnnotation],
) -> tuple[list[CriterionReliability], list[str]]:
    """Agreement and kappa per rubric criterion, pooled across questions."""
    pairs, warnings = pair_annotations(annotations)
    rows: list[CriterionReliability] = []
    for criterion in ALL_CRITERIA:
        units = _units_for(pairs, criterion)
        kept = [(x, y) for x, y in units if x != "na" and y != "na"]
        if criterion == SKILL_CRITERION:
            kappa = weighted_kappa_quadratic_skills(units)
        else:
            kappa = cohen_kappa(units)
        rows.append(
            CriterionReliability(
                criterion=criterion,
                agreement=percent_agreement(units),
                kappa=kappa,
                n_units=len(units),
                n_kappa_units=len(kept),
            )
        )
    return rows, warnings


# -- quality table ------------------------------------------------------------------


def quality_table(
    consensus: Sequence[QuestionConsensus],
) -> dict[str, dict[str, FloatOrUndefined]]:
    """Percent of questions accepted per criterion, grouped by strategy.

    Strategy None groups under "all". Each group also reports the share of
    questions accepted on every criterion, and the question count.
    """
    groups: dict[str, list[QuestionConsensus]] = defaultdict(list)
    for c in consensus:
        groups[c.strategy or "all"].append(c)
    table: dict[str, dict[str, FloatOrUndefined]] = {}
    for name in sorted(groups):
        rows = groups[name]
        n = len(rows)
        entry: dict[str, FloatOrUndefined] = {"n": float(n)}
        for criterion in ALL_CRITERIA:
            entry[criterion] = (
                100.0 * sum(1 for c in rows if c.accepted[criterion]) / n if n else UNDEFINED
            )
        entry[HIGH_QUALITY] = (
            100.0 * sum(1 for c in rows if c.high_quality) / n if n else UNDEFINED
        )
        table[name] = entry
    return table


# -- rendering ---------------------------------------------------------------------


def _fmt(value: FloatOrUndefined, places: int = 2) -> str:
    if isinstance(value, Undefined):
        return "—"
    return f"{value:.{places}f}"


def render_reliability_report(rows: Sequence[CriterionReliability]) -> str:
    width = max(len(CRITERION_TITLES[r.criterion]) for r in rows)
    lines = ["Inter-rater reliability", ""]
    header = f"{'Criterion':<{width}}  {'Agreement':>9}  {'Kappa':>7}  {'Units':>6}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in rows:
        lines.append(
            f"{CRITERION_TITLES[r.criterion]:<{width}}  {_fmt(r.agreement):>9}"
            f"  {_fmt(r.kappa):>7}  {r.n_units:>6}"
        )
    return "\n".join(lines) + "\n"


def render_expert_report(annotations: Sequence[ExpertAnnotation]) -> str:
    """Full expert report: reliability, consensus acceptance, and warnings."""
    rows, warnings = reliability_report(annotations)
    consensus, _ = build_consensus(annotations)
    parts = [render_reliability_report(rows), render_quality_report(quality_table(consensus))]
    if warnings:
        parts.append("Warnings\n" + "\n".join(f"  {w}" for w in sorted(warnings)) + "\n")
    return "\n".join(parts)


def render_quality_report(table: dict[str, dict[str, FloatOrUndefined]]) -> str:
    strategies = sorted(table)
    width = max(
        [len(CRITERION_TITLES[c]) for c in ALL_CRITERIA] + [len("High quality"), len("Criterion")]
    )
    col = max([10] + [len(s) for s in strategies])
    lines = ["Expert consensus acceptance (%)", ""]
    header = f"{'Criterion':<{width}}" + "".join(f"  {s:>{col}}" for s in strategies)
    lines.append(header)
    lines.append("-" * len(header))
    for criterion in ALL_CRITERIA:
        row = f"{CRITERION_TITLES[criterion]:<{width}}"
        for s in strategies:
            row += f"  {_fmt(table[s][criterion]):>{col}}"
        lines.append(row)
    row = f"{'High quality':<{width}}"
    for s in strategies:
        row += f"  {_fmt(table[s][HIGH_QUALITY]):>{col}}"
    lines.append(row)
    row = f"{'Questions':<{width}}"
    for s in strategies:
        row += f"  {int(table[s]['n']):>{col}}"
    lines.append(row)
    return "\n".join(lines) + "\n"

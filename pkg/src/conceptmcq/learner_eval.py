"""Learner performance metrics and cross-strategy significance tests.

Three headline metrics per strategy, each expressed as a percentage:
accuracy over attempted items, guess success rate over self-reported
guesses, and difficulty-weighted accuracy where each attempted item
contributes its difficulty weight (1, 3, or 5).

Guess success is compared across strategies with a chi-square test of
homogeneity on the guessed-item counts, followed by pairwise pooled
two-proportion z-tests with a Bonferroni-adjusted threshold.
"""

from __future__ import annotations

import csv
import statistics
from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .stats import UNDEFINED, Undefined, chi2_sf, normal_two_sided_p

FloatOrUndefined = Union[float, Undefined]


class Difficulty(IntEnum):
    """Perceived difficulty; the values double as metric weights."""

    EASY = 1
    MODERATE = 3
    DIFFICULT = 5

    @classmethod
    def parse(cls, raw: "str | int") -> "Difficulty":
        if isinstance(raw, int):
            return cls(raw)
        v = raw.strip().lower()
        if v.isdigit():
            return cls(int(v))
        name = v.upper()
        if name in cls.__members__:
            return cls[name]
        raise ValueError(f"expected a difficulty of 1/3/5 or easy/moderate/difficult, got {raw!r}")


@dataclass(frozen=True)
class LearnerResponse:
    """One student's interaction with one question."""

    student_id: str
    question_id: str
    strategy: str
    attempted: bool
    correct: bool
    guessed: bool
    difficulty: Optional[Difficulty]
    response_time_s: Optional[float] = None

    def __post_init__(self):
        if self.correct and not self.attempted:
            raise ValueError("a response cannot be correct without being attempted")
        if self.guessed and not self.attempted:
            raise ValueError("a response cannot be a guess without being attempted")
        if self.attempted and self.difficulty is None:
            raise ValueError("attempted responses must carry a difficulty rating")
        if self.response_time_s is not None and self.response_time_s < 0:
            raise ValueError("response time cannot be negative")


@dataclass
class ResponseError(Exception):
    row: int
    message: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.message}"


_CSV_COLUMNS = [
    "student_id",
    "question_id",
    "strategy",
    "attempted",
    "correct",
    "guessed",
    "difficulty",
]


def _parse_bool(raw: str, column: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "y"):
        return True
    if v in ("0", "false", "no", "n", ""):
        return False
    raise ValueError(f"{column}: expected a boolean, got {raw!r}")


def load_responses_csv(path: "str | Path") -> list[LearnerResponse]:
    """Read responses; raises ResponseError naming the first bad row."""
    out: list[LearnerResponse] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ResponseError(1, "file is empty")
        missing = [c for c in _CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ResponseError(1, f"missing columns: {', '.join(missing)}")
        for n, row in enumerate(reader, start=2):
            try:
                attempted = _parse_bool(row["attempted"], "attempted")
                diff_raw = (row.get("difficulty") or "").strip()
                difficulty = Difficulty.parse(diff_raw) if diff_raw else None
                time_raw = (row.get("response_time_s") or "").strip()
                out.append(
                    LearnerResponse(
                        student_id=row["student_id"].strip(),
                        question_id=row["question_id"].strip(),
                        strategy=row["strategy"].strip(),
                        attempted=attempted,
                        correct=_parse_bool(row["correct"], "correct"),
                        guessed=_parse_bool(row["guessed"], "guessed"),
                        difficulty=difficulty,
                        response_time_s=float(time_raw) if time_raw else None,
                    )
                )
            except (ValueError, KeyError) as exc:
                raise ResponseError(n, str(exc)) from None
    return out


# -- headline metrics -----------------------------------------------------------


def accuracy(responses: Iterable[LearnerResponse]) -> FloatOrUndefined:
    """100 * correct / attempted."""
    attempted = correct = 0
    for r in responses:
        if r.attempted:
            attempted += 1
            correct += r.correct
    if attempted == 0:
        return UNDEFINED
    return 100.0 * correct / attempted

def guess_success_rate(responses: Iterable[LearnerResponse]) -> FloatOrUndefined:
    """100 * (guessed and correct) / guessed."""
    guessed = hits = 0
    for r in responses:
        if r.guessed:
            guessed += 1
            hits += r.correct
    if guessed == 0:
        return UNDEFINED
    return 100.0 * hits / guessed


def difficulty_weighted_accuracy(responses: Iterable[LearnerResponse]) -> FloatOrUndefined:
    """100 * sum(correct * weight) / sum(weight) over attempted responses."""
    weight_sum = hit_sum = 0
    for r in responses:
        if r.attempted:
            weight_sum += int(r.difficulty)
            if r.correct:
                hit_sum += int(r.difficulty)
    if weight_sum == 0:
        return UNDEFINED
    return 100.0 * hit_sum / weight_sum


# -- significance tests ------------------------------------------------------------


class DegenerateTable(ValueError):
    """A contingency table with a zero marginal cannot be tested."""


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float


def chi_square_homogeneity(counts: Sequence[tuple[int, int]]) -> ChiSquareResult:
    """Test whether success proportions are homogeneous across groups.

    ``counts`` holds one (successes, total) pair per group; the table is
    groups x {success, failure}. Raises DegenerateTable when any expected
    cell is zero.
    """
    if len(counts) < 2:
        raise DegenerateTable("need at least two groups")
    for x, n in counts:
        if x < 0 or n < x:
            raise ValueError(f"bad group counts ({x}, {n})")
    total = sum(n for _, n in counts)
    total_success = sum(x for x, _ in counts)
    total_failure = total - total_success
    if total == 0 or total_success == 0 or total_failure == 0 or any(n == 0 for _, n in counts):
        raise DegenerateTable("a zero marginal makes expected counts zero")
    stat = 0.0
    for x, n in counts:
        e_success = n * total_success / total
        e_failure = n * total_failure / total
        stat += (x - e_success) ** 2 / e_success
        stat += ((n - x) - e_failure) ** 2 / e_failure
    df = len(counts) - 1
    return ChiSquareResult(statistic=stat, df=df, p_value=chi2_sf(stat, df))


def two_proportion_ztest(x1: int, n1: int, x2: int, n2: int) -> tuple[float, float]:
    """Pooled two-proportion z-test, two-sided.

    Equal observed proportions give (0.0, 1.0) exactly, which also covers
    the pooled-variance-zero corner where both groups are all hits or all
    misses.
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both groups need at least one trial")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise ValueError("successes must lie within trials")
    p1 = x1 / n1
    p2 = x2 / n2
    if p1 == p2:
        return 0.0, 1.0
    pooled = (x1 + x2) / (n1 + n2)
    se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)) ** 0.5
    z = (p1 - p2) / se
    return z, normal_two_sided_p(z)


@dataclass(frozen=True)
class PairwiseZ:
    group_a: str
    group_b: str
    x_a: int
    n_a: int
    x_b: int
    n_b: int
    z: Optional[float]
    p_value: Optional[float]
    significant: bool
    significant_bonferroni: bool
    degenerate: bool = False


@dataclass(frozen=True)
class ComparisonReport:
    chi_square: Optional[ChiSquareResult]
    chi_square_note: str
    pairwise: tuple[PairwiseZ, ...]
    alpha: float
    alpha_bonferroni: Optional[float]


def guessed_counts(responses: Iterable[LearnerResponse]) -> dict[str, tuple[int, int]]:
    """Per strategy: (guessed-and-correct, guessed) counts."""
    acc: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for r in responses:
        if r.guessed:
            acc[r.strategy][1] += 1
            acc[r.strategy][0] += r.correct
    return {k: (v[0], v[1]) for k, v in acc.items()}


def compare_guess_success(
    responses: Iterable[LearnerResponse], alpha: float = 0.05
) -> ComparisonReport:
    """Omnibus chi-square plus Bonferroni-adjusted pairwise z-tests."""
    counts = guessed_counts(responses)
    groups = sorted(counts)
    chi: Optional[ChiSquareResult] = None
    note = ""
    if len(groups) >= 2:
        try:
            chi = chi_square_homogeneity([counts[g] for g in groups])
        except DegenerateTable as exc:
            note = f"chi-square not computed: {exc}"
    else:
        note = "chi-square not computed: fewer than two strategies with guesses"

    candidate_pairs = [
        (groups[i], groups[j]) for i in range(len(groups)) for j in range(i + 1, len(groups))
    ]
    testable = [
        (a, b) for a, b in candidate_pairs if counts[a][1] > 0 and counts[b][1] > 0
    ]
    alpha_bonf = alpha / len(testable) if testable else None
    pairwise: list[PairwiseZ] = []
    for a, b in candidate_pairs:
        xa, na = counts[a]
        xb, nb = counts[b]
        if (a, b) not in testable:
            pairwise.append(
                PairwiseZ(
                    group_a=a, group_b=b, x_a=xa, n_a=na, x_b=xb, n_b=nb,
                    z=None, p_value=None,
                    significant=False, significant_bonferroni=False, degenerate=True,
                )
            )
            continue
        z, p = two_proportion_ztest(xa, na, xb, nb)
        pairwise.append(
            PairwiseZ(
                group_a=a, group_b=b, x_a=xa, n_a=na, x_b=xb, n_b=nb,
                z=z, p_value=p,
                significant=p < alpha,
                significant_bonferroni=alpha_bonf is not None and p < alpha_bonf,
            )
        )
    return ComparisonReport(
        chi_square=chi,
        chi_square_note=note,
        pairwise=tuple(pairwise),
        alpha=alpha,
        alpha_bonferroni=alpha_bonf,
    )


# -- response times ------------------------------------------------------------------


@dataclass(frozen=True)
class TimeSummary:
    n: int
    mean: float
    median: float
    iqr: float


def response_time_summary(responses: Iterable[LearnerResponse]) -> Optional[TimeSummary]:
    """Mean, median, and interquartile range of recorded response times."""
    times = sorted(r.response_time_s for r in responses if r.response_time_s is not None)
    if not times:
        return None
    if len(times) == 1:
        return TimeSummary(n=1, mean=times[0], median=times[0], iqr=0.0)
    q = statistics.quantiles(times, n=4, method="inclusive")
    return TimeSummary(
        n=len(times),
        mean=statistics.fmean(times),
        median=statistics.median(times),
        iqr=q[2] - q[0],
    )


# -- report -------------------------------------------------------------------------


METRIC_TITLES = (
    ("accuracy", "Accuracy"),
    ("dwa", "Difficulty-weighted accuracy"),
    ("gsr", "Guess success rate"),
)


def metrics_by_strategy(
    responses: Sequence[LearnerResponse],
) -> dict[str, dict[str, FloatOrUndefined]]:
    groups: dict[str, list[LearnerResponse]] = defaultdict(list)
    for r in responses:
        groups[r.strategy].append(r)
    return {
        name: {
            "accuracy": accuracy(rows),
            "dwa": difficulty_weighted_accuracy(rows),
            "gsr": guess_success_rate(rows),
        }
        for name, rows in sorted(groups.items())
    }


def _fmt(value: "FloatOrUndefined | None", places: int = 2) -> str:
    if value is None or isinstance(value, Undefined):
        return "—"
    return f"{value:.{places}f}"


def render_learner_report(responses: Sequence[LearnerResponse], alpha: float = 0.05) -> str:
    table = metrics_by_strategy(responses)
    strategies = sorted(table)
    width = max(len(title) for _, title in METRIC_TITLES)
    col = max([10] + [len(s) for s in strategies])
    lines = ["Learner performance (%)", ""]
    header = f"{'Metric':<{width}}" + "".join(f"  {s:>{col}}" for s in strategies)
    lines.append(header)
    lines.append("-" * len(header))
    for key, title in METRIC_TITLES:
        row = f"{title:<{width}}"
        for s in strategies:
            row += f"  {_fmt(table[s][key]):>{col}}"
        lines.append(row)

    report = compare_guess_success(responses, alpha=alpha)
    lines.append("")
    lines.append("Guess success comparison")
    if report.chi_square is not None:
        c = report.chi_square
        lines.append(
            f"  Chi-square: statistic={c.statistic:.2f}, df={c.df}, p={c.p_value:.3f}"
        )
    else:
        lines.append(f"  {report.chi_square_note}")
    if report.pairwise:
        bonf = _fmt(report.alpha_bonferroni, 4)
        lines.append(
            f"  Pairwise z-tests (alpha={report.alpha:.2f}, Bonferroni alpha={bonf}):"
        )
        for pz in report.pairwise:
            if pz.degenerate:
                lines.append(
                    f"    {pz.group_a} vs {pz.group_b}: not testable (no guesses in a group)"
                )
                continue
            marks = ""
            if pz.significant:
                marks += " *"
            if pz.significant_bonferroni:
                marks += "†"
            lines.append(
                f"    {pz.group_a} vs {pz.group_b}: z={pz.z:.3f}, p={pz.p_value:.3f}{marks}"
            )

    lines.append("")
    lines.append("Response times (s)")
    by_strategy: dict[str, list[LearnerResponse]] = defaultdict(list)
    for r in responses:
        by_strategy[r.strategy].append(r)
    for s in strategies:
        summary = response_time_summary(by_strategy[s])
        if summary is None:
            lines.append(f"  {s}: no recorded times")
        else:
            lines.append(
                f"  {s}: n={summary.n}, mean={summary.mean:.2f},"
                f" median={summary.median:.2f}, iqr={summary.iqr:.2f}"
            )
    return "\n".join(lines) + "\n"

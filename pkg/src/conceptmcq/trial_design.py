"""Assembly of balanced test versions from a question pool.

Each version holds one question per (skill, strategy) cell, listed in
ascending skill order, so every version exercises every skill level under
every generation strategy exactly once. Versions are filled by seeded
random draws from the per-cell buckets; a version identical to an earlier
one triggers a redraw, bounded by a restart budget.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Any, Sequence

from .taxonomy import GENERATION_SKILLS, SkillLevel


@dataclass(frozen=True)
class PoolItem:
    """One candidate question available for assembly."""

    question_id: str
    topic: str
    skill: SkillLevel
    strategy: str


@dataclass(frozen=True)
class TestVersion:
    version_id: str
    items: tuple[PoolItem, ...]


@dataclass(frozen=True)
class TrialDesign:
    versions: tuple[TestVersion, ...]
    seed: int
    skills: tuple[SkillLevel, ...]
    strategies: tuple[str, ...]


class InfeasiblePool(ValueError):
    """The pool cannot fill the design; names every underfilled cell."""

    def __init__(self, cells: "list[tuple[SkillLevel, str]]"):
        self.cells = cells
        named = ", ".join(f"({skill.label}, {strategy})" for skill, strategy in cells)
        super().__init__(f"pool has no questions for cell(s): {named}")


class RestartsExhausted(RuntimeError):
    """Could not draw pairwise-distinct versions within the restart budget."""


def assemble(
    pool: Sequence[PoolItem],
    n_versions: int = 9,
    seed: int = 0,
    max_restarts: int = 1000,
) -> TrialDesign:
    """Draw n_versions balanced versions from the pool.

    Raises InfeasiblePool if any (skill, strategy) cell has no candidates,
    and RestartsExhausted if pairwise-distinct versions cannot be drawn.
    """
    if n_versions < 1:
        raise ValueError("n_versions must be >= 1")
    seen_ids: set[str] = set()
    for item in pool:
        if item.question_id in seen_ids:
            raise ValueError(f"duplicate question_id in pool: {item.question_id!r}")
        seen_ids.add(item.question_id)

    strategies = tuple(sorted({item.strategy for item in pool}))
    if not strategies:
        raise InfeasiblePool([(skill, "?") for skill in GENERATION_SKILLS])
    skills = GENERATION_SKILLS
    buckets: dict[tuple[SkillLevel, str], list[PoolItem]] = {
        (skill, strategy): [] for skill in skills for strategy in strategies
    }
    for item in pool:
        key = (item.skill, item.strategy)
        if key in buckets:
            buckets[key].append(item)
    for key in buckets:
        buckets[key].sort(key=lambda i: i.question_id)
    empty = [key for key, items in buckets.items() if not items]
    if empty:
        raise InfeasiblePool(sorted(empty, key=lambda c: (c[0].value, c[1])))

    master = random.Random(seed)
    versions: list[TestVersion] = []
    used_sets: set[frozenset[str]] = set()
    restarts = 0
    for n in range(1, n_versions + 1):
        while True:
            rng = random.Random(master.getrandbits(64))
            picked: list[PoolItem] = []
            for skill in skills:
                for strategy in strategies:
                    # one draw per cell; cells partition by (skill, strategy),
                    # so (topic, skill, strategy) triples stay distinct
                    picked.append(rng.choice(buckets[(skill, strategy)]))
            id_set = frozenset(item.question_id for item in picked)
            if id_set not in used_sets:
                used_sets.add(id_set)
                versions.append(TestVersion(version_id=f"v{n}", items=tuple(picked)))
                break
            restarts += 1
            if restarts > max_restarts:
                raise RestartsExhausted(
                    f"could not draw {n_versions} distinct versions within"
                    f" {max_restarts} restarts (stuck at version {n})"
                )
    return TrialDesign(
        versions=tuple(versions), seed=seed, skills=skills, strategies=strategies
    )


# -- interchange --------------------------------------------------------------

DESIGN_FORMAT = "trial-design"
DESIGN_VERSION = 1


def design_to_document(design: TrialDesign) -> dict:
    return {
        "format": DESIGN_FORMAT,
        "version": DESIGN_VERSION,
        "seed": design.seed,
        "skills": [s.name.lower() for s in design.skills],
        "strategies": list(design.strategies),
        "versions": [
            {
                "version_id": v.version_id,
                "items": [
                    {
                        "question_id": i.question_id,
                        "topic": i.topic,
                        "skill": i.skill.name.lower(),
                        "strategy": i.strategy,
                    }
                    for i in v.items
                ],
            }
            for v in design.versions
        ],
    }


def load_pool(doc: Any) -> list[PoolItem]:
    """Parse a pool document: a JSON list of question descriptors."""
    if not isinstance(doc, list):
        raise ValueError("pool document must be a JSON list")
    items: list[PoolItem] = []
    for n, row in enumerate(doc):
        if not isinstance(row, dict):
            raise ValueError(f"pool[{n}]: must be an object")
        try:
            items.append(
                PoolItem(
                    question_id=str(row["question_id"]),
                    topic=str(row["topic"]),
                    skill=SkillLevel.parse(row["skill"]),
                    strategy=str(row["strategy"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"pool[{n}]: {exc}") from None
    return items


def dump_design_json(design: TrialDesign) -> str:
    return json.dumps(design_to_document(design), indent=2, ensure_ascii=False) + "\n"

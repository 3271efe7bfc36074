"""Shared fixtures: a small seed map, scripted transports, and MCQ builders."""

from __future__ import annotations

import json
from collections import deque

import pytest

from conceptmcq.concept_store import ConceptStore
from conceptmcq.config import Settings
from conceptmcq.gateway import CompletionRequest, Gateway, Mode, TransportFailure


def _sub(key: str, title: str, desc: str, **extra) -> dict:
    base = {
        "key": key,
        "title": title,
        "description": desc,
        "prerequisites": [],
        "formulations": [],
        "misconceptions": [],
        "applications": [],
        "crosscutting": [],
        "analogies": [],
        "curriculum_refs": [],
        "objectives": [],
    }
    base.update(extra)
    return base


SEED_MAP = {
    "schema_version": 1,
    "title": "Seed physics map",
    "grades": [9, 10],
    "units": [
        {
            "key": "fluid-mechanics",
            "title": "Fluids at Rest",
            "grade": 9,
            "ordinal": 1,
            "topics": [
                {
                    "key": "archimedes-principle-and-buoyancy",
                    "title": "Archimedes' Principle and Buoyancy",
                    "overview": "Upthrust and flotation.",
                    "subtopics": [
                        _sub(
                            "buoyant-force",
                            "Buoyant Force and Upthrust",
                            "A body in a fluid feels an upward force equal to the"
                            " weight of the fluid it displaces.",
                            prerequisites=["Pressure increases with depth", "Density"],
                            formulations=[
                                {
                                    "expression": "F_b = rho_f * V_disp * g",
                                    "description": "Buoyant force equals displaced fluid weight",
                                    "variables": [
                                        {"symbol": "F_b", "meaning": "buoyant force", "unit": "N"},
                                        {
                                            "symbol": "rho_f",
                                            "meaning": "fluid density",
                                            "unit": "kg/m^3",
                                        },
                                    ],
                                }
                            ],
                            misconceptions=[
                                "Upthrust grows with depth for a fully submerged body",
                                "Heavy objects always sink regardless of shape",
                            ],
                            applications=["Ships' load lines", "Hydrometers"],
                            crosscutting=["Density links to properties of matter"],
                            analogies=["Sitting in a full bathtub: the spill stands in for you"],
                            curriculum_refs=[
                                {"source": "NCERT Science", "grade": 9, "chapter": "Gravitation"}
                            ],
                            objectives=[
                                {
                                    "statement": "Predict float or sink from densities",
                                    "skill": "apply",
                                    "dimension": "conceptual",
                                }
                            ],
                        ),
                        _sub(
                            "flotation-and-density",
                            "Flotation and Relative Density",
                            "A floating body displaces its own weight of fluid; the"
                            " submerged fraction equals the density ratio.",
                            misconceptions=["An iron ship floats because iron becomes lighter"],
                        ),
                    ],
                },
                {
                    "key": "pressure-in-fluids",
                    "title": "Pressure in Fluids",
                    "overview": "Pressure transmission.",
                    "subtopics": [
                        _sub(
                            "pascals-law",
                            "Pascal's Law and Hydraulics",
                            "Pressure applied to an enclosed fluid is transmitted"
                            " undiminished throughout.",
                        )
                    ],
                },
            ],
        }
    ],
}

TOPIC_TITLE = "Archimedes' Principle and Buoyancy"
TOPIC_KEY = "archimedes-principle-and-buoyancy"


@pytest.fixture()
def seed_map_doc() -> dict:
    return json.loads(json.dumps(SEED_MAP))


@pytest.fixture()
def seed_store(seed_map_doc) -> ConceptStore:
    store = ConceptStore()
    store.import_document(seed_map_doc)
    yield store
    store.close()


@pytest.fixture()
def settings() -> Settings:
    return Settings(backoff_s=0.01)


class ScriptedTransport:
    """Serves completions from per-tag queues and logs every request."""

    def __init__(self, scripts: "dict[str, list[str]]"):
        self.queues = {tag: deque(items) for tag, items in scripts.items()}
        self.requests: list[CompletionRequest] = []

    def __call__(self, request: CompletionRequest) -> str:
        self.requests.append(request)
        queue = self.queues.get(request.tag.value)
        if not queue:
            raise AssertionError(
                f"unscripted {request.tag.value!r} call"
                f" (user prompt head: {request.user[:80]!r})"
            )
        return queue.popleft()

    def count(self, tag: str) -> int:
        return sum(1 for r in self.requests if r.tag.value == tag)


class FlakyTransport:
    """Fails with TransportFailure n times, then delegates."""

    def __init__(self, failures: int, inner):
        self.remaining = failures
        self.inner = inner
        self.calls = 0

    def __call__(self, request: CompletionRequest) -> str:
        self.calls += 1
        if self.remaining > 0:
            self.remaining -= 1
            raise TransportFailure("synthetic outage")
        return self.inner(request)


def make_gateway(settings: Settings, transport, **kwargs) -> Gateway:
    return Gateway(settings, transport=transport, sleep=lambda s: None, **kwargs)


DEFAULT_OPTIONS = {
    "A": "The weight of the body",
    "B": "The weight of the displaced fluid",
    "C": "The volume of the body",
    "D": "The depth of immersion",
}


def mcq_completion(
    stem: str = "What does the buoyant force on a submerged body equal?",
    correct: str = "B",
    options: "dict[str, str] | None" = None,
    explanation: str = "The upthrust equals the weight of displaced fluid.",
    prefix: str = "",
) -> str:
    opts = options or DEFAULT_OPTIONS
    wrong = [label for label in "ABCD" if label != correct]
    body = {
        "question": stem,
        "options": opts,
        "correct_answer": correct,
        "explanation": explanation,
        "distractor_misconceptions": {
            label: f"Confuses the answer with {opts[label].lower()}" for label in wrong
        },
    }
    return prefix + json.dumps(body)


def record_transcript(tmp_path, settings, scripts, meta=None, name="run.jsonl"):
    """Run the scripted transport in record mode; returns the transcript path."""
    path = tmp_path / name
    transport = ScriptedTransport(scripts)
    gateway = make_gateway(
        settings, transport, mode=Mode.RECORD, transcript_path=path, meta=meta or {}
    )
    return path, gateway, transport


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LABELS = {
    "c1": "review metric arithmetic",
    "c2": "learner metric equations",
    "c3": "agreement statistics",
    "c4": "significance battery",
    "c5": "generation state machine",
    "c6": "trial assembly",
    "c7": "concept store round trip",
    "c8": "end-to-end generate under replay",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion, when any were run."""
    verdicts: dict[str, bool] = {}
    for status, ok in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_c" not in nodeid:
                continue
            cid = nodeid.split("::test_", 1)[1].split("_", 1)[0]
            if cid in ACCEPTANCE_LABELS:
                verdicts[cid] = verdicts.get(cid, True) and ok
    if not verdicts:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for cid in sorted(verdicts):
        status = "PASS" if verdicts[cid] else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE: {cid.upper()} {ACCEPTANCE_LABELS[cid]}: {status}")

"""Prompt construction.

Every prompt is a pure function of its inputs, with deterministic section
ordering, so identical pipeline inputs produce byte-identical requests and
transcripts replay cleanly.
"""

from __future__ import annotations

from ..concept_store import ContextBundle
from ..taxonomy import SKILL_DEFINITIONS, SkillLevel

GENERATOR_SYSTEM = """\
You are an experienced physics teacher writing multiple-choice questions for school students.

Every question you write must satisfy all four requirements:
1. The language, scenario, and numbers are appropriate for the stated grade level.
2. The question exercises exactly the stated cognitive skill, not a lower or higher one.
3. Each wrong option is plausible because it reflects a specific, common student misconception.
4. Exactly one option is correct, and it is unambiguously correct.

Think through the physics step by step before writing. Then output only a single JSON object with this exact shape:
{
  "question": "<question stem>",
  "options": {"A": "<text>", "B": "<text>", "C": "<text>", "D": "<text>"},
  "correct_answer": "<A|B|C|D>",
  "explanation": "<why the correct option is correct>",
  "distractor_misconceptions": {"<wrong label>": "<the misconception it reflects>", ...}
}
The distractor_misconceptions object must have one entry for each of the three wrong options."""

EXTRACTOR_SYSTEM = """\
You identify the physics topic a request is about.

Reply with only the topic name: at most 12 words, no punctuation beyond spaces and hyphens, no explanation."""

MATCHER_SYSTEM = """\
You match a physics topic against a fixed list of curriculum topics.

Reply with only the key of the best-matching topic, exactly as written in the list. If no listed topic covers the request, reply with only the word NONE."""

UNIQUENESS_JUDGE_SYSTEM = """\
You compare a new multiple-choice question against previously written questions.

Answer YES if the new question repeats the scenario, setup, or tested idea of any previous question. Answer NO if it is genuinely different. Reply with only YES or NO on the first line, then one sentence of justification."""

CORRECTNESS_JUDGE_SYSTEM = """\
You are a careful physics examiner checking a multiple-choice question.

Work out the answer yourself from the question alone. Reply with only the label (A, B, C, or D) of the option you determine to be correct on the first line, then your reasoning."""

ANSWER_FIX_SYSTEM = """\
You repair the answer key of a multiple-choice question without changing the question.

You must keep the question stem and all four options exactly as given. Output only a JSON object:
{
  "correct_answer": "<A|B|C|D>",
  "explanation": "<why that option is correct>",
  "distractor_misconceptions": {"<wrong label>": "<misconception>", ...}
}
The distractor_misconceptions object must have one entry for each of the three wrong options."""


def extract_topic_user(raw_topic: str) -> str:
    return f"Request: {raw_topic.strip()}\n\nTopic:"


def match_topic_user(extracted: str, candidates: "list[tuple[str, str]]") -> str:
    lines = [f"Topic to match: {extracted}", "", "Curriculum topics:"]
    for key, title in candidates:
        lines.append(f"  {key}: {title}")
    lines.append("")
    lines.append("Best-matching key:")
    return "\n".join(lines)


def generation_user(
    topic: str,
    grade: int,
    skill: SkillLevel,
    context: "ContextBundle | None",
    history: "list[str]",
) -> str:
    parts = [
        f"Topic: {topic}",
        f"Grade level: {grade}",
        f"Target cognitive skill: {skill.label}",
        f"Skill definition: {SKILL_DEFINITIONS[skill]}",
    ]
    if context is not None:
        parts.append("")
        parts.append("Use the following curriculum material as the factual basis"
                      " for the question and its distractors:")
        parts.append(context.prompt_text())
    if history:
        parts.append("")
        parts.append("Questions already written for this assessment:")
        for n, stem in enumerate(history, start=1):
            parts.append(f"  {n}. {stem}")
        parts.append("Create a new scenario; do not reuse the setup or the tested"
                      " idea of any question above.")
    parts.append("")
    parts.append("Write one multiple-choice question now.")
    return "\n".join(parts)


def _render_question_block(question: str, options: "dict[str, str]") -> str:
    lines = [f"Question: {question}"]
    for label in ("A", "B", "C", "D"):
        lines.append(f"{label}. {options[label]}")
    return "\n".join(lines)


def uniqueness_judge_user(question: str, options: "dict[str, str]", history: "list[str]") -> str:
    lines = ["New question:", _render_question_block(question, options), "", "Previous questions:"]
    for n, stem in enumerate(history, start=1):
        lines.append(f"  {n}. {stem}")
    lines.append("")
    lines.append("Does the new question repeat any previous question? YES or NO:")
    return "\n".join(lines)


def correctness_judge_user(question: str, options: "dict[str, str]") -> str:
    return _render_question_block(question, options) + "\n\nWhich option is correct?"


def answer_fix_user(
    question: str,
    options: "dict[str, str]",
    claimed_label: str,
    judge_label: "str | None",
) -> str:
    if judge_label:
        disagreement = (
            f"The stated answer key says {claimed_label}, but independent checking"
            f" suggests {judge_label}."
        )
    else:
        disagreement = (
            f"The stated answer key says {claimed_label}, but independent checking"
            " could not confirm it."
        )
    return (
        _render_question_block(question, options)
        + f"\n\n{disagreement} Determine the truly correct option and rewrite"
        " the answer key, explanation, and distractor misconceptions accordingly."
    )

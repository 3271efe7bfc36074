"""Assessment generation engine.

The control flow for each skill is: generate a candidate, parse it, run
both validity checks (scenario uniqueness against the accepted-question
history, and answer correctness), and if either fails apply one repair:
a non-unique question is regenerated from scratch, a unique question with
a wrong key gets an answer-only repair that leaves the stem and options
untouched. The repaired candidate is re-checked. Each skill gets a bounded
number of attempts; a skill whose attempts are exhausted becomes an
omission rather than aborting the run.
"""

from __future__ import annotations

import logging
import re
from datetime import datetime, timezone
from typing import Callable, Optional

from ..concept_store import ConceptStore, ContextBundle
from ..config import Settings
from ..gateway import CompletionRequest, Gateway, Mode, ReplayError, Tag, TransportFailure
from ..taxonomy import SkillLevel
from . import prompts
from .items import (
    Assessment,
    DistractorRationale,
    EvaluationVerdict,
    MCQItem,
    MCQOption,
    Omission,
    PipelineRequest,
    Strategy,
)
from .parsing import ParseOutcome, first_line_verdict, parse_answer_fix, parse_mcq

logger = logging.getLogger(__name__)

# Fixed timestamp used during replay so reruns are byte-identical.
REPLAY_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)

CallObserver = Callable[[Optional[SkillLevel], Tag], None]


class ExtractionFailed(RuntimeError):
    """The model produced no usable topic phrase."""


class NoMatch(LookupError):
    """No stored topic covers the requested one."""


def _normalize_stem(stem: str) -> str:
    return re.sub(r"\s+", " ", stem.strip().lower())


class Pipeline:
    """Drives topic extraction, matching, generation, validation, and repair."""

    def __init__(
        self,
        gateway: Gateway,
        store: "ConceptStore | None" = None,
        settings: "Settings | None" = None,
        clock: "Callable[[], datetime] | None" = None,
        call_observer: "CallObserver | None" = None,
    ):
        self.gateway = gateway
        self.store = store
        self.settings = settings or gateway.settings
        if clock is not None:
            self._clock = clock
        elif gateway.mode == Mode.REPLAY:
            self._clock = lambda: REPLAY_EPOCH
        else:
            self._clock = lambda: datetime.now(timezone.utc)
        self._observe = call_observer or (lambda skill, tag: None)
        self._current_skill: Optional[SkillLevel] = None

    # -- gateway helpers -----------------------------------------------------

    def _complete(self, system: str, user: str, temperature: float, tag: Tag) -> str:
        self._observe(self._current_skill, tag)
        return self.gateway.complete(
            CompletionRequest(system=system, user=user, temperature=temperature, tag=tag)
        )

    @property
    def _t_gen(self) -> float:
        return self.settings.generation_temperature

    @property
    def _t_det(self) -> float:
        return self.settings.deterministic_temperature

    # -- stage 1: topic extraction -------------------------------------------

    def extract_topic(self, raw_topic: str) -> str:
        reply = self._complete(
            prompts.EXTRACTOR_SYSTEM,
            prompts.extract_topic_user(raw_topic),
            self._t_det,
            Tag.MATCH,
        )
        phrase = " ".join(reply.strip().splitlines()[0].split()) if reply.strip() else ""
        if not phrase:
            raise ExtractionFailed(f"no topic phrase extracted from {raw_topic!r}")
        words = phrase.split()
        if len(words) > 12:
            phrase = " ".join(words[:12])
        return phrase

    # -- stage 2: topic matching ----------------------------------------------

    def match_topic(self, extracted: str) -> str:
        if self.store is None:
            raise ValueError("topic matching requires a concept store")
        titles = self.store.topic_titles()
        direct = titles.get(extracted.strip().lower())
        if direct is not None:
            return direct
        candidates = self.store.list_topics()
        keys = {key for key, _ in candidates}
        user = prompts.match_topic_user(extracted, list(candidates))
        for nudge in ("", "\n\nReply with exactly one key from the list, or NONE."):
            reply = self._complete(
                prompts.MATCHER_SYSTEM, user + nudge, self._t_det, Tag.MATCH
            )
            answer = first_line_verdict(reply).lower().strip()
            if answer == "none":
                raise NoMatch(f"no stored topic covers {extracted!r}")
            if answer in keys:
                return answer
        raise NoMatch(f"matcher gave no usable key for {extracted!r}")

    # -- stage 3: validity checks ----------------------------------------------

    def check_uniqueness(self, parsed: ParseOutcome, history: "list[str]") -> tuple[bool, str]:
        if not history:
            return True, "no prior questions"
        stem_norm = _normalize_stem(parsed.question)
        for prior in history:
            if _normalize_stem(prior) == stem_norm:
                return False, "stem is an exact repeat of a prior question"
        user = prompts.uniqueness_judge_user(parsed.question, parsed.options, history)
        for nudge in ("", "\n\nAnswer with only YES or NO."):
            try:
                reply = self._complete(
                    prompts.UNIQUENESS_JUDGE_SYSTEM, user + nudge, self._t_det, Tag.JUDGE_UNIQUE
                )
            except TransportFailure as exc:
                return False, f"uniqueness judge unreachable: {exc}"
            verdict = first_line_verdict(reply)
            if verdict.startswith("YES"):
                return False, f"judge found a repeat: {reply.strip()}"
            if verdict.startswith("NO"):
                return True, "judge found no repeat"
        return False, "uniqueness judge reply was unparseable; treating as repeat"

    def check_answer_correctness(self, parsed: ParseOutcome) -> tuple[bool, "str | None", str]:
        """Returns (correct, judge_label, note)."""
        user = prompts.correctness_judge_user(parsed.question, parsed.options)
        for nudge in ("", "\n\nAnswer with only the letter A, B, C, or D."):
            try:
                reply = self._complete(
                    prompts.CORRECTNESS_JUDGE_SYSTEM, user + nudge, self._t_det, Tag.JUDGE_CORRECT
                )
            except TransportFailure as exc:
                return False, None, f"correctness judge unreachable: {exc}"
            head = first_line_verdict(reply)
            m = re.match(r"^(?:OPTION\s+)?([A-D])\b", head)
            if m:
                label = m.group(1)
                if label == parsed.correct_label:
                    return True, label, "judge agrees with the answer key"
                return False, label, f"judge picked {label}, key says {parsed.correct_label}"
        return False, None, "correctness judge reply was unparseable"

    def evaluate_question(
        self, parsed: ParseOutcome, history: "list[str]"
    ) -> tuple[EvaluationVerdict, "str | None"]:
        """Run both checks unconditionally; returns the verdict and the judge's label."""
        unique, unique_note = self.check_uniqueness(parsed, history)
        correct, judge_label, correct_note = self.check_answer_correctness(parsed)
        issues = []
        if not unique:
            issues.append(f"uniqueness: {unique_note}")
        if not correct:
            issues.append(f"correctness: {correct_note}")
        return EvaluationVerdict(unique=unique, correct=correct, issues=tuple(issues)), judge_label

    # -- stage 4: repair --------------------------------------------------------

    def fix_question(
        self,
        parsed: ParseOutcome,
        verdict: EvaluationVerdict,
        judge_label: "str | None",
        topic: str,
        grade: int,
        skill: SkillLevel,
        context: "ContextBundle | None",
        history: "list[str]",
    ) -> "ParseOutcome | None":
        """One repair: regenerate if not unique, else repair the answer key only."""
        if not verdict.unique:
            user = prompts.generation_user(topic, grade, skill, context, history)
            try:
                raw = self._complete(prompts.GENERATOR_SYSTEM, user, self._t_gen, Tag.FIX)
            except TransportFailure as exc:
                logger.warning("repair generation failed: %s", exc)
                return None
            replacement = parse_mcq(raw)
            return replacement if replacement.ok else None
        if not verdict.correct:
            user = prompts.answer_fix_user(
                parsed.question, parsed.options, parsed.correct_label, judge_label
            )
            try:
                raw = self._complete(prompts.ANSWER_FIX_SYSTEM, user, self._t_det, Tag.FIX)
            except TransportFailure as exc:
                logger.warning("answer repair failed: %s", exc)
                return None
            fix = parse_answer_fix(raw, parsed.options)
            if not fix.ok:
                return None
            if fix.distractor_misconceptions is None:
                if fix.correct_label != parsed.correct_label:
                    # relabelling the key invalidates the old rationale set
                    return None
                fix.distractor_misconceptions = dict(parsed.distractor_misconceptions)
            repaired = ParseOutcome(
                question=parsed.question,
                options=dict(parsed.options),
                correct_label=fix.correct_label,
                explanation=fix.explanation,
                distractor_misconceptions=fix.distractor_misconceptions,
            )
            return repaired
        return None

    # -- stage 5: per-skill loop --------------------------------------------------

    def generate_valid_question(
        self,
        topic: str,
        grade: int,
        skill: SkillLevel,
        context: "ContextBundle | None",
        history: "list[str]",
        strategy: Strategy,
        matched_topic_key: "str | None",
    ) -> "tuple[MCQItem | None, str]":
        last_reason = "no attempts made"
        user = prompts.generation_user(topic, grade, skill, context, history)
        for attempt in range(1, self.settings.max_attempts + 1):
            try:
                raw = self._complete(prompts.GENERATOR_SYSTEM, user, self._t_gen, Tag.GENERATE)
            except ReplayError:
                raise
            except TransportFailure as exc:
                last_reason = f"generation call failed: {exc}"
                continue
            parsed = parse_mcq(raw)
            if not parsed.ok:
                last_reason = "malformed completion: " + "; ".join(
                    str(v) for v in parsed.violations
                )
                continue
            verdict, judge_label = self.evaluate_question(parsed, history)
            if verdict.passed:
                return self._build_item(
                    parsed, strategy, topic, matched_topic_key, grade, skill, attempt, False
                ), ""
            fixed = self.fix_question(
                parsed, verdict, judge_label, topic, grade, skill, context, history
            )
            if fixed is not None:
                verdict2, _ = self.evaluate_question(fixed, history)
                if verdict2.passed:
                    return self._build_item(
                        fixed, strategy, topic, matched_topic_key, grade, skill, attempt, True
                    ), ""
                last_reason = "repaired candidate still failed: " + "; ".join(verdict2.issues)
            else:
                last_reason = "candidate failed checks and repair did not produce a valid question: " + "; ".join(
                    verdict.issues
                )
        return None, last_reason

    def _build_item(
        self,
        parsed: ParseOutcome,
        strategy: Strategy,
        topic: str,
        matched_topic_key: "str | None",
        grade: int,
        skill: SkillLevel,
        attempts: int,
        was_fixed: bool,
    ) -> MCQItem:
        return MCQItem(
            id=MCQItem.make_id(strategy, topic, skill, parsed.question),
            strategy=strategy,
            topic=topic,
            matched_topic_key=matched_topic_key,
            grade=grade,
            skill=skill,
            question=parsed.question,
            options=tuple(
                MCQOption(label=label, text=parsed.options[label]) for label in ("A", "B", "C", "D")
            ),
            correct_label=parsed.correct_label,
            explanation=parsed.explanation,
            distractor_rationales=tuple(
                DistractorRationale(label=label, misconception=text)
                for label, text in sorted(parsed.distractor_misconceptions.items())
            ),
            attempts_used=attempts,
            was_fixed=was_fixed,
        )

    # -- top level ------------------------------------------------------------------

    def generate_assessment(self, request: PipelineRequest) -> Assessment:
        extracted = self.extract_topic(request.topic)
        matched_key: str | None = None
        context: ContextBundle | None = None
        if request.strategy is Strategy.CONCEPT_MAP:
            matched_key = self.match_topic(extracted)
            context = self.store.retrieve_context(matched_key)
            if context.empty_topic:
                logger.warning("topic %s has no subtopics; context will be thin", matched_key)
        items: list[MCQItem] = []
        omissions: list[Omission] = []
        history: list[str] = []
        for skill in request.skills:
            self._current_skill = skill
            item, reason = self.generate_valid_question(
                topic=extracted,
                grade=request.grade,
                skill=skill,
                context=context,
                history=history,
                strategy=request.strategy,
                matched_topic_key=matched_key,
            )
            self._current_skill = None
            if item is not None:
                items.append(item)
                history.append(item.question)
            else:
                logger.info("skill %s omitted: %s", skill.label, reason)
                omissions.append(
                    Omission(skill=skill, reason="no valid question produced", detail=reason)
                )
        return Assessment(
            topic=request.topic,
            extracted_topic=extracted,
            matched_topic_key=matched_key,
            grade=request.grade,
            strategy=request.strategy,
            items=tuple(items),
            omissions=tuple(omissions),
            transcript_digest=self.gateway.run_digest(),
            created_at=self._clock(),
        )

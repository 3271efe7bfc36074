"""FastAPI application wrapping the generation pipeline and study workflow.

Access control is session-token based. A request with no token acts as the
operator (the deployment is expected to sit behind local or network-level
protection); student and expert tokens are minted by the operator and are
confined to their own routes, with student test payloads stripped of
answer keys, explanations, and distractor rationales.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse

from ..concept_store import ConceptStore
from ..expert_eval import (
    DistractorRating,
    ExpertAnnotation,
    TriState,
    render_expert_report,
)
from ..gateway import ReplayError, TransportFailure
from ..learner_eval import Difficulty, LearnerResponse, render_learner_report
from ..pipeline import (
    Assessment,
    ExtractionFailed,
    NoMatch,
    Pipeline,
    PipelineRequest,
    Strategy,
    assessment_to_document,
    validate_assessment_document,
)
from ..taxonomy import SkillLevel
from . import schemas
from .study_store import Conflict, StudyStore


@dataclass
class AppState:
    study: StudyStore
    concept_store: Optional[ConceptStore] = None
    pipeline_factory: Optional[Callable[[], Pipeline]] = None
    operator_token: Optional[str] = None


@dataclass
class Caller:
    role: str
    student_id: Optional[str] = None
    rater_id: Optional[str] = None
    version_id: Optional[str] = None


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="conceptmcq", version="0.1.0")

    def caller_from(authorization: "str | None" = Header(default=None)) -> Caller:
        if authorization is None:
            return Caller(role="operator")
        token = authorization.removeprefix("Bearer ").strip()
        if state.operator_token and token == state.operator_token:
            return Caller(role="operator")
        session = state.study.get_session(token)
        if session is None:
            raise HTTPException(status_code=401, detail="unknown session token")
        return Caller(
            role=session["role"],
            student_id=session["student_id"],
            rater_id=session["rater_id"],
            version_id=session["version_id"],
        )

    def require(caller: Caller, *roles: str) -> None:
        if caller.role not in roles:
            raise HTTPException(
                status_code=403, detail=f"role {caller.role!r} may not call this route"
            )

    # -- sessions ---------------------------------------------------------------

    @app.post("/sessions", response_model=schemas.SessionReply)
    def create_session(
        body: schemas.SessionRequest, caller: Caller = Depends(caller_from)
    ) -> schemas.SessionReply:
        require(caller, "operator")
        if body.role == "student" and state.study.get_version_items(body.version_id) is None:
            raise HTTPException(status_code=404, detail=f"unknown version {body.version_id!r}")
        token = state.study.create_session(
            role=body.role,
            student_id=body.student_id,
            rater_id=body.rater_id,
            version_id=body.version_id,
        )
        return schemas.SessionReply(token=token, role=body.role, version_id=body.version_id)

    # -- generation ---------------------------------------------------------------

    @app.post("/assessments")
    def create_assessment(
        body: schemas.AssessmentRequest, caller: Caller = Depends(caller_from)
    ) -> dict:
        require(caller, "operator")
        if state.pipeline_factory is None:
            raise HTTPException(status_code=503, detail="no generation backend configured")
        kwargs = {}
        if body.skills is not None:
            kwargs["skills"] = tuple(SkillLevel.parse(s) for s in body.skills)
        try:
            request = PipelineRequest(
                topic=body.topic,
                grade=body.grade,
                strategy=Strategy(body.strategy),
                **kwargs,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        pipeline = state.pipeline_factory()
        try:
            assessment = pipeline.generate_assessment(request)
        except (ExtractionFailed, NoMatch) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ReplayError as exc:
            raise HTTPException(status_code=500, detail=f"replay diverged: {exc}") from exc
        except TransportFailure as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        _store_assessment(assessment)
        return assessment_to_document(assessment)

    def _store_assessment(assessment: Assessment) -> int:
        doc = assessment_to_document(assessment)
        for item in doc["items"]:
            state.study.add_question(
                item,
                strategy=doc["strategy"],
                topic=doc["topic"],
                grade=doc["grade"],
            )
        return len(doc["items"])

    @app.post("/questions", response_model=schemas.ImportReply)
    def import_questions(
        body: schemas.PoolImportRequest, caller: Caller = Depends(caller_from)
    ) -> schemas.ImportReply:
        require(caller, "operator")
        stored = 0
        for n, doc in enumerate(body.assessments):
            problems = validate_assessment_document(doc)
            if problems:
                raise HTTPException(
                    status_code=422,
                    detail=f"assessments[{n}] is invalid: " + "; ".join(problems),
                )
        for doc in body.assessments:
            for item in doc["items"]:
                try:
                    state.study.add_question(
                        item, strategy=doc["strategy"], topic=doc["topic"], grade=doc["grade"]
                    )
                except Conflict as exc:
                    raise HTTPException(status_code=409, detail=str(exc)) from exc
                stored += 1
        return schemas.ImportReply(questions_stored=stored)

    # -- test delivery ----------------------------------------------------------------

    @app.post("/tests", response_model=schemas.DesignReply)
    def register_design(
        body: schemas.DesignRegisterRequest, caller: Caller = Depends(caller_from)
    ) -> schemas.DesignReply:
        require(caller, "operator")
        if body.format != "trial-design" or body.version != 1:
            raise HTTPException(status_code=422, detail="not a trial-design v1 document")
        registered = []
        for v in body.versions:
            vid = v.get("version_id")
            items = v.get("items")
            if not isinstance(vid, str) or not isinstance(items, list):
                raise HTTPException(
                    status_code=422, detail="each version needs a version_id and items"
                )
            try:
                state.study.register_version(
                    vid, [str(i["question_id"]) for i in items]
                )
            except (Conflict, KeyError, TypeError) as exc:
                code = 409 if isinstance(exc, Conflict) else 422
                raise HTTPException(status_code=code, detail=str(exc)) from exc
            registered.append(vid)
        return schemas.DesignReply(versions_registered=registered)

    @app.get("/tests/{version_id}")
    def get_test(version_id: str, caller: Caller = Depends(caller_from)) -> dict:
        if caller.role == "student" and caller.version_id != version_id:
            raise HTTPException(
                status_code=403, detail="students may only fetch their own test version"
            )
        items = state.study.get_version_items(version_id)
        if items is None:
            raise HTTPException(status_code=404, detail=f"unknown version {version_id!r}")
        if caller.role == "student":
            payload = schemas.TestPayload(
                version_id=version_id,
                items=[
                    schemas.StudentQuestion(
                        id=i["id"],
                        skill=i["skill"],
                        question=i["question"],
                        options=[schemas.WireOption(**o) for o in i["options"]],
                    )
                    for i in items
                ],
            )
            return payload.model_dump()
        payload = schemas.FullTestPayload(
            version_id=version_id,
            items=[
                schemas.FullQuestion(
                    id=i["id"],
                    skill=i["skill"],
                    question=i["question"],
                    options=[schemas.WireOption(**o) for o in i["options"]],
                    strategy=i["strategy"],
                    topic=i["topic"],
                    grade=i["grade"],
                    correct_label=i["correct_label"],
                    explanation=i["explanation"],
                    distractor_rationales=i["distractor_rationales"],
                )
                for i in items
            ],
        )
        return payload.model_dump()

    # -- responses ----------------------------------------------------------------------

    @app.post("/tests/{version_id}/responses", response_model=schemas.ResponsesReply)
    def submit_responses(
        version_id: str,
        body: schemas.ResponsesSubmit,
        caller: Caller = Depends(caller_from),
    ) -> schemas.ResponsesReply:
        require(caller, "operator", "student")
        if caller.role == "student":
            if caller.version_id != version_id:
                raise HTTPException(
                    status_code=403, detail="students may only submit to their own test version"
                )
            if body.student_id and body.student_id != caller.student_id:
                raise HTTPException(
                    status_code=403, detail="student_id does not match the session"
                )
            student_id = caller.student_id
            if any(row.correct is not None for row in body.rows):
                raise HTTPException(
                    status_code=422, detail="students submit answer labels, not grades"
                )
        else:
            if not body.student_id:
                raise HTTPException(status_code=422, detail="student_id is required")
            student_id = body.student_id
        allowed = state.study.version_question_ids(version_id)
        if allowed is None:
            raise HTTPException(status_code=404, detail=f"unknown version {version_id!r}")
        superseded: list[str] = []
        graded: list[LearnerResponse] = []
        for row in body.rows:
            if row.question_id not in allowed:
                raise HTTPException(
                    status_code=409,
                    detail=f"question {row.question_id!r} is not part of version {version_id!r}",
                )
            question = state.study.get_question(row.question_id)
            if row.correct is not None:
                correct = row.correct
            elif row.answer_label is not None:
                correct = row.answer_label == question["correct_label"]
            else:
                correct = False
            try:
                graded.append(
                    LearnerResponse(
                        student_id=student_id,
                        question_id=row.question_id,
                        strategy=question["strategy"],
                        attempted=row.attempted,
                        correct=correct,
                        guessed=row.guessed,
                        difficulty=Difficulty(row.difficulty) if row.difficulty else None,
                        response_time_s=row.response_time_s,
                    )
                )
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
        for response in graded:
            if state.study.record_response(response, version_id):
                superseded.append(response.question_id)
        return schemas.ResponsesReply(recorded=len(graded), superseded=superseded)

    # -- review -------------------------------------------------------------------------

    @app.post("/review/{question_id}/annotations", response_model=schemas.AnnotationReply)
    def submit_annotation(
        question_id: str,
        body: schemas.AnnotationSubmit,
        caller: Caller = Depends(caller_from),
    ) -> schemas.AnnotationReply:
        require(caller, "operator", "expert")
        question = state.study.get_question(question_id)
        if question is None:
            raise HTTPException(status_code=404, detail=f"unknown question {question_id!r}")
        rater_id = caller.rater_id or body.rater_id
        if not rater_id:
            raise HTTPException(status_code=422, detail="rater_id is required")
        annotation = ExpertAnnotation(
            question_id=question_id,
            rater_id=rater_id,
            relevance=TriState(body.relevance),
            correctness=TriState(body.correctness),
            grade_level=TriState(body.grade_level),
            similarity=TriState(body.similarity),
            blooms_level=SkillLevel.parse(body.blooms_level) if body.blooms_level else None,
            distractors=tuple(
                DistractorRating(
                    plausibility=TriState(d.plausibility),
                    misconception=TriState(d.misconception),
                    independence=TriState(d.independence),
                )
                for d in body.distractors
            ),
            strategy=question["strategy"],
        )
        problems = annotation.validate()
        if problems:
            raise HTTPException(status_code=422, detail="; ".join(problems))
        superseded = state.study.record_annotation(annotation)
        return schemas.AnnotationReply(recorded=True, superseded=superseded)

    @app.get("/review/queue", response_model=schemas.QueueReply)
    def review_queue(caller: Caller = Depends(caller_from)) -> schemas.QueueReply:
        require(caller, "operator", "expert")
        return schemas.QueueReply(
            queue=[schemas.QueueEntry(**entry) for entry in state.study.review_queue()]
        )

    # -- reports -------------------------------------------------------------------------

    @app.get("/reports/expert", response_class=PlainTextResponse)
    def expert_report(caller: Caller = Depends(caller_from)) -> str:
        require(caller, "operator")
        return render_expert_report(state.study.list_annotations())

    @app.get("/reports/learner", response_class=PlainTextResponse)
    def learner_report(caller: Caller = Depends(caller_from)) -> str:
        require(caller, "operator")
        return render_learner_report(state.study.list_responses())

    return app

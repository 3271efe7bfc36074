"""Command-line interface.

Exit codes: 0 success, 1 runtime failure (provider, replay divergence,
infeasible assembly), 2 invalid input (bad documents, bad flags). Errors
print one machine-parseable line to stderr: ``error: <code>: <message>``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .concept_store import ConceptStore, MapValidationError, TopicNotFound
from .concept_store.document import dump_map_json, validate_map_document
from .config import ConfigError, load_settings
from .expert_eval import AnnotationError, load_annotations_csv, render_expert_report
from .gateway import Gateway, Mode, ReplayError, TransportFailure
from .learner_eval import ResponseError, load_responses_csv, render_learner_report
from .pipeline import (
    ExtractionFailed,
    NoMatch,
    Pipeline,
    PipelineRequest,
    Strategy,
    assessment_to_document,
)
from .taxonomy import SkillLevel
from .trial_design import (
    InfeasiblePool,
    RestartsExhausted,
    assemble,
    dump_design_json,
    load_pool,
)

VALIDATION_EXIT = 2
RUNTIME_EXIT = 1


def _fail(code: str, message: str, exit_code: int) -> None:
    click.echo(f"error: {code}: {message}", err=True)
    sys.exit(exit_code)


def _read_json(path: str, code: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        _fail(code, f"cannot read {path}: {exc}", VALIDATION_EXIT)
    except ValueError as exc:
        _fail(code, f"{path} is not valid JSON: {exc}", VALIDATION_EXIT)


def _write_text(path: "str | None", text: str) -> None:
    if path is None or path == "-":
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding="utf-8")


@click.group()
def main() -> None:
    """Concept-grounded MCQ generation and assessment analytics."""


# -- concept map ------------------------------------------------------------------


@main.group()
def cmap() -> None:
    """Manage the stored concept map."""


@cmap.command("import")
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", required=True, help="SQLite store to (re)create.")
def cmap_import(map_file: str, store_path: str) -> None:
    """Validate MAP_FILE and load it into the store, replacing prior content."""
    doc = _read_json(map_file, "map-read")
    try:
        with ConceptStore(store_path) as store:
            cmap_obj = store.import_document(doc)
    except MapValidationError as exc:
        _fail("map-invalid", str(exc), VALIDATION_EXIT)
    click.echo(
        f"imported {len(cmap_obj.units)} units,"
        f" {sum(len(u.topics) for u in cmap_obj.units)} topics"
    )


@cmap.command("export")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, help="Output file (default stdout).")
def cmap_export(store_path: str, out_path: "str | None") -> None:
    """Write the stored map back out as a canonical document."""
    with ConceptStore(store_path) as store:
        _write_text(out_path, dump_map_json(store.export_map()))


@cmap.command("validate")
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
def cmap_validate(map_file: str) -> None:
    """Check MAP_FILE against the document rules; list every violation."""
    doc = _read_json(map_file, "map-read")
    issues = validate_map_document(doc)
    if issues:
        for issue in issues:
            click.echo(str(issue), err=True)
        _fail("map-invalid", f"{len(issues)} issue(s) found", VALIDATION_EXIT)
    click.echo("map document is valid")


@cmap.command("show")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--topic", "topic_key", default=None, help="Show one topic's retrieval text.")
def cmap_show(store_path: str, topic_key: "str | None") -> None:
    """List the map hierarchy, or print one topic's context text."""
    with ConceptStore(store_path) as store:
        if topic_key is not None:
            try:
                bundle = store.retrieve_context(topic_key)
            except TopicNotFound as exc:
                _fail("topic-not-found", str(exc), VALIDATION_EXIT)
            click.echo(bundle.prompt_text())
            return
        for unit in store.list_units():
            click.echo(f"[grade {unit.grade}] {unit.key}: {unit.title}")
            for key, title in store.list_topics(unit.key):
                click.echo(f"    {key}: {title}")


# -- generation -------------------------------------------------------------------


def _parse_skills(raw: "str | None") -> "tuple[SkillLevel, ...] | None":
    if raw is None:
        return None
    try:
        return tuple(SkillLevel.parse(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        _fail("skills", str(exc), VALIDATION_EXIT)


def _open_store(map_file: "str | None", store_path: "str | None") -> "ConceptStore | None":
    if map_file:
        doc = _read_json(map_file, "map-read")
        store = ConceptStore(":memory:")
        try:
            store.import_document(doc)
        except MapValidationError as exc:
            _fail("map-invalid", str(exc), VALIDATION_EXIT)
        return store
    if store_path:
        if not Path(store_path).is_file():
            _fail("store", f"store not found: {store_path}", VALIDATION_EXIT)
        return ConceptStore(store_path)
    return None


def _run_generation(
    topic: str,
    grade: int,
    strategy: str,
    skills_raw: "str | None",
    map_file: "str | None",
    store_path: "str | None",
    replay_path: "str | None",
    record_path: "str | None",
    out_path: "str | None",
    config_path: "str | None",
    base_url: "str | None",
    model: "str | None",
) -> None:
    try:
        settings = load_settings(
            config_path, overrides={"base_url": base_url, "model": model}
        )
    except ConfigError as exc:
        _fail("config", str(exc), VALIDATION_EXIT)
    skills = _parse_skills(skills_raw)
    kwargs = {"skills": skills} if skills is not None else {}
    try:
        request = PipelineRequest(
            topic=topic, grade=grade, strategy=Strategy(strategy), **kwargs
        )
    except ValueError as exc:
        _fail("request", str(exc), VALIDATION_EXIT)

    store = _open_store(map_file, store_path)
    if request.strategy is Strategy.CONCEPT_MAP and store is None:
        _fail("store", "concept_map strategy needs --map or --store", VALIDATION_EXIT)

    if replay_path and record_path:
        _fail("transcript", "--replay and --record are mutually exclusive", VALIDATION_EXIT)
    meta = {
        "topic": request.topic,
        "grade": request.grade,
        "strategy": request.strategy.value,
        "skills": [s.name.lower() for s in request.skills],
    }
    try:
        if replay_path:
            gateway = Gateway(settings, mode=Mode.REPLAY, transcript_path=replay_path)
        elif record_path:
            gateway = Gateway(settings, mode=Mode.RECORD, transcript_path=record_path, meta=meta)
        else:
            gateway = Gateway(settings)
    except ReplayError as exc:
        _fail("replay", str(exc), VALIDATION_EXIT)

    pipeline = Pipeline(gateway, store=store)
    try:
        assessment = pipeline.generate_assessment(request)
    except (ExtractionFailed, NoMatch) as exc:
        _fail("no-match", str(exc), RUNTIME_EXIT)
    except ReplayError as exc:
        _fail("replay", str(exc), RUNTIME_EXIT)
    except TransportFailure as exc:
        _fail("transport", str(exc), RUNTIME_EXIT)
    finally:
        if store is not None:
            store.close()
    doc = assessment_to_document(assessment)
    _write_text(out_path, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    if assessment.omissions:
        for om in assessment.omissions:
            click.echo(f"warning: {om.skill.label} omitted: {om.detail}", err=True)


@main.command()
@click.option("--topic", required=True)
@click.option("--grade", required=True, type=int)
@click.option(
    "--strategy",
    type=click.Choice([s.value for s in Strategy]),
    default=Strategy.CONCEPT_MAP.value,
)
@click.option("--skills", "skills_raw", default=None, help="Comma-separated skill names.")
@click.option("--map", "map_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", default=None)
@click.option("--replay", "replay_path", default=None, help="Serve completions from a transcript.")
@click.option("--record", "record_path", default=None, help="Record completions to a transcript.")
@click.option("--out", "out_path", default=None, help="Output file (default stdout).")
@click.option("--config", "config_path", default=None)
@click.option("--base-url", default=None)
@click.option("--model", default=None)
def generate(**kwargs) -> None:
    """Generate one assessment for a topic."""
    _run_generation(**kwargs)


@main.command()
@click.argument("transcript", type=click.Path(exists=True, dir_okay=False))
@click.option("--map", "map_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", default=None)
@click.option("--out", "out_path", default=None)
@click.option("--config", "config_path", default=None)
def replay(
    transcript: str,
    map_file: "str | None",
    store_path: "str | None",
    out_path: "str | None",
    config_path: "str | None",
) -> None:
    """Re-run a recorded generation exactly as captured in TRANSCRIPT."""
    try:
        header = json.loads(Path(transcript).read_text(encoding="utf-8").splitlines()[0])
    except (OSError, ValueError, IndexError) as exc:
        _fail("replay", f"cannot read transcript header: {exc}", VALIDATION_EXIT)
    meta = header.get("meta", {})
    for field in ("topic", "grade", "strategy"):
        if field not in meta:
            _fail("replay", f"transcript header lacks meta.{field}", VALIDATION_EXIT)
    _run_generation(
        topic=meta["topic"],
        grade=meta["grade"],
        strategy=meta["strategy"],
        skills_raw=",".join(meta["skills"]) if meta.get("skills") else None,
        map_file=map_file,
        store_path=store_path,
        replay_path=transcript,
        record_path=None,
        out_path=out_path,
        config_path=config_path,
        base_url=None,
        model=None,
    )


# -- assembly ---------------------------------------------------------------------


@main.command("assemble")
@click.option("--pool", "pool_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--versions", "n_versions", default=9, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--restarts", "max_restarts", default=1000, show_default=True)
@click.option("--out", "out_path", default=None)
def assemble_cmd(
    pool_file: str, n_versions: int, seed: int, max_restarts: int, out_path: "str | None"
) -> None:
    """Assemble balanced test versions from a question pool."""
    doc = _read_json(pool_file, "pool-read")
    try:
        pool = load_pool(doc)
    except ValueError as exc:
        _fail("pool-invalid", str(exc), VALIDATION_EXIT)
    try:
        design = assemble(pool, n_versions=n_versions, seed=seed, max_restarts=max_restarts)
    except InfeasiblePool as exc:
        _fail("pool-infeasible", str(exc), RUNTIME_EXIT)
    except RestartsExhausted as exc:
        _fail("assembly-exhausted", str(exc), RUNTIME_EXIT)
    except ValueError as exc:
        _fail("pool-invalid", str(exc), VALIDATION_EXIT)
    _write_text(out_path, dump_design_json(design))


# -- reports ----------------------------------------------------------------------


@main.group()
def report() -> None:
    """Render evaluation reports from collected data."""


@report.command("expert")
@click.option(
    "--annotations",
    "annotations_file",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
)
def report_expert(annotations_file: str) -> None:
    """Inter-rater reliability and consensus acceptance."""
    try:
        annotations = load_annotations_csv(annotations_file)
    except AnnotationError as exc:
        _fail("annotations", str(exc), VALIDATION_EXIT)
    click.echo(render_expert_report(annotations), nl=False)


@report.command("learner")
@click.option(
    "--responses",
    "responses_file",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
)
def report_learner(responses_file: str) -> None:
    """Learner performance metrics and significance tests."""
    try:
        responses = load_responses_csv(responses_file)
    except ResponseError as exc:
        _fail("responses", str(exc), VALIDATION_EXIT)
    click.echo(render_learner_report(responses), nl=False)


# -- service ----------------------------------------------------------------------


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--db", "db_path", default="study.db", show_default=True)
@click.option("--map", "map_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", default=None)
@click.option("--config", "config_path", default=None)
@click.option(
    "--enable-generation",
    is_flag=True,
    help="Expose POST /assessments backed by the configured provider.",
)
def serve(
    host: str,
    port: int,
    db_path: str,
    map_file: "str | None",
    store_path: "str | None",
    config_path: "str | None",
    enable_generation: bool,
) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import AppState, StudyStore, create_app

    store = _open_store(map_file, store_path)
    factory = None
    if enable_generation:
        try:
            settings = load_settings(config_path)
        except ConfigError as exc:
            _fail("config", str(exc), VALIDATION_EXIT)
        factory = lambda: Pipeline(Gateway(settings), store=store)
    state = AppState(
        study=StudyStore(db_path), concept_store=store, pipeline_factory=factory
    )
    uvicorn.run(create_app(state), host=host, port=port)


if __name__ == "__main__":
    main()

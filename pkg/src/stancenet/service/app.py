"""FastAPI application: pipeline stage endpoints plus the annotation service.

The pipeline endpoints are stateless wrappers over the stage functions; the
CLI is a thin client of exactly these endpoints (in process by default, over
the network with --server). The annotation endpoints require a session, which
`stancenet serve` builds from its config.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__, stages
from ..annotate import AnnotationSession
from ..corpus import StanceLabel, annotations_to_jsonl
from ..errors import NotFoundError, StancenetError
from ..ragindex import CodebookEntry
from . import schemas


@dataclass
class AnnotationRuntime:
    """Everything the annotation endpoints need at request time."""

    session: AnnotationSession
    codebook: list[CodebookEntry] = field(default_factory=list)
    codebook_version: str = "v1"
    reference_kappa: float | None = None


def create_app(
    annotation: AnnotationRuntime | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="stancenet", version=__version__)

    @app.exception_handler(StancenetError)
    async def stancenet_error_handler(request: Request, exc: StancenetError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"category": exc.category, "message": str(exc)}},
        )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__, "annotation": annotation is not None}

    # -- pipeline ------------------------------------------------------------

    @app.post("/api/pipeline/ingest", response_model=schemas.StageResponse)
    def pipeline_ingest(req: schemas.IngestRequest) -> dict:
        return stages.ingest(req.corpus_path, req.out_path)

    @app.post("/api/pipeline/expand-hashtags", response_model=schemas.StageResponse)
    def pipeline_expand(req: schemas.ExpandRequest) -> dict:
        return stages.expand_hashtags(
            req.corpus_path,
            req.seeds_path,
            req.out_path,
            rounds=req.rounds,
            min_count=req.min_count,
            allowlist_path=req.allowlist_path,
            denylist_path=req.denylist_path,
        )

    @app.post("/api/pipeline/sample", response_model=schemas.StageResponse)
    def pipeline_sample(req: schemas.SampleRequest) -> dict:
        return stages.sample(
            req.corpus_path,
            req.pro_path,
            req.anti_path,
            req.out_path,
            per_bucket=req.per_bucket,
            buckets=req.buckets,
            seed=req.seed,
        )

    @app.post("/api/pipeline/index-examples", response_model=schemas.StageResponse)
    def pipeline_index_examples(req: schemas.IndexExamplesRequest) -> dict:
        return stages.index_examples(
            req.corpus_path, req.annotations_path, req.out_path, dimension=req.dimension
        )

    @app.post("/api/pipeline/index-taxonomy", response_model=schemas.StageResponse)
    def pipeline_index_taxonomy(req: schemas.IndexTaxonomyRequest) -> dict:
        return stages.index_taxonomy(req.codebook_path, req.out_path, dimension=req.dimension)

    @app.post("/api/pipeline/classify", response_model=schemas.StageResponse)
    def pipeline_classify(req: schemas.ClassifyRequest) -> dict:
        return stages.run_classify(
            req.corpus_path,
            req.out_path,
            req.strategy,
            backend_kind=req.backend,
            endpoint=req.endpoint,
            model=req.model,
            timeout=req.timeout,
            templates_dir=req.templates_dir,
            examples_store_path=req.examples_store,
            taxonomy_store_path=req.taxonomy_store,
            prompt_id=req.prompt_id,
            select_from_records=req.select_from_records,
            select_with_annotations=req.select_with_annotations,
            k=req.k,
            threshold=req.threshold,
            temperature=req.temperature,
            max_tokens=req.max_tokens,
            retries=req.retries,
            parallelism=req.parallelism,
        )

    @app.post("/api/pipeline/evaluate", response_model=schemas.StageResponse)
    def pipeline_evaluate(req: schemas.EvaluateRequest) -> dict:
        return stages.evaluate(
            req.records_path,
            req.annotations_path,
            req.out_json,
            out_text=req.out_text,
            annotator=req.annotator,
            reference_kappa=req.reference_kappa,
            run_label=req.run_label,
        )

    @app.post("/api/pipeline/network", response_model=schemas.StageResponse)
    def pipeline_network(req: schemas.NetworkRequest) -> dict:
        return stages.network(
            req.corpus_path,
            req.out_metrics,
            records_path=req.records_path,
            grouping=req.grouping,
            exclude_neutral=req.exclude_neutral,
            component=req.component,
            out_graphml=req.out_graphml,
            out_dot=req.out_dot,
        )

    # -- annotation ----------------------------------------------------------

    def _runtime() -> AnnotationRuntime:
        if annotation is None:
            raise NotFoundError("no annotation session configured; start with `stancenet serve`")
        return annotation

    @app.get("/api/task", response_model=schemas.TaskResponse)
    def get_task(annotator: str = Query(...)) -> schemas.TaskResponse:
        task = _runtime().session.next_task(annotator)
        if task is None:
            return schemas.TaskResponse(done=True, annotator=annotator)
        return schemas.TaskResponse(
            done=False,
            post_id=task.post_id,
            display_text=task.display_text,
            codebook_version=task.codebook_version,
            annotator=task.annotator,
        )

    @app.post("/api/label", response_model=schemas.AckResponse)
    def post_label(req: schemas.LabelRequest) -> schemas.AckResponse:
        label = StanceLabel(primary=req.primary, sublabels=frozenset(req.sublabels))
        _runtime().session.submit_label(req.annotator, req.post_id, label)
        return schemas.AckResponse()

    @app.post("/api/skip", response_model=schemas.AckResponse)
    def post_skip(req: schemas.SkipRequest) -> schemas.AckResponse:
        _runtime().session.skip(req.annotator, req.post_id, req.reason)
        return schemas.AckResponse()

    @app.get("/api/agreement", response_model=schemas.AgreementResponse)
    def get_agreement() -> schemas.AgreementResponse:
        runtime = _runtime()
        report = runtime.session.agreement()
        return schemas.AgreementResponse(
            observed_agreement=report.observed,
            expected_agreement=report.expected,
            kappa=report.kappa,
            n=report.n,
            note=report.note,
            reference_kappa=runtime.reference_kappa,
        )

    @app.get("/api/progress", response_model=schemas.ProgressResponse)
    def get_progress() -> schemas.ProgressResponse:
        return schemas.ProgressResponse(**_runtime().session.progress())

    @app.get("/api/codebook", response_model=schemas.CodebookResponse)
    def get_codebook() -> schemas.CodebookResponse:
        runtime = _runtime()
        return schemas.CodebookResponse(
            version=runtime.codebook_version,
            definitions=[
                schemas.CodebookDefinition(
                    id=e.id, side=e.side, sublabel=e.sublabel, definition=e.definition
                )
                for e in runtime.codebook
            ],
        )

    @app.get("/api/export/examples", response_class=PlainTextResponse)
    def export_examples() -> str:
        samples = _runtime().session.export_examples()
        return annotations_to_jsonl(samples)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=PlainTextResponse)
        def root() -> str:
            return (
                "stancenet service\n"
                "pipeline endpoints under /api/pipeline/*, annotation under /api/*\n"
                "(no UI bundle found; build frontend/ to serve the annotation interface)\n"
            )

    return app

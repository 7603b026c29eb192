"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


# -- annotation --------------------------------------------------------------


class TaskResponse(BaseModel):
    done: bool = False
    post_id: str | None = None
    display_text: str | None = None
    codebook_version: str | None = None
    annotator: str | None = None


class LabelRequest(BaseModel):
    annotator: str
    post_id: str
    primary: str
    sublabels: list[str] = Field(default_factory=list)


class SkipRequest(BaseModel):
    annotator: str
    post_id: str
    reason: str


class AckResponse(BaseModel):
    ok: bool = True


class AgreementResponse(BaseModel):
    observed_agreement: float | None
    expected_agreement: float | None
    kappa: float | None
    n: int
    note: str | None = None
    reference_kappa: float | None = None


class AnnotatorProgress(BaseModel):
    assigned: int
    labeled: int
    skipped: int
    pending: int


class ProgressResponse(BaseModel):
    total_samples: int
    overlap_size: int
    annotators: dict[str, AnnotatorProgress]


class CodebookDefinition(BaseModel):
    id: str
    side: str
    sublabel: str | None
    definition: str


class CodebookResponse(BaseModel):
    version: str
    definitions: list[CodebookDefinition]


# -- pipeline ----------------------------------------------------------------


class IngestRequest(BaseModel):
    corpus_path: str
    out_path: str


class ExpandRequest(BaseModel):
    corpus_path: str
    seeds_path: str
    out_path: str
    rounds: int = 1
    min_count: int = 2
    allowlist_path: str | None = None
    denylist_path: str | None = None


class SampleRequest(BaseModel):
    corpus_path: str
    pro_path: str
    anti_path: str
    out_path: str
    per_bucket: int
    buckets: list[str] = Field(default_factory=lambda: ["pro-only", "anti-only", "both"])
    seed: int = 0


class IndexExamplesRequest(BaseModel):
    corpus_path: str
    annotations_path: str
    out_path: str
    dimension: int = 512


class IndexTaxonomyRequest(BaseModel):
    codebook_path: str
    out_path: str
    dimension: int = 512


class ClassifyRequest(BaseModel):
    corpus_path: str
    out_path: str
    strategy: str
    backend: str = "mock"
    endpoint: str | None = None
    model: str = "default"
    timeout: float = 60.0
    templates_dir: str | None = None
    examples_store: str | None = None
    taxonomy_store: str | None = None
    prompt_id: str | None = None
    select_from_records: str | None = None
    select_with_annotations: str | None = None
    k: int = 3
    threshold: float = 0.35
    temperature: float = 0.0
    max_tokens: int = 64
    retries: int = 2
    parallelism: int = 1


class EvaluateRequest(BaseModel):
    records_path: str
    annotations_path: str
    out_json: str
    out_text: str | None = None
    annotator: str | None = None
    reference_kappa: float | None = None
    run_label: str | None = None


class NetworkRequest(BaseModel):
    corpus_path: str
    out_metrics: str
    records_path: str | None = None
    grouping: str = "all"
    exclude_neutral: bool = False
    component: str = "largest"
    out_graphml: str | None = None
    out_dot: str | None = None


class StageResponse(BaseModel):
    """Summary payload returned by every pipeline stage endpoint."""

    model_config = {"extra": "allow"}

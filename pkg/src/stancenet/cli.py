"""Command-line entry point: a thin client of the HTTP service.

Every pipeline subcommand builds one request for the matching
/api/pipeline/* endpoint and submits it — in process over ASGI by default
(no server needed), or to a running service with --server. `serve` starts
the service itself, including the annotation session.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend error.
Logs go to stderr; data only ever goes to files.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .config import load_config_file, resolve_option
from .errors import StancenetError

EXIT_BY_CATEGORY = {"usage": 1, "data": 2, "backend": 3}


class ServiceCallError(Exception):
    def __init__(self, category: str, message: str) -> None:
        super().__init__(message)
        self.category = category


def _call_in_process(method: str, path: str, payload: dict | None) -> dict:
    from .service import create_app

    async def run() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://stancenet.local") as client:
            return await client.request(method, path, json=payload)

    return _handle_response(asyncio.run(run()))


def _call_remote(server: str, method: str, path: str, payload: dict | None) -> dict:
    try:
        response = httpx.request(method, server.rstrip("/") + path, json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        raise ServiceCallError("backend", f"cannot reach service at {server}: {exc}") from exc
    return _handle_response(response)


def _handle_response(response: httpx.Response) -> dict:
    try:
        body = response.json()
    except json.JSONDecodeError:
        body = {}
    if response.status_code >= 400:
        error = body.get("error", {})
        category = error.get("category", "data")
        message = error.get("message", f"service returned HTTP {response.status_code}")
        raise ServiceCallError(category, message)
    return body


def call_service(ctx_obj: dict, path: str, payload: dict) -> dict:
    if ctx_obj.get("dry_run"):
        click.echo(json.dumps({"endpoint": path, "request": payload}, indent=2, sort_keys=True))
        return {}
    server = ctx_obj.get("server")
    if server:
        return _call_remote(server, "POST", path, payload)
    return _call_in_process("POST", path, payload)


def _report(summary: dict) -> None:
    if summary:
        click.echo(json.dumps(summary, indent=2, sort_keys=True), err=True)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file with per-stage sections.")
@click.option("--server", default=None, help="URL of a running stancenet service; default runs stages in process.")
@click.option("--dry-run", is_flag=True, help="Print the resolved request instead of executing.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, server: str | None, dry_run: bool) -> None:
    """Stance classification pipeline and annotation service."""
    ctx.ensure_object(dict)
    ctx.obj["file_config"] = load_config_file(config_path)
    ctx.obj["server"] = server
    ctx.obj["dry_run"] = dry_run


@cli.command()
@click.option("--in", "corpus_path", required=True, type=click.Path(), help="Raw corpus JSON-Lines file.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Validated corpus output path.")
@click.pass_context
def ingest(ctx: click.Context, corpus_path: str, out_path: str) -> None:
    """Validate and normalize a corpus file."""
    _report(call_service(ctx.obj, "/api/pipeline/ingest", {"corpus_path": corpus_path, "out_path": out_path}))


@cli.command("expand-hashtags")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--seeds", "seeds_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--rounds", type=int, default=None)
@click.option("--min-count", type=int, default=None)
@click.option("--allowlist", "allowlist_path", type=click.Path(), default=None)
@click.option("--denylist", "denylist_path", type=click.Path(), default=None)
@click.pass_context
def expand_hashtags(ctx, corpus_path, seeds_path, out_path, rounds, min_count, allowlist_path, denylist_path):
    """Snowball-expand a seed hashtag set by corpus co-occurrence."""
    cfg = ctx.obj["file_config"]
    payload = {
        "corpus_path": corpus_path,
        "seeds_path": seeds_path,
        "out_path": out_path,
        "rounds": int(resolve_option(rounds, "expand", "rounds", cfg, 1)),
        "min_count": int(resolve_option(min_count, "expand", "min_count", cfg, 2)),
        "allowlist_path": resolve_option(allowlist_path, "expand", "allowlist", cfg),
        "denylist_path": resolve_option(denylist_path, "expand", "denylist", cfg),
    }
    _report(call_service(ctx.obj, "/api/pipeline/expand-hashtags", payload))


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--pro", "pro_path", type=click.Path(), default=None)
@click.option("--anti", "anti_path", type=click.Path(), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--per-bucket", type=int, default=None)
@click.option("--buckets", default=None, help="Comma-separated: pro-only,anti-only,both,neither.")
@click.option("--seed", type=int, default=None)
@click.pass_context
def sample(ctx, corpus_path, pro_path, anti_path, out_path, per_bucket, buckets, seed):
    """Stratified sample by hashtag bucket."""
    cfg = ctx.obj["file_config"]
    data_dir = Path(__file__).parent / "data"
    payload = {
        "corpus_path": corpus_path,
        "pro_path": str(resolve_option(pro_path, "sample", "pro", cfg, data_dir / "hashtags_pro.txt")),
        "anti_path": str(resolve_option(anti_path, "sample", "anti", cfg, data_dir / "hashtags_anti.txt")),
        "out_path": out_path,
        "per_bucket": int(resolve_option(per_bucket, "sample", "per_bucket", cfg, 100)),
        "buckets": str(resolve_option(buckets, "sample", "buckets", cfg, "pro-only,anti-only,both")).split(","),
        "seed": int(resolve_option(seed, "sample", "seed", cfg, 0)),
    }
    _report(call_service(ctx.obj, "/api/pipeline/sample", payload))


@cli.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--annotations", "annotations_path", type=click.Path(), default=None)
@click.option("--codebook", "codebook_path", type=click.Path(), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--dimension", type=int, default=None)
@click.pass_context
def index(ctx, corpus_path, annotations_path, codebook_path, out_path, dimension):
    """Build a retrieval store from annotated examples, or from a codebook."""
    cfg = ctx.obj["file_config"]
    dim = int(resolve_option(dimension, "index", "dimension", cfg, 512))
    if codebook_path and (corpus_path or annotations_path):
        raise click.UsageError("pass either --codebook, or --corpus with --annotations, not both")
    if codebook_path:
        payload = {"codebook_path": codebook_path, "out_path": out_path, "dimension": dim}
        _report(call_service(ctx.obj, "/api/pipeline/index-taxonomy", payload))
        return
    if not (corpus_path and annotations_path):
        raise click.UsageError("example stores need both --corpus and --annotations")
    payload = {
        "corpus_path": corpus_path,
        "annotations_path": annotations_path,
        "out_path": out_path,
        "dimension": dim,
    }
    _report(call_service(ctx.obj, "/api/pipeline/index-examples", payload))


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--strategy", type=click.Choice(["zero-shot", "rag-examples", "rag-full"]), required=True)
@click.option("--backend", default=None, help="mock or http.")
@click.option("--endpoint", default=None, help="Chat-completion endpoint URL for the http backend.")
@click.option("--model", default=None)
@click.option("--timeout", type=float, default=None)
@click.option("--templates", "templates_dir", type=click.Path(), default=None)
@click.option("--examples-store", type=click.Path(), default=None)
@click.option("--taxonomy-store", type=click.Path(), default=None)
@click.option("--prompt-id", default=None, help="Template to use for rag strategies.")
@click.option("--select-from", "select_from_records", type=click.Path(), default=None,
              help="Zero-shot records used to pick the best prompt.")
@click.option("--annotations", "select_with_annotations", type=click.Path(), default=None,
              help="Ground truth used with --select-from.")
@click.option("--k", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--max-tokens", type=int, default=None)
@click.option("--retries", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.pass_context
def classify(ctx, corpus_path, out_path, strategy, backend, endpoint, model, timeout, templates_dir,
             examples_store, taxonomy_store, prompt_id, select_from_records, select_with_annotations,
             k, threshold, temperature, max_tokens, retries, parallelism):
    """Classify posts with the chosen strategy and backend."""
    cfg = ctx.obj["file_config"]
    payload = {
        "corpus_path": corpus_path,
        "out_path": out_path,
        "strategy": strategy,
        "backend": str(resolve_option(backend, "classify", "backend", cfg, "mock")),
        "endpoint": resolve_option(endpoint, "classify", "endpoint", cfg),
        "model": str(resolve_option(model, "classify", "model", cfg, "default")),
        "timeout": float(resolve_option(timeout, "classify", "timeout", cfg, 60.0)),
        "templates_dir": resolve_option(templates_dir, "classify", "templates", cfg),
        "examples_store": examples_store,
        "taxonomy_store": taxonomy_store,
        "prompt_id": prompt_id,
        "select_from_records": select_from_records,
        "select_with_annotations": select_with_annotations,
        "k": int(resolve_option(k, "classify", "k", cfg, 3)),
        "threshold": float(resolve_option(threshold, "classify", "threshold", cfg, 0.35)),
        "temperature": float(resolve_option(temperature, "classify", "temperature", cfg, 0.0)),
        "max_tokens": int(resolve_option(max_tokens, "classify", "max_tokens", cfg, 64)),
        "retries": int(resolve_option(retries, "classify", "retries", cfg, 2)),
        "parallelism": int(resolve_option(parallelism, "classify", "parallelism", cfg, 1)),
    }
    _report(call_service(ctx.obj, "/api/pipeline/classify", payload))


@cli.command()
@click.option("--records", "records_path", required=True, type=click.Path())
@click.option("--annotations", "annotations_path", required=True, type=click.Path())
@click.option("--out", "out_json", required=True, type=click.Path())
@click.option("--out-text", type=click.Path(), default=None)
@click.option("--annotator", default=None, help="Restrict ground truth to one annotator id.")
@click.option("--reference-kappa", type=float, default=None)
@click.option("--run-label", default=None)
@click.pass_context
def evaluate(ctx, records_path, annotations_path, out_json, out_text, annotator, reference_kappa, run_label):
    """Score classification records against expert annotations."""
    cfg = ctx.obj["file_config"]
    payload = {
        "records_path": records_path,
        "annotations_path": annotations_path,
        "out_json": out_json,
        "out_text": out_text,
        "annotator": annotator,
        "reference_kappa": resolve_option(reference_kappa, "evaluate", "reference_kappa", cfg),
        "run_label": run_label,
    }
    if payload["reference_kappa"] is not None:
        payload["reference_kappa"] = float(payload["reference_kappa"])
    _report(call_service(ctx.obj, "/api/pipeline/evaluate", payload))


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--records", "records_path", type=click.Path(), default=None)
@click.option("--grouping", type=click.Choice(["tag-reply", "duet-stitch", "all", "tag", "reply", "duet", "stitch"]), default="all")
@click.option("--exclude-neutral", is_flag=True, help="Drop Neutral nodes from exported graphs.")
@click.option("--component", type=click.Choice(["largest", "all"]), default="largest")
@click.option("--out-metrics", required=True, type=click.Path())
@click.option("--out-graphml", type=click.Path(), default=None)
@click.option("--out-dot", type=click.Path(), default=None)
@click.pass_context
def network(ctx, corpus_path, records_path, grouping, exclude_neutral, component, out_metrics, out_graphml, out_dot):
    """Build interaction graphs and compute mixing statistics."""
    payload = {
        "corpus_path": corpus_path,
        "records_path": records_path,
        "grouping": grouping,
        "exclude_neutral": exclude_neutral,
        "component": component,
        "out_metrics": out_metrics,
        "out_graphml": out_graphml,
        "out_dot": out_dot,
    }
    _report(call_service(ctx.obj, "/api/pipeline/network", payload))


@cli.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--samples", "samples_path", type=click.Path(), default=None,
              help="Sampled posts to annotate (defaults to the corpus itself).")
@click.option("--annotators", default=None, help="Comma-separated pair of annotator ids.")
@click.option("--overlap", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--log", "log_path", type=click.Path(), default=None)
@click.option("--codebook", "codebook_path", type=click.Path(), default=None)
@click.option("--ui-dir", type=click.Path(), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
def serve(ctx, corpus_path, samples_path, annotators, overlap, seed, log_path, codebook_path, ui_dir, host, port):
    """Run the HTTP service with an annotation session."""
    import uvicorn

    from .annotate import AnnotationSession
    from .corpus import load_corpus
    from .ragindex import load_codebook
    from .service import AnnotationRuntime, create_app

    cfg = ctx.obj["file_config"]
    data_dir = Path(__file__).parent / "data"
    corpus_path = resolve_option(corpus_path, "annotate", "corpus", cfg)
    if not corpus_path:
        raise click.UsageError("serve needs --corpus (or an [annotate] corpus entry in the config)")
    samples_path = resolve_option(samples_path, "annotate", "samples", cfg, corpus_path)
    annotators = str(resolve_option(annotators, "annotate", "annotators", cfg, "a1,a2"))
    overlap = int(resolve_option(overlap, "annotate", "overlap", cfg, 50))
    seed = int(resolve_option(seed, "annotate", "seed", cfg, 0))
    log_path = resolve_option(log_path, "annotate", "log", cfg, "annotation-log.jsonl")
    codebook_path = resolve_option(codebook_path, "annotate", "codebook", cfg, data_dir / "codebook.json")
    ui_dir = resolve_option(ui_dir, "annotate", "ui_dir", cfg)
    host = str(resolve_option(host, "annotate", "host", cfg, "127.0.0.1"))
    port = int(resolve_option(port, "annotate", "port", cfg, 8400))
    reference_kappa = resolve_option(None, "evaluate", "reference_kappa", cfg)

    resolved = {
        "corpus": str(corpus_path), "samples": str(samples_path), "annotators": annotators,
        "overlap": overlap, "seed": seed, "log": str(log_path), "codebook": str(codebook_path),
        "ui_dir": str(ui_dir) if ui_dir else None, "host": host, "port": port,
    }
    if ctx.obj.get("dry_run"):
        click.echo(json.dumps({"endpoint": "serve", "request": resolved}, indent=2, sort_keys=True))
        return

    sample_posts = load_corpus(samples_path).posts
    session = AnnotationSession(
        posts=sample_posts,
        annotators=annotators.split(","),
        overlap_size=overlap,
        seed=seed,
        log_path=log_path,
    )
    runtime = AnnotationRuntime(
        session=session,
        codebook=load_codebook(codebook_path),
        reference_kappa=float(reference_kappa) if reference_kappa is not None else None,
    )
    app = create_app(annotation=runtime, ui_dir=ui_dir)
    click.echo(f"serving annotation session on http://{host}:{port}", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except ServiceCallError as exc:
        click.echo(f"{exc.category} error: {exc}", err=True)
        sys.exit(EXIT_BY_CATEGORY.get(exc.category, 2))
    except StancenetError as exc:
        click.echo(f"{exc.category} error: {exc}", err=True)
        sys.exit(EXIT_BY_CATEGORY.get(exc.category, 2))
    sys.exit(0)


if __name__ == "__main__":
    main()

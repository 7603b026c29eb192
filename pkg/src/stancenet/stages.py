"""Pipeline stage orchestration shared by the HTTP service and its endpoints.

Each stage function takes resolved options, reads/writes files, drops a
manifest beside the primary output, and returns a JSON-safe summary dict.
Logs never go into output files.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from . import classify as classify_mod
from . import corpus as corpus_mod
from . import evalkit, netgraph, ragindex, snowball
from .config import config_hash, file_digest, write_manifest
from .errors import ConfigError, DataError


def _require_file(path: str | Path, producer: str) -> Path:
    resolved = Path(path)
    if not resolved.exists():
        raise DataError(
            f"input file {resolved} does not exist; produce it with the {producer!r} subcommand"
        )
    return resolved


def ingest(corpus_path: str, out_path: str) -> dict:
    started = time.monotonic()
    source = _require_file(corpus_path, "an upstream crawl export")
    load = corpus_mod.load_corpus(source)
    corpus_mod.save_corpus(load.posts, out_path)
    resolved = {"stage": "ingest", "corpus": str(corpus_path), "out": str(out_path)}
    write_manifest(
        out_path,
        "ingest",
        resolved,
        {"corpus": source},
        timings={"ingest": time.monotonic() - started},
    )
    return {
        "posts": len(load.posts),
        "rejected": len(load.rejected),
        "rejected_lines": [[n, reason] for n, reason in load.rejected],
        "duplicates": len(load.duplicates),
        "out": str(out_path),
    }


def expand_hashtags(
    corpus_path: str,
    seeds_path: str,
    out_path: str,
    rounds: int = 1,
    min_count: int = 2,
    allowlist_path: str | None = None,
    denylist_path: str | None = None,
) -> dict:
    started = time.monotonic()
    load = corpus_mod.load_corpus(_require_file(corpus_path, "ingest"))
    seeds = corpus_mod.load_hashtag_list(_require_file(seeds_path, "a seed hashtag list"))
    allowlist = (
        corpus_mod.load_hashtag_list(_require_file(allowlist_path, "an allowlist file"))
        if allowlist_path
        else None
    )
    denylist = (
        corpus_mod.load_hashtag_list(_require_file(denylist_path, "a denylist file"))
        if denylist_path
        else frozenset()
    )
    report = snowball.expand(
        load.posts, seeds, rounds=rounds, min_count=min_count, allowlist=allowlist, denylist=denylist
    )
    Path(out_path).write_text(report.to_json(), encoding="utf-8")
    resolved = {
        "stage": "expand-hashtags",
        "corpus": str(corpus_path),
        "seeds": str(seeds_path),
        "rounds": rounds,
        "min_count": min_count,
        "allowlist": allowlist_path,
        "denylist": denylist_path,
        "out": str(out_path),
    }
    write_manifest(
        out_path,
        "expand-hashtags",
        resolved,
        {"corpus": corpus_path, "seeds": seeds_path},
        timings={"expand-hashtags": time.monotonic() - started},
    )
    return {
        "seeds": len(seeds),
        "final_set": len(report.final_set),
        "rounds_run": len(report.rounds),
        "out": str(out_path),
    }


_BUCKET_NAMES = {
    "pro-only": corpus_mod.HashtagBucket.PRO_ONLY,
    "anti-only": corpus_mod.HashtagBucket.ANTI_ONLY,
    "both": corpus_mod.HashtagBucket.BOTH,
    "neither": corpus_mod.HashtagBucket.NEITHER,
}


def sample(
    corpus_path: str,
    pro_path: str,
    anti_path: str,
    out_path: str,
    per_bucket: int,
    buckets: list[str],
    seed: int,
) -> dict:
    started = time.monotonic()
    load = corpus_mod.load_corpus(_require_file(corpus_path, "ingest"))
    pro = corpus_mod.load_hashtag_list(_require_file(pro_path, "a pro hashtag list"))
    anti = corpus_mod.load_hashtag_list(_require_file(anti_path, "an anti hashtag list"))
    try:
        bucket_values = [_BUCKET_NAMES[b] for b in buckets]
    except KeyError as exc:
        raise ConfigError(f"unknown bucket {exc.args[0]!r}; choose from {sorted(_BUCKET_NAMES)}") from exc
    selected = corpus_mod.stratified_sample(
        load.posts, per_bucket, bucket_values, seed, pro=pro, anti=anti
    )
    corpus_mod.save_corpus(selected, out_path)
    resolved = {
        "stage": "sample",
        "corpus": str(corpus_path),
        "per_bucket": per_bucket,
        "buckets": list(buckets),
        "seed": seed,
        "out": str(out_path),
    }
    write_manifest(
        out_path,
        "sample",
        resolved,
        {"corpus": corpus_path, "pro": pro_path, "anti": anti_path},
        seeds={"sample": seed},
        timings={"sample": time.monotonic() - started},
    )
    return {"selected": len(selected), "per_bucket": per_bucket, "out": str(out_path)}


def index_examples(
    corpus_path: str,
    annotations_path: str,
    out_path: str,
    dimension: int = ragindex.DEFAULT_DIMENSION,
) -> dict:
    started = time.monotonic()
    load = corpus_mod.load_corpus(_require_file(corpus_path, "ingest"))
    posts = {p.id: p for p in load.posts}
    annotations = corpus_mod.load_annotations(
        _require_file(annotations_path, "serve (annotation export)"), known_ids=set(posts)
    )
    if annotations.rejected:
        raise DataError(
            f"annotation file has {len(annotations.rejected)} bad lines, "
            f"first: {annotations.rejected[0]}"
        )
    pairs = [(s, posts[s.post_id]) for s in annotations.samples]
    store, skipped = ragindex.index_examples(pairs, dimension=dimension)
    store.save(out_path)
    resolved = {
        "stage": "index",
        "kind": "examples",
        "corpus": str(corpus_path),
        "annotations": str(annotations_path),
        "dimension": dimension,
        "out": str(out_path),
    }
    write_manifest(
        out_path,
        "index",
        resolved,
        {"corpus": corpus_path, "annotations": annotations_path},
        timings={"index": time.monotonic() - started},
    )
    return {"entries": len(store), "skipped_neutral": len(skipped), "out": str(out_path)}


def index_taxonomy(
    codebook_path: str, out_path: str, dimension: int = ragindex.DEFAULT_DIMENSION
) -> dict:
    started = time.monotonic()
    codebook = ragindex.load_codebook(_require_file(codebook_path, "a codebook file"))
    store = ragindex.index_taxonomy(codebook, dimension=dimension)
    store.save(out_path)
    resolved = {
        "stage": "index",
        "kind": "taxonomy",
        "codebook": str(codebook_path),
        "dimension": dimension,
        "out": str(out_path),
    }
    write_manifest(
        out_path,
        "index",
        resolved,
        {"codebook": codebook_path},
        timings={"index": time.monotonic() - started},
    )
    return {"entries": len(store), "out": str(out_path)}


_STRATEGIES = {
    "zero-shot": classify_mod.STRATEGY_ZERO_SHOT,
    "rag-examples": classify_mod.STRATEGY_RAG_EXAMPLES,
    "rag-full": classify_mod.STRATEGY_RAG_FULL,
}


def run_classify(
    corpus_path: str,
    out_path: str,
    strategy: str,
    backend_kind: str = "mock",
    endpoint: str | None = None,
    model: str = "default",
    timeout: float = 60.0,
    templates_dir: str | None = None,
    examples_store_path: str | None = None,
    taxonomy_store_path: str | None = None,
    prompt_id: str | None = None,
    select_from_records: str | None = None,
    select_with_annotations: str | None = None,
    k: int = ragindex.DEFAULT_TOP_K,
    threshold: float = ragindex.DEFAULT_THRESHOLD,
    temperature: float = 0.0,
    max_tokens: int = 64,
    retries: int = classify_mod.DEFAULT_RETRIES,
    parallelism: int = 1,
) -> dict:
    started = time.monotonic()
    if strategy not in _STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; choose from {sorted(_STRATEGIES)}")
    strategy_name = _STRATEGIES[strategy]
    load = corpus_mod.load_corpus(_require_file(corpus_path, "sample"))
    templates = classify_mod.load_templates(templates_dir or classify_mod.default_template_dir())
    backend = classify_mod.make_backend(backend_kind, endpoint=endpoint, model=model, timeout=timeout)
    params = classify_mod.GenParams(
        temperature=temperature, max_tokens=max_tokens, model=model, retries=retries
    )

    example_store = None
    taxonomy_store = None
    warnings: list[str] = []
    if strategy != "zero-shot":
        if examples_store_path:
            example_store = ragindex.VectorStore.load(_require_file(examples_store_path, "index"))
        if strategy == "rag-full" and taxonomy_store_path:
            taxonomy_store = ragindex.VectorStore.load(_require_file(taxonomy_store_path, "index"))
        store_sizes = (len(example_store) if example_store else 0) + (
            len(taxonomy_store) if taxonomy_store else 0
        )
        if store_sizes == 0:
            warnings.append("retrieval stores are empty; proceeding as degenerate zero-shot")

    best_template = None
    best_prompt_id = None
    if strategy != "zero-shot":
        if prompt_id:
            best_prompt_id = prompt_id
        elif select_from_records and select_with_annotations:
            zs_records = classify_mod.load_records(
                _require_file(select_from_records, "classify --strategy zero-shot")
            )
            truth_load = corpus_mod.load_annotations(
                _require_file(select_with_annotations, "serve (annotation export)")
            )
            truth = {s.post_id: s.label.primary for s in truth_load.samples}
            best_prompt_id = classify_mod.select_best_prompt(zs_records, truth)
        else:
            raise ConfigError(
                "rag strategies need --prompt-id, or --select-from plus --annotations "
                "to pick the best zero-shot prompt"
            )
        by_id = {t.id: t for t in templates}
        if best_prompt_id not in by_id:
            raise ConfigError(f"prompt id {best_prompt_id!r} not among loaded templates")
        best_template = by_id[best_prompt_id]

    resolved = {
        "stage": "classify",
        "strategy": strategy,
        "backend": backend_kind,
        "model": model,
        "endpoint": endpoint,
        "templates": sorted(t.id for t in templates),
        "prompt_id": best_prompt_id,
        "k": k,
        "threshold": threshold,
        "temperature": temperature,
        "max_tokens": max_tokens,
        "retries": retries,
        "examples_store": examples_store_path,
        "taxonomy_store": taxonomy_store_path,
    }
    # records embed a hash over semantic config and store contents, never paths,
    # so identical runs from different directories stay byte-identical
    hash_payload = {
        k_: v
        for k_, v in resolved.items()
        if k_ not in ("examples_store", "taxonomy_store", "endpoint")
    }
    hash_payload["examples_store_digest"] = (
        file_digest(examples_store_path) if examples_store_path else None
    )
    hash_payload["taxonomy_store_digest"] = (
        file_digest(taxonomy_store_path) if taxonomy_store_path else None
    )
    manifest_hash = config_hash(hash_payload)
    records = classify_mod.classify_corpus(
        backend,
        load.posts,
        strategy_name,
        templates,
        best_template=best_template,
        example_store=example_store,
        taxonomy_store=taxonomy_store,
        k=k,
        threshold=threshold,
        params=params,
        manifest=manifest_hash,
        parallelism=parallelism,
    )
    classify_mod.save_records(records, out_path)
    inputs = {"corpus": corpus_path}
    if examples_store_path:
        inputs["examples_store"] = examples_store_path
    if taxonomy_store_path:
        inputs["taxonomy_store"] = taxonomy_store_path
    write_manifest(
        out_path, "classify", resolved, inputs, timings={"classify": time.monotonic() - started}
    )
    verdicts: dict[str, int] = {}
    for record in records:
        verdicts[record.verdict] = verdicts.get(record.verdict, 0) + 1
    return {
        "records": len(records),
        "verdicts": dict(sorted(verdicts.items())),
        "best_prompt": best_prompt_id,
        "warnings": warnings,
        "out": str(out_path),
    }


def evaluate(
    records_path: str,
    annotations_path: str,
    out_json: str,
    out_text: str | None = None,
    annotator: str | None = None,
    reference_kappa: float | None = None,
    run_label: str | None = None,
) -> dict:
    started = time.monotonic()
    records = classify_mod.load_records(_require_file(records_path, "classify"))
    annotations = corpus_mod.load_annotations(
        _require_file(annotations_path, "serve (annotation export)")
    )
    samples = annotations.samples
    if annotator:
        samples = [s for s in samples if s.annotator_id == annotator]
    truth_labels: dict[str, str] = {}
    for s in samples:
        existing = truth_labels.get(s.post_id)
        if existing is not None and existing != s.label.primary:
            raise DataError(
                f"conflicting ground-truth labels for post {s.post_id!r}; "
                "pick one annotator with --annotator"
            )
        truth_labels[s.post_id] = s.label.primary
    preds = {r.post_id: r.verdict for r in records if r.post_id in truth_labels}
    if not preds:
        raise DataError("no classified posts overlap the annotation set")
    cm = evalkit.confusion(preds, truth_labels)
    report = evalkit.metrics(cm)
    sub_report = evalkit.recall_by_sublabel(preds, [s for s in samples if s.post_id in preds])
    label = run_label or Path(records_path).stem
    payload = {
        "run": label,
        "strategy": records[0].strategy if records else None,
        "confusion": cm.to_dict(),
        "metrics": report.to_dict(),
        "sublabel_recall": sub_report.to_dict(),
        "reference_kappa": reference_kappa,
    }
    Path(out_json).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if out_text:
        text = (
            evalkit.render_metrics_text(report, label)
            + "\n"
            + evalkit.render_sublabel_text(sub_report, label)
        )
        Path(out_text).write_text(text, encoding="utf-8")
    resolved = {
        "stage": "evaluate",
        "records": str(records_path),
        "annotations": str(annotations_path),
        "annotator": annotator,
        "out": str(out_json),
    }
    write_manifest(
        out_json,
        "evaluate",
        resolved,
        {"records": records_path, "annotations": annotations_path},
        timings={"evaluate": time.monotonic() - started},
    )
    return {
        "evaluated": report.total,
        "accuracy": report.accuracy,
        "unclassified": report.unclassified,
        "out": str(out_json),
    }


def network(
    corpus_path: str,
    out_metrics: str,
    records_path: str | None = None,
    grouping: str = "all",
    exclude_neutral: bool = False,
    component: str = "largest",
    out_graphml: str | None = None,
    out_dot: str | None = None,
) -> dict:
    started = time.monotonic()
    load = corpus_mod.load_corpus(_require_file(corpus_path, "ingest"))
    verdicts: dict[str, str] = {}
    if records_path:
        records = classify_mod.load_records(_require_file(records_path, "classify"))
        verdicts = {r.post_id: r.verdict for r in records}
    if component not in ("largest", "all"):
        raise ConfigError("component must be 'largest' or 'all'")
    graph = netgraph.build_graph(load.posts, grouping=grouping)
    if component == "largest":
        graph = netgraph.largest_component(graph)
    stances = netgraph.node_stances(load.posts, verdicts)
    metrics_payload = netgraph.network_metrics(graph, stances)
    metrics_payload["component"] = component
    export_graph = netgraph.drop_neutral(graph, stances) if exclude_neutral else graph
    if out_graphml:
        netgraph.export_graphml(export_graph, stances, out_graphml)
    if out_dot:
        netgraph.export_dot(export_graph, stances, out_dot)
    Path(out_metrics).write_text(
        json.dumps(metrics_payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    resolved = {
        "stage": "network",
        "corpus": str(corpus_path),
        "records": records_path,
        "grouping": grouping,
        "exclude_neutral": exclude_neutral,
        "component": component,
        "out": str(out_metrics),
    }
    inputs = {"corpus": corpus_path}
    if records_path:
        inputs["records"] = records_path
    write_manifest(
        out_metrics, "network", resolved, inputs, timings={"network": time.monotonic() - started}
    )
    return {
        "nodes": metrics_payload["nodes"],
        "edges": metrics_payload["edges"],
        "r_with_neutral": metrics_payload["r_with_neutral"],
        "r_without_neutral": metrics_payload["r_without_neutral"],
        "anti_pro_ratio": metrics_payload["anti_pro_ratio"],
        "out": str(out_metrics),
    }

"""Run the full CLI pipeline on the committed fixture and freeze the outputs
as golden files under tests/fixtures/goldens/pipeline/.

Everything frozen here is deterministic by construction (mock backend, hashed
embeddings, sorted serialization); manifest sidecars carry timings and are not
golden-compared, so they are deleted after the run.

Run from the repo root:  python tools/make_goldens.py
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = FIXTURES / "goldens" / "pipeline"
DATA = ROOT / "src" / "stancenet" / "data"

CLI = [sys.executable, "-m", "stancenet.cli"]


def run(*args: str) -> None:
    result = subprocess.run(CLI + list(args), cwd=ROOT, capture_output=True, text=True)
    if result.returncode != 0:
        raise SystemExit(f"step {args[0]} failed ({result.returncode}):\n{result.stderr}")


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for stale in GOLDEN.iterdir():
        stale.unlink()
    g = str(GOLDEN)

    run("ingest", "--in", str(FIXTURES / "corpus.jsonl"), "--out", f"{g}/ingested.jsonl")
    run(
        "sample", "--corpus", f"{g}/ingested.jsonl", "--out", f"{g}/sampled.jsonl",
        "--per-bucket", "100", "--buckets", "pro-only,anti-only,both", "--seed", "7",
    )
    run(
        "expand-hashtags", "--corpus", f"{g}/ingested.jsonl",
        "--seeds", str(DATA / "hashtags_seed.txt"), "--out", f"{g}/expansion.json",
        "--rounds", "2", "--min-count", "2",
    )
    run(
        "index", "--corpus", str(FIXTURES / "train_corpus.jsonl"),
        "--annotations", str(FIXTURES / "train_annotations.jsonl"),
        "--out", f"{g}/examples.store.json",
    )
    run("index", "--codebook", str(DATA / "codebook.json"), "--out", f"{g}/taxonomy.store.json")

    run(
        "classify", "--corpus", f"{g}/sampled.jsonl", "--out", f"{g}/records_zero-shot.jsonl",
        "--strategy", "zero-shot", "--backend", "mock",
    )
    common_rag = [
        "--backend", "mock",
        "--select-from", f"{g}/records_zero-shot.jsonl",
        "--annotations", str(FIXTURES / "annotations.jsonl"),
    ]
    run(
        "classify", "--corpus", f"{g}/sampled.jsonl", "--out", f"{g}/records_rag-examples.jsonl",
        "--strategy", "rag-examples", "--examples-store", f"{g}/examples.store.json", *common_rag,
    )
    run(
        "classify", "--corpus", f"{g}/sampled.jsonl", "--out", f"{g}/records_rag-full.jsonl",
        "--strategy", "rag-full", "--examples-store", f"{g}/examples.store.json",
        "--taxonomy-store", f"{g}/taxonomy.store.json", *common_rag,
    )

    for strategy in ("zero-shot", "rag-examples", "rag-full"):
        run(
            "evaluate", "--records", f"{g}/records_{strategy}.jsonl",
            "--annotations", str(FIXTURES / "annotations.jsonl"),
            "--out", f"{g}/eval_{strategy}.json", "--out-text", f"{g}/eval_{strategy}.txt",
            "--reference-kappa", "0.64", "--run-label", strategy,
        )

    for grouping in ("all", "tag-reply", "duet-stitch"):
        args = [
            "network", "--corpus", f"{g}/ingested.jsonl",
            "--records", f"{g}/records_rag-full.jsonl", "--grouping", grouping,
            "--out-metrics", f"{g}/network_{grouping}.json",
        ]
        if grouping == "all":
            args += ["--out-graphml", f"{g}/network_all.graphml", "--out-dot", f"{g}/network_all.dot"]
        run(*args)

    for manifest in GOLDEN.glob("*.manifest.json"):
        manifest.unlink()

    accuracies = {}
    for strategy in ("zero-shot", "rag-examples", "rag-full"):
        payload = json.loads((GOLDEN / f"eval_{strategy}.json").read_text())
        accuracies[strategy] = payload["metrics"]["accuracy"]
    print("golden accuracies:", json.dumps(accuracies, indent=2))
    assert accuracies["zero-shot"] < accuracies["rag-examples"] < accuracies["rag-full"]
    print(f"froze {sum(1 for _ in GOLDEN.iterdir())} golden files in {GOLDEN}")


if __name__ == "__main__":
    main()

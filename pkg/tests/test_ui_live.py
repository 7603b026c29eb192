"""Live contract test: the real TypeScript controller drives a real service
process end to end, and the live kappa matches an evalkit recomputation from
the session's own event log. Skipped when the frontend toolchain is absent."""

import json
import os
import shutil
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from stancenet.annotate import AnnotationSession
from stancenet.corpus import load_corpus
from stancenet.evalkit import cohen_kappa

ROOT = Path(__file__).parent.parent
FRONTEND = ROOT / "frontend"
GOLDEN_SAMPLED = ROOT / "tests" / "fixtures" / "goldens" / "pipeline" / "sampled.jsonl"

pytestmark = pytest.mark.skipif(
    not (FRONTEND / "node_modules").is_dir() or shutil.which("npx") is None,
    reason="frontend toolchain not installed",
)


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.mark.slow
def test_ui_controller_against_real_service(tmp_path):
    port = _free_port()
    log_path = tmp_path / "session-log.jsonl"
    server = subprocess.Popen(
        [
            sys.executable, "-m", "stancenet.cli", "serve",
            "--corpus", str(GOLDEN_SAMPLED),
            "--annotators", "a1,a2",
            "--overlap", "50",
            "--seed", "11",
            "--log", str(log_path),
            "--port", str(port),
        ],
        cwd=ROOT,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(f"{base}/api/health", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.1)
        else:
            raise RuntimeError(f"service did not come up: {server.stderr.read()[:500]}")

        env = dict(os.environ, STANCENET_API_URL=base)
        node = subprocess.run(
            ["npx", "vitest", "run", "tests/live_contract.test.ts"],
            cwd=FRONTEND,
            env=env,
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert node.returncode == 0, f"vitest failed:\n{node.stdout}\n{node.stderr}"

        live = httpx.get(f"{base}/api/agreement", timeout=5.0).json()
        progress = httpx.get(f"{base}/api/progress", timeout=5.0).json()
        assert progress["annotators"]["a1"]["pending"] == 0
        assert progress["annotators"]["a2"]["pending"] == 0
        assert live["n"] == 50
    finally:
        server.terminate()
        server.wait(timeout=10)

    # independent recomputation: replay the session log and hand it to evalkit
    posts = load_corpus(GOLDEN_SAMPLED).posts
    replayed = AnnotationSession(
        posts=posts, annotators=["a1", "a2"], overlap_size=50, seed=11, log_path=log_path
    )
    a_labels = replayed.labels_of("a1")
    b_labels = replayed.labels_of("a2")
    overlap = [pid for pid in replayed.overlap_ids if pid in a_labels and pid in b_labels]
    want = cohen_kappa(
        {pid: a_labels[pid].primary for pid in overlap},
        {pid: b_labels[pid].primary for pid in overlap},
    )
    assert live["kappa"] == want.kappa
    assert live["observed_agreement"] == want.observed

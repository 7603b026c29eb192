"""Prompt construction, LLM wire backends, ensembling, and label parsing.

The wire protocol is a JSON-over-HTTP chat completion request
{model, messages, temperature, max_tokens}; any server speaking that shape
works. The mock backend implements the same interface in process with
deterministic keyword rules so that full pipeline runs are reproducible
byte-for-byte: it scores stance cue phrases found in the post content plus the
labels of any retrieved examples and definitions rendered into the prompt.

Rendered prompts put retrieved taxonomy definitions first, then labeled
examples, then the post content, then the template's instruction.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import httpx

from .corpus import Post, classification_text
from .errors import BackendError, ConfigError, DataError
from .ragindex import Bucket, IndexEntry, VectorStore, combine_stores, retrieve

UNPARSEABLE = "Unparseable"
UNCLASSIFIED = "Unclassified"

STRATEGY_ZERO_SHOT = "ZeroShotEnsemble"
STRATEGY_RAG_EXAMPLES = "RagExamples"
STRATEGY_RAG_FULL = "RagExamplesTaxonomy"

# Verdict precedence on ensemble ties: surface potential harm for review first.
TIE_PRECEDENCE = ("AntiTrans", "ProTrans", "Neutral")

_DISPLAY = {"AntiTrans": "Anti-Trans", "ProTrans": "Pro-Trans", "Neutral": "Neutral"}

DEFAULT_RETRIES = 2
RETRY_TEMPERATURE = 0.2


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str

    def __post_init__(self) -> None:
        if self.text.count("{content}") != 1:
            raise ConfigError(
                f"template {self.id!r} must contain the {{content}} placeholder exactly once"
            )


def load_templates(directory: str | Path) -> list[PromptTemplate]:
    """Load every *.txt template in a directory, id = filename stem, sorted by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"template directory {directory} does not exist")
    templates = []
    for path in sorted(directory.glob("*.txt")):
        templates.append(PromptTemplate(id=path.stem, text=path.read_text(encoding="utf-8")))
    if not templates:
        raise ConfigError(f"no *.txt templates found in {directory}")
    return templates


def default_template_dir() -> Path:
    return Path(__file__).parent / "data" / "prompts"


def _examples_section(examples: Sequence[tuple[str, str]]) -> str:
    if not examples:
        return ""
    lines = ["Labeled examples:"]
    for i, (text, primary) in enumerate(examples, start=1):
        lines.append(f"Example {i} (stance: {_DISPLAY[primary]}):")
        lines.append(text)
    return "\n".join(lines) + "\n\n"


def _definitions_section(definitions: Sequence[tuple[str, str, str]]) -> str:
    if not definitions:
        return ""
    lines = ["Working definitions:"]
    for primary, name, text in definitions:
        lines.append(f"- (side: {_DISPLAY[primary]}) {name}: {text}")
    return "\n".join(lines) + "\n\n"


def render_prompt(
    template: PromptTemplate,
    content: str,
    examples: Sequence[tuple[str, str]] = (),
    definitions: Sequence[tuple[str, str, str]] = (),
) -> str:
    """Fill a template with content plus optional retrieved context.

    Zero retrieved items yields empty sections, never a placeholder error;
    supplying items for a template lacking the matching placeholder is a
    configuration error.
    """
    if examples and "{examples}" not in template.text:
        raise ConfigError(f"template {template.id!r} lacks the {{examples}} placeholder")
    if definitions and "{definitions}" not in template.text:
        raise ConfigError(f"template {template.id!r} lacks the {{definitions}} placeholder")
    rendered = template.text
    rendered = rendered.replace("{definitions}", _definitions_section(definitions))
    rendered = rendered.replace("{examples}", _examples_section(examples))
    rendered = rendered.replace("{content}", content)
    return rendered


_CANONICAL_TOKENS = (("anti-trans", "AntiTrans"), ("pro-trans", "ProTrans"), ("neutral", "Neutral"))
_FALLBACK_TOKENS = (("anti", "AntiTrans"), ("pro", "ProTrans"))


def parse_label(raw: str) -> str:
    """Extract one primary label from a completion, or Unparseable.

    Searches case-insensitively for the canonical label tokens, falling back
    to word-bounded bare 'anti'/'pro' when none appear. Anything other than
    exactly one distinct label is unparseable.
    """
    found = {
        label
        for token, label in _CANONICAL_TOKENS
        if re.search(rf"\b{re.escape(token)}\b", raw, re.IGNORECASE)
    }
    if not found:
        found = {
            label
            for token, label in _FALLBACK_TOKENS
            if re.search(rf"\b{token}\b", raw, re.IGNORECASE)
        }
    if len(found) == 1:
        return found.pop()
    return UNPARSEABLE


@dataclass(frozen=True)
class LlmRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 64
    model: str = "default"


@dataclass(frozen=True)
class LlmResponse:
    text: str
    backend: str
    latency_s: float = 0.0


class Backend:
    name = "base"

    def complete(self, request: LlmRequest) -> LlmResponse:  # pragma: no cover
        raise NotImplementedError


# Cue phrases the mock backend treats as stance signal inside post content.
# Multi-word on purpose: single hashtag tokens must not trigger them, except
# for dog-whistle acronyms that only ever mark hostile content.
DEFAULT_ANTI_CUES = (
    "gender ideology",
    "ywnbaw",
    "adult human female",
    "single sex spaces",
    "what is a woman",
    "wrong body",
)
DEFAULT_PRO_CUES = (
    "trans rights",
    "trans joy",
    "protect trans kids",
    "trans is beautiful",
    "nonbinary visibility",
    "rights are human rights",
)

_RESPONSES = {
    "AntiTrans": "Label: Anti-Trans. The post matches hostile framing patterns.",
    "ProTrans": "Label: Pro-Trans. The post matches supportive framing patterns.",
    "Neutral": "Label: Neutral. No stance signal detected in the post.",
}


class MockBackend(Backend):
    """Deterministic in-process stand-in for a hosted chat-completion model.

    Scoring: each cue phrase found in the prompt counts 2 toward its side;
    each retrieved example label line ("stance: X") and definition side tag
    ("side: X") counts 1. Higher side wins; ties (including no signal) are
    Neutral. Temperature is ignored, so repeated calls are identical.
    """

    name = "mock"

    def __init__(
        self,
        anti_cues: Sequence[str] = DEFAULT_ANTI_CUES,
        pro_cues: Sequence[str] = DEFAULT_PRO_CUES,
    ) -> None:
        self.anti_cues = tuple(anti_cues)
        self.pro_cues = tuple(pro_cues)

    @staticmethod
    def _count(needle: str, haystack: str) -> int:
        return len(re.findall(rf"\b{re.escape(needle)}\b", haystack))

    def complete(self, request: LlmRequest) -> LlmResponse:
        text = request.prompt.casefold()
        anti = 2 * sum(self._count(cue, text) for cue in self.anti_cues)
        pro = 2 * sum(self._count(cue, text) for cue in self.pro_cues)
        anti += text.count("stance: anti-trans") + text.count("side: anti-trans")
        pro += text.count("stance: pro-trans") + text.count("side: pro-trans")
        if anti > pro:
            verdict = "AntiTrans"
        elif pro > anti:
            verdict = "ProTrans"
        else:
            verdict = "Neutral"
        return LlmResponse(text=_RESPONSES[verdict], backend=self.name, latency_s=0.0)


class HttpBackend(Backend):
    """Client for any chat-completion server speaking the OpenAI-style shape."""

    name = "http"

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.timeout = timeout
        self._client = client

    def complete(self, request: LlmRequest) -> LlmResponse:
        payload = {
            "model": request.model if request.model != "default" else self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        url = f"{self.endpoint}/chat/completions"
        started = time.monotonic()
        try:
            if self._client is not None:
                response = self._client.post(url, json=payload, timeout=self.timeout)
            else:
                response = httpx.post(url, json=payload, timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise BackendError(f"backend request to {url} failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"backend returned HTTP {response.status_code}: {response.text[:200]}")
        try:
            data = response.json()
            text = data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise BackendError(f"backend response not in chat-completion shape: {exc}") from exc
        return LlmResponse(text=text or "", backend=self.name, latency_s=time.monotonic() - started)


def make_backend(kind: str, *, endpoint: str | None = None, model: str = "default",
                 timeout: float = 60.0) -> Backend:
    if kind == "mock":
        return MockBackend()
    if kind == "http":
        if not endpoint:
            raise ConfigError("http backend requires an endpoint URL")
        return HttpBackend(endpoint=endpoint, model=model, timeout=timeout)
    raise ConfigError(f"unknown backend {kind!r}; choose mock or http")


@dataclass
class ClassificationRecord:
    post_id: str
    strategy: str
    verdict: str
    votes: dict[str, str]
    retrieved: list[str] = field(default_factory=list)
    manifest: str = ""
    tie_broken: bool = False
    error: str | None = None
    retries: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "post_id": self.post_id,
            "strategy": self.strategy,
            "verdict": self.verdict,
            "votes": {k: self.votes[k] for k in sorted(self.votes)},
            "retrieved": list(self.retrieved),
            "manifest": self.manifest,
            "tie_broken": self.tie_broken,
            "error": self.error,
        }
        if self.retries:
            out["retries"] = {k: self.retries[k] for k in sorted(self.retries)}
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ClassificationRecord":
        return cls(
            post_id=raw["post_id"],
            strategy=raw["strategy"],
            verdict=raw["verdict"],
            votes=dict(raw.get("votes", {})),
            retrieved=list(raw.get("retrieved", [])),
            manifest=raw.get("manifest", ""),
            tie_broken=bool(raw.get("tie_broken", False)),
            error=raw.get("error"),
            retries=dict(raw.get("retries", {})),
        )


def records_to_jsonl(records: Sequence[ClassificationRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in records)


def save_records(records: Sequence[ClassificationRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_jsonl(records), encoding="utf-8")


def load_records(path: str | Path) -> list[ClassificationRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read records file {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(ClassificationRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"bad record at {path}:{lineno}: {exc}") from exc
    return records


def _complete_with_retries(
    backend: Backend, prompt: str, params: "GenParams", retries: int
) -> tuple[str, int]:
    """One vote with up to `retries` re-asks on unparseable output, bumping
    temperature on the retry attempts."""
    request = LlmRequest(
        prompt=prompt, temperature=params.temperature, max_tokens=params.max_tokens,
        model=params.model,
    )
    vote = parse_label(backend.complete(request).text)
    attempts = 0
    while vote == UNPARSEABLE and attempts < retries:
        attempts += 1
        retry_request = replace(request, temperature=RETRY_TEMPERATURE)
        vote = parse_label(backend.complete(retry_request).text)
    return vote, attempts


@dataclass(frozen=True)
class GenParams:
    temperature: float = 0.0
    max_tokens: int = 64
    model: str = "default"
    retries: int = DEFAULT_RETRIES


def ensemble_verdict(votes: Mapping[str, str]) -> tuple[str, bool]:
    """Majority of parseable votes; ties resolve by Anti > Pro > Neutral.

    Returns (verdict, tie_broken). All-unparseable vote sets yield Unclassified.
    """
    parseable = [v for v in votes.values() if v != UNPARSEABLE]
    if not parseable:
        return UNCLASSIFIED, False
    counts: dict[str, int] = {}
    for vote in parseable:
        counts[vote] = counts.get(vote, 0) + 1
    top = max(counts.values())
    leaders = [cls for cls in TIE_PRECEDENCE if counts.get(cls, 0) == top]
    return leaders[0], len(leaders) > 1


def classify_zero_shot(
    backend: Backend,
    post: Post,
    templates: Sequence[PromptTemplate],
    params: GenParams = GenParams(),
    manifest: str = "",
) -> ClassificationRecord:
    """Run every template once and ensemble the parseable votes."""
    content = classification_text(post)
    votes: dict[str, str] = {}
    retries: dict[str, int] = {}
    for template in templates:
        prompt = render_prompt(template, content)
        vote, attempts = _complete_with_retries(backend, prompt, params, params.retries)
        votes[template.id] = vote
        if attempts:
            retries[template.id] = attempts
    verdict, tie_broken = ensemble_verdict(votes)
    error = "all votes unparseable" if verdict == UNCLASSIFIED else None
    return ClassificationRecord(
        post_id=post.id,
        strategy=STRATEGY_ZERO_SHOT,
        verdict=verdict,
        votes=votes,
        retrieved=[],
        manifest=manifest,
        tie_broken=tie_broken,
        error=error,
        retries=retries,
    )


def select_best_prompt(
    records: Sequence[ClassificationRecord], truth: Mapping[str, str]
) -> str:
    """Prompt id with the highest accuracy over its parseable votes; ties break
    to the lexicographically smaller id."""
    if not records:
        raise DataError("cannot select a best prompt from zero records")
    prompt_ids = sorted({pid for r in records for pid in r.votes})
    if not prompt_ids:
        raise DataError("records carry no votes")
    best_id, best_acc = None, -1.0
    for pid in prompt_ids:
        hits = 0
        evaluated = 0
        for record in records:
            vote = record.votes.get(pid)
            if vote is None or vote == UNPARSEABLE:
                continue
            if record.post_id not in truth:
                raise DataError(f"no ground truth for post {record.post_id!r}")
            evaluated += 1
            if vote == truth[record.post_id]:
                hits += 1
        accuracy = hits / evaluated if evaluated else -1.0
        if accuracy > best_acc:
            best_id, best_acc = pid, accuracy
    return best_id


def _split_retrieved(entries: Sequence[IndexEntry]) -> tuple[list[tuple[str, str]], list[tuple[str, str, str]]]:
    examples: list[tuple[str, str]] = []
    definitions: list[tuple[str, str, str]] = []
    for entry in entries:
        if entry.bucket is Bucket.TAXONOMY_DEF:
            primary = entry.label.primary if entry.label else "Neutral"
            definitions.append((primary, entry.id, entry.text))
        else:
            primary = entry.label.primary if entry.label else "Neutral"
            examples.append((entry.text, primary))
    return examples, definitions


def classify_rag(
    backend: Backend,
    post: Post,
    best_template: PromptTemplate,
    example_store: VectorStore | None,
    taxonomy_store: VectorStore | None = None,
    k: int = 3,
    threshold: float = 0.35,
    params: GenParams = GenParams(),
    manifest: str = "",
) -> ClassificationRecord:
    """Single-prompt classification augmented with retrieved context.

    With a taxonomy store present, retrieval runs over the combined
    example+taxonomy store; empty stores degrade to plain single-prompt
    zero-shot behavior.
    """
    if example_store is not None and taxonomy_store is not None:
        store = combine_stores(example_store, taxonomy_store)
        strategy = STRATEGY_RAG_FULL
    elif taxonomy_store is not None:
        store = taxonomy_store
        strategy = STRATEGY_RAG_FULL
    else:
        store = example_store
        strategy = STRATEGY_RAG_EXAMPLES
    content = classification_text(post)
    retrieved_ids: list[str] = []
    examples: list[tuple[str, str]] = []
    definitions: list[tuple[str, str, str]] = []
    if store is not None and len(store) > 0:
        result = retrieve(store, content, k=k, threshold=threshold, query_id=post.id)
        retrieved_ids = result.ids()
        lookup = {e.id: e for e in store.entries}
        examples, definitions = _split_retrieved([lookup[i] for i in retrieved_ids])
    prompt = render_prompt(best_template, content, examples, definitions)
    vote, attempts = _complete_with_retries(backend, prompt, params, params.retries)
    verdict = vote if vote != UNPARSEABLE else UNCLASSIFIED
    return ClassificationRecord(
        post_id=post.id,
        strategy=strategy,
        verdict=verdict,
        votes={best_template.id: vote},
        retrieved=retrieved_ids,
        manifest=manifest,
        tie_broken=False,
        error="unparseable after retries" if verdict == UNCLASSIFIED else None,
        retries={best_template.id: attempts} if attempts else {},
    )


def classify_corpus(
    backend: Backend,
    posts: Sequence[Post],
    strategy: str,
    templates: Sequence[PromptTemplate],
    best_template: PromptTemplate | None = None,
    example_store: VectorStore | None = None,
    taxonomy_store: VectorStore | None = None,
    k: int = 3,
    threshold: float = 0.35,
    params: GenParams = GenParams(),
    manifest: str = "",
    parallelism: int = 1,
) -> list[ClassificationRecord]:
    """Classify a corpus post by post; records come back in input order."""
    if strategy == STRATEGY_ZERO_SHOT:
        worker: Callable[[Post], ClassificationRecord] = lambda post: classify_zero_shot(
            backend, post, templates, params, manifest
        )
    elif strategy in (STRATEGY_RAG_EXAMPLES, STRATEGY_RAG_FULL):
        if best_template is None:
            raise ConfigError("rag strategies require the selected best template")
        # combine once so per-post calls do no repeated store work
        if strategy == STRATEGY_RAG_FULL and example_store is not None and taxonomy_store is not None:
            combined: VectorStore | None = combine_stores(example_store, taxonomy_store)
        elif strategy == STRATEGY_RAG_FULL:
            combined = taxonomy_store if taxonomy_store is not None else example_store
        else:
            combined = example_store

        def worker(post: Post) -> ClassificationRecord:
            record = classify_rag(
                backend, post, best_template, combined, None, k, threshold, params, manifest
            )
            record.strategy = strategy
            return record

    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    if parallelism > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(worker, posts))
    return [worker(post) for post in posts]

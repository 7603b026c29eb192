"""Deterministic local embedding and bucketed vector stores for retrieval.

Texts are embedded with a hashed TF-IDF scheme: Unicode word tokens are
case-folded and hashed by a stable 64-bit hash into a fixed number of
dimensions; weights are term frequency times a smoothed inverse document
frequency learned from the indexed store, L2-normalized. This keeps retrieval
fully reproducible with no model downloads; a wire-service embedder can be
swapped in behind the same store contract.

Stores hold annotated examples in Anti/Pro buckets and codebook definitions in
a taxonomy bucket. Retrieval ranks all entries by cosine similarity to the
query, keeping the top k at or above a score threshold.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import (
    ANTI_SUBLABELS,
    PRO_SUBLABELS,
    AnnotatedSample,
    Post,
    StanceLabel,
    classification_text,
)
from .errors import ConfigError, DataError

DEFAULT_DIMENSION = 512
DEFAULT_TOP_K = 3
DEFAULT_THRESHOLD = 0.35

_TOKEN_RE = re.compile(r"\w+")


class Bucket(str, Enum):
    ANTI_EXAMPLE = "AntiExample"
    PRO_EXAMPLE = "ProExample"
    TAXONOMY_DEF = "TaxonomyDef"


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def _token_slot(token: str, dimension: int) -> int:
    digest = blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dimension


@dataclass(frozen=True)
class IdfStats:
    """Document frequencies used for smoothed idf weighting."""

    doc_count: int = 0
    df: Mapping[str, int] = field(default_factory=dict)

    def idf(self, token: str) -> float:
        return math.log((1 + self.doc_count) / (1 + self.df.get(token, 0))) + 1.0


EMPTY_IDF = IdfStats()


def embed(text: str, idf: IdfStats = EMPTY_IDF, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Embed text as a unit-norm hashed tf-idf vector; empty text maps to zeros."""
    vector = np.zeros(dimension, dtype=np.float64)
    counts = Counter(tokenize(text))
    if not counts:
        return vector
    for token, tf in counts.items():
        vector[_token_slot(token, dimension)] += tf * idf.idf(token)
    norm = float(np.linalg.norm(vector))
    if norm > 0.0:
        vector /= norm
    return vector


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine between two embeddings; zero vectors score 0 against anything."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@dataclass
class IndexEntry:
    id: str
    text: str
    bucket: Bucket
    label: StanceLabel | None
    vector: np.ndarray


@dataclass
class VectorStore:
    dimension: int
    idf: IdfStats
    entries: list[IndexEntry]
    manifest: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def matrix(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.vstack([e.vector for e in self.entries])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "doc_count": self.idf.doc_count,
            "df": {t: self.idf.df[t] for t in sorted(self.idf.df)},
            "manifest": self.manifest,
            "entries": [
                {
                    "id": e.id,
                    "text": e.text,
                    "bucket": e.bucket.value,
                    "label": e.label.to_dict() if e.label else None,
                    "vector": [float(x) for x in e.vector],
                }
                for e in self.entries
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read store file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed store file {path} at line {exc.lineno}") from exc
        entries = [
            IndexEntry(
                id=e["id"],
                text=e["text"],
                bucket=Bucket(e["bucket"]),
                label=StanceLabel.from_dict(e["label"]) if e.get("label") else None,
                vector=np.asarray(e["vector"], dtype=np.float64),
            )
            for e in raw["entries"]
        ]
        return cls(
            dimension=int(raw["dimension"]),
            idf=IdfStats(doc_count=int(raw["doc_count"]), df=dict(raw["df"])),
            entries=entries,
            manifest=raw.get("manifest", {}),
        )


def empty_store(dimension: int = DEFAULT_DIMENSION) -> VectorStore:
    return VectorStore(dimension=dimension, idf=EMPTY_IDF, entries=[], manifest={"kind": "empty"})


def _finalize(
    raw_entries: list[tuple[str, str, Bucket, StanceLabel | None]],
    dimension: int,
    manifest: dict,
) -> VectorStore:
    seen: set[str] = set()
    for entry_id, _, _, _ in raw_entries:
        if entry_id in seen:
            raise DataError(f"duplicate index entry id {entry_id!r}")
        seen.add(entry_id)
    df: Counter[str] = Counter()
    for _, text, _, _ in raw_entries:
        df.update(set(tokenize(text)))
    idf = IdfStats(doc_count=len(raw_entries), df=dict(df))
    entries = [
        IndexEntry(id=i, text=t, bucket=b, label=l, vector=embed(t, idf, dimension))
        for i, t, b, l in raw_entries
    ]
    entries.sort(key=lambda e: e.id)
    return VectorStore(dimension=dimension, idf=idf, entries=entries, manifest=manifest)


def example_entry_id(sample: AnnotatedSample) -> str:
    return f"{sample.post_id}:{sample.annotator_id}"


def index_examples(
    pairs: Sequence[tuple[AnnotatedSample, Post]],
    dimension: int = DEFAULT_DIMENSION,
) -> tuple[VectorStore, list[str]]:
    """Index annotated posts into Anti/Pro example buckets.

    Neutral samples cannot be bucketed and are skipped; their post ids are
    returned alongside the store.
    """
    raw: list[tuple[str, str, Bucket, StanceLabel | None]] = []
    skipped: list[str] = []
    for sample, post in pairs:
        if sample.post_id != post.id:
            raise DataError(f"annotation {sample.post_id!r} paired with post {post.id!r}")
        if sample.label.primary == "Neutral":
            skipped.append(sample.post_id)
            continue
        bucket = Bucket.ANTI_EXAMPLE if sample.label.primary == "AntiTrans" else Bucket.PRO_EXAMPLE
        raw.append((example_entry_id(sample), classification_text(post), bucket, sample.label))
    manifest = {"kind": "examples", "entries": len(raw), "skipped_neutral": len(skipped)}
    return _finalize(raw, dimension, manifest), skipped


@dataclass(frozen=True)
class CodebookEntry:
    id: str
    side: str
    sublabel: str | None
    definition: str


def load_codebook(path: str | Path) -> list[CodebookEntry]:
    """Parse a codebook file: a JSON list of labeled definition paragraphs."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read codebook {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed codebook {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise DataError("codebook must be a JSON list of definitions")
    entries: list[CodebookEntry] = []
    seen: set[str] = set()
    for item in raw:
        entry_id = str(item.get("id", ""))
        side = str(item.get("side", ""))
        sublabel = item.get("sublabel")
        definition = str(item.get("definition", ""))
        if not entry_id:
            raise DataError("codebook entry missing id")
        if entry_id in seen:
            raise DataError(f"duplicate codebook definition id {entry_id!r}")
        seen.add(entry_id)
        if side not in ("pro", "anti", "neutral"):
            raise DataError(f"codebook entry {entry_id!r} has unknown side {side!r}")
        if sublabel is not None:
            allowed = PRO_SUBLABELS if side == "pro" else ANTI_SUBLABELS if side == "anti" else frozenset()
            if sublabel not in allowed:
                raise DataError(
                    f"codebook entry {entry_id!r}: sublabel {sublabel!r} not valid for side {side!r}"
                )
        if not definition:
            raise DataError(f"codebook entry {entry_id!r} has an empty definition")
        entries.append(CodebookEntry(id=entry_id, side=side, sublabel=sublabel, definition=definition))
    return entries


_SIDE_PRIMARY = {"pro": "ProTrans", "anti": "AntiTrans", "neutral": "Neutral"}


def index_taxonomy(
    codebook: Sequence[CodebookEntry], dimension: int = DEFAULT_DIMENSION
) -> VectorStore:
    """Index each codebook definition as one taxonomy entry."""
    raw = []
    for entry in codebook:
        sublabels = frozenset({entry.sublabel}) if entry.sublabel else frozenset()
        label = StanceLabel(primary=_SIDE_PRIMARY[entry.side], sublabels=sublabels)
        raw.append((entry.id, entry.definition, Bucket.TAXONOMY_DEF, label))
    manifest = {"kind": "taxonomy", "entries": len(raw)}
    return _finalize(raw, dimension, manifest)


def combine_stores(*stores: VectorStore) -> VectorStore:
    """Compose stores into one, recomputing idf and embeddings over the union."""
    dimensions = {s.dimension for s in stores}
    if len(dimensions) > 1:
        raise ConfigError(f"cannot combine stores with differing dimensions {sorted(dimensions)}")
    dimension = dimensions.pop() if dimensions else DEFAULT_DIMENSION
    raw = [(e.id, e.text, e.bucket, e.label) for s in stores for e in s.entries]
    manifest = {"kind": "combined", "parts": [s.manifest.get("kind", "?") for s in stores]}
    return _finalize(raw, dimension, manifest)


@dataclass(frozen=True)
class RetrievalResult:
    entries: tuple[tuple[str, float], ...]
    query_id: str | None = None

    def ids(self) -> list[str]:
        return [entry_id for entry_id, _ in self.entries]


def retrieve(
    store: VectorStore,
    query: str,
    k: int = DEFAULT_TOP_K,
    threshold: float = DEFAULT_THRESHOLD,
    query_id: str | None = None,
) -> RetrievalResult:
    """Rank store entries by cosine to the query; keep top k at/above threshold.

    Ties are broken by entry id ascending, so results are a deterministic
    function of (store, query, k, threshold).
    """
    if k < 0:
        raise ConfigError("k must be >= 0")
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError("threshold must be within [0, 1]")
    if k == 0 or not store.entries:
        return RetrievalResult(entries=(), query_id=query_id)
    q = embed(query, store.idf, store.dimension)
    scores = store.matrix() @ q
    ranked = sorted(
        (
            (entry.id, min(max(float(score), 0.0), 1.0))
            for entry, score in zip(store.entries, scores)
        ),
        key=lambda pair: (-pair[1], pair[0]),
    )
    kept = tuple(pair for pair in ranked[:k] if pair[1] >= threshold)
    return RetrievalResult(entries=kept, query_id=query_id)


def entries_by_id(store: VectorStore, ids: Iterable[str]) -> list[IndexEntry]:
    lookup = {e.id: e for e in store.entries}
    return [lookup[i] for i in ids]

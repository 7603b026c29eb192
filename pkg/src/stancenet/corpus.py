"""Canonical data model plus ingestion, validation, and sampling of post corpora.

The on-disk corpus format is JSON-Lines, one post object per line with fields
id, author, description, transcript, created_at, like_count, hashtags,
interactions. Hashtags are stored lowercased without a '#' prefix. When the
hashtags or interactions field is absent from a line it is derived from the
description text.
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, DataError

PRIMARY_CLASSES = ("AntiTrans", "ProTrans", "Neutral")
ANTI_SUBLABELS = frozenset({"TM", "ATM", "XOR", "TERF", "RW", "INTRA"})
PRO_SUBLABELS = frozenset({"CEL", "REF", "CON"})
SUBLABEL_ORDER = ("TM", "ATM", "XOR", "TERF", "RW", "INTRA", "CEL", "REF", "CON")

INTERACTION_KINDS = ("Tag", "Reply", "Stitch", "Duet")


class HashtagBucket(str, Enum):
    PRO_ONLY = "ProOnly"
    ANTI_ONLY = "AntiOnly"
    BOTH = "Both"
    NEITHER = "Neither"


@dataclass(frozen=True)
class Interaction:
    """A directed reference from a post's author to another account."""

    kind: str
    target: str
    resolved: bool = True

    def __post_init__(self) -> None:
        if self.kind not in INTERACTION_KINDS:
            raise DataError(f"unknown interaction kind {self.kind!r}")
        if self.resolved and not self.target:
            raise DataError("resolved interaction requires a nonempty target")


@dataclass(frozen=True)
class StanceLabel:
    """Primary stance class plus a side-consistent set of sublabels."""

    primary: str
    sublabels: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.primary not in PRIMARY_CLASSES:
            raise DataError(f"unknown primary label {self.primary!r}")
        subs = frozenset(self.sublabels)
        object.__setattr__(self, "sublabels", subs)
        if self.primary == "Neutral" and subs:
            raise DataError("Neutral labels cannot carry sublabels")
        if self.primary == "AntiTrans" and not subs <= ANTI_SUBLABELS:
            raise DataError(
                f"AntiTrans sublabels must be within {sorted(ANTI_SUBLABELS)}, got {sorted(subs)}"
            )
        if self.primary == "ProTrans" and not subs <= PRO_SUBLABELS:
            raise DataError(
                f"ProTrans sublabels must be within {sorted(PRO_SUBLABELS)}, got {sorted(subs)}"
            )

    def to_dict(self) -> dict:
        return {"primary": self.primary, "sublabels": sorted(self.sublabels)}

    @classmethod
    def from_dict(cls, raw: Mapping) -> "StanceLabel":
        return cls(primary=raw["primary"], sublabels=frozenset(raw.get("sublabels", ())))


@dataclass(frozen=True)
class Post:
    id: str
    author: str
    description: str = ""
    transcript: str = ""
    created_at: int = 0
    like_count: int = 0
    hashtags: frozenset[str] = frozenset()
    interactions: tuple[Interaction, ...] = ()


@dataclass(frozen=True)
class AnnotatedSample:
    post_id: str
    annotator_id: str
    label: StanceLabel
    annotated_at: int = 0


@dataclass
class CorpusLoad:
    """Result of ingesting a corpus file: validated posts plus line-level issues."""

    posts: list[Post] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)
    duplicates: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class AnnotationLoad:
    samples: list[AnnotatedSample] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)
    superseded: list[tuple[int, str]] = field(default_factory=list)


def normalize_hashtag(raw: str) -> str:
    """Lowercase a tag and strip a leading '#'. Raises on embedded whitespace."""
    tag = raw[1:] if raw.startswith("#") else raw
    tag = tag.lower()
    if any(ch.isspace() for ch in tag):
        raise DataError(f"hashtag {raw!r} contains whitespace")
    return tag


def _post_from_dict(raw: Mapping) -> Post:
    # deferred import: textparse depends on Interaction defined here
    from . import textparse

    if not isinstance(raw, Mapping):
        raise DataError("post line is not a JSON object")
    post_id = raw.get("id")
    author = raw.get("author")
    if not post_id or not isinstance(post_id, str):
        raise DataError("missing or empty id")
    if not author or not isinstance(author, str):
        raise DataError("missing or empty author")
    description = raw.get("description", "")
    transcript = raw.get("transcript", "")
    if not isinstance(description, str) or not isinstance(transcript, str):
        raise DataError("description and transcript must be strings")
    created_at = raw.get("created_at", 0)
    like_count = raw.get("like_count", 0)
    if not isinstance(created_at, int) or isinstance(created_at, bool):
        raise DataError("created_at must be an integer")
    if not isinstance(like_count, int) or isinstance(like_count, bool) or like_count < 0:
        raise DataError("like_count must be a nonnegative integer")

    if "hashtags" in raw:
        tags_raw = raw["hashtags"]
        if not isinstance(tags_raw, (list, tuple)):
            raise DataError("hashtags must be a list")
        tags = frozenset(normalize_hashtag(str(t)) for t in tags_raw if str(t).strip("#"))
    else:
        tags = frozenset(textparse.extract_hashtags(description))

    if "interactions" in raw:
        inter_raw = raw["interactions"]
        if not isinstance(inter_raw, (list, tuple)):
            raise DataError("interactions must be a list")
        interactions = tuple(
            Interaction(
                kind=item.get("kind", ""),
                target=str(item.get("target", "")).lower(),
                resolved=bool(item.get("resolved", True)),
            )
            for item in inter_raw
        )
    else:
        interactions = tuple(textparse.detect_interactions(description))

    return Post(
        id=post_id,
        author=author.lower(),
        description=description,
        transcript=transcript,
        created_at=created_at,
        like_count=like_count,
        hashtags=tags,
        interactions=interactions,
    )


def post_to_dict(post: Post) -> dict:
    return {
        "id": post.id,
        "author": post.author,
        "description": post.description,
        "transcript": post.transcript,
        "created_at": post.created_at,
        "like_count": post.like_count,
        "hashtags": sorted(post.hashtags),
        "interactions": [
            {"kind": i.kind, "target": i.target, "resolved": i.resolved}
            for i in post.interactions
        ],
    }


def load_corpus(path: str | Path) -> CorpusLoad:
    """Ingest a JSON-Lines corpus file.

    Malformed lines are recorded and skipped; duplicate post ids keep the
    first occurrence. Blank lines are ignored.
    """
    result = CorpusLoad()
    seen: set[str] = set()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            post = _post_from_dict(raw)
        except (json.JSONDecodeError, DataError) as exc:
            result.rejected.append((lineno, str(exc)))
            continue
        if post.id in seen:
            result.duplicates.append((lineno, post.id))
            continue
        seen.add(post.id)
        result.posts.append(post)
    return result


def save_corpus(posts: Iterable[Post], path: str | Path) -> None:
    Path(path).write_text(corpus_to_jsonl(posts), encoding="utf-8")


def corpus_to_jsonl(posts: Iterable[Post]) -> str:
    lines = [json.dumps(post_to_dict(p), ensure_ascii=False) for p in posts]
    return "".join(line + "\n" for line in lines)


def load_annotations(path: str | Path, known_ids: set[str] | None = None) -> AnnotationLoad:
    """Load AnnotatedSample records from JSON-Lines.

    A repeated (post_id, annotator_id) pair keeps the last record, mirroring
    resubmission semantics; superseded lines are reported.
    """
    result = AnnotationLoad()
    latest: dict[tuple[str, str], AnnotatedSample] = {}
    order: list[tuple[str, str]] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read annotation file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            sample = AnnotatedSample(
                post_id=str(raw["post_id"]),
                annotator_id=str(raw["annotator_id"]),
                label=StanceLabel.from_dict(raw["label"]),
                annotated_at=int(raw.get("annotated_at", 0)),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, DataError) as exc:
            result.rejected.append((lineno, str(exc)))
            continue
        if known_ids is not None and sample.post_id not in known_ids:
            result.rejected.append((lineno, f"unknown post id {sample.post_id!r}"))
            continue
        key = (sample.post_id, sample.annotator_id)
        if key in latest:
            result.superseded.append((lineno, sample.post_id))
        else:
            order.append(key)
        latest[key] = sample
    result.samples = [latest[key] for key in order]
    return result


def save_annotations(samples: Iterable[AnnotatedSample], path: str | Path) -> None:
    Path(path).write_text(annotations_to_jsonl(samples), encoding="utf-8")


def annotations_to_jsonl(samples: Iterable[AnnotatedSample]) -> str:
    lines = []
    for s in samples:
        lines.append(
            json.dumps(
                {
                    "post_id": s.post_id,
                    "annotator_id": s.annotator_id,
                    "label": s.label.to_dict(),
                    "annotated_at": s.annotated_at,
                },
                ensure_ascii=False,
            )
        )
    return "".join(line + "\n" for line in lines)


def load_hashtag_list(path: str | Path) -> frozenset[str]:
    """Read a hashtag list file: one tag per line, '#' optional, ';' comments."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read hashtag list {path}: {exc}") from exc
    tags = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        tags.add(normalize_hashtag(line))
    return frozenset(tags)


def bucket_of(post: Post, pro: frozenset[str], anti: frozenset[str]) -> HashtagBucket:
    """Classify a post by which configured hashtag lists its tags intersect."""
    overlap = set(pro) & set(anti)
    if overlap:
        raise ConfigError(f"pro and anti hashtag lists overlap: {sorted(overlap)}")
    has_pro = bool(post.hashtags & pro)
    has_anti = bool(post.hashtags & anti)
    if has_pro and has_anti:
        return HashtagBucket.BOTH
    if has_pro:
        return HashtagBucket.PRO_ONLY
    if has_anti:
        return HashtagBucket.ANTI_ONLY
    return HashtagBucket.NEITHER


def _draw_key(seed: int, bucket: str, post_id: str) -> str:
    return hashlib.sha256(f"{seed}:{bucket}:{post_id}".encode("utf-8")).hexdigest()


def stratified_sample(
    corpus: Sequence[Post],
    per_bucket: int,
    buckets: Sequence[HashtagBucket],
    seed: int,
    *,
    pro: frozenset[str],
    anti: frozenset[str],
) -> list[Post]:
    """Draw per_bucket posts from each requested bucket, reproducibly from seed.

    The draw depends only on the set of post ids (not corpus order): candidates
    are ranked by a seeded hash of their id.
    """
    if per_bucket < 0:
        raise ConfigError("per_bucket must be nonnegative")
    by_bucket: dict[HashtagBucket, list[Post]] = defaultdict(list)
    for post in corpus:
        by_bucket[bucket_of(post, pro, anti)].append(post)
    selected: list[Post] = []
    for bucket in buckets:
        candidates = by_bucket.get(bucket, [])
        if len(candidates) < per_bucket:
            raise DataError(
                f"bucket {bucket.value} has {len(candidates)} posts, "
                f"cannot sample {per_bucket}"
            )
        ranked = sorted(candidates, key=lambda p: _draw_key(seed, bucket.value, p.id))
        chosen = sorted(ranked[:per_bucket], key=lambda p: p.id)
        selected.extend(chosen)
    return selected


def classification_text(post: Post) -> str:
    """Text representation a classifier sees: transcript, then description.

    The two parts are joined by a visible '---' separator line; an empty part
    is elided entirely.
    """
    if post.transcript and post.description:
        return f"{post.transcript}\n---\n{post.description}"
    return post.transcript or post.description

"""Human annotation sessions: task assignment, label log, live agreement.

A session assigns every sample to the primary annotator and a seeded overlap
subset to the second annotator, so agreement can be measured on doubly-labeled
samples. State is an append-only JSON-Lines event log; replaying the log
reconstructs the exact session state, which makes the service crash-safe by
construction.

Annotator identities are opaque ids on purpose: no demographic or identity
metadata is ever stored.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import AnnotatedSample, Post, StanceLabel, classification_text
from .errors import ConfigError, DataError, NotFoundError
from . import evalkit


@dataclass(frozen=True)
class AnnotationTask:
    post_id: str
    display_text: str
    codebook_version: str
    annotator: str


@dataclass
class LabelEvent:
    event: str  # "label" | "skip"
    annotator: str
    post_id: str
    label: StanceLabel | None = None
    reason: str | None = None
    at: int = 0

    def to_dict(self) -> dict:
        out = {
            "event": self.event,
            "annotator": self.annotator,
            "post_id": self.post_id,
            "at": self.at,
        }
        if self.label is not None:
            out["label"] = self.label.to_dict()
        if self.reason is not None:
            out["reason"] = self.reason
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "LabelEvent":
        return cls(
            event=raw["event"],
            annotator=raw["annotator"],
            post_id=raw["post_id"],
            label=StanceLabel.from_dict(raw["label"]) if "label" in raw else None,
            reason=raw.get("reason"),
            at=int(raw.get("at", 0)),
        )


def _order_key(seed: int, annotator: str, post_id: str) -> str:
    return hashlib.sha256(f"{seed}:{annotator}:{post_id}".encode("utf-8")).hexdigest()


class AnnotationSession:
    """In-memory session state with an append-only event log on disk.

    All mutation goes through a lock; concurrent HTTP handlers see the last
    acknowledged state.
    """

    def __init__(
        self,
        posts: Sequence[Post],
        annotators: Sequence[str],
        overlap_size: int,
        seed: int,
        log_path: str | Path | None = None,
        codebook_version: str = "v1",
    ) -> None:
        if len(annotators) != 2:
            raise ConfigError("annotation sessions take exactly two annotators")
        if len(set(annotators)) != 2:
            raise ConfigError("annotator ids must be distinct")
        if overlap_size > len(posts):
            raise ConfigError(
                f"overlap size {overlap_size} exceeds sample count {len(posts)}"
            )
        self.posts = {p.id: p for p in posts}
        if len(self.posts) != len(posts):
            raise DataError("sample set contains duplicate post ids")
        self.annotators = tuple(annotators)
        self.seed = seed
        self.codebook_version = codebook_version
        self.log_path = Path(log_path) if log_path else None
        self._lock = threading.Lock()

        primary, second = self.annotators
        all_ids = sorted(self.posts)
        # seeded overlap subset, order-independent of input sequence
        by_draw = sorted(all_ids, key=lambda pid: _order_key(seed, "overlap", pid))
        self.overlap_ids = frozenset(by_draw[:overlap_size])
        self.queues: dict[str, list[str]] = {
            primary: sorted(all_ids, key=lambda pid: _order_key(seed, primary, pid)),
            second: sorted(self.overlap_ids, key=lambda pid: _order_key(seed, second, pid)),
        }
        # latest state per (annotator, post): ("label", StanceLabel) or ("skip", reason)
        self._state: dict[tuple[str, str], tuple[str, object]] = {}
        self.history: list[LabelEvent] = []
        if self.log_path and self.log_path.exists():
            self._replay()

    # -- persistence ---------------------------------------------------------

    def _replay(self) -> None:
        for lineno, line in enumerate(
            self.log_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                event = LabelEvent.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, DataError) as exc:
                raise DataError(f"corrupt annotation log {self.log_path}:{lineno}: {exc}") from exc
            self._apply(event)

    def _apply(self, event: LabelEvent) -> None:
        key = (event.annotator, event.post_id)
        if event.event == "label":
            self._state[key] = ("label", event.label)
        elif event.event == "skip":
            self._state[key] = ("skip", event.reason or "")
        else:
            raise DataError(f"unknown annotation event {event.event!r}")
        self.history.append(event)

    def _record(self, event: LabelEvent) -> None:
        self._apply(event)
        if self.log_path:
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")

    # -- operations ----------------------------------------------------------

    def _require_annotator(self, annotator: str) -> None:
        if annotator not in self.queues:
            raise NotFoundError(f"unknown annotator {annotator!r}")

    def next_task(self, annotator: str) -> AnnotationTask | None:
        """First still-pending task in the annotator's seeded order, or None
        when done. Re-requesting without submitting returns the same task."""
        with self._lock:
            self._require_annotator(annotator)
            for post_id in self.queues[annotator]:
                if (annotator, post_id) not in self._state:
                    post = self.posts[post_id]
                    return AnnotationTask(
                        post_id=post_id,
                        display_text=self._display_text(post),
                        codebook_version=self.codebook_version,
                        annotator=annotator,
                    )
            return None

    @staticmethod
    def _display_text(post: Post) -> str:
        text = classification_text(post)
        if post.hashtags:
            tags = " ".join(f"#{t}" for t in sorted(post.hashtags))
            return f"{text}\n\n{tags}" if text else tags
        return text

    def submit_label(self, annotator: str, post_id: str, label: StanceLabel) -> None:
        """Persist a label. Resubmission overwrites; full history is retained."""
        with self._lock:
            self._require_annotator(annotator)
            if post_id not in self.posts:
                raise NotFoundError(f"unknown post {post_id!r}")
            if post_id not in self.queues[annotator]:
                raise DataError(f"post {post_id!r} is not assigned to annotator {annotator!r}")
            self._record(
                LabelEvent(
                    event="label",
                    annotator=annotator,
                    post_id=post_id,
                    label=label,
                    at=int(time.time()),
                )
            )

    def skip(self, annotator: str, post_id: str, reason: str) -> None:
        with self._lock:
            self._require_annotator(annotator)
            if post_id not in self.posts:
                raise NotFoundError(f"unknown post {post_id!r}")
            if post_id not in self.queues[annotator]:
                raise DataError(f"post {post_id!r} is not assigned to annotator {annotator!r}")
            if not reason.strip():
                raise DataError("skip requires a reason")
            self._record(
                LabelEvent(
                    event="skip",
                    annotator=annotator,
                    post_id=post_id,
                    reason=reason,
                    at=int(time.time()),
                )
            )

    def labels_of(self, annotator: str) -> dict[str, StanceLabel]:
        self._require_annotator(annotator)
        out = {}
        for (who, post_id), (kind, value) in self._state.items():
            if who == annotator and kind == "label":
                out[post_id] = value  # type: ignore[assignment]
        return out

    def agreement(self) -> evalkit.AgreementReport:
        """Cohen's kappa over overlap samples labeled by both annotators so far.

        Skipped samples are excluded from the computation.
        """
        with self._lock:
            primary, second = self.annotators
            a_labels = self.labels_of(primary)
            b_labels = self.labels_of(second)
            both = sorted(
                pid for pid in self.overlap_ids if pid in a_labels and pid in b_labels
            )
            if not both:
                return evalkit.AgreementReport(
                    observed=None,
                    expected=None,
                    kappa=None,
                    n=0,
                    note="no doubly-labeled overlap samples yet",
                )
            a = {pid: a_labels[pid].primary for pid in both}
            b = {pid: b_labels[pid].primary for pid in both}
            return evalkit.cohen_kappa(a, b)

    def progress(self) -> dict:
        with self._lock:
            out: dict = {"total_samples": len(self.posts), "overlap_size": len(self.overlap_ids)}
            per = {}
            for annotator in self.annotators:
                assigned = self.queues[annotator]
                labeled = sum(
                    1
                    for pid in assigned
                    if self._state.get((annotator, pid), ("", ""))[0] == "label"
                )
                skipped = sum(
                    1
                    for pid in assigned
                    if self._state.get((annotator, pid), ("", ""))[0] == "skip"
                )
                per[annotator] = {
                    "assigned": len(assigned),
                    "labeled": labeled,
                    "skipped": skipped,
                    "pending": len(assigned) - labeled - skipped,
                }
            out["annotators"] = per
            return out

    def export_examples(self) -> list[AnnotatedSample]:
        """Finalized non-Neutral labels in the shape the example indexer consumes."""
        with self._lock:
            samples = []
            for annotator in self.annotators:
                for post_id in self.queues[annotator]:
                    state = self._state.get((annotator, post_id))
                    if not state or state[0] != "label":
                        continue
                    label: StanceLabel = state[1]  # type: ignore[assignment]
                    if label.primary == "Neutral":
                        continue
                    at = max(
                        (
                            e.at
                            for e in self.history
                            if e.event == "label"
                            and e.annotator == annotator
                            and e.post_id == post_id
                        ),
                        default=0,
                    )
                    samples.append(
                        AnnotatedSample(
                            post_id=post_id,
                            annotator_id=annotator,
                            label=label,
                            annotated_at=at,
                        )
                    )
            samples.sort(key=lambda s: (s.post_id, s.annotator_id))
            return samples

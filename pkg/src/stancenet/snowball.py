"""Offline hashtag snowball expansion over a collected corpus.

Starting from a seed tag set, each round tallies tags co-occurring with the
current set and admits those above a count threshold, optionally intersected
with an allowlist (the human relevance-selection step expressed as data) and
minus a denylist. A context filter drops posts whose ambiguous tags co-occur
with tags marking an unrelated context.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import Post
from .errors import ConfigError


@dataclass
class ExpansionRound:
    number: int
    added: dict[str, int]
    source_tags: list[str]


@dataclass
class ExpansionReport:
    seeds: list[str]
    rounds: list[ExpansionRound] = field(default_factory=list)
    final_set: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "seeds": sorted(self.seeds),
            "rounds": [
                {
                    "round": r.number,
                    "added": {t: r.added[t] for t in sorted(r.added)},
                    "source_tags": r.source_tags,
                }
                for r in self.rounds
            ],
            "final_set": sorted(self.final_set),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"


def cooccurring(
    corpus: Sequence[Post], seeds: frozenset[str] | set[str], min_count: int
) -> dict[str, int]:
    """Tally non-seed tags appearing in posts that carry at least one seed tag."""
    if min_count < 1:
        raise ConfigError("min_count must be >= 1")
    seed_set = frozenset(seeds)
    tally: Counter[str] = Counter()
    for post in corpus:
        if post.hashtags & seed_set:
            for tag in post.hashtags - seed_set:
                tally[tag] += 1
    return {tag: n for tag, n in tally.items() if n >= min_count}


def expand(
    corpus: Sequence[Post],
    seeds: frozenset[str] | set[str],
    rounds: int = 1,
    min_count: int = 2,
    allowlist: frozenset[str] | None = None,
    denylist: frozenset[str] | set[str] = frozenset(),
) -> ExpansionReport:
    """Iterate co-occurrence rounds from the seed set, stopping early when a
    round adds nothing."""
    if rounds < 0:
        raise ConfigError("rounds must be >= 0")
    current = set(seeds)
    report = ExpansionReport(seeds=sorted(seeds), final_set=set(current))
    for number in range(1, rounds + 1):
        counts = cooccurring(corpus, current, min_count)
        candidates = {
            tag: n
            for tag, n in counts.items()
            if tag not in denylist and (allowlist is None or tag in allowlist)
        }
        added = set(candidates) - current
        if not added:
            break
        report.rounds.append(
            ExpansionRound(
                number=number,
                added={tag: candidates[tag] for tag in sorted(added)},
                source_tags=sorted(current),
            )
        )
        current |= added
        report.final_set = set(current)
    return report


def context_filter(
    posts: Sequence[Post], ambiguous: Mapping[str, frozenset[str] | set[str]]
) -> list[Post]:
    """Drop posts where an ambiguous tag co-occurs with any of its deny co-tags."""
    kept = []
    for post in posts:
        drop = any(
            tag in post.hashtags and post.hashtags & frozenset(deny)
            for tag, deny in ambiguous.items()
        )
        if not drop:
            kept.append(post)
    return kept

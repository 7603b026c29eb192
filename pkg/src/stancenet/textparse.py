"""Extract mentions, hashtags, and interaction kinds from post descriptions.

All functions here are total: no input text raises. A mention is '@' followed
by a maximal run of username characters [a-z0-9_.] (matched case-insensitively
and lowercased). An '@' with an empty run is an unresolved mention: the
platform rendered a display name we cannot map back to a unique username.

Interaction markers are the platform's auto-inserted English phrases. They can
be overridden per run; each marker regex must end at the '@' that introduces
the referenced username.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .corpus import Interaction

_MENTION_RE = re.compile(r"@([A-Za-z0-9_.]*)")
_HASHTAG_RE = re.compile(r"#(\w+)")

DEFAULT_MARKERS: dict[str, str] = {
    "Reply": r"^\s*replying\s+to\s+@",
    "Stitch": r"#stitch\s+with\s+@",
    "Duet": r"#duet\s+with\s+@",
}


@dataclass(frozen=True)
class ParsedDescription:
    mentions: tuple[str, ...]
    hashtags: tuple[str, ...]
    interactions: tuple[Interaction, ...]
    unresolved_mentions: int


def extract_mentions(description: str) -> tuple[list[str], int]:
    """Return mention occurrences in document order plus the unresolved count."""
    mentions: list[str] = []
    unresolved = 0
    for match in _MENTION_RE.finditer(description):
        username = match.group(1).lower()
        if username:
            mentions.append(username)
        else:
            unresolved += 1
    return mentions, unresolved


def extract_hashtags(description: str) -> list[str]:
    """Return hashtag occurrences in document order, lowercased, '#' stripped."""
    return [m.group(1).lower() for m in _HASHTAG_RE.finditer(description)]


def detect_interactions(
    description: str, markers: Mapping[str, str] | None = None
) -> list[Interaction]:
    """Classify each mention occurrence as Reply, Stitch, Duet, or Tag.

    A mention consumed by a marker never also produces a Tag. Unresolved
    mentions yield interactions with an empty target and resolved=False.
    """
    grammar = dict(DEFAULT_MARKERS)
    if markers:
        grammar.update(markers)
    kind_by_at: dict[int, str] = {}
    for kind, pattern in grammar.items():
        for match in re.finditer(pattern, description, re.IGNORECASE):
            kind_by_at.setdefault(match.end() - 1, kind)
    interactions: list[Interaction] = []
    for match in _MENTION_RE.finditer(description):
        kind = kind_by_at.get(match.start(), "Tag")
        username = match.group(1).lower()
        if username:
            interactions.append(Interaction(kind=kind, target=username, resolved=True))
        else:
            interactions.append(Interaction(kind=kind, target="", resolved=False))
    return interactions


def parse_description(
    description: str, markers: Mapping[str, str] | None = None
) -> ParsedDescription:
    mentions, unresolved = extract_mentions(description)
    return ParsedDescription(
        mentions=tuple(mentions),
        hashtags=tuple(extract_hashtags(description)),
        interactions=tuple(detect_interactions(description, markers)),
        unresolved_mentions=unresolved,
    )

from __future__ import annotations

from pathlib import Path

import pytest

from stancenet.corpus import Interaction, Post

FIXTURES = Path(__file__).parent / "fixtures"


def make_post(
    post_id: str = "p1",
    author: str = "alice",
    description: str = "",
    transcript: str = "",
    hashtags: set[str] | None = None,
    interactions: tuple[Interaction, ...] = (),
    like_count: int = 0,
) -> Post:
    return Post(
        id=post_id,
        author=author,
        description=description,
        transcript=transcript,
        created_at=0,
        like_count=like_count,
        hashtags=frozenset(hashtags or set()),
        interactions=interactions,
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES

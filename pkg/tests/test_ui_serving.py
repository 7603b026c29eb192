"""Static serving of the built annotation UI (skipped when frontend/dist is
absent; the rest of the suite never requires the UI to be built)."""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from stancenet.service import create_app

DIST = Path(__file__).parent.parent / "frontend" / "dist"


@pytest.mark.skipif(not DIST.is_dir(), reason="frontend bundle not built")
def test_ui_bundle_served_at_root():
    client = TestClient(create_app(ui_dir=DIST))
    page = client.get("/")
    assert page.status_code == 200
    assert "text/html" in page.headers["content-type"]
    assert "app" in page.text
    # the bundle's hashed asset paths resolve through the same mount
    asset = next((DIST / "assets").glob("*.js"))
    response = client.get(f"/assets/{asset.name}")
    assert response.status_code == 200


def test_root_without_bundle_still_answers(tmp_path):
    client = TestClient(create_app(ui_dir=tmp_path / "missing"))
    page = client.get("/")
    assert page.status_code == 200
    assert "no UI bundle" in page.text

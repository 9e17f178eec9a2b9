from __future__ import annotations

import pytest

from packages.shared.models import canned


@pytest.fixture(autouse=True)
def app_home(tmp_path, monkeypatch):
    """Keep logs and config out of the real application directory."""
    home = tmp_path / "home"
    monkeypatch.setenv("TWJSCC_HOME", str(home))
    monkeypatch.delenv("TWJSCC_THREADS", raising=False)
    return home


@pytest.fixture
def example1():
    return canned("example1")


@pytest.fixture
def multiplying():
    return canned("multiplying")


@pytest.fixture
def zchannel():
    return canned("zchannel")


@pytest.fixture
def dsbs025():
    return canned("dsbs-0.25")

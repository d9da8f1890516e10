from pathlib import Path

import pytest

testing = pytest.importorskip("streamlit.testing.v1")

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def app(monkeypatch):
    # sample data paths are relative to the repo root
    monkeypatch.chdir(ROOT)
    return testing.AppTest.from_file(str(ROOT / "streamlit_app.py"), default_timeout=60)


def test_app_renders_all_tabs(app):
    app.run()
    assert not app.exception
    assert app.title[0].value.startswith("🔬")
    assert len(app.tabs) == 7


def test_invalid_dot_shows_warnings(app):
    app.run()
    d0 = next(w for w in app.sidebar.number_input if "D0" in w.label)
    d0.set_value(5.0).run()
    assert not app.exception
    assert app.sidebar.error
    assert app.warning

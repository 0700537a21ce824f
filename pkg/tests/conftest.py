from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # tests/ helpers (synth, rdf_oracle)

import synth
from authorkg.config import AppConfig, IngestConfig, load_config
from authorkg.pipeline import run_all
from authorkg.simgraph import SimilarityIndex


@pytest.fixture(scope="session")
def fixture_raws():
    return synth.make_fixture_raws()


@pytest.fixture(scope="session")
def fixture_pages_dir(tmp_path_factory, fixture_raws) -> Path:
    directory = tmp_path_factory.mktemp("fixture_pages")
    synth.write_fixture_pages(fixture_raws, directory)
    return directory


def seed_wikidata_cache(data_dir: Path) -> None:
    """Manual cache entries so the offline rdf stage resolves a few names."""
    cache = {
        "fixture institute": {
            "qid": "Q9000001", "retrieved_at": "2024-01-01T00:00:00Z", "source": "manual",
        },
        "battery research center": {
            "qid": "Q9000002", "retrieved_at": "2024-01-01T00:00:00Z", "source": "manual",
        },
        "anode": {
            "qid": "Q9000003", "retrieved_at": "2024-01-01T00:00:00Z", "source": "manual",
        },
    }
    path = data_dir / "export" / "wikidata_cache.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cache, indent=2), encoding="utf-8")


def fixture_config(data_dir: Path, pages_dir: Path) -> AppConfig:
    cfg = load_config(None)
    cfg.data_dir = str(data_dir)
    cfg.ingest = IngestConfig(fixture_dir=str(pages_dir))
    return cfg


@pytest.fixture(scope="session")
def pipeline_dir(tmp_path_factory, fixture_pages_dir) -> Path:
    """Data directory with the full offline pipeline already run."""
    data_dir = tmp_path_factory.mktemp("pipeline_data")
    seed_wikidata_cache(data_dir)
    config = fixture_config(data_dir, fixture_pages_dir)
    run_all(config)
    return data_dir


@pytest.fixture(scope="session")
def pipeline_config(pipeline_dir, fixture_pages_dir) -> AppConfig:
    return fixture_config(pipeline_dir, fixture_pages_dir)


@pytest.fixture(scope="session")
def index(pipeline_dir) -> SimilarityIndex:
    return SimilarityIndex.from_artifacts(pipeline_dir)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        status = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        sys.stdout.write(f"ACCEPTANCE {status}: {name}\n")
        sys.stdout.flush()

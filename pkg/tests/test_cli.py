from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import yaml

from authorkg.cli import main
from conftest import seed_wikidata_cache


def write_config(tmp_path: Path, pages_dir: Path, fmt: str = "yaml") -> Path:
    payload = {
        "data_dir": str(tmp_path / "data"),
        "ingest": {"fixture_dir": str(pages_dir)},
    }
    if fmt == "yaml":
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump(payload))
    else:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
    return path


def run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "authorkg.cli", *args],
        capture_output=True,
        text=True,
        timeout=120,
    )


def test_dependency_violation_exit_code(tmp_path, fixture_pages_dir):
    config = write_config(tmp_path, fixture_pages_dir)
    result = run_cli("--config", str(config), "vectorize")
    assert result.returncode == 2
    assert "aggregate" in result.stderr


def test_user_error_exit_code(tmp_path):
    missing = tmp_path / "nope.yaml"
    result = run_cli("--config", str(missing), "ingest")
    assert result.returncode == 1


def test_bad_config_key_exit_code(tmp_path, fixture_pages_dir):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"ingest": {"seed_concept": "oops"}}))
    result = run_cli("--config", str(path), "ingest")
    assert result.returncode == 1
    assert "seed_concept" in result.stderr


def test_single_stage_via_main(tmp_path, fixture_pages_dir):
    config = write_config(tmp_path, fixture_pages_dir, fmt="json")
    assert main(["--config", str(config), "ingest"]) == 0
    summary = json.loads((tmp_path / "data" / "corpus" / "harvest_summary.json").read_text())
    assert summary == {"fetched": 60, "rejected_pre1990": 6, "rejected_no_date": 4, "kept": 50}


def test_full_pipeline_subprocess_and_noop_rerun(tmp_path, fixture_pages_dir):
    config = write_config(tmp_path, fixture_pages_dir)
    seed_wikidata_cache(tmp_path / "data")
    first = run_cli("--config", str(config), "all")
    assert first.returncode == 0, first.stderr
    manifest_path = tmp_path / "data" / "manifest.json"
    before = manifest_path.stat().st_mtime_ns

    second = run_cli("--config", str(config), "all")
    assert second.returncode == 0
    assert manifest_path.stat().st_mtime_ns == before
    assert "up to date" in second.stderr or "none" in second.stderr


def test_data_dir_flag_overrides_config(tmp_path, fixture_pages_dir):
    config = write_config(tmp_path, fixture_pages_dir)
    override = tmp_path / "elsewhere"
    result = run_cli("--config", str(config), "--data-dir", str(override), "ingest")
    assert result.returncode == 0
    assert (override / "corpus" / "works.jsonl").exists()


def test_eval_subcommand(tmp_path, fixture_pages_dir):
    config = write_config(tmp_path, fixture_pages_dir)
    root = tmp_path / "data" / "eval"
    (root / "expected").mkdir(parents=True)
    (root / "expected" / "d1.txt").write_text("battery\n")
    pred = root / "predicted" / "hash_rank"
    pred.mkdir(parents=True)
    (pred / "d1.json").write_text(
        json.dumps({"keyphrases": [{"text": "battery", "confidence": 1.0}]})
    )
    result = run_cli("--config", str(config), "eval")
    assert result.returncode == 0, result.stderr
    assert (root / "comparison.tsv").exists()
    assert (root / "report_hash_rank.json").exists()


def test_help_lists_subcommands():
    result = run_cli("--help")
    assert result.returncode == 0
    for command in ("ingest", "extract", "eval", "aggregate", "vectorize", "rdf", "serve", "all"):
        assert command in result.stdout

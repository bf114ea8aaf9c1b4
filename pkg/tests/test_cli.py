"""CLI subcommands end-to-end (mock providers only)."""

import json

import pytest

from conftest import grid_city_geojson
from streetdipole.cli import main


@pytest.fixture
def graph_file(tmp_path):
    geojson = tmp_path / "city.geojson"
    geojson.write_bytes(grid_city_geojson(3, 3))
    out = tmp_path / "graph.json"
    assert main(["ingest", "--geojson", str(geojson), "--out", str(out)]) == 0
    return out


def test_unknown_subcommand_prints_usage_and_exits_1(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err.lower()


def test_no_subcommand_exits_1(capsys):
    assert main([]) == 1


def test_ingest_reports_counts(tmp_path, capsys):
    geojson = tmp_path / "city.geojson"
    geojson.write_bytes(grid_city_geojson(3, 3))
    out = tmp_path / "graph.json"
    assert main(["ingest", "--geojson", str(geojson), "--out", str(out)]) == 0
    assert "6 streets" in capsys.readouterr().out
    assert out.exists()


def test_ingest_missing_input_is_usage_error(tmp_path):
    assert main(["ingest", "--out", str(tmp_path / "g.json")]) == 1


def test_verbalize_to_stdout(graph_file, capsys):
    assert main(["verbalize", "--graph", str(graph_file)]) == 0
    out = capsys.readouterr().out
    assert "=== Querweg 1 ===" in out
    assert "begins at the intersection with" in out


def test_verbalize_to_file(graph_file, tmp_path):
    out = tmp_path / "area.txt"
    assert main(["verbalize", "--graph", str(graph_file), "--out", str(out)]) == 0
    assert "begins at the intersection with" in out.read_text(encoding="utf-8")


def test_enumerate_relations_prints_tiers(capsys):
    assert main(["enumerate-relations", "--budget", "1000000"]) == 0
    out = capsys.readouterr().out
    assert "# general14 (14)" in out
    assert "# coarse24 (24)" in out
    assert "# fine72 (72)" in out
    assert "found-not-printed: bbff" in out
    assert "duplicated-in-printed: ffbb" in out


def test_ask_with_mock_provider(graph_file, capsys):
    code = main(
        [
            "ask",
            "--graph",
            str(graph_file),
            "--from",
            "Querweg 1",
            "--to",
            "Langgasse 2",
            "--provider",
            "mock:echo-route",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "success" in out
    assert "--- completion (mock:echo-route) ---" in out


def test_ask_provider_failure_exits_2(graph_file, monkeypatch, tmp_path):
    providers = tmp_path / "providers.json"
    providers.write_text(
        json.dumps(
            [
                {
                    "name": "provider-a",
                    "endpoint_url": "http://llm.test/v1/chat",
                    "model": "model-a",
                    "credential_env": "PROVIDER_A_KEY",
                }
            ]
        )
    )
    monkeypatch.setenv("PROVIDER_A_KEY", "k")
    import requests

    from streetdipole import rag

    monkeypatch.setattr(rag, "_sleep", lambda s: None)
    monkeypatch.setattr(
        rag.requests, "post", lambda *a, **k: (_ for _ in ()).throw(requests.Timeout("slow"))
    )
    code = main(
        [
            "ask",
            "--graph",
            str(graph_file),
            "--from",
            "Querweg 1",
            "--to",
            "Langgasse 2",
            "--provider",
            "provider-a",
            "--providers",
            str(providers),
        ]
    )
    assert code == 2


def test_experiment_end_to_end(graph_file, tmp_path, capsys):
    tasks = [
        {
            "id": f"t{i}",
            "city": "Hamburg",
            "origin": f"Querweg {i + 1}",
            "destination": "Langgasse 2",
            "planted_route": [f"Querweg {i + 1}", "Langgasse 2"],
        }
        for i in range(2)
    ]
    tasks_file = tmp_path / "tasks.json"
    tasks_file.write_text(json.dumps(tasks))
    run_dir = tmp_path / "run"
    code = main(
        [
            "experiment",
            "--tasks",
            str(tasks_file),
            "--graph",
            str(graph_file),
            "--providers",
            "mock:echo-route,mock:hallucinate",
            "--groups",
            "control,test",
            "--out",
            str(run_dir),
        ]
    )
    assert code == 0
    assert (run_dir / "records.jsonl").exists()
    assert (run_dir / "summary.txt").exists()
    assert (run_dir / "summary.csv").exists()
    records = (run_dir / "records.jsonl").read_text().splitlines()
    assert len(records) == 2 * 2 * 2
    out = capsys.readouterr().out
    assert "Success Rate (%)" in out


def test_missing_graph_file_is_dataset_error(tmp_path):
    assert main(["verbalize", "--graph", str(tmp_path / "nope.json")]) == 1


def test_offline_subcommands_never_touch_network(graph_file, tmp_path, monkeypatch, capsys):
    import requests

    def explode(*a, **k):
        raise AssertionError("unexpected network access")

    monkeypatch.setattr(requests, "post", explode)
    monkeypatch.setattr(requests, "get", explode)
    geojson = tmp_path / "city.geojson"
    geojson.write_bytes(grid_city_geojson(3, 3))
    assert main(["ingest", "--geojson", str(geojson), "--out", str(tmp_path / "g.json")]) == 0
    assert main(["verbalize", "--graph", str(graph_file)]) == 0
    assert main(["enumerate-relations", "--budget", "1000000"]) == 0
    capsys.readouterr()

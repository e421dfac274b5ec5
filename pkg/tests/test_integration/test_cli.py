"""End-to-end runs through the command-line entry point."""

import json
import shlex
import sys
from pathlib import Path

import pytest

from capfi.__main__ import EXIT_CONFIG, EXIT_OK, cli_main
from capfi.config.settings import BuiltinOracleConfig, TrainingConfig
from capfi.data.manifest import load_manifest
from capfi.data.subsets import BASE_NOTATIONS
from capfi.oracle.builtin import save_model, train_builtin

REPO_ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = {
        "n_samples": 200,
        "seed": 11,
        "dims": {"frames": 6, "joints": 3, "embedding": 3},
        "dependency": {"bbox": 0.6, "speed": 0.4},
        "allocation": "exact",
        "positive_fraction": 0.3,
    }
    (root / "spec.json").write_text(json.dumps(spec), encoding="utf-8")
    oracle = {
        "name": "logreg",
        "modalities": ["bbox", "pose", "local_context", "speed"],
        "training": {"epochs": 40, "learning_rate": 0.5, "seed": 0},
    }
    (root / "oracle.json").write_text(json.dumps(oracle), encoding="utf-8")

    code = cli_main(
        ["synth", "--spec", str(root / "spec.json"), "--out", str(root / "pool.json"), "--log-dir", str(root / "logs")]
    )
    assert code == EXIT_OK
    return root


def run_args(root, command, out, *extra):
    return [
        command,
        "--dataset", str(root / "pool.json"),
        "--oracle", f"builtin:{root / 'oracle.json'}",
        "--seed", "42",
        "--out", str(root / out),
        "--log-dir", str(root / "logs"),
        *extra,
    ]


def test_synth_writes_pool_and_plant(workspace):
    assert (workspace / "pool.json").exists()
    plant = json.loads((workspace / "pool.plant.json").read_text(encoding="utf-8"))
    assert plant["kind"] == "plant"
    assert plant["n_samples"] == 200


def test_capfi_is_reproducible(workspace):
    extra = ("--repetitions", "4", "--format", "structured", "--format", "tabular", "--format", "plot")
    assert cli_main(run_args(workspace, "capfi", "first", *extra)) == EXIT_OK
    assert cli_main(run_args(workspace, "capfi", "second", *extra)) == EXIT_OK

    first = (workspace / "first" / "capfi_report.json").read_bytes()
    assert first == (workspace / "second" / "capfi_report.json").read_bytes()

    report = json.loads(first)
    assert report["kind"] == "capfi"
    assert report["seed"] == 42
    assert len(report["records"]) == len(BASE_NOTATIONS) * 4 * 3
    assert (workspace / "first" / "capfi_records.csv").exists()
    assert len(list((workspace / "first" / "plots").glob("*.svg"))) == len(BASE_NOTATIONS)


def test_baseline_command(workspace):
    assert cli_main(run_args(workspace, "baseline", "base", "--contexts", "S_C,S_NC,all")) == EXIT_OK
    document = json.loads((workspace / "base" / "baseline_report.json").read_text(encoding="utf-8"))
    assert document["kind"] == "baseline"
    by_context = {row["context"]: row for row in document["baselines"]}
    assert by_context["S_C"]["auc"] is None
    assert by_context["S_C"]["n"] + by_context["S_NC"]["n"] == 200


def test_cross_command_presets(workspace):
    assert cli_main(run_args(workspace, "cross", "cross")) == EXIT_OK
    document = json.loads((workspace / "cross" / "cross_report.json").read_text(encoding="utf-8"))
    assert document["kind"] == "cross"
    assert [(r["source"], r["donor"]) for r in document["results"]] == [
        ("S_C∪S_Dec", "S_Const"),
        ("S_NC∪S_Const", "S_Dec"),
    ]


def test_cross_malformed_expression_is_config_error(workspace, capsys):
    args = run_args(
        workspace, "cross", "cross_bad", "--features", "speed", "--source", "S_C∪(S_Dec", "--donor", "S_Const"
    )
    assert cli_main(args) == EXIT_CONFIG
    assert "Unexpected end of context expression" in capsys.readouterr().err


def test_single_feature_through_exec_oracle(workspace, monkeypatch):
    pool = load_manifest(workspace / "pool.json")
    config = BuiltinOracleConfig(name="served", training=TrainingConfig(epochs=20))
    weights = save_model(train_builtin(pool, config=config), workspace / "served.json")
    monkeypatch.setenv("PYTHONPATH", str(REPO_ROOT))
    command = shlex.join([sys.executable, "-m", "capfi.oracle.serve", str(weights)])

    args = [
        "capfi",
        "--dataset", str(workspace / "pool.json"),
        "--oracle", f"exec:{command}",
        "--features", "speed",
        "--contexts", "S_NC,S_Dec",
        "--repetitions", "2",
        "--seed", "42",
        "--out", str(workspace / "exec"),
        "--log-dir", str(workspace / "logs"),
    ]
    assert cli_main(args) == EXIT_OK
    report = json.loads((workspace / "exec" / "capfi_report.json").read_text(encoding="utf-8"))
    assert report["models"][0]["name"] == "served"
    assert {r["feature"] for r in report["records"]} == {"speed"}
    assert not report["failures"]


def test_unknown_notation_is_config_error(workspace, capsys):
    code = cli_main(run_args(workspace, "capfi", "bad", "--contexts", "S_Foo"))
    assert code == EXIT_CONFIG
    assert "S_Foo" in capsys.readouterr().err


def test_missing_seed_is_config_error(workspace):
    args = run_args(workspace, "baseline", "noseed")
    seed_at = args.index("--seed")
    del args[seed_at : seed_at + 2]
    assert cli_main(args) == EXIT_CONFIG


def test_missing_config_file(workspace):
    assert cli_main(["capfi", "--config", str(workspace / "absent.json")]) == EXIT_CONFIG


def test_version(capsys):
    with pytest.raises(SystemExit) as exit_info:
        cli_main(["--version"])
    assert exit_info.value.code == 0
    assert "capfi" in capsys.readouterr().out

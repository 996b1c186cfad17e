import json

import numpy as np
import pytest
from click.testing import CliRunner

from genoshare.cli import main
from genoshare.ingest import (
    parse_genotype_matrix,
    serialize_genotype_matrix,
    serialize_reference_panel,
)
from genoshare.synth import random_panel, simulate_population


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def files(tmp_path):
    panel = random_panel(60, seed=51)
    ds = simulate_population(panel, 15, seed=52)
    g = tmp_path / "g.tsv"
    p = tmp_path / "p.tsv"
    g.write_text(serialize_genotype_matrix(ds))
    p.write_text(serialize_reference_panel(panel))
    return tmp_path, g, p


def invoke(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_encode_perturb_restore_evaluate_chain(runner, files):
    tmp, g, p = files
    enc = tmp / "enc.npz"
    pert = tmp / "pert.npz"
    nm = tmp / "nm.json"
    shared = tmp / "shared.tsv"

    out = invoke(runner, ["encode", "--dataset", str(g), "--panel", str(p),
                          "--out", str(enc)])
    info = json.loads(out.output)
    assert info["rows"] == 15 and info["bit_columns"] == 120

    out = invoke(runner, ["perturb", "--matrix", str(enc), "--panel", str(p),
                          "--epsilon", "1.0", "--semantics", "per-bit",
                          "--seed", "5", "--out", str(pert), "--noise-model", str(nm)])
    assert json.loads(out.output)["p"] == pytest.approx(1 / (1 + np.e))

    out = invoke(runner, ["restore", "--matrix", str(pert), "--panel", str(p),
                          "--noise-model", str(nm), "--out-tsv", str(shared)])
    assert shared.exists()

    out = invoke(runner, ["evaluate", "--original", str(g), "--shared", str(shared),
                          "--epsilon", "1.0", "--semantics", "per-bit"])
    metrics = json.loads(out.output)
    assert 0 < metrics["avg_point_error"] < 0.5
    assert metrics["semantics"] == "per-bit"


def test_attack_command(runner, files):
    tmp, g, p = files
    out = invoke(runner, ["attack", "--shared", str(g), "--panel", str(p),
                          "--members", str(g), "--trials", "20", "--seed", "1"])
    report = json.loads(out.output)
    assert 0.0 <= report["auc"] <= 1.0


def test_run_and_tradeoff_commands(runner, files):
    tmp, g, p = files
    ws = tmp / "ws"
    out = invoke(runner, ["run", "--dataset", str(g), "--panel", str(p),
                          "--epsilon", "1.0", "--semantics", "per-bit",
                          "--attack-trials", "10", "--workspace", str(ws)])
    report = json.loads(out.output)
    assert (ws / "runs" / report["run_id"] / "shared.tsv").exists()
    shared = parse_genotype_matrix(
        (ws / "runs" / report["run_id"] / "shared.tsv").read_text())
    assert shared.n == 15

    out = invoke(runner, ["tradeoff", "--dataset", str(g), "--panel", str(p),
                          "--epsilons", "0.5,1", "--semantics", "per-bit",
                          "--attack-trials", "10", "--workspace", str(ws)])
    curve = json.loads(out.output)
    assert [pt["epsilon"] for pt in curve["points"]] == [0.5, 1.0]


def test_verify_dp_command(runner):
    out = invoke(runner, ["verify-dp", "--p", "0.25", "--bits", "3",
                          "--mode", "independent"])
    doc = json.loads(out.output)
    assert doc["passes"] is True
    assert doc["epsilon_observed"] == pytest.approx(3 * np.log(3))

    out = invoke(runner, ["verify-dp", "--p", "0.25", "--bits", "4",
                          "--mode", "markov", "--q", "0.9"])
    assert json.loads(out.output)["passes"] is True


def test_workspace_env_default(runner, files, monkeypatch, tmp_path):
    tmp, g, p = files
    ws = tmp_path / "envws"
    monkeypatch.setenv("GENOSHARE_WORKSPACE", str(ws))
    invoke(runner, ["run", "--dataset", str(g), "--panel", str(p),
                    "--epsilon", "1.0", "--semantics", "per-bit",
                    "--attack-trials", "0"])
    assert (ws / "runs").is_dir() and list((ws / "runs").iterdir())

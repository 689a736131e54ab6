import json
from pathlib import Path

import pytest

from artifact.cli import _angle, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_angle_parser():
    assert _angle("3*pi/7") == pytest.approx(3 * 3.141592653589793 / 7)
    assert _angle(0.5) == 0.5
    with pytest.raises(Exception):
        _angle("__import__('os')")


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["simulate", "--config", str(CONFIGS / "noninteracting.yaml"), "--seed", "3", "--out", str(out)]) == 0
    for name in ("trajectory.csv", "jumps.jsonl", "timeline.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    summary = json.loads((a / "summary.json").read_text())
    assert summary["jumps"] == 0
    assert (a / "jumps.jsonl").read_text() == ""
    assert summary["max_radius_drift"] < 1e-8


def test_partition_suites(tmp_path):
    code = main(["partition", "--squares", "0.5", "0.3", "0.2", "--suite", "diagonal", "--suite", "naturality", "--export", "obj", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"]
    assert any(p.suffix == ".obj" for p in tmp_path.iterdir())


def test_hyperfine_table(tmp_path):
    assert main(["hyperfine", "--samples", "21", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "hyperfine.csv").read_text().splitlines()
    assert len(lines) == 22


def test_epr_demo(tmp_path):
    assert main(["epr-demo", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "epr.json").read_text())["passed"]


def test_errors_are_json(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("version: 1\nspace: {dims: [2, 2]}\nstate: {preset: nonsense}\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "error" in err
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_simulate_from_files(tmp_path):
    import numpy as np

    from artifact.connection import HamiltonianSpec
    from artifact.hilbert import random_hermitian, random_state
    from artifact.io import hamiltonian_to_dict, save_json, state_to_dict

    rng = np.random.default_rng(5)
    save_json(state_to_dict(random_state(2, 2, rng)), tmp_path / "state.json")
    h = HamiltonianSpec.from_split(random_hermitian(4, rng), random_hermitian(2, rng), random_hermitian(2, rng))
    save_json(hamiltonian_to_dict(h), tmp_path / "ham.json")
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        "version: 1\nname: files\nstate: {file: state.json}\nhamiltonian: {file: ham.json}\n"
        "time: {t0: 0.0, t1: 2.0, samples: 41}\n"
    )
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["samples"] == 41
    assert summary["reconstruct_residual"] < 1e-9

import json

import numpy as np
import pytest

from geoduio import cli


@pytest.fixture
def platoon_file(tmp_path):
    path = tmp_path / "platoon.json"
    assert cli.main(["platoon", "--describe", str(path)]) == 0
    return path


def test_description_round_trip(platoon_file):
    data = json.loads(platoon_file.read_text())
    desc = cli.parse_description(data)
    again = cli.parse_description(json.loads(json.dumps(cli.serialize_description(desc))))
    assert again == desc
    assert cli.serialize_description(again) == cli.serialize_description(desc)


def test_synthesize_platoon(platoon_file, tmp_path, capsys):
    out = tmp_path / "design.json"
    assert cli.main(["synthesize", str(platoon_file), str(out)]) == 0
    captured = capsys.readouterr()
    assert captured.err == ""
    assert "joint condition PASS" in captured.out
    assert captured.out.count("rank condition FAIL") == 4
    report = json.loads(out.read_text())
    assert report["joint_condition"] and [n["dim_W"] for n in report["nodes"]] == [9] * 4


def test_simulate_with_saved_design(platoon_file, tmp_path, capsys):
    design = tmp_path / "design.json"
    cli.main(["synthesize", str(platoon_file), str(design)])
    csv, svg = tmp_path / "t.csv", tmp_path / "t.svg"
    code = cli.main(["simulate", str(platoon_file), "--design", str(design), "--t-end", "0.01",
                     "--csv", str(csv), "--svg", str(svg)])
    assert code == 0
    lines = csv.read_text().splitlines()
    assert len(lines) == 1 + 101
    assert len(lines[0].split(",")) == 1 + 12 + 4 * (12 + 1 + 3)
    assert svg.read_text().startswith("<svg")
    assert "final error norms" in capsys.readouterr().out


def test_design_reload_matches(platoon_file, tmp_path):
    design = tmp_path / "design.json"
    cli.main(["synthesize", str(platoon_file), str(design)])
    desc = cli.load_description(platoon_file)
    d1 = cli._synthesize(desc)
    d2 = cli.design_from_dict(json.loads(design.read_text()), desc)
    assert d2.chi == d1.chi and d2.gamma == d1.gamma
    for a, b in zip(d1.nodes, d2.nodes):
        assert np.allclose(a.A_L, b.A_L) and a.Wg.equals(b.Wg)


@pytest.mark.parametrize("flags", [["--t-end", "0"], ["--boundary-layer", "0", "--dt", "1e-3"]])
def test_simulate_rejects_bad_config(platoon_file, flags, capsys):
    assert cli.main(["simulate", str(platoon_file)] + flags) == cli.EXIT_INVALID
    assert capsys.readouterr().err.startswith("error:")


def test_disconnected_graph_exit_code(platoon_file, tmp_path, capsys):
    data = json.loads(platoon_file.read_text())
    data["graph"]["adjacency"] = np.zeros((4, 4), dtype=int).tolist()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert cli.main(["synthesize", str(bad), str(tmp_path / "o.json")]) == cli.EXIT_INVALID
    assert "Assumption 1" in capsys.readouterr().err


def test_malformed_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["synthesize", str(bad), str(tmp_path / "o.json")]) == cli.EXIT_INVALID
    bad.write_text(json.dumps({"n": 2, "m": 1, "A": [[0, 1]], "B": [[0], [1]]}))
    assert cli.main(["synthesize", str(bad), str(tmp_path / "o.json")]) == cli.EXIT_INVALID


def test_joint_condition_exit_code(tmp_path):
    desc = {"n": 2, "m": 1, "A": [[-1, 0], [0, -2]], "B": [[1], [0]],
            "nodes": [{"C": [[0, 0]], "known": []}, {"C": [[0, 0]], "known": []}],
            "graph": {"adjacency": [[0, 1], [1, 0]]}, "u_bar_max": 1.0}
    f = tmp_path / "j.json"
    f.write_text(json.dumps(desc))
    assert cli.main(["synthesize", str(f), str(tmp_path / "o.json")]) == cli.EXIT_JOINT


def test_blowup_exit_code(tmp_path):
    desc = {"n": 1, "m": 1, "A": [[50.0]], "B": [[1.0]],
            "nodes": [{"C": [[1.0]], "known": [0]}], "graph": {"adjacency": [[0]]},
            "x0": [1.0], "xhat0": [1.0], "sim": {"dt": 1e-3, "t_end": 1.0}}
    f = tmp_path / "b.json"
    f.write_text(json.dumps(desc))
    assert cli.main(["simulate", str(f)]) == cli.EXIT_BLOWUP


def test_env_tolerance_respected(platoon_file, tmp_path, monkeypatch):
    monkeypatch.setenv("GEO_DUIO_TOL", "not-a-number")
    assert cli.main(["synthesize", str(platoon_file), str(tmp_path / "o.json")]) == 2


def test_unknown_subcommand():
    assert cli.main(["frobnicate"]) == cli.EXIT_INVALID

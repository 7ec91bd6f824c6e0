import json

from asyncmpc import harness
from asyncmpc.cli import main
from asyncmpc.plots import render_sweep_figure
from asyncmpc.structures import AdversaryStructure


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


GOOD = {"scenarios": [
    {"protocol": "acast", "n": 4, "seeds": 10},
    {"protocol": "rec", "n": 4, "corrupt": [2],
     "strategy": "offset-rec-share", "seeds": 10},
]}


def test_run_writes_report_csv_and_figure(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GOOD)
    out = tmp_path / "rep.json"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert [r["successes"] for r in data["reports"]] == [10, 10]
    csv_text = (tmp_path / "rep.csv").read_text().splitlines()
    assert csv_text[0].startswith("index,protocol,n,")
    assert len(csv_text) == 3
    png = (tmp_path / "rep.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    err = capsys.readouterr().err
    assert "wall time" in err


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, GOOD)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", str(cfg), "--out", str(a)]) == 0
    assert main(["run", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_stdout_report_when_no_out(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"protocol": "acast", "n": 4, "seeds": 3})
    assert main(["run", str(cfg)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["reports"][0]["trials"] == 3


def test_seeds_override(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"protocol": "acast", "n": 4, "seeds": 50})
    assert main(["run", str(cfg), "--seeds", "4"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["reports"][0]["trials"] == 4


def test_invalid_config_exits_two(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"protocol": "pertriples", "n": 4, "seeds": 2})
    assert main(["run", str(cfg)]) == 2
    assert "Q^(4)" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{nope")
    assert main(["run", str(garbled)]) == 2


def test_violations_exit_one(tmp_path, monkeypatch):
    def broken(sc, seed):
        return "violation", "synthetic", {}, 0

    monkeypatch.setitem(harness.RUNNERS, "acast", broken)
    cfg = write_cfg(tmp_path, {"protocol": "acast", "n": 4, "seeds": 2})
    out = tmp_path / "rep.json"
    assert main(["run", str(cfg), "--out", str(out)]) == 1
    data = json.loads(out.read_text())
    assert data["reports"][0]["violations"] == 2
    assert data["reports"][0]["notes"][0]["note"] == "synthetic"


def test_sweep_figure_renders(tmp_path):
    sizes = [AdversaryStructure.first_singletons(9, k) for k in (5, 7, 9)]
    sweep = harness.complexity_sweep("rec", sizes)
    path = tmp_path / "sweep.png"
    render_sweep_figure(sweep, path)
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

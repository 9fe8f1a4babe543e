import json

import pytest

from surveil.cli import main

MAP = """\
....A
.....
.###.
...T.
.....
"""

TINY = """\
AT
"""


@pytest.fixture()
def paths(tmp_path):
    d = {}
    for name, text in (
        ("map", MAP),
        ("tiny", TINY),
        ("p3", "G p<=3\n"),
        ("p2", "G p<=2\n"),
        ("p1", "G p<=1\n"),
        ("live", "GF p<=2\n"),
    ):
        p = tmp_path / f"{name}.txt"
        p.write_text(text)
        d[name] = str(p)
    d["tmp"] = tmp_path
    return d


def run(argv):
    return main(argv)


def test_synth_realizable_exit_zero(paths, capsys):
    out = paths["tmp"] / "strat.json"
    code = run(["synth", "--map", paths["map"], "--spec", paths["p3"],
                "--out", str(out)])
    assert code == 0
    transcript = capsys.readouterr().out.strip().splitlines()
    assert transcript[-1].endswith("verdict=realizable action=stop")
    payload = json.loads(out.read_text())
    assert payload["digest"]
    assert payload["moves"]
    assert payload["blocks"]


def test_synth_unrealizable_exit_ten_with_dump(paths):
    out = paths["tmp"] / "cex.json"
    code = run(["synth", "--map", paths["map"], "--spec", paths["p2"],
                "--out", str(out)])
    assert code == 10
    dump = json.loads(out.read_text())
    assert dump["verdict"] == "unrealizable"
    assert dump["kind"] == "tree"
    assert dump["root"]["belief"] == [18]


def test_synth_missing_map_exit_one(paths):
    assert run(["synth", "--map", "/nonexistent.map", "--spec", paths["p3"]]) == 1


def test_synth_bad_spec_exit_one(paths, tmp_path):
    bad = tmp_path / "bad.spec"
    bad.write_text("p<=1 U goal\n")
    assert run(["synth", "--map", paths["map"], "--spec", str(bad)]) == 1


def test_usage_error_exit_one():
    with pytest.raises(SystemExit) as exc:
        run(["synth", "--spec", "x"])
    assert exc.value.code == 1


def test_dump_partition(paths, capsys):
    code = run(["synth", "--map", paths["map"], "--spec", paths["p3"],
                "--out", str(paths["tmp"] / "s.json"), "--dump-partition"])
    assert code == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines()
             if ln.startswith("block ")]
    cells = sorted(
        int(c) for ln in lines for c in ln.split(" ", 1)[1].split(",")
    )
    free = [c for c in range(25) if c not in (11, 12, 13)]
    reachable = [c for c in free if c != 4] + [4]  # all free cells
    assert cells == sorted(set(cells))
    assert set(cells) <= set(reachable)


def test_oracle_verdicts(paths, capsys):
    assert run(["oracle", "--map", paths["map"], "--spec", paths["live"]]) == 0
    assert "realizable=True" in capsys.readouterr().out
    assert run(["oracle", "--map", paths["map"], "--spec", paths["p1"]]) == 10
    assert run(["oracle", "--map", paths["tiny"], "--spec", paths["p1"]]) == 0


def test_oracle_budget_exit_twenty(paths):
    code = run(["oracle", "--map", paths["map"], "--spec", paths["p3"],
                "--max-states", "10"])
    assert code == 20


def test_synth_iteration_budget_exit_twenty(paths):
    code = run(["synth", "--map", paths["map"], "--spec", paths["p3"],
                "--max-iters", "1"])
    assert code == 20


def test_simulate_jsonl(paths, capsys):
    code = run(["simulate", "--map", paths["map"], "--spec", paths["p3"],
                "--steps", "6", "--seed", "3"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    recs = [json.loads(ln) for ln in lines if ln.startswith("{")]
    assert len(recs) == 7
    assert recs[0]["agent"] == 4 and recs[0]["target"] == 18


def test_synth_then_simulate_with_strategy_file(paths, capsys):
    strat = paths["tmp"] / "strat.json"
    assert run(["synth", "--map", paths["map"], "--spec", paths["p3"],
                "--out", str(strat)]) == 0
    capsys.readouterr()
    code = run(["simulate", "--map", paths["map"], "--strategy", str(strat),
                "--steps", "4"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len([ln for ln in lines if ln.startswith("{")]) == 5


def test_foreign_strategy_rejected(paths, tmp_path, capsys):
    other = tmp_path / "other.map"
    other.write_text("......\nA....T\n")
    strat = tmp_path / "foreign.json"
    assert run(["synth", "--map", str(other), "--spec", paths["p3"],
                "--out", str(strat)]) == 0
    capsys.readouterr()
    code = run(["simulate", "--map", paths["map"], "--strategy", str(strat)])
    assert code == 1
    assert "different map" in capsys.readouterr().err


def test_simulate_needs_spec_or_strategy(paths):
    assert run(["simulate", "--map", paths["map"]]) == 1


def test_render_frame_count_matches_steps(paths, capsys):
    code = run(["render", "--map", paths["map"], "--spec", paths["p3"],
                "--steps", "5", "--format", "text"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("step ") == 6


def test_render_svg(paths, capsys):
    code = run(["render", "--map", paths["map"], "--spec", paths["p3"],
                "--steps", "3", "--format", "svg"])
    assert code == 0
    assert "<svg" in capsys.readouterr().out


def test_validate_ok(paths, capsys):
    assert run(["validate", "--map", paths["map"]]) == 0
    assert "invisible_independent=True" in capsys.readouterr().out


def test_bundled_map(capsys, tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text("G p<=3\n")
    assert run(["validate", "--map", "bundled:paper5x5.txt"]) == 0


def test_determinism(paths, capsys):
    argv = ["simulate", "--map", paths["map"], "--spec", paths["p3"],
            "--steps", "10", "--seed", "5"]
    run(argv)
    first = capsys.readouterr().out
    run(argv)
    assert capsys.readouterr().out == first

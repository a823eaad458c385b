import json

import pytest
from click.testing import CliRunner
from hypothesis import given, settings, strategies as st

from critreg.cli import EXPERIMENTS, ExperimentConfig, main, read_csv


def _run(tmp_path, *args):
    return CliRunner().invoke(main, ["--out-dir", str(tmp_path), *args])


def test_rotnum_artifacts(tmp_path):
    res = _run(tmp_path, "rotnum", "--n", "1000", "--out", "rot.csv")
    assert res.exit_code == 0, res.output
    header, rows = read_csv(tmp_path / "rot.csv")
    assert rows and len(rows[0]) == len(header)
    checks = [json.loads(l) for l in (tmp_path / "rot.summary.jsonl").read_text().splitlines()]
    assert checks and all(c["pass"] in (True, None) for c in checks)
    meta = json.loads((tmp_path / "rot.meta.json").read_text())
    assert meta["experiment"] == "rotnum"


def test_cover_from_csv_and_failing_exit(tmp_path):
    cov = tmp_path / "cover.csv"
    cov.write_text("lo,hi\n0,1\n0.5,2\n1.5,3\n")
    assert _run(tmp_path, "chains", "cover", "--target", "0.1,2.5", "--cover", str(cov)).exit_code == 0
    header, rows = read_csv(tmp_path / "cover.csv")
    assert header == ["name", "lo", "hi"] and len(rows) == 3
    checks = [json.loads(l) for l in (tmp_path / "cover.summary.jsonl").read_text().splitlines()]
    assert {c["name"]: c["value"] for c in checks}["covering_length"] == 3


def test_thompson_transit_exact(tmp_path):
    res = _run(tmp_path, "thompson", "transit", "--from", "1/4,1/2", "--to", "3/8,7/8")
    assert res.exit_code == 0, res.output


def test_usage_errors_exit_2(tmp_path):
    assert _run(tmp_path, "rotnum", "--n", "many").exit_code == 2
    assert _run(tmp_path, "nosuchcommand").exit_code == 2
    assert _run(tmp_path, "chains", "cover", "--target", "0,1").exit_code == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0,0\n0.5,0.3\n0.5,0.4\n")
    res = _run(tmp_path, "modulus", "--alpha", f"tabulated:{bad}")
    assert res.exit_code == 2 and "strictly increasing" in res.output
    assert _run(tmp_path, "rotnum", "--theta", "not-a-number").exit_code == 2


def test_check_failure_exit_1(tmp_path):
    # a modulus with a convex kink fails the concavity check
    tab = tmp_path / "tab.csv"
    tab.write_text("x,y\n0,0\n0.5,0.1\n1,1\n")
    res = _run(tmp_path, "modulus", "--alpha", f"tabulated:{tab}")
    assert res.exit_code == 1, res.output


def test_config_errors(tmp_path):
    cases = ["experiments = rotnum\nrotnum.nn = 3\n", "experiments = rotnum\nseed = 1\nseed = 2\n",
             "experiments = nothing\n", "experiments = rotnum\nrotnum.n = ten\n", "just words\n"]
    for i, text in enumerate(cases):
        p = tmp_path / f"bad{i}.cfg"
        p.write_text(text)
        res = _run(tmp_path, "run", "--config", str(p))
        assert res.exit_code == 2, (text, res.output)
        assert f"bad{i}.cfg" in res.output


def test_empty_config_writes_nothing(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing to do\nexperiments =\n")
    out = tmp_path / "out"
    res = CliRunner().invoke(main, ["--out-dir", str(out), "run", "--config", str(p)])
    assert res.exit_code == 0
    assert not out.exists() or not any(out.iterdir())


def test_config_run_and_override(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("experiments = rotnum, relcheck\nseed = 3\nrotnum.n = 500\nrotnum.out = r.csv\n")
    res = _run(tmp_path, "run", "--config", str(p), "--set", "rotnum.theta=sqrt2m1")
    assert res.exit_code == 0, res.output
    assert (tmp_path / "r.csv").exists() and (tmp_path / "relcheck.csv").exists()
    assert json.loads((tmp_path / "r.meta.json").read_text())["experiment"] == "rotnum"


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITREG_OUTPUT_DIR", str(tmp_path))
    res = CliRunner().invoke(main, ["thompson", "relcheck"])
    assert res.exit_code == 0
    assert (tmp_path / "relcheck.csv").exists()


values = {int: st.integers(0, 10_000), float: st.floats(1e-6, 1e6), str: st.sampled_from(["golden", "invlogsq"]),
          bool: st.booleans()}


@st.composite
def configs(draw):
    kinds = draw(st.lists(st.sampled_from(sorted(EXPERIMENTS)), unique=True, max_size=4))
    params = {}
    for kind in kinds:
        fields = EXPERIMENTS[kind][1]
        chosen = draw(st.lists(st.sampled_from(sorted(fields)), unique=True)) if fields else []
        if chosen:
            params[kind] = {f: draw(values[fields[f][0]]) for f in chosen}
    return ExperimentConfig(kinds, draw(st.integers(0, 99)), draw(st.floats(1e-15, 1e-3)),
                            None, params, {k: f"{k}_x.csv" for k in kinds[:1]})


@settings(max_examples=100)
@given(configs())
def test_config_text_round_trip(cfg):
    back = ExperimentConfig.parse(cfg.to_text())
    assert back == cfg


def test_determinism_of_random_experiments(tmp_path):
    for sub in (["chains", "random", "--count", "30"], ["thompson", "random", "--count", "10"]):
        a = CliRunner().invoke(main, ["--seed", "4", "--out-dir", str(tmp_path / "a"), *sub])
        b = CliRunner().invoke(main, ["--seed", "4", "--out-dir", str(tmp_path / "b"), *sub])
        assert a.exit_code == b.exit_code == 0
    for name in ("randcover.csv", "randtransit.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

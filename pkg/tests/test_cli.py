import csv
import json
import math

import pytest

from herzflow import cli
from herzflow.errors import ConfigError, ParameterError


def _write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


NORMS_CFG = """
kind = norms          # cheap experiment
seed = 3
[grid]
N = 64
[params]
alpha = 0.5
q = inf
[options]
samples = 2
"""


# -- grammar -----------------------------------------------------------------------
def test_parse_sections_comments_and_values():
    raw = cli.parse_config_text("""
    kind = scheme
    params.s = 2.5         # dotted key
    [scheme]
    m_max = 4
    T = 0.125
    [options]
    flag = true
    nothing = null
    list = 1, 2.5, inf
    name = vortex
    """)
    assert raw["kind"] == "scheme" and raw["params"] == {"s": 2.5}
    assert raw["scheme"] == {"m_max": 4, "T": 0.125}
    opts = raw["options"]
    assert opts["flag"] is True and opts["nothing"] is None and opts["name"] == "vortex"
    assert opts["list"][:2] == [1, 2.5] and math.isinf(opts["list"][2])


def test_parse_json_config():
    raw = cli.parse_config_text('{"kind": "norms", "grid": {"N": 64}}')
    assert raw == {"kind": "norms", "grid": {"N": 64}}


@pytest.mark.parametrize("text, msg", [
    ("kind = norms\nkind = scheme", "duplicate"),
    ("just words", "expected"),
    ("[]\nx = 1", "empty section"),
    ("a = 1\na.b = 2", "both a value and a section"),
    ("{not json", "invalid JSON"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        cli.parse_config_text(text)


def test_build_config_defaults_and_errors(tmp_path):
    cfg = cli.build_config({"kind": "scheme"})
    assert cfg.grid.N == 128 and cfg.scheme.dt == cfg.scheme.T / 16
    assert cli.build_config({"kind": "diagnostics"}).grid.N == 64
    assert cli.build_config({"kind": "scheme", "scheme": {"T": 0.5}}).scheme.dt == 0.5 / 16
    with pytest.raises(ConfigError, match="kind"):
        cli.build_config({"kind": "bogus"})
    with pytest.raises(ConfigError, match="unknown key"):
        cli.build_config({"kind": "norms", "params": {"beta": 1}})
    with pytest.raises(ConfigError, match="top-level"):
        cli.build_config({"kind": "norms", "extra": 1})
    with pytest.raises(ConfigError, match="seed"):
        cli.build_config({"kind": "norms", "seed": -1})
    with pytest.raises(ConfigError, match="missing file"):
        cli.build_config({"kind": "scheme", "inputs": {"u0": "nope.hrz"}}, tmp_path)
    # theorem hypotheses are checked before anything runs
    with pytest.raises(ParameterError, match="r = 1"):
        cli.build_config({"kind": "scheme", "params": {"s": 2, "r": 2}})


def test_normalized_is_json(tmp_path):
    cfg = cli.build_config({"kind": "norms", "params": {"q": math.inf}})
    d = cfg.normalized()
    assert d["params"]["q"] is None          # infinite exponents serialize as null
    json.dumps(d)


# -- run / report --------------------------------------------------------------------
def test_config_error_exit_code(tmp_path, capsys):
    p = _write(tmp_path, "kind = scheme\n[params]\ns = 2\nr = 2\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "requires r = 1" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    p = _write(tmp_path, "kind = scheme\n[grid]\nN = 64\n[options]\na_amplitude = 0.5\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "numerical failure in euler" in capsys.readouterr().err


def test_norms_run_deterministic(tmp_path):
    p = _write(tmp_path, NORMS_CFG)
    assert cli.main(["run", str(p), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", str(p), "--out", str(tmp_path / "b"), "--threads", "1"]) == 0
    ma = (tmp_path / "a" / "manifest.json").read_bytes()
    assert ma == (tmp_path / "b" / "manifest.json").read_bytes()
    man = json.loads(ma)
    assert man["seed"] == 3 and man["kind"] == "norms"
    names = {a["path"] for a in man["artifacts"]}
    assert names == {"norms.jsonl", "summary.json"}
    assert (tmp_path / "a" / "run.log").is_file()
    # a different seed changes the artifacts
    assert cli.main(["run", str(p), "--seed", "4", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "manifest.json").read_bytes() != ma


def test_report_norms(tmp_path):
    p = _write(tmp_path, NORMS_CFG)
    cli.main(["run", str(p), "--out", str(tmp_path / "a")])
    assert cli.main(["report", str(tmp_path / "a")]) == 0
    rows = list(csv.DictReader((tmp_path / "a" / "report.csv").open()))
    assert len(rows) == 2 and "besov_herz" in rows[0]


def test_report_detects_tampering(tmp_path):
    p = _write(tmp_path, NORMS_CFG)
    cli.main(["run", str(p), "--out", str(tmp_path / "a")])
    (tmp_path / "a" / "norms.jsonl").write_text("{}\n")
    assert cli.main(["report", str(tmp_path / "a")]) == 2
    (tmp_path / "empty").mkdir()
    assert cli.main(["report", str(tmp_path / "empty")]) == 2
    assert cli.main(["report", str(tmp_path / "nowhere")]) == 2


def test_inequalities_run(tmp_path):
    p = _write(tmp_path, "kind = inequalities\n[grid]\nN = 64\n[options]\nsamples = 2\n"
                         "checks = holder, product_i, commutator_pressure_iii\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "r")]) == 0
    res = cli.report(tmp_path / "r")
    assert [r["lemma"] for r in res["rows"]] == ["commutator_pressure_iii", "holder", "product_i"]
    assert all(r["pass"] for r in res["rows"]) and all(r["samples"] == 2 for r in res["rows"])
    with (tmp_path / "r" / "report.csv").open() as fh:
        assert next(csv.reader(fh)) == ["lemma", "samples", "max_fitted_C", "pass"]


def test_unknown_inequality_check(tmp_path):
    p = _write(tmp_path, "kind = inequalities\n[grid]\nN = 64\n[options]\nchecks = nonsense\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "r")]) == 2


def test_scheme_run_and_report(tmp_path):
    p = _write(tmp_path, "kind = scheme\n[grid]\nN = 64\n[scheme]\nm_max = 3\nT = 0.0625\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "s")]) == 0
    man = cli.load_manifest(tmp_path / "s")
    assert {a["path"] for a in man["artifacts"]} >= {"trace.jsonl", "bkm.jsonl", "u_final.hrz",
                                                     "a_final.hrz", "reports.jsonl"}
    res = cli.report(tmp_path / "s")
    assert [r["m"] for r in res["rows"]] == [1, 2, 3]
    with (tmp_path / "s" / "report.csv").open() as fh:
        assert next(csv.reader(fh)) == ["m", "delta", "ratio", "envelope"]
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert summary["iterations"] == 3 and not summary["aborted"]


def test_transport_and_diagnostics_runs(tmp_path):
    p = _write(tmp_path, "kind = transport\n[grid]\nN = 64\n[options]\nT = 0.25\n", "t.cfg")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "t")]) == 0
    assert cli.report(tmp_path / "t")["rows"][0]["lemma"] == "transport_estimate"
    p = _write(tmp_path, "kind = diagnostics\n[options]\nsamples = 3\nT = 0.05\n", "d.cfg")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "d")]) == 0
    s = json.loads((tmp_path / "d" / "summary.json").read_text())
    assert s["grad_max_error"] <= 1e-10 and s["bkm_nondecreasing"]


def test_input_field(tmp_path):
    from herzflow.data import density_bump
    from herzflow.fieldio import write_field
    from herzflow.grid import make_grid
    write_field(density_bump(make_grid(2, 64, 16.0), amplitude=0.1), tmp_path / "a0.hrz")
    p = _write(tmp_path, "kind = transport\n[grid]\nN = 64\n[options]\nT = 0.125\n"
                         "[inputs]\na0 = a0.hrz\n")
    assert cli.main(["run", str(p), "--out", str(tmp_path / "t")]) == 0
    wrong = _write(tmp_path, "kind = transport\n[grid]\nN = 128\n[inputs]\na0 = a0.hrz\n", "w.cfg")
    assert cli.main(["run", str(wrong), "--out", str(tmp_path / "w")]) == 2

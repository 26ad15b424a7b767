import json
import re

import pytest

from liequant.cli import main
from liequant.config import ExperimentConfig, load_config, parse_json, parse_keyvalue
from liequant.errors import ConfigError, InvalidFamilyError
from liequant.pipeline import Report, run_config
from liequant.report import dumps, emit_json, emit_outputs, format_number

KV = """
# torus smoke run
group = torus1
cutoffs = 8, 12, 16
family = multiplication
params.g = one_plus_cos
seed = 3
stages = positivity, garding
"""

JSON = json.dumps({"group": "torus1", "cutoffs": [8, 12, 16], "family": "multiplication",
                   "params": {"g": "one_plus_cos"}, "seed": 3, "stages": ["positivity", "garding"]})


def _torus_cfg(out, **kw):
    base = dict(group="torus1", cutoffs=[8.0, 12.0, 16.0], family="multiplication", out=str(out))
    base.update(kw)
    return ExperimentConfig(**base)


def test_keyvalue_and_json_configs_agree(tmp_path):
    a, b = parse_keyvalue(KV), parse_json(JSON)
    assert a.to_dict() == b.to_dict()
    (tmp_path / "c.txt").write_text(KV)
    (tmp_path / "c.json").write_text(JSON)
    assert load_config(tmp_path / "c.txt").to_dict() == load_config(tmp_path / "c.json").to_dict()


@pytest.mark.parametrize("kw", [dict(cutoffs=[4.0, 3.0, 5.0]), dict(stages=["nonsense"]), dict(eta_factor=0.5)])
def test_config_validation(kw):
    with pytest.raises((ConfigError, InvalidFamilyError)):
        ExperimentConfig(**kw).validate()


def test_unknown_family_rejected():
    with pytest.raises((ConfigError, InvalidFamilyError)):
        ExperimentConfig(family="nonsense").validate()


def test_garding_stage_needs_three_cutoffs(tmp_path):
    with pytest.raises(ConfigError):
        run_config(_torus_cfg(tmp_path, cutoffs=[8.0, 12.0]))


def test_number_format_has_17_significant_digits():
    assert format_number(0.1) == "1.0000000000000001e-01"
    assert format_number(1 / 3) == "3.3333333333333331e-01"
    assert float(format_number(2 / 7)) == 2 / 7
    assert format_number(True) == "true" and format_number(7) == "7"
    with pytest.raises(ValueError):
        format_number(float("nan"))


def test_empty_report_is_valid_json(tmp_path):
    paths = emit_outputs(Report(), tmp_path)
    data = json.loads(paths[0].read_text())
    assert data["flags"] == {} and data["decay"] == {} and data["garding_constants"] == []
    assert data["passed"] is True
    assert (tmp_path / "garding_constants.csv").read_text() == "cutoff,C\n"


def test_pipeline_outputs_are_deterministic(tmp_path):
    cfg = _torus_cfg(tmp_path / "run")
    first = [p.read_bytes() for p in emit_outputs(run_config(cfg), cfg.out)]
    second = [p.read_bytes() for p in emit_outputs(run_config(cfg), cfg.out)]
    assert first == second
    data = json.loads(first[0])
    assert data["passed"] is True
    for name, rep in data["decay"].items():
        lines = (tmp_path / "run" / f"decay_{name}.csv").read_text().splitlines()
        assert lines[0] == "weight,value"
        assert len(lines) - 1 == len(rep["weights"])
        # only interior indices are reported
        assert max(rep["weights"]) <= 16.0 / 2 + 1e-9
    rows = (tmp_path / "run" / "garding_constants.csv").read_text().splitlines()
    assert len(rows) == 4
    assert re.fullmatch(r"-?\d\.\d{16}e[+-]\d{2},-?\d\.\d{16}e[+-]\d{2}", rows[1])


def test_report_rerender_is_identical(tmp_path):
    data = run_config(_torus_cfg(tmp_path)).to_json()
    paths = emit_json(data, tmp_path)
    before = [p.read_bytes() for p in paths]
    assert main(["report", "--out", str(tmp_path)]) == 0
    assert [p.read_bytes() for p in paths] == before
    assert dumps(json.loads(before[0])) + "\n" == before[0].decode()


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "cli")
    common = ["--group", "torus1", "--cutoffs", "8,12,16", "--out", out]
    assert main(["garding", "--family", "multiplication"] + common) == 0
    assert "PASS positivity" in capsys.readouterr().out
    assert main(["garding", "--family", "no_such_family"] + common) == 2
    assert main(["ft", "--group", "torus1", "--cutoffs", "8,16", "--out", out]) == 0
    assert json.loads((tmp_path / "cli" / "ft.json").read_text())["levels"][0]["passed"] is True
    assert main(["wxi", "--group", "su2", "--cutoffs", "2,4", "--out", out]) == 0


def test_cli_failing_flag_exits_one(tmp_path, capsys):
    # a symbol with a negative part fails positivity
    cfg = tmp_path / "neg.txt"
    cfg.write_text("group = torus1\ncutoffs = 8, 12, 16\nfamily = multiplication\nparams.g = signed\n"
                   "stages = positivity\n")
    assert main(["garding", "--config", str(cfg), "--out", str(tmp_path / "neg")]) == 1
    assert "FAIL positivity" in capsys.readouterr().out

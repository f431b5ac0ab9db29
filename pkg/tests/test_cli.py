import json

import pytest

from dbarlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_geom_type_prints_json(capsys):
    code, out, _ = run(capsys, "geom", "type", "--domain", "egg", "--k", "2", "--point", "0,0,1,0")
    assert code == 0 and json.loads(out) == {"type": 4}


def test_full_report_includes_config(capsys):
    code, out, _ = run(capsys, "geom", "tau", "--domain", "ball", "--point", "0,0,1,0", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["command"] == "geom tau" and rep["config"]["domain"] == "ball"


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["geom", "type", "--bogus"])
    assert exc.value.code == 2


def test_bad_config_exit_code(capsys):
    code, _, err = run(capsys, "geom", "type", "--domain", "egg", "--k", "7", "--point", "0,0,1,0")
    assert code == 2 and "configuration" in err


def test_interior_point_is_computation_error(capsys):
    code, _, err = run(capsys, "normalize", "--domain", "ball", "--point", "0,0,0.5,0")
    assert code == 1 and "Error" in err


def test_outputs_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(capsys, "bump", "--domain", "egg", "--k", "2", "--point", "0,0,1,0", "--seed", "3", "--out", str(d))[0] == 0
    for name in ("bump.json", "bump.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--lemma", "st-int", "--delta-min", "1e-4", "--delta-max", "1e-1")
    assert code == 1 and json.loads(out)["passed"] is False


def test_suite_subset(capsys):
    code, out, err = run(capsys, "suite", "--quick", "--only", "1", "2", "3")
    assert code == 0
    assert err.count("[PASS]") == 3

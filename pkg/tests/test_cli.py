import json

import pytest

from ltvkit.cli import main
from ltvkit.files import SystemFileError, build_system, default_grid, parse_system_file


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def report(out_dir):
    return json.loads((out_dir / "report.json").read_text())


def test_catalog_run_s0(capsys, tmp_path):
    code, out, _ = run(["catalog", "run", "S0", "--out", str(tmp_path)], capsys)
    assert code == 0
    res = report(tmp_path)["deterministic"]["results"]["S0"]
    ucc = next(r for r in res if r["target"] == "UCC")
    assert ucc["observed"] == "CertifiedOnWindow"


def test_classify_s1_uco_exits_falsified(capsys, tmp_path):
    code, _, _ = run(["classify", "S1", "UCO", "--out", str(tmp_path), "-q"], capsys)
    assert code == 2
    rep = report(tmp_path)
    assert rep["deterministic"]["witnesses"]
    header = (tmp_path / "classify_UCO_M.csv").read_text().splitlines()[0]
    assert header == "t,sigma,lambda_min,lambda_max,bound_lower,bound_upper"


def test_verify_s6_perturbation(capsys, tmp_path):
    code, _, _ = run(["verify", "S6", "PERTURB-LEMMA", "--out", str(tmp_path), "-q"], capsys)
    assert code == 0
    rows = report(tmp_path)["deterministic"]["results"]["rows"]
    assert rows and min(r["slack"] for r in rows) >= -1e-7


def test_export_then_verify(capsys, tmp_path):
    code, _, _ = run(["catalog", "export", "S5", "--out", str(tmp_path), "-q"], capsys)
    assert code == 0
    path = tmp_path / "S5.system.json"
    code, _, _ = run(["verify", str(path), "FEEDBACK-OBS", "-q"], capsys)
    assert code == 0


def test_transition_and_gramian_commands(capsys):
    code, out, _ = run(["transition", "S1", "1.0", "0.0"], capsys)
    assert code == 0
    res = json.loads(out)["deterministic"]["results"]
    assert res["cocycle_residual"] <= 1e-7
    code, out, _ = run(["gramian", "S2", "M", "0", "1"], capsys)
    assert code == 0
    assert json.loads(out)["deterministic"]["results"]["matrix"][0][0] == pytest.approx(0.4323323584)


def test_fit_envelope_command(capsys):
    code, out, _ = run(["fit-envelope", "S2", "NuesForward", "--t-grid", "0:4:5", "--sigma-grid", "1"], capsys)
    assert code == 0
    assert json.loads(out)["deterministic"]["results"]["rate"] == 1.0


def test_inconclusive_exit_code(capsys, tmp_path):
    path = tmp_path / "zero.system.json"
    path.write_text(json.dumps({"name": "z", "n": 1, "domain": [-5, 5], "A": [["0"]]}))
    code, _, _ = run(["fit-envelope", str(path), "NuesForward", "-q"], capsys)
    assert code == 3


def test_flags_are_echoed(capsys):
    code, out, _ = run(["classify", "S2", "UCC", "--t-grid=-1:1:3", "--sigma-grid", "0.5,1",
                        "--eig-tol", "1e-9", "--caps", "4:2:1000"], capsys)
    settings = json.loads(out)["deterministic"]["settings"]
    assert settings["eig_tol"] == 1e-9
    assert settings["caps"] == {"rate": 4.0, "nu": 2.0, "pref": 1000.0}
    assert settings["grids"]["sigma"] == [0.5, 1.0]


def test_deterministic_section_is_stable(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["verify", "S2", "GRAMIAN-DUALITY", "--out", str(d), "-q"], capsys)[0] == 0
    ra, rb = report(a), report(b)
    assert json.dumps(ra["deterministic"], sort_keys=True) == json.dumps(rb["deterministic"], sort_keys=True)
    assert "wall_time_s" in ra["footer"]


def test_bad_expression_is_positioned(capsys, tmp_path):
    path = tmp_path / "bad.system.json"
    path.write_text(json.dumps({"name": "b", "n": 1, "domain": [-1, 1], "A": [["2*(t+"]]}))
    code, _, err = run(["transition", str(path), "0.5", "0"], capsys)
    assert code == 1
    assert "A[0][0]" in err and "byte 5" in err


def test_invalid_json_reports_line(capsys, tmp_path):
    path = tmp_path / "broken.system.json"
    path.write_text('{\n  "name": "x",\n  "n": 1,,\n}')
    code, _, err = run(["transition", str(path), "0", "0"], capsys)
    assert code == 1 and "line 3" in err


def test_unknown_key_rejected(capsys, tmp_path):
    path = tmp_path / "extra.system.json"
    path.write_text(json.dumps({"name": "x", "n": 1, "domain": [-1, 1], "A": [["0"]], "colour": 1}))
    assert run(["transition", str(path), "0", "0"], capsys)[0] == 1


def test_domain_error_is_reported(capsys, tmp_path):
    path = tmp_path / "log.system.json"
    path.write_text(json.dumps({"name": "x", "n": 1, "domain": [-1, 1], "A": [["log(t)"]]}))
    code, _, err = run(["transition", str(path), "0.5", "-0.5"], capsys)
    assert code == 1 and "error" in err


def test_hypothesis_gate_names_margin(capsys, tmp_path):
    path = tmp_path / "gate.system.json"
    path.write_text(json.dumps({
        "name": "g", "n": 1, "p": 1, "domain": [-6, 6], "A": [["0"]], "B": [["1"]],
        "gains": {"role": "state_feedback", "entries": [["1"]]},
        "grids": {"t": {"lo": -3, "hi": 3, "count": 7}, "sigma": [1, 2]}}))
    code, _, err = run(["verify", str(path), "FEEDBACK-CTRL", "-q"], capsys)
    assert code == 1 and "ell_c - (beta_c + eps)" in err


def test_unknown_catalog_id(capsys):
    code, _, err = run(["classify", "S42", "UCO"], capsys)
    assert code == 1 and "S42" in err


def test_system_file_shapes_checked():
    with pytest.raises(SystemFileError, match="A must be 2x2"):
        parse_system_file({"name": "x", "n": 2, "domain": [0, 1], "A": [["0"]]})
    with pytest.raises(SystemFileError, match="B is missing"):
        parse_system_file({"name": "x", "n": 1, "p": 1, "domain": [0, 1], "A": [["0"]]})
    with pytest.raises(SystemFileError):
        parse_system_file({"name": "x", "n": 1, "domain": [1, 0], "A": [["0"]]})


def test_numbers_allowed_in_matrices():
    sf = parse_system_file({"name": "x", "n": 1, "domain": [0, 1], "A": [[-1.5]]})
    assert build_system(sf).A(0.3)[0, 0] == -1.5


def test_default_grid_fits_domain():
    g = default_grid((-10.0, 10.0))
    assert (g.t_lo, g.t_hi, g.t_count) == (-5.0, 5.0, 9)
    assert max(g.ts) + max(g.sigmas) <= 10.0
    tiny = default_grid((0.0, 1.0))
    assert max(tiny.ts) + max(tiny.sigmas) <= 1.0

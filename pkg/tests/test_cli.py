import io as _stdio
import json

import numpy as np
import pytest

from dnls import cli, fixtures, io
from dnls.grid import SpectralGrid
from dnls.scattering import scatter


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", _stdio.StringIO(stdin))
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path):
    paths = {
        "p3": tmp_path / "p3.json",
        "zero": tmp_path / "zero.json",
        "one": tmp_path / "one.json",
        "rough": tmp_path / "rough.json",
    }
    paths["p3"].write_text(io.dumps(fixtures.p3()))
    paths["zero"].write_text(io.dumps(fixtures.zero_pair()))
    paths["one"].write_text(json.dumps(io.triplets_to_dict(*fixtures.one_soliton())))
    d = scatter("qr", fixtures.zero_pair(), SpectralGrid(64))
    paths["rough"].write_text(io.dumps(d.replace(R=np.random.default_rng(0).normal(size=64) + 0j)))
    return {k: str(v) for k, v in paths.items()}


def test_scatter_zero_pair(files, capsys):
    code, out, _ = run(["scatter", "--in", files["zero"], "--grid", "64"], capsys)
    assert code == 0
    d = io.from_dict(json.loads(out))
    assert np.abs(d.T - 1).max() <= 1e-14 and np.abs(d.R).max() <= 1e-14


def test_output_is_deterministic(files, capsys):
    first = run(["scatter", "--in", files["p3"], "--grid", "256"], capsys)
    second = run(["scatter", "--in", files["p3"], "--grid", "256"], capsys)
    assert first == second


def test_grid_from_environment(files, capsys, monkeypatch):
    monkeypatch.setenv("DNLS_GRID", "128")
    code, out, _ = run(["scatter", "--in", files["zero"]], capsys)
    assert code == 0 and json.loads(out)["grid"]["M"] == 128
    monkeypatch.setenv("DNLS_GRID", "100")
    code, _, err = run(["scatter", "--in", files["zero"]], capsys)
    assert code == 2 and json.loads(err)["error"] == "InputError"


def test_scatter_invert_round_trip(files, capsys, tmp_path):
    data = tmp_path / "data.json"
    assert run(["scatter", "--in", files["p3"], "--grid", "512", "--out", str(data)], capsys)[0] == 0
    code, out, _ = run(["invert", "--in", str(data), "--window", "-8:8", "--method", "b"], capsys)
    assert code == 0
    assert io.from_dict(json.loads(out)).max_abs_difference(fixtures.p3()) <= 1e-8


def test_transform_csv(files, capsys):
    code, out, _ = run(["transform", "--in", files["p3"], "--to", "uv", "--format", "csv"], capsys)
    assert code == 0 and out.startswith("n,re_first")


def test_verify_identities_and_failed_check(files, capsys):
    code, out, _ = run(["verify", "--identities", "--in", files["p3"], "--grid", "256"], capsys)
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(["verify", "--identities", "--in", files["p3"], "--grid", "256", "--tol", "1e-30"], capsys)
    assert code == 1 and "FAIL" in out


def test_soliton_pipeline(files, capsys, monkeypatch):
    code, out, err = run(["soliton", "--in", files["one"], "--window", "-40:40", "--route", "both"], capsys)
    assert code == 0 and "z7 vs tau" in err
    code, out, _ = run(["scatter", "--grid", "1024", "--bound-states", "none"], capsys, out, monkeypatch)
    assert code == 0
    d = io.from_dict(json.loads(out))
    assert np.abs(d.R).max() <= 1e-8


def test_verify_pde(files, capsys):
    code, out, _ = run(["verify", "--pde", "--in", files["one"], "--window", "-5:5"], capsys)
    assert code == 0 and "fitted order" in out


def test_malformed_input_exit_code(files, capsys, monkeypatch):
    code, _, err = run(["scatter"], capsys, "{", monkeypatch)
    assert code == 2 and json.loads(err)["exit_code"] == 2
    assert run(["scatter", "--in", files["one"]], capsys)[0] == 2
    assert run(["invert", "--in", files["p3"]], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["scatter", "--in", "/nonexistent/file.json"], capsys)[0] == 2


def test_numerical_failure_exit_code(files, capsys):
    code, _, err = run(["invert", "--in", files["rough"], "--window", "-2:2"], capsys)
    assert code == 3 and json.loads(err)["error"] == "GridTooCoarse"

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from liftbound import catalog, cli
from liftbound.decomposition import ball_decomposition
from liftbound.io import (
    FormatError,
    chain_to_dict,
    kernel_from_dict,
    kernel_to_dict,
    lift_from_dict,
    lift_to_dict,
    load_chain,
    loads,
)
from liftbound.continuous import torus_example_kernel
from liftbound.lifting import dhn_lifted_cycle


@pytest.fixture
def two_file(tmp_path, two):
    p = tmp_path / "two.json"
    p.write_text(json.dumps(chain_to_dict(two)))
    return p


def _run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# --- formats -------------------------------------------------------------


def test_chain_round_trip(tmp_path):
    chain = catalog.lazy_cycle(6)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(chain_to_dict(chain, ball_decomposition(6, 1))))
    back, decomp = load_chain(p)
    np.testing.assert_array_equal(back.matrix, chain.matrix)
    assert decomp.jumps[0][0].states == (1, 5)


def test_syntax_error_position():
    with pytest.raises(FormatError, match=r"<input>:2:"):
        loads('{"matrix":\n [1,}')


def test_nan_rejected():
    with pytest.raises(FormatError):
        loads('{"matrix": [[NaN]]}')


def test_schema_error_path():
    from liftbound.io import chain_from_dict

    with pytest.raises(FormatError, match=r"matrix\[1\]"):
        chain_from_dict({"matrix": [[0.5, 0.5], [1.0]]})
    with pytest.raises(FormatError, match=r"matrix\[0\]\[1\]"):
        chain_from_dict({"matrix": [[0.5, "x"], [0.5, 0.5]]})


def test_kernel_round_trip():
    k = torus_example_kernel(0.1)
    back = kernel_from_dict(json.loads(json.dumps(kernel_to_dict(k))))
    assert back.jumps == k.jumps and back.constants == k.constants


def test_lift_round_trip():
    lift = dhn_lifted_cycle(5)
    back = lift_from_dict(json.loads(json.dumps(lift_to_dict(lift))))
    np.testing.assert_array_equal(back.projection, lift.projection)
    np.testing.assert_array_equal(back.hat.matrix, lift.hat.matrix)


# --- commands ------------------------------------------------------------


def test_analyze_two_state(two_file, capsys):
    code, out, _ = _run(["analyze", "--input", two_file, "--beta", "0.5"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["tau"] == 2
    assert doc["result"]["phi"]["phi"] == pytest.approx(0.25)
    assert doc["schema_version"] == "1.0" and doc["config"]["seed"] == 0


def test_validate_bad_chain(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"matrix": [[0.6, 0.5], [0.25, 0.75]]}))
    code, out, err = _run(["validate", "--input", p], capsys)
    assert code == 1
    assert "row 0 sums to 1.1" in json.loads(out)["result"]["violations"]


def test_missing_input(capsys):
    code, _, err = _run(["analyze"], capsys)
    assert code == 2 and "needs --input" in err


def test_malformed_file(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"matrix": [[1.0]')
    code, _, err = _run(["validate", "--input", p], capsys)
    assert code == 2 and "broken.json:1:" in err


def test_lift_round_trip_cli(tmp_path, capsys):
    p = tmp_path / "lift.json"
    code, _, _ = _run(["lift-dhn", "4", "--output", p], capsys)
    assert code == 0
    code, out, _ = _run(["lift-verify", "--input", p], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["lift_residual"] == 0.0
    assert doc["result"]["conductance_contraction"]["verdict"] == "pass"


def test_lift_verify_detects_bad_lift(tmp_path, capsys):
    doc = lift_to_dict(dhn_lifted_cycle(4))
    doc["hat"]["matrix"][0][0] -= 1e-3
    doc["hat"]["matrix"][0][1] += 1e-3
    p = tmp_path / "bad_lift.json"
    p.write_text(json.dumps(doc))
    code, out, _ = _run(["lift-verify", "--input", p], capsys)
    assert code == 1
    assert json.loads(out)["result"]["lift_residual"] == pytest.approx(1e-3 / 8, rel=1e-6)


def test_bounds_requires_laziness(tmp_path, capsys):
    p = tmp_path / "u.json"
    p.write_text(json.dumps(chain_to_dict(catalog.complete_uniform(4))))
    code, _, err = _run(["bounds", "--input", p, "--beta", "0.25"], capsys)
    assert code == 3 and "lazy" in err
    code, _, _ = _run(["bounds", "--input", p, "--beta", "0.25", "--waive-assumptions"], capsys)
    assert code in (0, 1)


def test_evolve_csv(tmp_path, capsys):
    p = tmp_path / "z4.json"
    p.write_text(json.dumps(chain_to_dict(catalog.lazy_cycle(4))))
    code, out, _ = _run(["evolve", "--input", p, "--start", "0,1", "--steps", "5", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# liftbound evolve")
    assert lines[1] == "t,bitmask,pi_of_S,uniform_drawn"
    assert len(lines) == 2 + 6


def test_study_csv(capsys):
    code, out, _ = _run(["study", "torus:0.1", "50,100,200", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# convergence table v1")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert len(rows) == 3
    phi = [float(r["phi_N"]) for r in rows]
    assert abs(phi[0] - phi[2]) > abs(phi[1] - phi[2])


def test_study_deterministic(capsys):
    argv = ["study", "torus:0.1", "50,100", "--beta", "0.025"]
    first = _run(argv, capsys)[1]
    second = _run(argv, capsys)[1]
    assert first == second
    assert json.loads(first)["config"]["beta"] == 0.025


def test_discretize_reports_reversibility(capsys):
    code, out, _ = _run(["discretize", "torus:0.1", "40"], capsys)
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["n_points"] == 40 and doc["reversibility_residual"] <= 1e-12


def test_torus_fourier(capsys):
    code, out, _ = _run(["torus-fourier", "0.05", "--A", "0.05", "--trials", "10000"], capsys)
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["minimal_T"] > 0 and doc["diffusive"]["passed"]


def test_console_entry_point(two_file):
    proc = subprocess.run(
        [sys.executable, "-m", "liftbound.cli", "analyze", "--input", str(two_file)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["tau"] == 2

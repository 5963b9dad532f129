import csv
import json
import math

import numpy as np
import pytest

from stokes_lab.cli import main
from stokes_lab.closed_forms import noon_profile
from stokes_lab.serialize import state_from_json
from stokes_lab.tomography import trace_distance
from stokes_lab.states import noon


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_state_noon(capsys):
    code, out, _ = run_cli(capsys, "state", "noon", "--n", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["type"] == "noon"
    assert len(payload["blocks"]) == 1
    assert payload["blocks"][0]["N"] == 3
    vec = [complex(re, im) for re, im in payload["blocks"][0]["vector"]]
    assert vec[0] == pytest.approx(1 / math.sqrt(2))


def test_state_tmsv_blocks(capsys):
    code, out, _ = run_cli(capsys, "state", "tmsv", "--nbar", "0.4", "--mmax", "15")
    assert code == 0
    payload = json.loads(out)
    labels = [b["N"] for b in payload["blocks"]]
    assert labels == list(range(0, 31, 2))
    nbar = 0.4
    assert payload["blocks"][1]["pN"] == pytest.approx(2 * nbar / (2 + nbar) ** 2, rel=1e-9)


def test_state_coherent_poissonian(capsys, tmp_path):
    out_path = tmp_path / "coherent.json"
    code, _, _ = run_cli(
        capsys, "state", "coherent", "--nbar", "2", "--nmax", "25", "--out", str(out_path)
    )
    assert code == 0
    payload = json.loads(out_path.read_text())
    state = state_from_json(payload)
    assert state.probability(2) == pytest.approx(math.exp(-2.0) * 2.0**2 / 2.0, rel=1e-9)


def test_state_rejects_bad_params(capsys):
    code, _, err = run_cli(capsys, "state", "tmsv", "--nbar", "4", "--mmax", "3")
    assert code == 1
    assert "tail" in err


def test_profile_json_matches_closed_form(capsys):
    code, out, _ = run_cli(
        capsys, "profile", "--state", "noon:n=3", "--order", "3", "--mesh", "7x9"
    )
    assert code == 0
    payload = json.loads(out)
    assert len(payload["theta_deg"]) == 7
    assert len(payload["phi_deg"]) == 9
    for i, th in enumerate(payload["theta_deg"]):
        for j, ph in enumerate(payload["phi_deg"]):
            t, p = math.radians(th), math.radians(ph)
            direction = (
                math.sin(t) * math.cos(p),
                math.sin(t) * math.sin(p),
                math.cos(t),
            )
            assert payload["values"][i][j] == pytest.approx(
                noon_profile(3, 3, direction), abs=1e-10
            )


def test_profile_csv_twin_fock_odd_order_zero(capsys, tmp_path):
    out_path = tmp_path / "mesh.csv"
    code, _, _ = run_cli(
        capsys,
        "profile", "--state", "twinfock:m=2", "--order", "3",
        "--mesh", "5x5", "--out", str(out_path),
    )
    assert code == 0
    with open(out_path) as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 25
    assert all(abs(float(row["value"])) < 1e-10 for row in rows)


def test_profile_polar_maximum(capsys):
    code, out, _ = run_cli(capsys, "profile", "--state", "su2:n=4", "--order", "1", "--mesh", "3x3")
    payload = json.loads(out)
    assert payload["values"][0][0] == pytest.approx(4.0, abs=1e-12)  # theta = 0 pole
    assert max(max(row) for row in payload["values"]) == pytest.approx(4.0, abs=1e-12)


def test_profile_deterministic_bytes(capsys):
    _, out1, _ = run_cli(capsys, "profile", "--state", "noon:n=2", "--order", "2", "--mesh", "9x9")
    _, out2, _ = run_cli(capsys, "profile", "--state", "noon:n=2", "--order", "2", "--mesh", "9x9")
    assert out1 == out2


def test_tomography_exact_round_trip(capsys):
    code, out, _ = run_cli(capsys, "tomography", "--state", "noon:n=2", "--shots", "inf")
    assert code == 0
    payload = json.loads(out)
    manifold = payload["manifolds"][0]
    assert manifold["N"] == 2
    rho = np.array([[complex(re, im) for re, im in row] for row in manifold["rho"]])
    assert trace_distance(rho, noon(2).density()) <= 1e-7
    assert manifold["diagnostics"]["projection_distance"] <= 1e-9


def test_tomography_seeded_bytes_reproducible(capsys):
    args = ("tomography", "--state", "noon:n=2", "--shots", "20000", "--seed", "7", "--records")
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_tomography_symmetric_set_fails_with_rank_report(capsys):
    code, _, err = run_cli(
        capsys,
        "tomography", "--state", "noon:n=3", "--shots", "inf", "--directions", "symmetric7",
    )
    assert code == 1
    assert "rank 4" in err


def test_verify_suites_pass(capsys):
    code, out, _ = run_cli(capsys, "verify", "algebra")
    assert code == 0
    assert "[PASS]" in out and "[FAIL]" not in out


def test_verify_unknown_suite_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "nonsense"])


def test_factorials_csv(capsys):
    code, out, _ = run_cli(capsys, "factorials", "--max-n", "6")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    lookup = {(r["kind"], int(r["n"]), int(r["k"])): r["value"] for r in rows}
    assert lookup[("f", 4, 2)] == "-1"
    assert lookup[("f", 3, 1)] == "-1/4"
    assert lookup[("F", 4, 2)] == "1"


def test_state_spec_file_round_trip(capsys, tmp_path):
    out_path = tmp_path / "state.json"
    run_cli(capsys, "state", "noon", "--n", "2", "--out", str(out_path))
    code, out, _ = run_cli(capsys, "profile", "--state", str(out_path), "--order", "2", "--mesh", "3x5")
    assert code == 0
    payload = json.loads(out)
    equator = payload["values"][1]  # theta = 90 deg row
    assert equator[0] == pytest.approx(4.0, abs=1e-10)  # 2 cos 0 + 2

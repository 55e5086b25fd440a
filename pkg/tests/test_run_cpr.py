import json

import numpy as np
import pandas as pd
import pytest

import automation.verification_suites as verification_suites
from automation import run_cpr
from automation.run_cpr import EXIT_INPUT, EXIT_OK, EXIT_PROPERTY, EXIT_STALL, main, parse_config
from automation.verification_suites import SuiteResult
from configuration.config import SOLVER
from conftest import kernel_hermitian
from core.errors import ConfigurationError, SolverStall
from core.matrices import DEFAULT_TOLERANCES, expm_h
from expectations.conditional import ConditionalExpectation
from expectations.partitions import BlockPartition
from utils.document_utils import matrix_from_document, read_json_document, save_matrix


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_parse_config_defaults():
    config = parse_config(["verify"])
    assert config.suite == "all"
    assert config.dims == [4]
    assert config.norm_kind().label == "frobenius"
    assert config.tolerances() == DEFAULT_TOLERANCES
    solver = config.solver_config()
    assert solver.max_iterations == SOLVER["max_iterations"]
    assert solver.damping_shrink == SOLVER["damping_shrink"]
    assert solver.residual_tol == SOLVER["residual_tol"]


def test_parse_config_tolerance_flags():
    config = parse_config([
        "decompose", "--membership-tol", "1e-9", "--equality-tol", "1e-7", "--gap", "1e-4",
        "--pd-floor", "1e-11", "--inv-floor", "1e-11", "--repair-limit", "1e-5",
        "--herm-tol", "1e-9", "--max-iterations", "50", "--damping-shrink", "0.25",
    ])
    tolerances = config.tolerances()
    assert tolerances.membership_tol == 1e-9
    assert tolerances.equality_tol == 1e-7
    assert tolerances.gap == 1e-4
    assert tolerances.pd_floor == 1e-11
    assert tolerances.inv_floor == 1e-11
    assert tolerances.repair_limit == 1e-5
    assert tolerances.herm_tol == 1e-9
    assert tolerances.unitary_tol == DEFAULT_TOLERANCES.unitary_tol
    solver = config.solver_config()
    assert solver.max_iterations == 50
    assert solver.damping_shrink == 0.25


@pytest.mark.parametrize("argv", [
    [],
    ["verify", "--samples", "0"],
    ["verify", "--suite", "everything"],
    ["verify", "--dim", "2,3"],
    ["curvature", "--norm", "s3"],
    ["curvature", "--dim", "two"],
    ["decompose", "--partition", "2,2", "--chain", "1,1,1,1;2,2"],
    ["decompose", "--equality-tol", "-1"],
    ["decompose", "--damping-shrink", "1.5"],
    ["verify", "--max-iterations", "0"],
])
def test_usage_errors(argv):
    with pytest.raises(ConfigurationError):
        parse_config(argv)
    assert main(argv) == EXIT_INPUT


def test_generate_is_deterministic(capsys):
    code, first = run(["generate", "--dim", "3", "--role", "unitary", "--seed", "42"], capsys)
    assert code == EXIT_OK
    _, second = run(["generate", "--dim", "3", "--role", "unitary", "--seed", "42"], capsys)
    assert first.out == second.out
    u = matrix_from_document(json.loads(first.out))
    assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12)


def test_decompose_identity(tmp_path, capsys):
    source = tmp_path / "identity.json"
    save_matrix(str(source), np.eye(4))
    code, output = run(["decompose", "--input", str(source), "--partition", "2,2"], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert np.allclose(matrix_from_document(document["u"]), np.eye(4))
    assert np.allclose(matrix_from_document(document["X"][0]), 0)
    assert np.allclose(matrix_from_document(document["Y1"]), 0)
    assert document["chain"] == {"dim": 4, "partitions": [[2, 2]]}


def test_decompose_constructed_input(tmp_path, rng):
    E = ConditionalExpectation(BlockPartition(4, (2, 2)))
    X = kernel_hermitian(E, rng)
    Y = 0.5 * E.random_hermitian(rng)
    source, target = tmp_path / "g.json", tmp_path / "out" / "factors.json"
    save_matrix(str(source), expm_h(X) @ expm_h(Y))

    assert main(["decompose", "--input", str(source), "--partition", "2,2", "--out", str(target)]) == EXIT_OK
    document = read_json_document(str(target))
    assert document["residual"] <= 1e-8
    assert np.allclose(matrix_from_document(document["X"][0]), X, atol=1e-8)
    assert np.allclose(matrix_from_document(document["Y1"]), Y, atol=1e-8)


def test_decompose_along_chain(tmp_path, capsys):
    source = tmp_path / "g.json"
    assert main(["generate", "--dim", "4", "--seed", "19", "--out", str(source)]) == EXIT_OK
    code, output = run(["decompose", "--input", str(source), "--chain", "1,1,1,1;2,2"], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert len(document["X"]) == 2
    assert document["residual"] <= 1e-8


def test_decompose_singular_input(tmp_path, caplog):
    source = tmp_path / "singular.json"
    save_matrix(str(source), np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert main(["decompose", "--input", str(source)]) == EXIT_INPUT
    assert "singular" in caplog.text


def test_decompose_needs_input():
    assert main(["decompose"]) == EXIT_INPUT


def test_decompose_missing_file(tmp_path, caplog):
    assert main(["decompose", "--input", str(tmp_path / "nope.json")]) == EXIT_INPUT
    assert "not found" in caplog.text


def test_solver_stall_exit_code(tmp_path, monkeypatch):
    def stalled(*args, **kwargs):
        raise SolverStall("no progress", residual_history=[1.0, 0.5], level=2)

    monkeypatch.setattr(run_cpr, "extended_split", stalled)
    source = tmp_path / "g.json"
    save_matrix(str(source), np.eye(2))
    assert main(["decompose", "--input", str(source)]) == EXIT_STALL


def test_verify_suite(capsys):
    code, output = run(["verify", "--suite", "core", "--dim", "3", "--samples", "2", "--seed", "1"], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert document["passed"] is True
    assert set(document["suites"]) == {"core"}
    assert "✅ PASS | core: " in output.err
    assert "checks passed" in output.err


def test_verify_splitting_suite(capsys):
    code, output = run(["verify", "--suite", "splitting", "--dim", "4", "--samples", "2", "--seed", "1"], capsys)
    assert code == EXIT_OK, output.err


def test_verify_reports_are_byte_identical(tmp_path):
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    for target in (first, second):
        argv = ["verify", "--suite", "all", "--dim", "2", "--samples", "3", "--seed", "7", "--out", str(target)]
        assert main(argv) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_verify_reports_property_failure(monkeypatch, capsys):
    table = pd.DataFrame({
        "property": ["idempotence"],
        "residual": [1.0],
        "threshold": [1e-10],
        "passed": [False],
    })
    monkeypatch.setattr(
        verification_suites, "run_suites", lambda *args, **kwargs: [SuiteResult("core", 2, 1, 0, table)]
    )
    code, output = run(["verify", "--suite", "core", "--dim", "2"], capsys)
    assert code == EXIT_PROPERTY
    assert "❌ FAIL | core: idempotence" in output.err
    assert json.loads(output.out)["passed"] is False


def test_orbit_coadjoint_identity(tmp_path, capsys):
    x0, g = tmp_path / "x0.json", tmp_path / "g.json"
    save_matrix(str(x0), np.diag([1j, -1j]))
    save_matrix(str(g), np.eye(2))
    code, output = run(["orbit", "--orbit", "coadjoint", "--x0", str(x0), "--input", str(g)], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert document["sigma_fixed"] is True
    assert np.allclose(matrix_from_document(document["orbit_point"]), np.diag([1j, -1j]))
    assert document["finsler_norm"] == "schatten:2"
    projections = [matrix_from_document(p) for p in document["eigenprojections"]]
    assert len(projections) == len(document["blocks"]) == 2
    assert np.allclose(sum(projections), np.eye(2))


def test_orbit_stiefel_round_trips(capsys):
    code, output = run(["orbit", "--orbit", "stiefel", "--dim", "3", "--partition", "1,+", "--seed", "5"], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert document["tangent_round_trip"] <= 1e-8
    assert document["sigma_fixed"] is True
    assert document["partition"] == {"dim": 3, "blocks": [1], "corner": True}


def test_orbit_flag_with_invertible_element(capsys):
    code, output = run(["orbit", "--orbit", "flag", "--dim", "3", "--role", "invertible", "--seed", "2"], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert len(document["point"]) == 3
    assert document["sigma_fixed"] is False


def test_orbit_flag_rejects_corner():
    assert main(["orbit", "--orbit", "flag", "--dim", "3", "--partition", "1,+"]) == EXIT_INPUT


def test_orbit_stiefel_rejects_several_blocks(caplog):
    assert main(["orbit", "--orbit", "stiefel", "--dim", "4", "--partition", "1,1,+"]) == EXIT_INPUT
    assert "single block" in caplog.text


def test_curvature_command(capsys):
    code, output = run(["curvature", "--dim", "1,2", "--norm", "s1", "--samples", "20"], capsys)
    assert code == EXIT_OK
    document = json.loads(output.out)
    assert document["norm"] == "schatten:1"
    assert [report["dim"] for report in document["reports"]] == [1, 2]

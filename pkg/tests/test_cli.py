import json
import subprocess
import sys

import numpy as np
import pytest

from pseudoherm.cli import run
from pseudoherm.ensembles import random_metric_matrix, random_unitary
from pseudoherm.io import matrix_from_json, matrix_to_json, vector_to_json
from pseudoherm.metric import Metric, intertwiner_from_unitary

from conftest import BELL, G_EX, H_EX, SWAP


def write_matrix(path, M):
    path.write_text(json.dumps(matrix_to_json(M)))
    return path.name


def inline(M):
    d = matrix_to_json(M)
    rows = ", ".join(f"[{re!r}, {im!r}]" for re, im in d["data"])
    return f"{{rows = {d['rows']}, cols = {d['cols']}, data = [{rows}]}}"


def vec(v):
    return "[" + ", ".join(f"[{re!r}, {im!r}]" for re, im in vector_to_json(v)) + "]"


def cfg(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def invoke(*argv):
    return run([str(a) for a in argv])


def test_metric_command(tmp_path, capsys):
    write_matrix(tmp_path / "H.json", H_EX)
    c = cfg(tmp_path, "m.toml", 'hamiltonian = "H.json"\nlambda = [0.5, 1.0]\nmetric_out = "G.json"\n')
    assert invoke("metric", c, "--out", "report.json") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["residual"] < 1e-10
    assert report["command"] == "metric" and len(report["config_sha256"]) == 64
    G = matrix_from_json(json.loads((tmp_path / "G.json").read_text()))
    np.testing.assert_allclose(G, G_EX, atol=1e-12)


def test_metric_hermitian_gives_identity(tmp_path, capsys):
    write_matrix(tmp_path / "H.json", np.array([[1.0, 0.5j], [-0.5j, 2.0]]))
    c = cfg(tmp_path, "m.toml", 'hamiltonian = "H.json"\n')
    assert invoke("metric", c) == 0
    report = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(matrix_from_json(report["G"]), np.eye(2), atol=1e-10)


def test_metric_zero_lambda_exit_2(tmp_path, capsys):
    write_matrix(tmp_path / "H.json", H_EX)
    c = cfg(tmp_path, "m.toml", 'hamiltonian = "H.json"\nlambda = [1.0, 0.0]\n')
    assert invoke("metric", c, "--out", "r.json") == 2
    assert "lambda must be strictly positive" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_partition_commands(tmp_path, capsys):
    rng = np.random.default_rng(5)
    G = Metric(random_metric_matrix(4, rng))
    Gp = Metric(random_metric_matrix(4, rng))
    write_matrix(tmp_path / "G.json", G.G)
    write_matrix(tmp_path / "Gp.json", Gp.G)
    W = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    write_matrix(tmp_path / "W.json", W)
    write_matrix(tmp_path / "T.json", intertwiner_from_unitary(W, Gp, G).T)
    write_matrix(tmp_path / "S.json", SWAP)

    base = 'dims = [2, 2]\nG = "G.json"\nG_prime = "Gp.json"\n'
    assert invoke("partition", cfg(tmp_path, "a.toml", base + 'T = "T.json"\n')) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "equivalent"
    assert invoke("partition", cfg(tmp_path, "b.toml", base + 'U = "W.json"\n')) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "equivalent" and "witness" in out
    assert invoke("partition", cfg(tmp_path, "c.toml", base + 'U = "S.json"\n')) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "not_equivalent"
    assert invoke("partition", cfg(tmp_path, "d.toml", 'dims = [2, 2]\n')) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "equivalent"
    assert invoke("partition", cfg(tmp_path, "e.toml", 'dims = [2, "x"]\n')) == 2


def test_partition_hamiltonian_mode(tmp_path, capsys):
    rng = np.random.default_rng(8)
    from pseudoherm.ensembles import random_real_spectrum

    H, _ = random_real_spectrum(4, rng)
    write_matrix(tmp_path / "H.json", H)
    text = 'dims = [2, 2]\nmode = "hamiltonian"\nhamiltonian = "H.json"\nsearch_budget = 2\n'
    text += 'G = {hamiltonian = "H.json", lambda = [1.0, 2.0, 1.0, 1.0]}\n'
    text += 'G_prime = {hamiltonian = "H.json", lambda = [0.3, 1.7, 2.0, 0.5]}\n'
    c = cfg(tmp_path, "h.toml", text)
    assert invoke("partition", c) == 2  # seed is mandatory
    assert "seed" in capsys.readouterr().err
    code = invoke("partition", c, "--seed", 1)
    verdict = json.loads(capsys.readouterr().out)["verdict"]
    assert (code, verdict) in ((0, "equivalent"), (4, "undetermined"))
    same = 'dims = [2, 2]\nmode = "hamiltonian"\nhamiltonian = "H.json"\nseed = 0\nG = {hamiltonian = "H.json"}\n'
    same += 'G_prime = {hamiltonian = "H.json"}\n'
    assert invoke("partition", cfg(tmp_path, "s.toml", same)) == 0


def test_tomo_round_trip(tmp_path, capsys):
    rho = np.outer(BELL, BELL.conj())
    write_matrix(tmp_path / "rho.json", rho)
    sim = cfg(tmp_path, "s.toml", 'mode = "simulate"\nn_qubits = 2\nrho = "rho.json"\nshots = 10000\nseed = 3\n')
    assert invoke("tomo", sim, "--out", "data.jsonl") == 0
    lines = (tmp_path / "data.jsonl").read_text().splitlines()
    assert len(lines) == 9 * 4
    capsys.readouterr()
    assert invoke("tomo", sim) == 0
    captured = capsys.readouterr()
    assert captured.out == (tmp_path / "data.jsonl").read_text()
    assert captured.err.strip() == "36 records"
    rec = cfg(tmp_path, "r.toml", 'mode = "reconstruct"\nn_qubits = 2\ndataset = "data.jsonl"\nreference = "rho.json"\n')
    assert invoke("tomo", rec, "--out", "rec.json") == 0
    report = json.loads((tmp_path / "rec.json").read_text())
    assert report["trace_distance"] <= 0.05


def test_tomo_exact_and_singular(tmp_path, capsys):
    exact = 'mode = "reconstruct"\nn_qubits = 1\nexpectations = {I = 1.0, X = 0.0, Y = 0.0, Z = 1.0}\n'
    assert invoke("tomo", cfg(tmp_path, "e.toml", exact)) == 0
    rho = matrix_from_json(json.loads(capsys.readouterr().out)["rho"])
    assert np.max(np.abs(rho - np.diag([1, 0]))) <= 1e-10
    singular = 'mode = "reconstruct"\nn_qubits = 1\nframe_labels = ["I", "X", "Y"]\nexpectations = {I = 1.0, X = 0.0, Y = 0.0}\n'
    assert invoke("tomo", cfg(tmp_path, "x.toml", singular)) == 3


def test_nosignal_command(tmp_path, capsys):
    rng = np.random.default_rng(2)
    G = random_metric_matrix(4, rng)
    text = f'dims = [2, 2]\nmetric = {inline(G)}\npsi = {vec(BELL)}\n'
    text += f'bob_factors = [{inline(np.diag([1.0, 0.0]))}, {inline(np.diag([0.0, 1.0]))}]\n'
    assert invoke("nosignal", cfg(tmp_path, "n.toml", text), "--out", "ns.json") == 0
    out = capsys.readouterr().out
    assert "holds True" in out
    value = out.split("max_deviation ")[1].strip()
    mantissa = value.split("e")[0].replace(".", "").lstrip("-")
    assert len(mantissa) == 3
    assert json.loads((tmp_path / "ns.json").read_text())["holds"] is True
    incomplete = f'dims = [2, 2]\npsi = {vec(BELL)}\nbob_factors = [{inline(np.diag([1.0, 0.0]))}]\n'
    assert invoke("nosignal", cfg(tmp_path, "i.toml", incomplete)) == 2


def test_dynamics_command(tmp_path, capsys):
    write_matrix(tmp_path / "He.json", H_EX)
    write_matrix(tmp_path / "G.json", G_EX)
    psi = np.array([1.0, 0.0])
    text = f'effective = "He.json"\nmetric = "G.json"\npsi0 = {vec(psi)}\ndt = 1e-3\nsteps = 1000\ncheckpoint_every = 100\nseed = 0\n'
    assert invoke("dynamics", cfg(tmp_path, "d.toml", text), "--out", "traj.json") == 0
    report = json.loads((tmp_path / "traj.json").read_text())
    assert max(abs(x - 1) for x in report["G_norm"]["mean"]) <= 1e-8
    assert report["t"][-1] == pytest.approx(1.0)
    capsys.readouterr()

    sz = np.diag([1.0, -1.0])
    write_matrix(tmp_path / "sz.json", sz)
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    unitary = f'hamiltonian = "sz.json"\npsi0 = {vec(plus)}\ndt = 1e-2\nsteps = 10\nseed = 0\n'
    assert invoke("dynamics", cfg(tmp_path, "u.toml", unitary)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["jump_counts"][-1] == 0

    too_big = unitary.replace("dt = 1e-2", "dt = 0.5")
    assert invoke("dynamics", cfg(tmp_path, "b.toml", too_big), "--out", "never.json") == 2
    assert not (tmp_path / "never.json").exists()


def test_gns_command(tmp_path, capsys):
    pure = f"rho = {inline(np.diag([1.0, 0.0]))}\n"
    assert invoke("gns", cfg(tmp_path, "p.toml", pure)) == 0
    assert json.loads(capsys.readouterr().out)["hilbert_dim"] == 2
    mixed = f"rho = {inline(np.diag([0.3, 0.7]))}\n"
    assert invoke("gns", cfg(tmp_path, "m.toml", mixed)) == 0
    assert json.loads(capsys.readouterr().out)["hilbert_dim"] == 4
    bad = f"rho = {inline(np.diag([1.5, -0.5]))}\n"
    assert invoke("gns", cfg(tmp_path, "b.toml", bad)) == 2


def test_missing_or_malformed_config(tmp_path, capsys):
    assert invoke("gns", tmp_path / "nope.toml") == 2
    assert invoke("gns", cfg(tmp_path, "x.toml", "rho = [")) == 2
    assert invoke("gns", cfg(tmp_path, "y.toml", 'rho = "missing.json"\n')) == 2


def test_entry_point_module(tmp_path):
    c = cfg(tmp_path, "g.toml", f"rho = {inline(np.eye(2) / 2)}\n")
    proc = subprocess.run([sys.executable, "-m", "pseudoherm", "gns", c], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["hilbert_dim"] == 4


def test_separate_processes_are_byte_identical(tmp_path):
    L = inline(np.array([[0, 1], [0, 0]]))
    text = f'hamiltonian = {inline(np.diag([1.0, -1.0]))}\njumps = [{L}]\n'
    text += f'psi0 = {vec(np.array([0.6, 0.8]))}\ndt = 0.01\nsteps = 50\nreplicas = 64\nseed = 9\n'
    c = cfg(tmp_path, "d.toml", text)
    outs = [subprocess.run([sys.executable, "-m", "pseudoherm", "dynamics", c], capture_output=True).stdout for _ in range(2)]
    assert outs[0] and outs[0] == outs[1]

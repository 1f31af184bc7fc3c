import subprocess
import sys

import numpy as np
import pytest

from invreg import cli, harness
from invreg.errors import NumericalError
from invreg.oplearn import ExpertSet, save_experts_csv


def run(args, capsys=None):
    code = cli.main([str(a) for a in args])
    return code


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_radon_svd(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["radon-svd", "--kmax", 2, "--m", 16, "--nt", 32, "--ntheta", 32, "--out", out]) == 0
    rows = body(out)
    assert rows[0] == "k,l,gamma_analytic,gamma_numeric,residual"
    from invreg.radon import analytic_singular_system
    assert len(rows) == 1 + len(analytic_singular_system(2, 16, 32, 32))


def test_out_directory(tmp_path):
    assert run(["greedy", "--atoms", 3, "--out", tmp_path]) == 0
    assert (tmp_path / "greedy.csv").is_file()


def test_config_and_overrides(tmp_path):
    cfgp = tmp_path / "sel.cfg"
    cfgp.write_text("rule = morozov\ngrid = [1.0, 1e-6, 13]\ntau = 1.2\n")
    out = tmp_path / "s.csv"
    assert run(["select", "--config", cfgp, "--set", "rule=gcv", "--out", out]) == 0
    assert "rule=gcv" in out.read_text().splitlines()[1]


def test_grid_file(tmp_path):
    g = tmp_path / "g.csv"
    np.savetxt(g, np.geomspace(1, 1e-6, 9), delimiter=",", header="alpha")
    out = tmp_path / "s.csv"
    assert run(["select", "--rule", "gcv", "--grid", g, "--out", out]) == 0
    assert len(body(out)) == 10


def test_learn_gs(tmp_path):
    r = np.random.default_rng(0)
    A = r.standard_normal((4, 4))
    E = ExpertSet.from_operator(lambda x: A @ x, r.standard_normal((3, 4)))
    ep = tmp_path / "e.csv"
    save_experts_csv(E, ep)
    out = tmp_path / "l.csv"
    assert run(["learn", "--method", "gs", "--experts", ep, "--out", out]) == 0
    X = np.array([[float(v) for v in ln.split(",")[1:]] for ln in body(out)[1:]])
    np.testing.assert_allclose(X, E.X, atol=1e-10)


@pytest.mark.parametrize("args", [
    ["nosuch"],
    ["radon-svd", "--kmax", "seven"],
    ["learn", "--experts", "missing.csv"],
    ["nnfit", "--neurons", "0"],
    ["greedy", "--atoms", "0"],
    ["rate-tikhonov", "--deltas", "[0.1,0.01]"],
    ["select", "--rule", "quasi"],
    ["select", "--set", "noequals"],
])
def test_argument_errors(tmp_path, args):
    assert run(args + ["--out", tmp_path / "x.csv"] if args[0] != "nosuch" else args) == cli.EXIT_ARGUMENT


def test_numerical_exit(tmp_path, monkeypatch):
    def boom(cfg):
        raise NumericalError("diverged")
    monkeypatch.setitem(harness.EXPERIMENTS, "greedy", boom)
    assert run(["greedy", "--out", tmp_path / "x.csv"]) == cli.EXIT_NUMERICAL


def test_rerun_identical(tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"{i}.csv"
        assert run(["iterate", "--method", "compare", "--problem", "scalar", "--workers", 1 + 2 * i, "--out", p]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_console_script(tmp_path):
    out = tmp_path / "t.csv"
    proc = subprocess.run([sys.executable, "-m", "invreg.cli", "tikhonov", "--problem", "diag", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == str(out)
    proc = subprocess.run([sys.executable, "-m", "invreg.cli", "tikhonov", "--alpha", "x"], capture_output=True, text=True)
    assert proc.returncode == 2 and "argument error" in proc.stderr

import numpy as np
import pytest

from invreg import harness as h
from invreg.errors import ArgumentError
from invreg.problems import DiagonalOperator, diagonal_tikhonov_exact
from invreg.variational import HybridConfig, TikhonovConfig, hybrid_minimize, tikhonov_minimize


def cfg(name, **params):
    return h.ExperimentConfig(name, params)


class TestConfig:
    def test_parse(self):
        c = h.parse_config("experiment = select\n# comment\nrule = gcv  # trailing\ngrid = [1.0, 1e-6, 13]\nflag = true\n")
        assert c.name == "select"
        assert c.params == {"rule": "gcv", "grid": [1.0, 1e-6, 13], "flag": True}

    def test_bad_line(self):
        with pytest.raises(ArgumentError):
            h.parse_config("rule gcv")

    def test_missing_file(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("experiment = learn\nexperts = nope.csv\n")
        with pytest.raises(ArgumentError):
            h.load_config(p)

    def test_relative_paths(self, tmp_path):
        (tmp_path / "g.csv").write_text("alpha\n1.0\n0.1\n")
        p = tmp_path / "c.cfg"
        p.write_text("experiment = select\ngrid_file = g.csv\n")
        c = h.load_config(p)
        assert c.path("grid_file") == str(tmp_path / "g.csv")

    def test_hash_ignores_workers(self):
        a = cfg("x", n=3, workers=1)
        b = cfg("x", n=3, workers=4)
        assert a.hash == b.hash
        assert a.hash != cfg("x", n=4).hash
        assert a.hash != cfg("y", n=3).hash


class TestRates:
    def test_tikhonov_rate(self):
        res, table = h.run_rate_tikhonov(cfg("rate-tikhonov"))
        assert abs(res.exponent - 0.5) <= 0.15
        assert len(res.pairs) == 4 and all(res.used)
        # the noise-free leg is reported but not fitted
        assert table.rows[-1][0] == 0.0 and table.rows[-1][3] == 0
        assert res.floor < min(e for _, e in res.pairs) / 2

    def test_two_deltas(self):
        with pytest.raises(ArgumentError):
            h.run_rate_tikhonov(cfg("rate-tikhonov", deltas=[1e-1, 1e-2]))

    def test_increasing_deltas(self):
        with pytest.raises(ArgumentError):
            h.run_rate_tikhonov(cfg("rate-tikhonov", deltas=[1e-3, 1e-2, 1e-1]))

    @pytest.mark.parametrize("kind", ["cexample", "aexample"])
    def test_fem_rate(self, kind):
        res, _ = h.run_rate_fem(cfg("rate-fem", problem=kind))
        assert abs(res.exponent - 2.0) <= 0.3

    def test_fem_constant_degenerate(self):
        res, _ = h.run_rate_fem(cfg("rate-fem", constant_parameter=True, f=0.0))
        assert "degenerate" in res.flags and all(e == 0 for _, e in res.pairs)

    def test_fem_bad_sizes(self):
        with pytest.raises(ArgumentError):
            h.run_rate_fem(cfg("rate-fem", ns=[16, 48, 64]))


class TestHybrid:
    def test_table(self):
        res, table = h.run_hybrid_comparison(cfg("hybrid"))
        rows = table.rows
        assert res["envelope_ok"]
        # lambda = 0 reproduces the plain column
        assert all(r[1] == r[3] for r in rows)
        feat = [r[5] for r in rows]
        assert feat[-1] < 1e-3 * feat[0]

    def test_exact_surrogate_never_worse(self):
        s = np.geomspace(1, 1e-2, 20)
        P = DiagonalOperator(s)
        xt = s * np.linspace(1, -1, 20)
        r = np.random.default_rng(5)
        for d in (1e-1, 1e-2, 1e-3, 1e-4):
            e = r.standard_normal(20)
            yd = P.apply(xt) + d * e / np.linalg.norm(e)
            plain = diagonal_tikhonov_exact(P, yd, np.zeros(20), d)
            xh, _ = hybrid_minimize(P, yd, HybridConfig(d, np.zeros(20), prior_op=P))
            assert np.linalg.norm(xh - xt) <= np.linalg.norm(plain - xt)
            xp, _ = tikhonov_minimize(P, yd, TikhonovConfig(d, np.zeros(20)))
            np.testing.assert_allclose(xp, plain, atol=1e-10)


class TestIterativeCompare:
    def test_scalar_all_discrepant(self):
        c = cfg("iterate", method="compare", problem="scalar", delta=1e-3)
        rows, table = h.run_iterative_compare(c)
        assert len(rows) == len(h.ITERATIVE_METHODS)
        for m, k, err, res, reason in rows:
            assert reason == "discrepancy", m
            assert res <= 2.5 * 1e-3

    def test_failure_recorded(self):
        rows, _ = h.run_iterative_compare(cfg("iterate", method="compare", problem="scalar", methods=["landweber", "irli-bogus"]))
        assert rows[0][4] == "discrepancy" and rows[1][4] == "failed:ArgumentError"

    def test_single_method_log(self):
        log, table = h.run_iterate(cfg("iterate", method="landweber", n=32, f=50.0, delta=1e-2))
        assert table.columns == ["k", "residual", "error", "mu_or_alpha"]
        assert log.stop_reason == "discrepancy"


class TestDeterminism:
    @pytest.mark.parametrize("name,params", [
        ("rate-tikhonov", {"n": 64, "repeats": 1}),
        ("select", {"rule": "lcurve"}),
        ("iterate", {"method": "compare", "problem": "scalar"}),
        ("greedy", {}),
        ("nnfit", {"restarts": 2}),
    ])
    def test_bytes(self, tmp_path, name, params):
        outs = []
        for w in (1, 3):
            p = tmp_path / f"{w}.csv"
            h.run_experiment(name, cfg(name, workers=w, **params), p)
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]
        first = outs[0].decode().splitlines()[0]
        assert first.startswith("# config_hash=")

    def test_csv_format(self, tmp_path):
        p = tmp_path / "t.csv"
        h.run_experiment("radon-svd", cfg("radon-svd", kmax=2, m=16, nt=32, ntheta=32), p)
        raw = p.read_bytes()
        assert b"\r" not in raw
        raw.decode("utf-8")
        header = raw.decode().splitlines()
        assert header[2] == "k,l,gamma_analytic,gamma_numeric,residual"


def test_select_rules_run():
    for rule in ("apriori", "morozov", "gcv", "lcurve", "erm"):
        rep, table = h.run_select(cfg("select", rule=rule, grid=[1.0, 1e-6, 13], expert_count=3))
        assert rep.alpha > 0
    with pytest.raises(ArgumentError):
        h.run_select(cfg("select", rule="quasi"))


def test_learned_alpha_map():
    z = np.linspace(0, 1, 6)[:, None]
    alphas = np.exp(-3 * z[:, 0])
    f = h.learned_alpha_map(z, alphas, reg=1e-10)
    assert f(np.array([[0.4]]))[0] == pytest.approx(np.exp(-1.2), rel=1e-3)


def test_unknown_experiment(tmp_path):
    with pytest.raises(ArgumentError):
        h.run_experiment("nope", cfg("nope"), tmp_path / "x.csv")

"""Fitting, goodness of fit and model comparison."""

import math

import numpy as np
import pytest

from countfam import (
    CountData,
    DomainError,
    EvaluationError,
    RngStream,
    compare,
    fit_grid,
    fit_simplex,
    gof_chisq,
    loglik,
    make_special_case,
    sample_fpd,
    sample_wpd,
)
from countfam.inference import _pooled_cells


class TestCountData:
    def test_from_values(self):
        d = CountData.from_values([0, 1, 1, 3])
        assert d.histogram == {0: 1, 1: 2, 3: 1}
        assert d.n_total == 4
        assert d.mean() == pytest.approx(1.25)

    def test_validation(self):
        with pytest.raises(DomainError):
            CountData({-1: 2}, 2)
        with pytest.raises(DomainError):
            CountData({0: 0}, 0)
        with pytest.raises(DomainError):
            CountData({0: 2}, 3)


class TestLoglik:
    def test_poisson_point(self):
        d = CountData({0: 1}, 1)
        assert loglik("poisson", (2.0,), d) == pytest.approx(-2.0, rel=1e-12)

    def test_poisson_mle_at_mean(self):
        rng = np.random.default_rng(4)
        d = CountData.from_values(rng.poisson(3.0, size=2000))
        m = d.mean()
        best = loglik("fpd", (1.0, m), d)
        assert best >= loglik("fpd", (1.0, m * 1.05), d)
        assert best >= loglik("fpd", (1.0, m * 0.95), d)

    def test_zero_probability_is_minus_inf(self):
        # generalized Poisson with negative dispersion has finite support
        d = CountData({40: 1}, 1)
        assert loglik("genpoisson", (2.0, -0.4), d) == -math.inf

    def test_model_ii_true_beats_perturbed(self):
        p = make_special_case("model_ii", lam=2.0, beta=2.0, gamma=1.0)
        wins = 0
        n_sim = 100
        for i in range(n_sim):
            d = CountData.from_values(sample_wpd(p, 1000, RngStream(500 + i)).values)
            at_true = loglik("model_ii", (2.0, 2.0, 1.0), d)
            perturbed = max(
                loglik("model_ii", (2.4, 2.0, 1.0), d),
                loglik("model_ii", (1.6, 2.0, 1.0), d),
            )
            wins += at_true >= perturbed
        assert wins >= 95


class TestFitGrid:
    def test_degenerate_grid(self):
        rng = np.random.default_rng(42)
        d = CountData.from_values(rng.poisson(1.5, size=400))
        res = fit_grid("fpd", d, grid=[(1.0, 1.5)])
        assert res.params == {"alpha": 1.0, "mu": 1.5}
        assert res.converged
        assert res.evaluations == 1

    def test_recovery_smoke(self):
        batch = sample_fpd(0.85, 3.6, 3000, RngStream(1))
        d = CountData.from_values(batch.values)
        res = fit_grid("fpd", d)
        assert abs(res.params["alpha"] - 0.85) <= 0.06
        assert abs(res.params["mu"] - 3.6) <= 0.07 * 3.6

    def test_poisson_data_hits_boundary(self):
        rng = np.random.default_rng(7)
        d = CountData.from_values(rng.poisson(4.0, size=5000))
        res = fit_grid("fpd", d)
        assert res.params["alpha"] >= 0.97

    def test_dict_grid(self):
        rng = np.random.default_rng(43)
        d = CountData.from_values(rng.poisson(2.0, size=400))
        res = fit_grid("fpd", d, grid={"alpha": [0.3], "mu": np.linspace(1.0, 4.0, 21)})
        assert res.params["alpha"] == 0.3
        assert res.evaluations == 21

    def test_reproducible(self):
        d = CountData.from_values(sample_fpd(0.7, 2.0, 800, RngStream(2)).values)
        r1 = fit_grid("fpd", d)
        r2 = fit_grid("fpd", d)
        assert r1 == r2


class TestFitSimplex:
    def test_poisson_mle(self):
        rng = np.random.default_rng(12)
        d = CountData.from_values(rng.poisson(3.0, size=4000))
        for init in ((0.5,), (10.0,)):
            res = fit_simplex("poisson", d, init=init)
            assert res.params["lam"] == pytest.approx(d.mean(), abs=1e-4)
            assert res.converged

    def test_bounds_respected(self):
        d = CountData.from_values(np.random.default_rng(3).poisson(2.0, size=500))
        res = fit_simplex("negbinom", d)
        assert res.params["r"] > 0
        assert 0.0 < res.params["p"] < 1.0

    def test_init_outside_domain(self):
        d = CountData.from_values([1, 2, 3])
        with pytest.raises(DomainError):
            fit_simplex("poisson", d, init=(-1.0,))

    def test_com_poisson_recovers_underdispersion(self):
        p = make_special_case("com_poisson", lam=5.0, nu=2.0)
        hits = 0
        for i in range(20):
            d = CountData.from_values(sample_wpd(p, 5000, RngStream(900 + i)).values)
            res = fit_simplex("com_poisson", d)
            hits += res.params["nu"] > 1.0
        assert hits >= 19

    def test_model_i_refit_at_least_truth(self):
        p = make_special_case("model_i", lam=1.0, beta=0.5, nu=0.1)
        for i in range(5):
            d = CountData.from_values(sample_wpd(p, 5000, RngStream(700 + i)).values)
            res = fit_simplex("model_i", d)
            assert res.loglik >= loglik("model_i", (1.0, 0.5, 0.1), d) - 2.0


class TestGof:
    def test_perfect_fit(self):
        # geometric(1/2) frequencies chosen so observed == expected cell by cell
        hist = {x: 2 ** (9 - x) for x in range(9)}
        hist[9] = 2  # matches the open tail cell mass exactly
        d = CountData(hist, 1024)
        chi2, df, p = gof_chisq("negbinom", (1.0, 0.5), d)
        assert chi2 == pytest.approx(0.0, abs=1e-9)
        assert p == pytest.approx(1.0)

    def test_pooling_preserves_totals(self):
        obs = np.array([1.0, 3.0, 20.0, 30.0, 2.0, 1.0, 0.0])
        exp = np.array([2.0, 4.0, 21.0, 28.0, 1.5, 0.4, 0.1])
        pobs, pexp = _pooled_cells(obs, exp, 5.0)
        assert pobs.sum() == pytest.approx(obs.sum(), abs=1e-12)
        assert pexp.sum() == pytest.approx(exp.sum(), abs=1e-12)
        assert (pexp >= 5.0).all()

    def test_df_rule(self):
        rng = np.random.default_rng(8)
        d = CountData.from_values(rng.poisson(4.0, size=2000))
        chi2, df, p = gof_chisq("poisson", (4.0,), d)
        obs = d.observed_vector()
        from countfam.inference import MODELS

        table = MODELS["poisson"].table((4.0,), d.max_value)
        expd = np.asarray(table) * d.n_total
        expd[-1] = d.n_total * max(1.0 - float(np.sum(table[:-1])), 0.0)
        pobs, pexp = _pooled_cells(obs, expd, 5.0)
        assert df == len(pexp) - 1 - 1

    def test_no_pool_keeps_cells(self):
        rng = np.random.default_rng(9)
        d = CountData.from_values(rng.poisson(4.0, size=2000))
        c1, df1, _ = gof_chisq("poisson", (4.0,), d, pool=True)
        c2, df2, _ = gof_chisq("poisson", (4.0,), d, pool=False)
        assert df2 >= df1

    def test_calibration_light(self):
        # raw-data MLE plugged into binned chi-square runs mildly
        # anti-conservative (between chi2(k-2) and chi2(k-1)), so the
        # per-replication miss rate sits near 2 percent
        rng = np.random.default_rng(123)
        ok = 0
        for _ in range(20):
            d = CountData.from_values(rng.poisson(5.0, size=10_000))
            res = fit_simplex("poisson", d)
            ok += res.p_value > 0.01
        assert ok >= 17

    def test_misspecified_rejected(self):
        rng = np.random.default_rng(5)
        d = CountData.from_values(rng.poisson(5.0, size=10_000))
        mean = d.mean()
        res = fit_grid(
            "fpd", d,
            grid={"alpha": [0.3], "mu": mean * math.gamma(1.3) * np.linspace(0.8, 1.2, 41)},
        )
        assert res.p_value < 0.01

    def test_too_few_cells(self):
        d = CountData({0: 50, 1: 50}, 100)
        with pytest.raises(EvaluationError):
            gof_chisq("model_ii", (1.0, 1.0, 1.0), d)


class TestCompare:
    def test_needs_two(self):
        d = CountData.from_values([1, 2, 3])
        with pytest.raises(DomainError):
            compare(["poisson"], d)

    def test_fpd_data_ranks_fpd_first(self):
        d = CountData.from_values(sample_fpd(0.85, 3.6, 4000, RngStream(77)).values)
        rows = compare(["negbinom", "fpd"], d)
        assert rows[0]["model"] == "fpd"
        assert rows[0]["p_value"] > rows[1]["p_value"]

    def test_order_invariant(self):
        d = CountData.from_values(sample_fpd(0.9, 2.0, 1500, RngStream(88)).values)
        r1 = compare(["poisson", "negbinom"], d)
        r2 = compare(["negbinom", "poisson"], d)
        assert [r["model"] for r in r1] == [r["model"] for r in r2]

    def test_unknown_model_row(self):
        rng = np.random.default_rng(44)
        d = CountData.from_values(rng.poisson(2.0, size=400))
        rows = compare(["poisson", "nosuchmodel"], d)
        errs = [r for r in rows if r.get("error")]
        assert len(errs) == 1
        assert rows[-1]["error"] is not None

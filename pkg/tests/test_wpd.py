"""Gamma-ratio weighted Poisson family: normalizer, recursions, dispersion."""

import math

import numpy as np
import pytest

from countfam import (
    ConvergenceError,
    DomainError,
    EvaluationError,
    SpecialCase,
    WpdParams,
    dispersion_classify,
    eta,
    log_weight,
    make_special_case,
    sufficient_condition_check,
    turan_check,
    weight,
    weight_fn,
    wpd_factorial_moments,
    wpd_factorial_moments_faa,
    wpd_pmf,
    wpd_pmf_recursive,
    wpd_pmf_table,
    wpd_summary,
)


def brute_eta(p, kmax=400):
    return math.fsum(
        math.exp(k * math.log(p.lam) - math.lgamma(k + 1) + log_weight(p, k))
        for k in range(kmax)
        if log_weight(p, k) > -math.inf
    )


CATALOG = [
    make_special_case("poisson", lam=2.0),
    make_special_case("com_poisson", lam=2.0, nu=2.0),
    make_special_case("com_poisson", lam=2.0, nu=0.5),
    make_special_case("hyper_poisson", lam=2.0, beta=3.0),
    make_special_case("alt_mittag_leffler", lam=2.0, alpha=0.6, beta=0.8),
    make_special_case("fractional_com_poisson", lam=2.0, alpha=0.6, beta=0.8, nu=1.3),
    make_special_case("alt_generalized_ml", lam=2.0, alpha=0.7, beta=0.9, gamma=1.5),
    make_special_case("model_i", lam=1.0, beta=0.5, nu=0.1),
    make_special_case("model_i", lam=2.0, beta=0.1, nu=1.1),
    make_special_case("model_i_2param", lam=2.0, beta=2.0),
    make_special_case("model_ii", lam=2.0, beta=2.0, gamma=1.0),
    make_special_case("model_ii_2param", beta=2.0, gamma=1.0),
]


class TestParams:
    def test_validation(self):
        with pytest.raises(DomainError):
            WpdParams(0.0, 0.0, 1.0, 1.0, 1.0)  # alpha + beta = 0
        with pytest.raises(DomainError):
            WpdParams(1.0, 1.0, 0.0, 1.0, 1.0)  # gamma = 0 with beta > 0
        with pytest.raises(DomainError):
            WpdParams(1.0, 1.0, 1.0, -0.1, 1.0)
        with pytest.raises(DomainError):
            WpdParams(1.0, 1.0, 1.0, 1.0, 0.0)

    def test_beta_zero_model_i_limit(self):
        p = WpdParams(1.0, 0.0, 0.0, 1.5, 1.0, tag=SpecialCase.MODEL_I)
        assert log_weight(p, 0) == -math.inf  # zero cell carries no weight
        assert weight(p, 1) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            WpdParams(1.0, 0.0, 0.0, 0.5, 1.0)  # nu < 1 not admitted

    def test_special_cases(self):
        p = make_special_case("com_poisson", lam=2.0, nu=1.5)
        assert (p.alpha, p.beta, p.gamma, p.nu, p.lam) == (1.0, 1.0, 1.0, 1.5, 2.0)
        p = make_special_case("hyper_poisson", lam=2.0, beta=0.7)
        assert (p.alpha, p.beta, p.gamma, p.nu, p.lam) == (1.0, 0.7, 1.0, 1.0, 2.0)
        p = make_special_case("model_i_2param", lam=1.0, beta=2.0)
        assert p.gamma == 2.0 and p.nu == 2.0 and p.alpha == 1.0
        p = make_special_case("model_ii_2param", beta=2.0, gamma=0.5)
        assert p.lam == 1.0 and p.nu == 1.0 and p.alpha == 1.0

    def test_special_case_rejects_bad_args(self):
        with pytest.raises(DomainError):
            make_special_case("poisson", lam=2.0, nu=1.0)
        with pytest.raises(DomainError):
            make_special_case("com_poisson", lam=2.0)


class TestWeight:
    def test_poisson_unity(self):
        p = make_special_case("poisson", lam=3.0)
        for k in (0, 1, 5, 20):
            assert weight(p, k) == pytest.approx(1.0, rel=1e-14)

    def test_gamma_ratio(self):
        p = WpdParams(1.0, 2.0, 1.0, 1.0, 1.0)
        assert weight(p, 3) == pytest.approx(math.gamma(4.0) / math.gamma(5.0), rel=1e-14)

    def test_half_powers(self):
        p = WpdParams(1.0, 0.5, 0.5, 2.0, 1.0)
        assert weight(p, 0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-13)

    def test_overflow_guard(self):
        p = WpdParams(1.0, 1.0, 1.0, 0.0, 1.0)  # w(k) = k!
        with pytest.raises(EvaluationError):
            weight(p, 200)


class TestEta:
    def test_poisson(self):
        e = eta(make_special_case("poisson", lam=2.0))
        assert e.value == pytest.approx(math.exp(2.0), rel=1e-13)
        assert e.remainder_bound < 1e-12
        assert e.value >= math.exp(e.log_value) - 1e-12

    def test_model_i_squared_factorials(self):
        p = make_special_case("model_i", lam=1.0, beta=1.0, nu=2.0)
        brute = math.fsum(1.0 / math.factorial(k) ** 2 for k in range(60))
        assert eta(p).value == pytest.approx(brute, rel=1e-13)

    @pytest.mark.parametrize("p", CATALOG, ids=lambda p: f"{p.tag}-{p.lam}")
    def test_remainder_bound_dominates(self, p):
        e = eta(p)
        extended = brute_eta(p, kmax=10 * max(e.k_trunc, 4) + 20)
        assert abs(e.value - extended) <= e.remainder_bound + 1e-13 * extended

    def test_budget_refusal(self):
        # lam^(1/nu) astronomically large: certificate unreachable
        p = make_special_case("model_i", lam=10.0, beta=0.5, nu=0.1)
        with pytest.raises((ConvergenceError, EvaluationError)):
            eta(p)


class TestPmf:
    def test_poisson_value(self):
        p = make_special_case("poisson", lam=1.0)
        assert wpd_pmf(p, 0) == pytest.approx(math.exp(-1.0), rel=1e-13)

    def test_com_poisson_brute(self):
        p = make_special_case("com_poisson", lam=1.0, nu=2.0)
        brute = (1.0 / math.factorial(2) ** 2) / math.fsum(
            1.0 / math.factorial(j) ** 2 for j in range(60)
        )
        assert wpd_pmf(p, 2) == pytest.approx(brute, rel=1e-12)

    def test_hyper_poisson_brute(self):
        p = make_special_case("hyper_poisson", lam=1.0, beta=2.0)
        # w(k) = 1/(k+1), eta = sum 1/(k+1)! = e - 1
        assert wpd_pmf(p, 0) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-12)

    @pytest.mark.parametrize("p", CATALOG, ids=lambda p: f"{p.tag}-{p.lam}")
    def test_normalization(self, p):
        table = wpd_pmf_table(p)
        assert float(table.sum()) == pytest.approx(1.0, abs=1e-8)

    def test_matches_brute_normalizer(self):
        for p in CATALOG[:6]:
            brute = brute_eta(p)
            for x in (0, 1, 4):
                lw = log_weight(p, x)
                expect = math.exp(x * math.log(p.lam) - math.lgamma(x + 1) + lw) / brute
                assert wpd_pmf(p, x) == pytest.approx(expect, rel=1e-10)


class TestRecursion:
    def test_model_i_poisson_degenerate(self):
        p = make_special_case("model_i", lam=2.0, beta=1.0, nu=1.0)
        table = wpd_pmf_recursive(p, 12)
        for x in range(13):
            assert table[x] == pytest.approx(
                math.exp(-2.0 + x * math.log(2.0) - math.lgamma(x + 1)), rel=1e-12
            )

    def test_model_ii_gamma_cancel(self):
        p = make_special_case("model_ii", lam=2.0, beta=1.3, gamma=1.3)
        table = wpd_pmf_recursive(p, 12)
        for x in range(13):
            assert table[x] == pytest.approx(
                math.exp(-2.0 + x * math.log(2.0) - math.lgamma(x + 1)), rel=1e-12
            )

    @pytest.mark.parametrize(
        "p",
        [c for c in CATALOG if c.tag in (
            SpecialCase.POISSON, SpecialCase.COM_POISSON, SpecialCase.HYPER_POISSON,
            SpecialCase.MODEL_I, SpecialCase.MODEL_I_2PARAM, SpecialCase.MODEL_II,
            SpecialCase.MODEL_II_2PARAM,
        )],
        ids=lambda p: f"{p.tag}-{p.nu}-{p.beta}",
    )
    def test_recursive_matches_direct(self, p):
        table = wpd_pmf_recursive(p, 25)
        direct = np.array([wpd_pmf(p, x) for x in range(26)])
        np.testing.assert_allclose(table, direct, rtol=1e-12, atol=1e-300)

    def test_unsupported_tag(self):
        p = make_special_case("fractional_com_poisson", lam=1.0, alpha=0.5, beta=1.0, nu=2.0)
        with pytest.raises(DomainError):
            wpd_pmf_recursive(p, 5)


class TestFactorialMoments:
    def test_poisson(self):
        a = wpd_factorial_moments(make_special_case("poisson", lam=1.5), 3)
        for r in range(4):
            assert a[r] == pytest.approx(1.5**r, rel=1e-11)

    def test_order_zero(self):
        for p in CATALOG[:4]:
            assert wpd_factorial_moments(p, 0)[0] == 1.0

    def test_model_ii_first_moment_vs_pmf(self):
        p = make_special_case("model_ii", lam=1.0, beta=1.0, gamma=0.5)
        a = wpd_factorial_moments(p, 1)
        table = wpd_pmf_table(p, cum_target=1.0 - 1e-14)
        direct = float(np.sum(np.arange(len(table)) * table))
        assert a[1] == pytest.approx(direct, rel=1e-9)

    @pytest.mark.parametrize("p", CATALOG[:8], ids=lambda p: f"{p.tag}-{p.lam}-{p.nu}")
    def test_vs_pmf_sums(self, p):
        a = wpd_factorial_moments(p, 4)
        table = wpd_pmf_table(p, cum_target=1.0 - 1e-15)
        xs = np.arange(len(table), dtype=float)
        for k in range(1, 5):
            ff = np.ones_like(xs)
            for i in range(k):
                ff = ff * (xs - i)
            assert float(np.sum(ff * table)) == pytest.approx(a[k], rel=2e-6), (p, k)

    def test_faa_path_agrees(self):
        # lam must stay inside the reciprocal normalizer's disc of
        # analyticity for the Bell-polynomial route to converge
        cases = [
            make_special_case("poisson", lam=2.0),
            make_special_case("com_poisson", lam=1.0, nu=2.0),
            make_special_case("hyper_poisson", lam=1.0, beta=2.0),
            make_special_case("model_i_2param", lam=0.5, beta=2.0),
            make_special_case("model_ii", lam=1.0, beta=2.0, gamma=1.0),
        ]
        for p in cases:
            a_eta = wpd_factorial_moments(p, 3)
            a_faa = wpd_factorial_moments_faa(p, 3)
            for r in range(4):
                assert a_faa[r] == pytest.approx(a_eta[r], rel=1e-8), (p, r)

    def test_faa_poisson_first(self):
        a = wpd_factorial_moments_faa(make_special_case("poisson", lam=1.7), 1)
        assert a[1] == pytest.approx(1.7, rel=1e-10)


class TestDispersion:
    @pytest.mark.parametrize(
        "p,expected",
        [
            (make_special_case("com_poisson", lam=5.0, nu=2.0), "underdispersed"),
            (make_special_case("com_poisson", lam=5.0, nu=0.5), "overdispersed"),
            (make_special_case("hyper_poisson", lam=5.0, beta=2.0), "overdispersed"),
            (make_special_case("hyper_poisson", lam=5.0, beta=0.5), "underdispersed"),
            (make_special_case("model_i", lam=1.0, beta=0.5, nu=0.1), "overdispersed"),
            (make_special_case("model_i", lam=5.0, beta=0.1, nu=1.1), "underdispersed"),
            (make_special_case("model_ii", lam=2.0, beta=2.0, gamma=1.0), "overdispersed"),
            (make_special_case("model_ii", lam=2.0, beta=0.5, gamma=1.0), "underdispersed"),
            (make_special_case("poisson", lam=2.0), "equidispersed"),
        ],
        ids=lambda v: v if isinstance(v, str) else f"{v.tag}",
    )
    def test_classification(self, p, expected):
        assert dispersion_classify(p) == expected
        if expected != "equidispersed":
            s = wpd_summary(p)
            assert (s.fisher_index > 1.0) == (expected == "overdispersed")

    def test_turan_boundary(self):
        assert turan_check(lambda k: 1.0, 1.5) == "boundary"

    def test_turan_factorial_weights(self):
        assert turan_check(lambda k: float(math.factorial(min(k, 170))), 0.5) == "overdispersed"

    def test_turan_agrees_with_classifier(self):
        p = make_special_case("com_poisson", lam=5.0, nu=2.0)
        assert turan_check(weight_fn(p), 5.0) == "underdispersed"
        p2 = make_special_case("hyper_poisson", lam=5.0, beta=2.0)
        assert turan_check(weight_fn(p2), 5.0) == "overdispersed"

    def test_turan_sequence_input(self):
        seq = [1.0] * 80
        assert turan_check(seq, 2.0) == "boundary"
        with pytest.raises(ConvergenceError):
            turan_check([1.0, 2.0, 4.0], 2.0)  # far too short

    def test_sufficient_condition(self):
        assert sufficient_condition_check(lambda k: 1.0, 10) == "inconclusive"
        assert sufficient_condition_check(lambda k: float(math.factorial(k)), 10) == "overdispersed"
        com2 = weight_fn(make_special_case("com_poisson", lam=1.0, nu=2.0))
        assert sufficient_condition_check(com2, 10) == "underdispersed"

    def test_sufficient_condition_short_sequence(self):
        with pytest.raises(DomainError):
            sufficient_condition_check([1.0, 1.0], 10)


class TestExponentialFamilyForm:
    def test_model_i_rank(self):
        # log pmf(x) + log x! must be affine in (log lam, 1 - nu) for fixed
        # beta: every such vector lies in the span of {x, lgamma(x+beta), 1}
        beta = 0.7
        xs = np.arange(0, 21, dtype=float)
        rows = []
        for lam in (0.5, 1.0, 2.0):
            for nu in (0.3, 1.0, 1.7):
                p = make_special_case("model_i", lam=lam, beta=beta, nu=nu)
                table = wpd_pmf_recursive(p, 20)
                rows.append(np.log(table) + [math.lgamma(x + 1) for x in xs])
        m = np.array(rows)
        sv = np.linalg.svd(m, compute_uv=False)
        assert sv[3] < 1e-8 * sv[0]


class TestSampleShapes:
    def test_figure_regimes_have_expected_dispersion(self):
        over = wpd_summary(make_special_case("model_i", lam=1.0, beta=0.5, nu=0.1))
        under = wpd_summary(make_special_case("model_i", lam=5.0, beta=0.1, nu=1.1))
        assert over.fisher_index > 1.0
        assert under.fisher_index < 1.0

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from levy_lda.frequency import (
    BetaBinomial,
    BetaNegBinomial,
    Binomial,
    NegBinomial,
    Poisson,
    PoissonGamma,
    log_pmf,
    pmf,
    sample_count,
    survival,
    zero_prob,
)

from conftest import BENCH

mp.mp.dps = 40


def mp_pmf(f, n):
    """Direct high-precision pmf from factorials and Beta functions."""
    n = mp.mpf(n)
    if isinstance(f, Binomial):
        return mp.binomial(f.M, n) * mp.mpf(f.p) ** n * (1 - mp.mpf(f.p)) ** (f.M - n)
    if isinstance(f, BetaBinomial):
        return mp.binomial(f.M, n) * mp.beta(f.a + n, f.b + f.M - n) / mp.beta(f.a, f.b)
    if isinstance(f, NegBinomial):
        return mp.binomial(n + f.r - 1, n) * (1 - mp.mpf(f.p)) ** f.r * mp.mpf(f.p) ** n
    if isinstance(f, BetaNegBinomial):
        return mp.binomial(n + f.r - 1, n) * mp.beta(f.a + f.r, f.b + n) / mp.beta(f.a, f.b)
    if isinstance(f, Poisson):
        return mp.exp(-mp.mpf(f.lam)) * mp.mpf(f.lam) ** n / mp.factorial(n)
    if isinstance(f, PoissonGamma):
        # integrate the Poisson pmf against the Gamma(shape a, rate b) density
        a, b = mp.mpf(f.a), mp.mpf(f.b)
        dens = lambda lam: b**a * lam ** (a - 1) * mp.exp(-b * lam) / mp.gamma(a)  # noqa: E731
        return mp.quad(
            lambda lam: mp.exp(-lam) * lam**n / mp.factorial(n) * dens(lam), [0, 1, 10, mp.inf]
        )
    raise TypeError(f)


def cap(f):
    """Summation cap: ``M``, else ``10 * mean + 200``; infinite-mean laws get ``10**6``."""
    if f.support_max is not None:
        return f.support_max
    mean = f.mean()
    return int(10 * mean + 200) if math.isfinite(mean) else 10**6


class TestExamples:
    def test_poisson_log_pmf_zero(self):
        assert log_pmf(Poisson(0.1), 0) == pytest.approx(-0.1, rel=1e-15)

    def test_beta_binomial_log_pmf_zero(self):
        assert log_pmf(BetaBinomial(12, 1, 5), 0) == pytest.approx(math.log(5 / 17), rel=1e-14)

    def test_poisson_gamma_log_pmf_zero(self):
        assert log_pmf(PoissonGamma(1, 0.1), 0) == pytest.approx(math.log(0.1 / 1.1), rel=1e-14)

    def test_binomial_normalization(self):
        f = Binomial(12, 0.1)
        assert math.fsum(pmf(f, np.arange(13))) == pytest.approx(1.0, abs=1e-14)

    def test_negative_binomial_pmf_one(self):
        assert pmf(NegBinomial(2, 0.1), 1) == pytest.approx(0.162, rel=1e-14)

    def test_negative_binomial_pmf_one_by_frequency(self):
        draws = sample_count(NegBinomial(2, 0.1), np.random.default_rng(11), 10**6)
        freq = np.mean(draws == 1)
        assert abs(freq - 0.162) < 3 * math.sqrt(0.162 * 0.838 / 10**6)

    def test_poisson_mode(self):
        n = np.arange(60)
        assert int(np.argmax(pmf(Poisson(10), n))) in (9, 10)

    def test_zero_prob_binomial(self):
        assert zero_prob(Binomial(12, 0.1)) == pytest.approx(0.9**12, rel=1e-14)
        assert zero_prob(Binomial(12, 0.1)) == pytest.approx(0.28243, abs=5e-6)

    def test_zero_prob_poisson(self):
        assert zero_prob(Poisson(0.1)) == pytest.approx(0.904837, abs=5e-7)

    def test_zero_prob_beta_negative_binomial(self):
        assert zero_prob(BetaNegBinomial(2, 1, 5)) == pytest.approx(1 / 21, rel=1e-14)

    def test_zero_prob_beta_negative_binomial_by_mixing(self):
        rng = np.random.default_rng(12)
        q = rng.beta(1, 5, 10**6)
        est = q**2
        assert abs(est.mean() - 1 / 21) < 3 * est.std() / 1e3

    @pytest.mark.parametrize(
        "f,expected",
        [
            (Binomial(12, 0.6), 0.4**12),
            (BetaBinomial(12, 5, 1), float(mp.beta(5, 13) / mp.beta(5, 1))),
            (NegBinomial(10, 0.6), 0.4**10),
            (BetaNegBinomial(10, 5, 1), float(mp.beta(15, 1) / mp.beta(5, 1))),
            (Poisson(10), math.exp(-10)),
            (PoissonGamma(1, 10), 10 / 11),
        ],
    )
    def test_zero_prob_closed_forms(self, f, expected):
        assert zero_prob(f) == pytest.approx(expected, rel=1e-13)

    def test_binomial_sample_bounded(self):
        assert sample_count(Binomial(12, 0.9), np.random.default_rng(1), 10**5).max() <= 12

    def test_poisson_sample_mean(self):
        draws = sample_count(Poisson(10), np.random.default_rng(2), 10**6)
        assert abs(draws.mean() - 10) < 3 * math.sqrt(10 / 10**6)

    def test_poisson_gamma_empirical_pmf(self):
        f = PoissonGamma(1, 0.1)
        draws = sample_count(f, np.random.default_rng(3), 10**6)
        k = np.arange(draws.max() + 1)
        emp = np.bincount(draws) / draws.size
        assert np.max(np.abs(emp - pmf(f, k))) < 0.002


class TestErrors:
    def test_count_above_trials(self):
        with pytest.raises(ValueError):
            log_pmf(Binomial(12, 0.1), 13)
        with pytest.raises(ValueError):
            pmf(BetaBinomial(12, 1, 5), 13)

    def test_negative_count(self):
        for f in BENCH.values():
            with pytest.raises(ValueError):
                log_pmf(f, -1)

    def test_non_integer_count(self):
        with pytest.raises(ValueError):
            pmf(Poisson(1.0), 1.5)

    @pytest.mark.parametrize(
        "ctor",
        [
            lambda: Binomial(0, 0.5),
            lambda: Binomial(3, 1.0),
            lambda: BetaBinomial(3, 0.0, 1.0),
            lambda: NegBinomial(1.5, 0.5),
            lambda: NegBinomial(2, 0.0),
            lambda: BetaNegBinomial(2, 1.0, -1.0),
            lambda: Poisson(0.0),
            lambda: Poisson(math.inf),
            lambda: PoissonGamma(1.0, 0.0),
        ],
    )
    def test_invalid_parameters(self, ctor):
        with pytest.raises(ValueError):
            ctor()


class TestAgainstDirectFormula:
    @pytest.mark.parametrize("name", sorted(BENCH))
    def test_pmf_matches_mpmath(self, name):
        f = BENCH[name]
        ns = sorted({0, 1, 2, 5, 10, min(cap(f), 40)})
        if f.support_max is not None:
            ns = [n for n in ns if n <= f.support_max] + [f.support_max]
        for n in ns:
            assert pmf(f, n) == pytest.approx(float(mp_pmf(f, n)), rel=1e-11), n

    def test_large_count_log_pmf(self):
        # far tail of a heavy law: log space keeps the value finite and accurate
        f = BetaNegBinomial(2, 1, 5)
        n = 10**9
        exact = mp.log(mp_pmf(f, n))
        assert log_pmf(f, n) == pytest.approx(float(exact), rel=1e-12)

    @pytest.mark.parametrize("lam", [0.1, 10.0, 25.0, 1e4, 1e6, 1e9])
    def test_poisson_log_pmf_large_rate(self, lam):
        L = mp.mpf(lam)
        for n in sorted({0, 1, 19, 20, 21, round(0.9 * lam), round(lam), round(1.1 * lam)}):
            want = float(-L + n * mp.log(L) - mp.loggamma(n + 1))
            assert abs(log_pmf(Poisson(lam), n) - want) <= 1e-14 * max(1.0, abs(want))

    @given(st.integers(1, 400), st.floats(0.01, 0.99))
    def test_binomial_log_pmf_property(self, M, p):
        f = Binomial(M, p)
        n = M // 3
        assert log_pmf(f, n) == pytest.approx(float(mp.log(mp_pmf(f, n))), rel=1e-10, abs=1e-10)


class TestNormalization:
    @pytest.mark.parametrize("name", sorted(BENCH))
    def test_sums_to_one(self, name):
        f = BENCH[name]
        n = np.arange(1, cap(f) + 1)
        head = zero_prob(f) + math.fsum(pmf(f, n))
        # the exact remainder closes the sum for every law
        assert head + survival(f, cap(f)) == pytest.approx(1.0, abs=1e-10)
        if not isinstance(f, BetaNegBinomial):
            assert head == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("name", ["low_beta_negative_binomial", "high_beta_negative_binomial"])
    def test_beta_negative_binomial_tail_beyond_cap(self, name):
        # P(N > k) decays like k^-a, so no short cap closes the sum to 1e-10
        f = BENCH[name]
        k = cap(f)
        assert survival(f, k) > 1e-10
        far = 10**7
        assert survival(f, 2 * far) / survival(f, far) == pytest.approx(2.0**-f.a, rel=1e-3)

    @given(st.floats(0.05, 50.0), st.floats(0.05, 50.0))
    def test_poisson_gamma_normalization_property(self, a, b):
        f = PoissonGamma(a, b)
        n = np.arange(0, int(10 * f.mean() + 200 + 50 * a / b**0.5 + 50 / b))
        assert math.fsum(pmf(f, n)) + survival(f, n[-1]) == pytest.approx(1.0, abs=1e-10)


class TestSurvival:
    @pytest.mark.parametrize("name", sorted(BENCH))
    def test_matches_brute_sum(self, name):
        f = BENCH[name]
        top = cap(f)
        p = pmf(f, np.arange(top + 1))
        for k in (0, 1, 3, 7, 11, min(top, 30)):
            tail = 1.0 - math.fsum(p[: k + 1])
            assert survival(f, k) == pytest.approx(tail, abs=1e-13)

    def test_bounded_support_is_zero_at_top(self):
        assert survival(Binomial(12, 0.6), 12) == 0.0
        assert survival(BetaBinomial(12, 5, 1), 12) == 0.0

    @pytest.mark.parametrize("k", [10**4, 10**8, 10**12])
    def test_beta_negative_binomial_far_tail(self, k):
        f = BetaNegBinomial(2, 1, 5)
        # exact tail P(N > k) = E[P(NB > k | q)] by quadrature over q ~ Beta(1, 5)
        k = mp.mpf(k)
        inner = lambda q: mp.betainc(k + 1, 2, 0, 1 - q, regularized=True)  # noqa: E731
        exact = mp.quad(lambda q: inner(q) * 5 * (1 - q) ** 4, [0, 1 / k, 10 / k, 1])
        assert survival(f, int(k)) == pytest.approx(float(exact), rel=1e-8)


class TestMixtures:
    @pytest.mark.parametrize("f", [PoissonGamma(1, 0.1), PoissonGamma(1, 10), PoissonGamma(2.5, 0.7)])
    def test_poisson_gamma_is_negative_binomial(self, f):
        if float(f.a).is_integer():
            nb = NegBinomial(int(f.a), 1.0 / (1.0 + f.b))
            n = np.arange(0, 500)
            np.testing.assert_allclose(pmf(f, n), pmf(nb, n), rtol=1e-13, atol=0)
        n = np.arange(0, 30)
        exact = np.array([float(mp_pmf(f, int(k))) for k in n])
        np.testing.assert_allclose(pmf(f, n), exact, rtol=1e-11)

    @given(st.integers(1, 40), st.floats(0.02, 0.98))
    def test_beta_binomial_tends_to_binomial(self, M, p):
        c = 1e4
        n = np.arange(M + 1)
        gap = np.abs(pmf(BetaBinomial(M, c * p, c * (1 - p)), n) - pmf(Binomial(M, p), n))
        assert gap.max() < 0.01

    @pytest.mark.parametrize(
        "name",
        ["low_beta_binomial", "high_beta_binomial", "low_beta_negative_binomial",
         "high_beta_negative_binomial", "low_poisson_gamma", "high_poisson_gamma"],
    )
    def test_compositional_sampling(self, name):
        f = BENCH[name]
        size = 10**6
        draws = sample_count(f, np.random.default_rng(8), size)
        top = min(40, f.support_max or 40)
        emp = np.bincount(np.minimum(draws, top), minlength=top + 1)[: top + 1] / size
        p = np.append(pmf(f, np.arange(top)), survival(f, top - 1))
        se = np.sqrt(p * (1 - p) / size)
        ok = np.abs(emp - p) <= 3 * se + 1e-12
        assert ok.all(), np.nonzero(~ok)
        # familywise check over all bins together
        keep = p * size >= 5
        observed = emp[keep] * size
        expected = p[keep] * size
        expected *= observed.sum() / expected.sum()
        assert stats.chisquare(observed, expected).pvalue > 1e-3

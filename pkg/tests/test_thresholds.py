import math

import numpy as np
import pytest

from blocksdp import thresholds as th
from blocksdp.errors import DomainError


class TestTau:
    def test_frozen_value(self):
        # 3 / ln 4, evaluated at 40 digits and frozen
        assert th.tau(4, 1) == pytest.approx(2.1640425613334453, abs=1e-12)

    def test_log_ratio_one(self):
        b = 2.0
        assert th.tau(math.e * b, b) == pytest.approx(b * (math.e - 1), rel=1e-12)

    def test_sandwich_between_geometric_and_arithmetic_mean(self):
        a, b = 9.0, 2.0
        t = th.tau(a, b)
        assert math.sqrt(a * b) < t < (a + b) / 2

    def test_domain(self):
        with pytest.raises(DomainError):
            th.tau(1.0, 1.0)
        with pytest.raises(DomainError):
            th.tau(2.0, 0.0)


class TestEta:
    def test_balanced_closed_form(self):
        assert th.eta(0.5, 16, 4) == pytest.approx(2.0, abs=1e-10)

    def test_symmetry_about_half(self):
        assert abs(th.eta(0.3, 8, 2) - th.eta(0.7, 8, 2)) <= 1e-10

    def test_limit_at_zero(self):
        # (a+b)/2 - tau log(e sqrt(ab)/tau) at (9, 1), 40-digit evaluation
        assert th.eta(0.0, 9, 1) == pytest.approx(2.0640570345612770, abs=1e-12)
        assert th.eta(1e-6, 9, 1) == pytest.approx(th.eta(0.0, 9, 1), abs=1e-4)

    def test_grid_convexity_and_symmetry(self):
        rhos = np.arange(0.05, 0.951, 0.05)
        for a, b in ((8, 2), (16, 1), (5, 4)):
            vals = np.array([th.eta(r, a, b) for r in rhos])
            second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
            assert second.min() >= -1e-8
            sym = np.array([th.eta(1 - r, a, b) for r in rhos])
            assert np.abs(vals - sym).max() <= 1e-10
            assert vals.argmin() == np.abs(rhos - 0.5).argmin()


class TestChernoffExponent:
    def test_matches_eta_at_converse_slope(self):
        rho, a, b = 0.3, 8.0, 2.0
        alpha = -th.tau(a, b) * (1 - 2 * rho)
        g = th.chernoff_exponent_g(rho, 1 - rho, a, b, alpha)
        assert g == pytest.approx(th.eta(rho, a, b), abs=1e-12)

    def test_matches_eta_on_grid(self):
        a, b = 12.0, 3.0
        for rho in np.linspace(0.05, 0.5, 10):
            alpha = -th.tau(a, b) * (1 - 2 * rho)
            g = th.chernoff_exponent_g(rho, 1 - rho, a, b, alpha)
            assert g == pytest.approx(th.eta(rho, a, b), abs=1e-10)

    def test_one_sided_branch_scales_rate_function(self):
        for rho1 in (0.2, 0.5, 0.9):
            for a in (3.0, 7.0):
                for alpha in (0.1, 0.5 * rho1 * a, rho1 * a):
                    g = th.chernoff_exponent_g(rho1, 0.0, a, 5.0, alpha)
                    assert g == pytest.approx(rho1 * th.rate_I(a, alpha / rho1),
                                              rel=1e-12)

    def test_zero_at_mean(self):
        assert th.chernoff_exponent_g(0.4, 0.6, 5, 2, 0.4 * 5 - 0.6 * 2) == \
            pytest.approx(0.0, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            th.chernoff_exponent_g(0.5, 0.5, 4, 1, 2.0)   # above the mean
        with pytest.raises(DomainError):
            th.chernoff_exponent_g(0.0, 0.0, 4, 1, -1.0)


class TestRateFunction:
    def test_zero_iff_d_equals_mu(self):
        assert th.rate_I(3, 3) == pytest.approx(0.0, abs=1e-15)
        assert th.rate_I(3, 2.9) > 0

    def test_zero_log_zero_convention(self):
        assert th.rate_I(1, 0) == 1.0

    def test_frozen_value(self):
        # 4 - 2 (1 + ln 2)
        assert th.rate_I(4, 2) == pytest.approx(0.6137056388801094, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            th.rate_I(0, 1)
        with pytest.raises(DomainError):
            th.rate_I(1, -0.1)


class TestCensoredThreshold:
    def test_noiseless(self):
        assert th.censored_threshold(0.0) == 1.0

    def test_tenth(self):
        assert th.censored_threshold(0.1) == pytest.approx(2.5, abs=1e-12)

    def test_uninformative_labels(self):
        assert th.censored_threshold(0.5) == math.inf

    def test_domain(self):
        with pytest.raises(DomainError):
            th.censored_threshold(0.6)


class TestSolvePsi:
    def test_explicit_value(self):
        assert th.psi_explicit(4, 1) == pytest.approx(0.5820212806667226, abs=1e-12)

    def test_rate_functions_cross_at_tau(self):
        t = th.tau(4, 1)
        assert th.rate_I(4, t) == pytest.approx(th.rate_I(1, t), abs=1e-12)

    def test_root_dominates_explicit_solution(self):
        psi = th.solve_psi(4, 1)
        assert psi >= th.psi_explicit(4, 1)
        assert abs(th.rate_I(1, 1 + psi) - th.rate_I(4, 1 + 2 * psi)) <= 1e-9
        assert 1 < 1 + 2 * psi < 4

    @pytest.mark.parametrize("a,b", [(4, 1), (9, 2), (20, 5), (3, 2.5)])
    def test_root_property_on_grid(self, a, b):
        psi = th.solve_psi(a, b)
        assert abs(th.rate_I(b, b + psi) - th.rate_I(a, b + 2 * psi)) <= 1e-8
        assert b < b + 2 * psi < a


class TestGeneralRecoveryCheck:
    def test_single_cluster_drops_pair_conditions(self):
        rep = th.general_recovery_check(20, 1, [0.8], 1.0, 1.0)
        assert rep.active == (True, False, False, True)  # outliers present
        rep2 = th.general_recovery_check(20, 1, [1.0], 1.0, 1.0)
        assert rep2.active == (True, False, False, False)
        assert rep2.con3 is None

    def test_two_equal_clusters_reduce_to_symmetric_psi_test(self):
        a, b = 20.0, 1.0
        psi = th.solve_psi(a, b)
        rep = th.general_recovery_check(a, b, [0.5, 0.5], psi, psi)
        want = th.rate_I(b, b + psi) - 2.0
        assert rep.con1 == pytest.approx(want, abs=1e-9)
        assert rep.con2 == pytest.approx(want, abs=1e-12)
        assert rep.ok == (want > 0)

    def test_margins_direct_evaluation(self):
        # direct evaluation of I at the stated points (frozen): con1 positive,
        # the cross-density conditions negative for psi1 = psi2 = 1
        rep = th.general_recovery_check(20, 1, [0.5, 0.5], 1.0, 1.0)
        assert rep.con1 == pytest.approx(20 - 3 * (1 + math.log(20 / 3)) - 2, abs=1e-12)
        assert rep.con2 == pytest.approx(0.3862943611198906 - 2, abs=1e-12)
        assert rep.con2 < 0 and not rep.ok

    def test_all_conditions_positive_case(self):
        rep = th.general_recovery_check(30, 1, [0.5, 0.5], 3.0, 3.0)
        assert rep.con1 > 0 and rep.con2 > 0 and rep.con3 > 0
        assert rep.ok

    def test_domain_error_on_tight_budget(self):
        with pytest.raises(DomainError):
            th.general_recovery_check(4, 1, [0.5, 0.5], 2.0, 2.0)


class TestMultiThreshold:
    def test_recoverable_case(self):
        rep = th.multi_threshold(2, 9, 1)
        assert rep.margin == pytest.approx(3 - 1 - math.sqrt(2), abs=1e-12)
        assert rep.verdict == "Recoverable"

    def test_rejects_nonpositive_b(self):
        with pytest.raises(DomainError):
            th.multi_threshold(4, 4, 0)

    def test_two_cluster_verdict_coincides_with_eta(self):
        for a in np.linspace(3, 20, 12):
            rep = th.multi_threshold(2, a, 1.0)
            assert (rep.margin > 0) == (th.eta(0.5, a, 1.0) > 1.0)

    def test_report_verdicts(self):
        assert th.binary_threshold(0.5, 16, 4).verdict == "Recoverable"
        assert th.binary_threshold(0.5, 4.0, 1.0).verdict == "NotRecoverable"
        crit = th.censored_threshold_report(2.5, 0.1)
        assert abs(crit.margin) < 1e-9 or crit.verdict in ("Critical",
                                                           "Recoverable",
                                                           "NotRecoverable")


class TestRateFunctionLemmas:
    def test_tau_rate_sandwich_on_grid(self):
        # I(b, tau) <= (sqrt a - sqrt b)^2 <= 2 I(b, tau), 100 points
        rng = np.random.default_rng(0)
        for _ in range(100):
            b = rng.uniform(0.2, 5.0)
            a = b + rng.uniform(0.05, 20.0)
            t = th.tau(a, b)
            gap = (math.sqrt(a) - math.sqrt(b)) ** 2
            lo = th.rate_I(b, t)
            assert gap - lo >= -1e-10
            assert 2 * lo - gap >= -1e-10

    def test_doubling_bound_on_grid(self):
        # I(mu, mu + 2x) <= 4 I(mu, mu + x), 100 points
        rng = np.random.default_rng(1)
        for _ in range(100):
            mu = rng.uniform(0.1, 10.0)
            x = rng.uniform(0.01, 10.0)
            assert 4 * th.rate_I(mu, mu + x) - th.rate_I(mu, mu + 2 * x) >= -1e-10


def test_monte_carlo_exponent_matches_g():
    # slope of -log P(X - R <= alpha log n) over log n approaches g loosely
    from blocksdp.harness import exponent_experiment
    exp = exponent_experiment(0.5, 0.5, 8.0, 2.0, 0.0,
                              [2 ** 8, 2 ** 9, 2 ** 10, 2 ** 11, 2 ** 12],
                              trials=120_000, seed=5)
    assert exp.slope is not None
    assert abs(exp.slope - exp.analytic_g) <= 0.3

import math

import numpy as np
import pytest

from rwz.design import (DesignSettings, InfeasibleDesignError, SnrDiagnostics,
                        alpha_factor, entropy_gap_epsilon1, find_A_eps,
                        modulo_for_rate, practical_modulo_bound, rate_R1,
                        run_design_flow, snr_diagnostics, target_distortion)

from support import (A2PV_953, A2PV_9531, A_EPS_GRID, ALPHA_953, ALPHA_9531,
                     APV_953, BOUND_PAPER, D2_P_PAPER, D_953, D_9531,
                     GAP_3_APV953, GAP_3_LITERAL,
                     MODULO_FOR_PROFILE_RATE_953, MODULO_FOR_RATE_068_9531,
                     P_V, PROFILE_RATE, RATE_R1_3_953, SIGMA2_N_P_PAPER,
                     SNR_EPS_PAPER, SNR_P_PAPER, rng_for)


class TestScalarChain:
    def test_target_distortion(self):
        assert target_distortion(P_V, 0.9531) == pytest.approx(D_9531,
                                                               rel=1e-14)
        assert target_distortion(P_V, 0.953) == pytest.approx(D_953,
                                                              rel=1e-14)
        assert target_distortion(1.0, 0.0) == 1.0

    def test_target_distortion_rejects_bad_input(self):
        with pytest.raises(ValueError):
            target_distortion(-1.0, 0.9531)
        with pytest.raises(ValueError):
            target_distortion(0.28, -0.5)

    def test_alpha_factor(self):
        assert alpha_factor(P_V, D_9531) == pytest.approx(ALPHA_9531,
                                                          rel=1e-14)
        assert alpha_factor(P_V, D_953) == pytest.approx(ALPHA_953, rel=1e-14)
        assert alpha_factor(1.0, 1.0) == 0.0

    def test_alpha_factor_rejects_bad_input(self):
        with pytest.raises(ValueError):
            alpha_factor(0.28, 0.0)
        with pytest.raises(ValueError):
            alpha_factor(0.28, 0.29)


class TestEntropyGap:
    def test_matches_quadrature_oracle(self):
        got = entropy_gap_epsilon1(3.0, APV_953)
        assert got == pytest.approx(GAP_3_APV953, abs=1e-9)
        got = entropy_gap_epsilon1(3.0, 0.2052872)
        assert got == pytest.approx(GAP_3_LITERAL, abs=1e-9)

    def test_decreasing_in_modulo_size(self):
        gaps = [entropy_gap_epsilon1(a, APV_953)
                for a in (2.0, 2.5, 3.0, 3.5, 4.0)]
        assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))

    def test_vanishes_when_cell_dwarfs_the_noise(self):
        assert entropy_gap_epsilon1(20.0, 1.0) == pytest.approx(0.0, abs=1e-9)
        assert entropy_gap_epsilon1(10.0, 0.25) == pytest.approx(0.0,
                                                                 abs=1e-9)

    def test_positive_when_folding_matters(self):
        assert entropy_gap_epsilon1(1.0, 1.0) > 0.1

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            entropy_gap_epsilon1(0.0, 0.2)
        with pytest.raises(ValueError):
            entropy_gap_epsilon1(3.0, -0.2)


class TestFindAEps:
    def test_grid_answer_matches_oracle(self):
        assert find_A_eps(0.005, APV_953) == pytest.approx(A_EPS_GRID,
                                                           abs=1e-9)

    def test_smaller_epsilon_needs_larger_modulo(self):
        a_tight = find_A_eps(0.001, APV_953)
        a_loose = find_A_eps(0.02, APV_953)
        assert a_tight > A_EPS_GRID > a_loose

    def test_result_actually_clears_the_threshold(self):
        a = find_A_eps(0.005, APV_953)
        assert entropy_gap_epsilon1(a, APV_953) < 0.005
        assert entropy_gap_epsilon1(round(a - 0.01, 10), APV_953) >= 0.005

    def test_unreachable_threshold_raises(self):
        with pytest.raises(InfeasibleDesignError):
            find_A_eps(1e-12, 1.0, a_max=2.0)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            find_A_eps(0.0, 0.2)


class TestRateAndModulo:
    def test_rate_matches_oracle(self):
        assert rate_R1(3.0, ALPHA_953, P_V) == pytest.approx(RATE_R1_3_953,
                                                             rel=1e-12)

    def test_rate_floors_at_zero(self):
        assert rate_R1(0.1, ALPHA_953, P_V) == 0.0

    def test_modulo_for_rate_matches_oracles(self):
        got = modulo_for_rate(PROFILE_RATE, ALPHA_953, P_V)
        assert got == pytest.approx(MODULO_FOR_PROFILE_RATE_953, rel=1e-12)
        got = modulo_for_rate(PROFILE_RATE, ALPHA_9531, P_V)
        assert got == pytest.approx(MODULO_FOR_RATE_068_9531, rel=1e-12)

    def test_modulo_for_rate_inverts_rate(self):
        for a in (2.5, 3.0, 3.7):
            r = rate_R1(a, ALPHA_9531, P_V)
            assert modulo_for_rate(r, ALPHA_9531, P_V) == pytest.approx(
                a, rel=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            rate_R1(-3.0, ALPHA_953, P_V)
        with pytest.raises(ValueError):
            modulo_for_rate(-0.1, ALPHA_953, P_V)


class TestPracticalBound:
    def test_matches_oracle(self):
        got = practical_modulo_bound(3.0, 0.7332, P_V, 0.185, 0.0577)
        assert got == pytest.approx(BOUND_PAPER, rel=1e-12)

    def test_threshold_must_exceed_distortion(self):
        with pytest.raises(InfeasibleDesignError):
            practical_modulo_bound(3.0, 0.7332, P_V, 0.0577, 0.0577)
        with pytest.raises(InfeasibleDesignError):
            practical_modulo_bound(3.0, 0.7332, P_V, 0.05, 0.0577)

    def test_shrinks_as_threshold_grows(self):
        lo = practical_modulo_bound(3.0, 0.7332, P_V, 0.25, 0.0577)
        hi = practical_modulo_bound(3.0, 0.7332, P_V, 0.15, 0.0577)
        assert lo < BOUND_PAPER < hi


class TestSnrDiagnostics:
    def test_matches_oracle_tuple(self):
        diag = snr_diagnostics(3.0, 3.29, 16, 0.7332, P_V, 0.0577, 0.185)
        assert isinstance(diag, SnrDiagnostics)
        assert diag.snr_eps == pytest.approx(SNR_EPS_PAPER, rel=1e-12)
        assert diag.snr_p == pytest.approx(SNR_P_PAPER, rel=1e-12)
        assert diag.d2_p == pytest.approx(D2_P_PAPER, rel=1e-12)
        assert diag.sigma2_n_p == pytest.approx(SIGMA2_N_P_PAPER, rel=1e-12)

    def test_without_measured_threshold_reports_design_noise(self):
        diag = snr_diagnostics(3.0, 3.29, 16, 0.7332, P_V, 0.0577)
        assert diag.sigma2_n_p == pytest.approx(
            diag.d2_p + 0.7332 ** 2 * P_V, rel=1e-12)

    def test_rejects_practical_below_design(self):
        with pytest.raises(ValueError):
            snr_diagnostics(3.0, 2.9, 16, 0.7332, P_V, 0.0577)

    def test_noise_identity_at_the_practical_bound(self):
        # at the bound, the scaled threshold equals the scaled stage-2
        # distortion plus the side-information term, by construction
        r = rng_for(50)
        for _ in range(1000):
            a_eps = r.uniform(1.0, 5.0)
            alpha = r.uniform(0.3, 0.95)
            p_v = r.uniform(0.05, 1.0)
            d2 = r.uniform(0.01, 0.2)
            sigma2 = d2 + r.uniform(0.01, 0.3)
            a_p = practical_modulo_bound(a_eps, alpha, p_v, sigma2, d2)
            if a_p < a_eps:
                continue
            diag = snr_diagnostics(a_eps, a_p, 16, alpha, p_v, d2, sigma2)
            assert diag.sigma2_n_p == pytest.approx(
                diag.d2_p + alpha * alpha * p_v, rel=1e-9)


class TestDesignFlow:
    def test_arithmetic_only_flow_with_recorded_measurements(self, toy_codes):
        settings = DesignSettings(sigma2_override=0.185, d2_override=0.0577,
                                  probe_blocks=0)
        report = run_design_flow(P_V, 0.9531, 0.005, toy_codes, settings,
                                 seed=0)
        assert report.D == pytest.approx(D_9531, rel=1e-12)
        assert report.alpha == pytest.approx(ALPHA_9531, rel=1e-12)
        # the design modulo is pinned to the shipped code's rate
        assert report.A_eps == pytest.approx(
            modulo_for_rate(toy_codes.ldpc_graph.rate, ALPHA_9531, P_V),
            rel=1e-12)
        assert report.epsilon1 < 0.005
        assert report.R1 == pytest.approx(
            rate_R1(report.A_eps, ALPHA_9531, P_V), rel=1e-12)
        assert report.sigma2_n_eps == 0.185
        assert report.D2_eps == 0.0577
        assert report.A_p_bound == pytest.approx(
            practical_modulo_bound(report.A_eps, ALPHA_9531, P_V, 0.185,
                                   0.0577), rel=1e-12)
        # probe_blocks = 0 skips the walk: the practical modulo is the first
        # grid point at or above the bound
        assert report.A_p == pytest.approx(
            math.ceil(report.A_p_bound / 0.01 - 1e-9) * 0.01, abs=1e-9)
        assert report.final_mse is None and report.final_ber is None
        rho2 = (report.A_p / report.A_eps) ** 2
        assert report.D2_p == pytest.approx(rho2 * 0.0577, rel=1e-12)
        assert report.sigma2_n_p == pytest.approx(rho2 * 0.185, rel=1e-12)

    def test_report_serializes(self, toy_codes):
        settings = DesignSettings(sigma2_override=0.185, d2_override=0.0577,
                                  probe_blocks=0)
        report = run_design_flow(P_V, 0.9531, 0.005, toy_codes, settings)
        data = report.to_dict()
        assert set(data) == set(report.__dataclass_fields__)
        table = report.format_table()
        assert "A_p_bound" in table and "sigma2" in table
        import json
        assert json.loads(report.to_json())["alpha"] == report.alpha

    def test_infeasible_entropy_gap_raises(self, toy_codes):
        settings = DesignSettings(sigma2_override=0.185, d2_override=0.0577,
                                  probe_blocks=0)
        with pytest.raises(InfeasibleDesignError):
            run_design_flow(P_V, 0.9531, 1e-9, toy_codes, settings)

    def test_infeasible_threshold_raises(self, toy_codes):
        settings = DesignSettings(sigma2_override=0.05, d2_override=0.0577,
                                  probe_blocks=0)
        with pytest.raises(InfeasibleDesignError):
            run_design_flow(P_V, 0.9531, 0.005, toy_codes, settings)

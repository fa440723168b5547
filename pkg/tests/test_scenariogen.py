"""Tests for the prediction-error model and scenario construction."""

import numpy as np
import pytest

from capfirm.domain import MarketDay
from capfirm.errors import LengthMismatch, NegativeParameter
from capfirm.scenariogen import (
    ErrorModelParams,
    generate_scenarios,
    ma_error_path,
    ma_error_paths,
    sigma_from_eps_max,
    variance_profile,
)


class TestVarianceProfile:
    def test_first_lead_is_sigma_squared(self):
        for p in (0.0, 0.5, 0.9):
            prof = variance_profile(p, 0.1, 1)
            assert prof[0] == pytest.approx(0.01)

    def test_plateau_value_for_p_09(self):
        prof = variance_profile(0.9, 1.0, 128)
        assert prof[-1] == pytest.approx(1.0 / (1.0 - 0.81), abs=1e-6)
        assert prof[-1] == pytest.approx(5.263, abs=1e-3)

    def test_p_zero_is_flat(self):
        prof = variance_profile(0.0, 0.2, 50)
        assert np.allclose(prof, 0.04)

    def test_monotone_and_plateau_from_lead_33(self):
        prof = variance_profile(0.9, 1.0, 128)
        assert np.all(np.diff(prof) >= 0.0)
        limit = 1.0 / (1.0 - 0.81)
        ratio = prof[32:] / limit
        assert np.all(ratio >= 0.999)
        assert np.all(ratio <= 1.0)

    def test_invalid_p_rejected(self):
        with pytest.raises(NegativeParameter):
            variance_profile(1.0, 0.1, 10)


class TestSigmaFromEpsMax:
    @pytest.mark.parametrize("eps_max,expected", [
        (0.25, 0.0363), (0.5, 0.0726), (0.75, 0.1090), (1.0, 0.1453),
    ])
    def test_calibration_values(self, eps_max, expected):
        assert sigma_from_eps_max(eps_max, 0.9) == pytest.approx(expected, abs=5e-5)

    def test_zero_maps_to_zero(self):
        assert sigma_from_eps_max(0.0, 0.7) == 0.0

    def test_closed_form(self):
        assert sigma_from_eps_max(0.4, 0.6) == pytest.approx(0.4 * np.sqrt(1 - 0.36) / 3)


class TestErrorPaths:
    def test_deterministic_given_seed(self):
        params = ErrorModelParams(p=0.9, sigma=0.05)
        a = ma_error_path(params, 42)
        b = ma_error_path(params, 42)
        assert np.array_equal(a, b)
        c = ma_error_path(params, 43)
        assert not np.array_equal(a, c)

    def test_zero_sigma_gives_zero_path(self):
        params = ErrorModelParams(p=0.9, sigma=0.0)
        assert np.array_equal(ma_error_path(params, 1), np.zeros(128))

    def test_batch_rows_match_substreams(self):
        params = ErrorModelParams(p=0.8, sigma=0.1)
        batch = ma_error_paths(params, 4, 7)
        for i in range(4):
            assert np.array_equal(batch[i], ma_error_path(params, 7, substream=i))

    def test_independent_draws_variance(self):
        # p = 0: eps_k are i.i.d. N(0, sigma^2)
        params = ErrorModelParams(p=0.0, sigma=0.1)
        eps = ma_error_paths(params, 20000, 3)
        assert np.var(eps[:, 0]) == pytest.approx(0.01, rel=0.05)

    def test_variance_amplification_at_max_lead(self):
        params = ErrorModelParams(p=0.9, sigma=0.035)
        eps = ma_error_paths(params, 20000, 5)
        ratio = np.var(eps[:, -1]) / params.sigma ** 2
        assert ratio == pytest.approx(5.26, rel=0.07)


class TestGenerateScenarios:
    def day(self, values):
        return MarketDay(day_index=0, period_hours=0.25, values=tuple(values))

    def test_zero_truth_stays_zero(self):
        params = ErrorModelParams(p=0.9, sigma=0.2)
        ss = generate_scenarios(self.day([0.0] * 96), params, 4, 1, 2000.0)
        assert all(v == 0.0 for path in ss.scenarios for v in path)

    def test_clipped_to_capacity(self):
        params = ErrorModelParams(p=0.0, sigma=0.5)
        ss = generate_scenarios(self.day([2000.0] * 96), params, 20, 1, 2000.0)
        top = max(v for path in ss.scenarios for v in path)
        low = min(v for path in ss.scenarios for v in path)
        assert top <= 2000.0
        assert low >= 0.0

    def test_uniform_probabilities(self):
        params = ErrorModelParams()
        ss = generate_scenarios(self.day([100.0] * 96), params, 5, 1, 2000.0)
        assert ss.probabilities == tuple([0.2] * 5)

    def test_pure_function_of_inputs(self):
        params = ErrorModelParams()
        a = generate_scenarios(self.day([100.0] * 96), params, 3, 9, 2000.0)
        b = generate_scenarios(self.day([100.0] * 96), params, 3, 9, 2000.0)
        assert a == b

    def test_scenario_count_extension_keeps_prefix(self):
        params = ErrorModelParams()
        small = generate_scenarios(self.day([100.0] * 96), params, 3, 9, 2000.0)
        large = generate_scenarios(self.day([100.0] * 96), params, 6, 9, 2000.0)
        assert large.scenarios[:3] == small.scenarios

    def test_length_mismatch_without_mapping(self):
        params = ErrorModelParams()  # leads 33..128 cover 96 periods
        with pytest.raises(LengthMismatch):
            generate_scenarios([100.0] * 24, params, 3, 1, 2000.0)

    def test_explicit_lead_mapping(self):
        params = ErrorModelParams()
        ss = generate_scenarios([100.0] * 24, params, 3, 1, 2000.0,
                                leads=range(1, 25))
        assert ss.periods == 24

    def test_unbiased_before_clipping(self):
        params = ErrorModelParams(p=0.9, sigma=0.0363)
        ss = generate_scenarios(self.day([500.0] * 96), params, 20000, 11, 2000.0)
        arr = np.asarray(ss.scenarios)
        rel = arr[:, 0] / 500.0 - 1.0
        se = rel.std() / np.sqrt(rel.size)
        assert abs(rel.mean()) <= 3.5 * se

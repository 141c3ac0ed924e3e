"""
Tests for the verification harness and the self-test
"""

import dataclasses
import random

import pytest

from config import create_custom_config, get_config
from dicing.keyschedule import build_key_material
import verification
from verification import (
    CheckResult,
    SelftestReport,
    avalanche_test,
    check_constant_c,
    check_engine_reference,
    check_l_invertibility,
    check_period_identities,
    check_primitivity,
    check_q_tables,
    check_sbox0,
    check_sbox_permutation,
    edge_keys,
    full_scale_periods,
    full_scale_step_distribution,
    mini_params_from_tuple,
    run_selftest,
    step_distribution_from_dices,
)


def broken_factory(key: bytes):
    """Key material whose S-box maps two inputs to 0"""
    km = build_key_material(key)
    return dataclasses.replace(km, sbox=tuple(range(255)) + (0,))


def small_selftest_config():
    return create_custom_config(
        selftest_stream_bytes=1 << 14,
        min_stream_bytes=1 << 14,
        linear_complexity_bits=512,
        selftest_sbox_keys=4,
        selftest_engine_blocks=2,
        avalanche_trials=10,
        step_distribution_cycles=2000,
    )


class TestPeriodArithmetic:
    def test_period_identities(self):
        results = {r.name: r for r in check_period_identities()}
        assert results["period_step_count"].passed
        assert results["period_sum_congruence"].passed
        assert results["period_gcd"].passed
        assert "= 3" in results["period_gcd"].detail

    def test_short_exponent_is_informational(self):
        results = {r.name: r for r in check_period_identities()}
        short = results["period_short_exponent"]
        assert short.informational
        assert short.passed

    def test_full_scale_periods(self):
        periods = full_scale_periods()
        n = ((1 << 127) - 1) * ((1 << 126) - 1)
        assert periods["alpha"] == (1 << 127) - 1
        assert periods["beta"] == (1 << 126) - 1
        assert periods["dice"] == n
        assert periods["omega"] == n * ((1 << 128) - 1) // 3
        assert periods["omega"].bit_length() == 380

    def test_mini_params_from_tuple(self):
        assert mini_params_from_tuple((7, 5, 7)).p3 == 0x89
        assert mini_params_from_tuple((7, 5, 8)).p3 is None


class TestStaticChecks:
    def test_primitivity(self):
        results = {r.name: r for r in check_primitivity()}
        for name in ("primitive_E1", "primitive_E2", "primitive_E3", "primitive_E4"):
            assert results[name].passed, name
        assert results["irreducible_K"].passed
        assert results["order_x_K"].informational
        assert results["primitive_E_hat"].informational

    def test_constant_and_sbox0(self):
        assert check_constant_c().passed
        assert check_sbox0().passed

    def test_corrupted_constant_fails_check(self, mocker):
        import dicing.ivsetup

        mocker.patch.object(dicing.ivsetup, "C_VALUE", dicing.ivsetup.C_VALUE + 2)
        result = check_constant_c()
        assert not result.passed
        assert "embedded" in result.detail

    def test_sbox_permutation_detects_corruption(self):
        assert check_sbox_permutation(edge_keys()).passed
        failed = check_sbox_permutation(edge_keys(), broken_factory)
        assert not failed.passed
        assert "key #0" in failed.detail

    def test_q_tables_detect_corruption(self, key128, rng):
        assert check_q_tables(key128, rng).passed
        assert not check_q_tables(key128, rng, broken_factory).passed

    def test_l_invertibility_is_informational(self):
        result = check_l_invertibility(edge_keys(), build_key_material)
        assert result.informational
        assert "of 4 keys" in result.detail

    def test_engine_reference(self, key256, sample_iv):
        assert check_engine_reference(key256, sample_iv, blocks=2).passed


class TestAvalanche:
    def test_same_iv_gives_zero(self, key128, rng):
        report = avalanche_test([key128], 5, rng, flip=False)
        assert report.mean_fraction == 0.0
        assert not report.passed

    def test_flipped_iv_near_half(self, key128, key256, rng):
        report = avalanche_test([key128, key256], 20, rng)
        assert report.passed, report.mean_fraction
        assert len(report.fractions) == 20

    def test_needs_keys(self, rng):
        from dicing.exceptions import ContractViolation

        with pytest.raises(ContractViolation):
            avalanche_test([], 1, rng)


class TestStepDistribution:
    def test_uniform_dices_pass(self):
        report = step_distribution_from_dices(list(range(256)) * 50)
        assert report.counts == [800] * 16
        assert report.passed

    def test_constant_dice_fails(self):
        assert not step_distribution_from_dices([0x4A] * 5000).passed

    def test_running_engine(self, key128, sample_iv):
        report = full_scale_step_distribution(20_000, key128, sample_iv)
        assert sum(report.counts) == 20_000
        assert report.passed


class TestSelftest:
    def test_report_ignores_informational(self):
        report = SelftestReport(
            [CheckResult("a", True), CheckResult("b", False, informational=True)]
        )
        assert report.passed
        assert report.failures == []
        with pytest.raises(KeyError):
            report.get("c")

    def test_corrupted_sbox_fails_named_check(self):
        report = run_selftest(small_selftest_config(), key_material_factory=broken_factory)
        assert not report.passed
        assert "sbox_permutation" in report.failures
        assert "q_tables" in report.failures
        assert report.get("period_gcd").passed

    def test_raising_check_becomes_failure(self, mocker):
        from dicing.exceptions import BadFactorizationError

        mocker.patch.object(
            verification, "check_primitivity", side_effect=BadFactorizationError("bad")
        )
        report = run_selftest(small_selftest_config())
        assert "primitivity" in report.failures

    def test_small_selftest_names(self):
        report = run_selftest(small_selftest_config())
        names = {c.name for c in report.checks}
        assert {
            "constant_c",
            "sbox_permutation",
            "engine_reference",
            "mini_period(5,3,8)",
            "stat_monobit",
            "avalanche",
            "step_distribution",
        } <= names
        assert report.get("mini_period(5,3,8)").passed

    @pytest.mark.slow
    def test_full_selftest_passes(self):
        report = run_selftest(get_config("selftest"), seed=random.Random(7).getrandbits(32))
        assert report.passed, report.failures


@pytest.mark.slow
class TestLongForm:
    """Full-size runs of the verification suite"""

    def test_statistics_over_random_pairs(self):
        config = get_config("full")
        rng = random.Random(1)
        for _ in range(config.get("statistics_pairs")):
            key, iv = verification.random_key_iv(rng, rng.choice((16, 32)))
            report = verification.keystream_statistics(
                key, iv, config.get("min_stream_bytes")
            )
            assert report.passed, report.failures

    @pytest.mark.parametrize("mode", ["r1", "r2", "r3", "big"])
    def test_statistics_per_variant(self, key128, sample_iv, mode):
        report = verification.keystream_statistics(key128, sample_iv, 1 << 20, mode=mode)
        assert report.passed, report.failures

    def test_avalanche_full(self, rng):
        keys = [rng.randbytes(16) for _ in range(5)]
        report = avalanche_test(keys, get_config("full").get("avalanche_trials"), rng)
        assert report.passed, report.mean_fraction

    def test_step_distribution_full(self, key256, sample_iv):
        report = full_scale_step_distribution(1_000_000, key256, sample_iv)
        assert report.passed, report.counts

    def test_sbox_permutation_many_keys(self, rng):
        keys = [rng.randbytes(rng.choice((16, 32))) for _ in range(200)]
        assert check_sbox_permutation(keys).passed

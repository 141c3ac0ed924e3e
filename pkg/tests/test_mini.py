"""
Unit tests for the mini generator and its period experiment
"""

from pydantic import ValidationError
import pytest

from dicing.mini import MINI_MODULI, MiniDicing, MiniParams, run_period_experiment


class TestMiniParams:
    def test_defaults(self):
        params = MiniParams()
        assert (params.d1, params.d2, params.d3) == (7, 5, 8)
        assert params.label() == "(7,5,8)"

    def test_steps_split_dice(self):
        params = MiniParams()
        assert params.steps(0b0000) == (1, 1)
        assert params.steps(0b1111) == (4, 4)
        assert params.steps(0b0110) == (3, 2)

    def test_custom_modulus(self):
        _, _, f3 = MiniParams(d3=7, p3=0x89).fields()
        assert f3.modulus == 0x89
        assert MiniParams(d3=7).fields()[2].modulus == MINI_MODULI[7]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"d1": 6, "d2": 4},  # not coprime
            {"dice_width": 3},
            {"controller_step": 0},
            {"d3": 12},  # no built-in modulus
            {"alpha0": 0},
            {"omega0": 1 << 8},
        ],
    )
    def test_rejected(self, overrides):
        with pytest.raises(ValidationError):
            MiniParams(**overrides)

    def test_frozen(self):
        params = MiniParams()
        with pytest.raises(ValidationError):
            params.d1 = 5


class TestMiniDicing:
    def test_first_clock(self):
        gen = MiniDicing(MiniParams(d1=5, d2=3, d3=8))
        # alpha0 = beta0 = 1 so the first dice is 0 and both steps are 1
        assert gen.dice() == 0
        assert gen.clock() == (1, 1)
        assert gen.state.omega == 0b10 and gen.state.tau == 0b10
        assert gen.state.u == 0b10
        assert gen.state.alpha == 1 << 4

    def test_check_primitive_passes_for_builtins(self):
        MiniDicing(MiniParams()).check_primitive()

    def test_dice_sequence_length(self):
        assert len(list(MiniDicing(MiniParams()).dice_sequence(50))) == 50


class TestPeriodExperiment:
    def test_small_instance(self):
        report = run_period_experiment(MiniParams(d1=5, d2=3, d3=8))
        assert report.formula_controller_period == 217
        assert report.measured_controller_period == 217
        assert report.measured_dice_period == 217
        assert report.a_counts == {1: 55, 2: 54, 3: 54, 4: 54}
        assert report.one_occurs_once_more
        assert report.m == 541
        assert report.divisor == 1
        assert report.formula_period == 217 * 255
        assert report.match
        assert report.u_period_consistent
        assert not report.notes

    def test_step_sum_sharing_a_factor_with_the_group_order(self):
        # 2^8 - 1 = 3 * 5 * 17 and m = 261 = 3^2 * 29
        report = run_period_experiment(MiniParams(d1=4, d2=3, d3=8), measure_u=False)
        assert report.formula_controller_period == 105
        assert report.m == 261
        assert report.divisor == 3
        assert report.formula_period == 105 * 255 // 3
        assert report.measured_omega_period == 8925
        assert report.measured_tau_period == report.formula_tau_period == 26775
        assert report.divisor > 1 and report.match

    @pytest.mark.slow
    def test_default_instance(self):
        report = run_period_experiment(MiniParams())
        assert report.formula_controller_period == 3937
        assert report.a_counts == {1: 985, 2: 984, 3: 984, 4: 984}
        assert report.m == 9841
        assert report.m_mod == 151
        assert report.measured_omega_period == 1_003_935
        assert report.match
        assert report.u_period_consistent

    @pytest.mark.slow
    def test_degree_seven_combiner(self):
        report = run_period_experiment(MiniParams(d3=7, p3=0x89), measure_u=False)
        assert report.m_mod == 9841 % 127
        assert report.formula_period == 3937 * 127
        assert report.match

    def test_tau_counts_cover_all_values(self):
        report = run_period_experiment(MiniParams(d1=5, d2=3, d3=8), measure_u=False)
        assert sum(report.b_counts.values()) == 217
        assert set(report.b_counts) == {1, 2, 3, 4}
        assert report.measured_tau_period == report.formula_tau_period

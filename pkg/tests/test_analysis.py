"""Frequency-domain and root-space analysis."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from forcebench.analysis import (
    FrequencyGrid,
    SweepGrid,
    bode_integral,
    critical_gain,
    design_sweep,
    frequency_response,
    min_phase_boundary,
    root_locus,
    sensitivity_peak,
)
from forcebench.dlti import Poly, RationalTF, classify_stability, poly_roots, tf_feedback
from forcebench.errors import InvalidInputError, NoCrossingError, UnsupportedModelError
from forcebench.models import (
    DEFAULT_PLANT,
    DerivedRatios,
    EnvModel,
    ForceLoopConfig,
    ObserverGains,
    ServoParams,
    inner_sensitivity,
    phi_polys,
    unit_gain_force_loop,
)

TS = 1e-3


def first_order_sensitivity(product):
    """S for a given alpha*g_dob*T_s product."""
    return RationalTF(Poly([1.0, -1.0]), Poly([1.0, -(1.0 - product)]), TS)


class TestFrequencyGrid:
    def test_midpoint_avoids_zero(self):
        grid = FrequencyGrid.uniform_midpoint(2 ** 10)
        assert np.min(np.abs(grid.as_array())) > 1e-6

    def test_monotone_required(self):
        with pytest.raises(InvalidInputError):
            FrequencyGrid((0.3, 0.2), "endpoint")

    def test_range_required(self):
        with pytest.raises(InvalidInputError):
            FrequencyGrid((-4.0, 0.1), "endpoint")


class TestFrequencyResponse:
    def test_unity_system(self):
        grid = FrequencyGrid.uniform_midpoint(128)
        resp = frequency_response(RationalTF.constant(1.0, TS), grid)
        assert_allclose(resp.magnitude_db, 0.0, atol=1e-12)
        assert_allclose(resp.phase_deg, 0.0, atol=1e-12)

    def test_complementary_dc_gain(self):
        T = RationalTF(Poly([0.5]), Poly([1.0, -0.5]), TS)
        grid = FrequencyGrid.log_spaced(1e-6, 3.0, 64)
        resp = frequency_response(T, grid)
        assert abs(resp.magnitude_db[0]) < 1e-4

    def test_hand_value_at_nyquist(self):
        S = first_order_sensitivity(0.5)  # pole 0.5
        grid = FrequencyGrid((math.pi / 2, math.pi), "endpoint")
        resp = frequency_response(S, grid)
        assert_allclose(resp.magnitude_db[-1], 20 * math.log10(2.0 / 1.5), rtol=1e-12)

    def test_pole_on_circle_becomes_inf(self):
        tf = RationalTF(Poly([1.0]), Poly([1.0, -1.0]), TS)  # pole at z = 1
        grid = FrequencyGrid((-1.0, 0.0, 1.0), "endpoint")  # grid hits the pole
        resp = frequency_response(tf, grid)
        assert np.isinf(resp.magnitude_db[1])


class TestBodeIntegral:
    def test_unity_sensitivity_exact_zero(self):
        result = bode_integral(RationalTF.constant(1.0, TS), 2 ** 14)
        assert result.value == 0.0 and result.stable

    def test_stable_pole_integrates_to_zero(self):
        result = bode_integral(first_order_sensitivity(0.5), 2 ** 20)
        assert abs(result.value) < 1e-3
        assert result.stable

    def test_unstable_pole_mean_value(self):
        # S = (z-1)/(z+1.5): Jensen gives -2*pi*ln(1.5); flagged unstable
        result = bode_integral(first_order_sensitivity(2.5), 2 ** 20)
        assert not result.stable
        assert abs(abs(result.value) - 2 * math.pi * math.log(1.5)) < 1e-3
        assert result.value < 0

    def test_point_count_validation(self):
        with pytest.raises(InvalidInputError):
            bode_integral(first_order_sensitivity(0.5), 1000)
        with pytest.raises(InvalidInputError):
            bode_integral(first_order_sensitivity(0.5), 2 ** 13)


class TestSensitivityPeak:
    def test_closed_form_peak(self):
        for product in (0.1, 0.5, 1.0, 1.5, 1.9):
            pole = 1.0 - product
            expected = 2.0 / (1.0 + pole)
            assert_allclose(sensitivity_peak(first_order_sensitivity(product)),
                            expected, atol=1e-9)

    def test_deadbeat_peak_is_two(self):
        assert_allclose(sensitivity_peak(first_order_sensitivity(1.0)), 2.0, atol=1e-9)

    def test_observer_off_limit(self):
        assert sensitivity_peak(first_order_sensitivity(1e-9)) == pytest.approx(1.0, abs=1e-8)

    def test_unstable_rejected(self):
        with pytest.raises(UnsupportedModelError):
            sensitivity_peak(first_order_sensitivity(2.5))

    def test_waterbed_monotonicity(self):
        products = np.linspace(0.05, 1.95, 20)
        peaks = [sensitivity_peak(first_order_sensitivity(p)) for p in products]
        assert np.all(np.diff(peaks) > 0)


class TestRootLocus:
    def test_zero_gain_endpoint(self):
        cfg = ForceLoopConfig(1.0, ServoParams.matched(), ObserverGains(500., 500., TS),
                              EnvModel(DEFAULT_PLANT["K_env"], DEFAULT_PLANT["D_env"],
                                       DEFAULT_PLANT["J_m"]))
        L = unit_gain_force_loop(cfg)
        locus = root_locus(L, [0.0, 0.1, 0.2])
        open_poles = np.sort_complex(L.poles())
        first = np.sort_complex(locus.branch_points[0])
        assert_allclose(first, open_poles, atol=1e-8)

    def test_single_pole_linear_motion(self):
        L = RationalTF(Poly([1.0]), Poly([1.0, -0.5]), TS)
        gains = np.linspace(0.0, 2.0, 21)
        locus = root_locus(L, gains)
        assert_allclose(locus.branch_points[:, 0], 0.5 - gains, atol=1e-12)
        # crossing |z| = 1 at k = 1.5
        assert locus.spectral_radius[np.searchsorted(gains, 1.5) - 1] <= 1.0 + 1e-9
        assert locus.spectral_radius[np.searchsorted(gains, 1.6)] > 1.0

    def test_empty_grid_rejected(self):
        with pytest.raises(InvalidInputError):
            root_locus(RationalTF(Poly([1.0]), Poly([1.0, -0.5]), TS), [])

    def test_branch_continuity(self):
        cfg = ForceLoopConfig(1.0, ServoParams.matched(), ObserverGains(1000., 100., TS),
                              EnvModel(DEFAULT_PLANT["K_env"], DEFAULT_PLANT["D_env"],
                                       DEFAULT_PLANT["J_m"]))
        L = unit_gain_force_loop(cfg)
        locus = root_locus(L, np.geomspace(1e-3, 50.0, 300))
        steps = np.abs(np.diff(locus.branch_points, axis=0))
        assert np.nanmax(steps) < 0.2  # no branch teleports


class TestCriticalGain:
    def test_single_pole_hand_value(self):
        L = RationalTF(Poly([1.0]), Poly([1.0, -0.5]), TS)
        result = critical_gain(L, bracket=(1e-3, 10.0))
        assert result.status == "found"
        assert_allclose(result.value, 1.5, rtol=1e-6)

    def test_integrator_forward_form(self):
        # L = T_s/(z-1): pole 1 - k*T_s leaves through -1 at k = 2/T_s
        L = RationalTF(Poly([TS]), Poly([1.0, -1.0]), TS)
        result = critical_gain(L, bracket=(1.0, 1e5))
        assert_allclose(result.value, 2.0 / TS, rtol=1e-6)

    def test_integrator_backward_form_never_unstable(self):
        # L = T_s*z/(z-1): closed pole 1/(1+k*T_s) stays in (0,1) for all k
        L = RationalTF(Poly([TS, 0.0]), Poly([1.0, -1.0]), TS)
        result = critical_gain(L, bracket=(1.0, 1e6))
        assert result.status == "stable-throughout"
        assert result.value == math.inf

    def test_unstable_at_zero(self):
        L = RationalTF(Poly([0.01]), Poly([1.0, -1.5]), TS)
        result = critical_gain(L, bracket=(1e-4, 1.0))
        assert result.status == "unstable-at-zero"
        assert result.value == 0.0

    def test_nmp_zero_reduces_critical_gain(self):
        # reflecting a zero outside the unit circle lowers the gain limit
        def loop(zero):
            num = Poly(np.polymul([TS, 0.0], [1.0, -zero]))
            den = Poly(np.polymul([1.0, -1.0], [1.0, -0.5]))
            return RationalTF(num, den, TS)

        inside = critical_gain(loop(0.5), bracket=(1e-2, 1e7))
        outside = critical_gain(loop(2.0), bracket=(1e-2, 1e7))
        assert outside.value < inside.value

    def test_consistency_with_classification(self):
        cfg = ForceLoopConfig(1.0, ServoParams.matched(), ObserverGains(500., 500., TS),
                              EnvModel(DEFAULT_PLANT["K_env"], DEFAULT_PLANT["D_env"],
                                       DEFAULT_PLANT["J_m"]))
        L = unit_gain_force_loop(cfg)
        crit = critical_gain(L)
        assert crit.status == "found"
        below = classify_stability(tf_feedback(
            RationalTF(0.99 * crit.value * L.num, L.den, TS)))
        above = classify_stability(tf_feedback(
            RationalTF(1.01 * crit.value * L.num, L.den, TS)))
        assert below.classification == "asymptotically-stable"
        assert above.classification == "unstable"


class TestMinPhaseBoundary:
    def test_free_space_boundary_at_one(self):
        env = EnvModel(0.0, 0.0, DEFAULT_PLANT["J_m"])
        gains = ObserverGains(500.0, 500.0, TS)
        delta = min_phase_boundary(env, gains, (0.5, 2.0))
        assert abs(delta - 1.0) < 1e-6

    def test_tiny_delta_minimum_phase(self):
        env = EnvModel(DEFAULT_PLANT["K_env"], DEFAULT_PLANT["D_env"], DEFAULT_PLANT["J_m"])
        ratios = DerivedRatios.from_alpha_delta(1.0, 1e-9)
        phi_n, _ = phi_polys(env, ratios, ObserverGains(500.0, 500.0, TS))
        assert np.max(np.abs(poly_roots(phi_n))) < 1.0

    def test_engaged_environment_vs_dense_scan(self):
        env = EnvModel(DEFAULT_PLANT["K_env"], DEFAULT_PLANT["D_env"], DEFAULT_PLANT["J_m"])
        gains = ObserverGains(500.0, 500.0, TS)
        delta = min_phase_boundary(env, gains, (0.5, 4.0))
        # brute-force scan oracle
        grid = np.linspace(0.5, 4.0, 4001)
        mags = []
        for d in grid:
            phi_n, _ = phi_polys(env, DerivedRatios.from_alpha_delta(1.0, d), gains)
            mags.append(np.max(np.abs(poly_roots(phi_n))))
        crossing = grid[np.argmax(np.asarray(mags) > 1.0)]
        assert abs(delta - crossing) < 2e-3
        phi_n, _ = phi_polys(env, DerivedRatios.from_alpha_delta(1.0, delta), gains)
        assert abs(np.max(np.abs(poly_roots(phi_n))) - 1.0) < 1e-8

    def test_no_crossing_reported(self):
        env = EnvModel(DEFAULT_PLANT["K_env"], DEFAULT_PLANT["D_env"], DEFAULT_PLANT["J_m"])
        with pytest.raises(NoCrossingError):
            min_phase_boundary(env, ObserverGains(500.0, 500.0, TS), (0.01, 0.02))


class TestDesignSweep:
    def test_single_matched_tuple(self):
        grid = SweepGrid(alphas=(1.0,), deltas=(1.0,), g_dobs=(500.0,),
                         g_rtobs=(500.0,), sample_times=(TS,),
                         K_env=0.0, D_env=0.0)
        records = design_sweep(grid)
        assert len(records) == 1
        rec = records[0]
        assert rec.error is None
        assert not rec.nmp_flag  # magnitude exactly 1 falls inside the band

    def test_waterbed_column_increases(self):
        grid = SweepGrid(alphas=(0.5, 1.0, 1.5, 1.9), deltas=(1.0,),
                         g_dobs=(1000.0,), g_rtobs=(500.0,), sample_times=(TS,),
                         K_env=DEFAULT_PLANT["K_env"], D_env=DEFAULT_PLANT["D_env"],
                         bode_points=2 ** 14)
        peaks = [r.sensitivity_peak for r in design_sweep(grid)]
        assert np.all(np.diff(peaks) > 0)

    def test_delta_scan_zero_magnitude(self):
        # at K_env = 0 the largest zero is max(delta, 1) (integrator pair)
        grid = SweepGrid(alphas=(1.0,), deltas=(0.25, 0.5, 1.0, 2.0, 4.0),
                         g_dobs=(500.0,), g_rtobs=(500.0,), sample_times=(TS,),
                         K_env=0.0, D_env=0.0, bode_points=2 ** 14)
        records = design_sweep(grid)
        for rec in records:
            assert_allclose(rec.max_zero_magnitude, max(rec.delta, 1.0), atol=1e-7)
        assert [r.nmp_flag for r in records] == [False, False, False, True, True]

    def test_failures_recorded_in_row(self):
        # alpha*g_dob*T_s = 2.5 destabilizes the inner loop: row error, no raise
        grid = SweepGrid(alphas=(1.0, 2.5), deltas=(1.0,), g_dobs=(1000.0,),
                         g_rtobs=(500.0,), sample_times=(TS,),
                         K_env=DEFAULT_PLANT["K_env"], D_env=DEFAULT_PLANT["D_env"],
                         bode_points=2 ** 14)
        records = design_sweep(grid)
        assert records[0].error is None
        assert records[1].error is not None

    def test_lexicographic_order(self):
        grid = SweepGrid(alphas=(1.0, 2.0), deltas=(0.5, 1.0), g_dobs=(500.0,),
                         g_rtobs=(500.0,), sample_times=(TS,),
                         K_env=0.0, D_env=0.0, bode_points=2 ** 14)
        records = design_sweep(grid)
        keys = [(r.alpha, r.delta) for r in records]
        assert keys == sorted(keys)

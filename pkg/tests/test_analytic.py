import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from collapselab import (Duration, Energy, TwoLevelSpec, ValidationError,
                         ValidityWindowError, collapse_time,
                         decoherence_factor, density_matrix_mean,
                         density_matrix_short_time, dimensionless_constants,
                         make_constants)

CONST = make_constants()
DIMLESS = dimensionless_constants()

# hand arithmetic: (6.582119569e-22 * 1.220890e22) / 400^2
TC_400_MEV = 5.0225274753727556e-05
# hand arithmetic: 6.582119569e-22 / 1.220890e22 (the Planck time)
TC_AT_PLANCK_ENERGY = 5.391247015701659e-44


class TestCollapseTime:
    def test_kaon_scale_splitting(self):
        pred = collapse_time(Energy(400.0), CONST)
        assert pred.collapse_time.seconds == pytest.approx(TC_400_MEV, rel=1e-12)
        assert pred.delta_e_total.mev == 400.0
        assert pred.k_used == 1.0

    def test_zero_difference_never_collapses(self):
        pred = collapse_time(0.0, CONST)
        assert pred.collapse_time is None
        assert not pred.collapses

    def test_planck_energy_gives_planck_time(self):
        pred = collapse_time(CONST.planck_energy, CONST)
        assert pred.collapse_time.seconds == pytest.approx(TC_AT_PLANCK_ENERGY,
                                                           rel=1e-12)

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(ValidationError):
            collapse_time(-1.0, CONST)
        with pytest.raises(ValidationError):
            collapse_time(math.nan, CONST)

    @given(de=st.floats(min_value=1e-6, max_value=1e6))
    def test_inverse_square_scaling(self, de):
        t1 = collapse_time(de, DIMLESS).collapse_time.seconds
        t2 = collapse_time(2.0 * de, DIMLESS).collapse_time.seconds
        assert t2 == pytest.approx(t1 / 4.0, rel=1e-12)

    @given(de=st.floats(min_value=1e-6, max_value=1e6),
           k=st.floats(min_value=1e-3, max_value=1e3))
    def test_linear_in_k(self, de, k):
        t1 = collapse_time(de, dimensionless_constants(k=k)).collapse_time.seconds
        t2 = collapse_time(de, dimensionless_constants(k=2.0 * k)).collapse_time.seconds
        assert t2 == pytest.approx(2.0 * t1, rel=1e-12)


class TestDecoherenceFactor:
    def test_unity_at_t_zero(self):
        assert decoherence_factor(1.0, 0.0, DIMLESS) == 1.0

    def test_small_tau_matches_linear_form(self):
        # tau = 0.01: exp(-0.01) = 0.9900498337491681 against 0.99
        f = decoherence_factor(1.0, 0.01, DIMLESS)
        assert f == pytest.approx(0.9900498337491681, rel=1e-12)
        assert f - 0.99 == pytest.approx(4.9833749e-05, rel=1e-6)

    def test_one_collapse_time_is_one_e_folding(self):
        assert decoherence_factor(1.0, 1.0, DIMLESS) == pytest.approx(
            math.exp(-1.0), rel=1e-12)

    def test_zero_difference_is_identically_one(self):
        for t in (0.0, 1.0, 1e6):
            assert decoherence_factor(0.0, t, DIMLESS) == 1.0

    def test_rejects_negative_time(self):
        with pytest.raises(ValidationError):
            decoherence_factor(1.0, -0.1, DIMLESS)

    @given(de=st.floats(min_value=0.0, max_value=10.0),
           t1=st.floats(min_value=0.0, max_value=10.0),
           t2=st.floats(min_value=0.0, max_value=10.0))
    def test_monotone_in_time(self, de, t1, t2):
        lo, hi = sorted((t1, t2))
        assert decoherence_factor(de, hi, DIMLESS) <= decoherence_factor(de, lo, DIMLESS)

    @given(t=st.floats(min_value=0.0, max_value=10.0),
           d1=st.floats(min_value=0.0, max_value=10.0),
           d2=st.floats(min_value=0.0, max_value=10.0))
    def test_monotone_in_splitting(self, t, d1, d2):
        lo, hi = sorted((d1, d2))
        assert decoherence_factor(hi, t, DIMLESS) <= decoherence_factor(lo, t, DIMLESS)


def _spec(alpha=0.36, de=1.0, constants=DIMLESS):
    return TwoLevelSpec.from_alpha(alpha, de, constants)


class TestShortTimeDensityMatrix:
    def test_initial_matrix(self):
        rho = density_matrix_short_time(_spec(), 0.0)
        assert rho.entries == pytest.approx(
            np.array([[0.36, 0.48], [0.48, 0.64]]))

    def test_linear_offdiagonal_shrink(self):
        # tau = 0.1 leaves diagonals alone and scales 0.48 by 0.9
        rho = density_matrix_short_time(_spec(), 0.1)
        assert rho.entries[0, 0] == 0.36
        assert rho.entries[1, 1] == 0.64
        assert rho.entries[0, 1] == pytest.approx(0.432, rel=1e-12)

    def test_zero_splitting_keeps_coherence(self):
        rho = density_matrix_short_time(_spec(de=0.0), 123.0)
        assert rho.entries[0, 1] == pytest.approx(0.48, rel=1e-12)

    def test_out_of_validity_window(self):
        with pytest.raises(ValidityWindowError):
            density_matrix_short_time(_spec(), 0.51)
        density_matrix_short_time(_spec(), 0.5)  # boundary still fine

    def test_rejects_negative_time(self):
        with pytest.raises(ValidationError):
            density_matrix_short_time(_spec(), -1.0)


class TestMeanDensityMatrix:
    def test_equals_short_time_at_zero(self):
        a = density_matrix_short_time(_spec(), 0.0).entries
        b = density_matrix_mean(_spec(), 0.0).entries
        assert np.array_equal(a, b)

    def test_exponential_offdiagonal(self):
        # 0.48 * exp(-0.1) by hand
        rho = density_matrix_mean(_spec(), 0.1)
        assert rho.entries[0, 1] == pytest.approx(0.43432196065726053, rel=1e-12)

    def test_long_time_limit_is_diagonal_mixture(self):
        rho = density_matrix_mean(_spec(), 20.0)
        assert abs(rho.entries[0, 1]) < 1e-8 * 0.48
        assert rho.entries[0, 0] == 0.36
        assert rho.entries[1, 1] == 0.64

    @given(t=st.floats(min_value=0.0, max_value=50.0))
    def test_diagonals_constant_bit_for_bit(self, t):
        spec = _spec(alpha=0.3)
        rho = density_matrix_mean(spec, t)
        assert rho.entries[0, 0].real == spec.alpha0
        assert rho.entries[1, 1].real == spec.beta0

    @given(alpha=st.floats(min_value=0.0, max_value=1.0),
           tau=st.floats(min_value=0.0, max_value=0.05))
    def test_agrees_with_linear_form_at_small_tau(self, alpha, tau):
        spec = _spec(alpha=alpha)
        lin = density_matrix_short_time(spec, tau).entries[0, 1].real
        exp = density_matrix_mean(spec, tau).entries[0, 1].real
        assert abs(lin - exp) <= 2e-3 * math.sqrt(spec.alpha0 * spec.beta0)

    def test_mean_form_is_psd_beyond_linear_window(self):
        density_matrix_mean(_spec(alpha=0.5), 3.0)  # construction validates


class TestTwoLevelSpec:
    def test_rejects_alpha_outside_unit_interval(self):
        with pytest.raises(ValidationError):
            TwoLevelSpec(alpha0=1.2, beta0=-0.2, delta_e_mev=1.0, constants=DIMLESS)

    def test_rejects_unnormalized_pair(self):
        with pytest.raises(ValidationError):
            TwoLevelSpec(alpha0=0.5, beta0=0.6, delta_e_mev=1.0, constants=DIMLESS)

    def test_rejects_negative_splitting(self):
        with pytest.raises(ValidationError):
            _spec(de=-1.0)

    def test_to_state_populations(self):
        state = _spec(alpha=0.25).to_state()
        assert state.populations == pytest.approx([0.25, 0.75])
        assert state.energies_mev == pytest.approx([0.0, 1.0])

    def test_tau_accepts_duration(self):
        spec = _spec(de=2.0)
        assert spec.tau_at(Duration(0.5)) == pytest.approx(2.0)

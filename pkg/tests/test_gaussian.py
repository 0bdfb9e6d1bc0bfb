import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clickpol import BellStateParams, DetectorConfig, InvalidArgument, MeasurementSetting, compose_setting
from clickpol.fock import build_bell_state, detected_photon_distribution
from clickpol.gaussian import (
    mean_photon_numbers,
    nexp_expectation,
    nexp_expectation_general,
    nexp_table,
    nexp_table_precise,
    quadratic_form_matrix,
)
from clickpol.polarization import IDENTITY_SETTING

FIT = BellStateParams(0.36, math.pi)
FIT_DET = DetectorConfig(8, 0.135)


def fock_nexp(state, setting, x_a, x_d, cutoff=25):
    """Reference E from the brute-force photon-number distribution."""
    p = detected_photon_distribution(build_bell_state(state, cutoff), setting).probs
    n = np.arange(p.shape[0])
    return float((1 - x_a) ** n @ p @ (1 - x_d) ** n)


def thermal_identity_nexp(lam_abs, x_a, x_d):
    # identity setting: both detectors see the same thermal occupation m
    x = lam_abs ** 2
    return (1 - x) / (1 - x * (1 - x_a) * (1 - x_d))


def test_normalization_at_zero_argument():
    assert nexp_expectation(FIT, compose_setting(0.4, 1.1), FIT_DET, 0, 0) == pytest.approx(1.0, abs=1e-12)


def test_vacuum_is_insensitive_to_absorption():
    vac = BellStateParams(0.0)
    for x in (0.0, 0.5, 0.999999, 1.0):
        assert nexp_expectation_general(vac, compose_setting(0.3, 0.2), x, 0.7) == pytest.approx(1.0, abs=1e-15)


def test_fit_point_full_absorption_matches_oracle():
    value = nexp_expectation(FIT, IDENTITY_SETTING, FIT_DET, 8, 8)
    assert value == pytest.approx(fock_nexp(FIT, IDENTITY_SETTING, 0.135, 0.135), abs=1e-8)


def test_continuous_arguments_match_oracle():
    state = BellStateParams(0.2, 0.0)
    value = nexp_expectation_general(state, IDENTITY_SETTING, 0.3, 0.1)
    assert value == pytest.approx(fock_nexp(state, IDENTITY_SETTING, 0.3, 0.1), abs=1e-10)
    assert value == pytest.approx(thermal_identity_nexp(0.2, 0.3, 0.1), abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 0.6), st.floats(0, 2 * math.pi), st.floats(0, math.pi), st.floats(0, math.pi),
       st.floats(0, 1), st.floats(0, 1))
def test_matches_fock_reference(lam, phi, q, h, x_a, x_d):
    state, setting = BellStateParams(lam, phi), compose_setting(q, h)
    assert nexp_expectation_general(state, setting, x_a, x_d) == pytest.approx(
        fock_nexp(state, setting, x_a, x_d, cutoff=30), abs=1e-10)


def test_full_absorption_boundary_is_finite():
    # x = 1 makes the 4x4 quadratic-form determinant vanish; the regularized form stays finite
    state = BellStateParams(0.5, 0.0)
    at_one = nexp_expectation_general(state, IDENTITY_SETTING, 1.0, 1.0)
    near_one = nexp_expectation_general(state, IDENTITY_SETTING, 1 - 1e-9, 1 - 1e-9)
    assert at_one == pytest.approx(1 - 0.25, abs=1e-14)
    assert near_one == pytest.approx(at_one, abs=1e-8)
    assert abs(np.linalg.det(quadratic_form_matrix(state, IDENTITY_SETTING, 1.0, 1.0))) < 1e-15


def test_quadratic_form_formula_agrees_away_from_boundary():
    s = compose_setting(0.2, 0.5)
    for x_a, x_d in [(0.1, 0.2), (0.5, 0.05), (0.9, 0.9)]:
        k = quadratic_form_matrix(FIT, s, x_a, x_d)
        direct = (1 - 0.36 ** 2) ** 2 * (1 - x_a) * (1 - x_d) / np.linalg.det(k)
        assert direct.real == pytest.approx(nexp_expectation_general(FIT, s, x_a, x_d), rel=1e-12)


def test_quadratic_form_block_pattern_and_factorization():
    s = compose_setting(0.3, 0.9)
    k = quadratic_form_matrix(FIT, s, 0.2, 0.4)
    np.testing.assert_allclose(k, k.conj().T, atol=1e-15)
    lam_t = math.sqrt(0.8 * 0.6) * 0.36
    assert k[0, 3] == pytest.approx(lam_t)
    assert k[1, 2] == pytest.approx(lam_t * np.exp(1j * math.pi))
    vac = quadratic_form_matrix(BellStateParams(0.0), s, 0.2, 0.4)
    blocks = np.linalg.det(vac[:2, :2]) * np.linalg.det(vac[2:, 2:])
    assert abs(np.linalg.det(vac) - blocks) < 1e-12


def test_monotone_in_both_indices():
    for setting in (IDENTITY_SETTING, compose_setting(0.2, 0.5), compose_setting(1.0, 0.1)):
        e = nexp_table(FIT, setting, DetectorConfig(8, 1.0))
        assert np.all(np.diff(e, axis=0) <= 1e-15)
        assert np.all(np.diff(e, axis=1) <= 1e-15)
        assert np.all((e >= 0) & (e <= 1))


@pytest.mark.parametrize("phi", [0.0, math.pi])
def test_exchange_symmetry_for_real_coefficients(phi):
    state = BellStateParams(0.36, phi)
    setting = MeasurementSetting.from_coefficients(math.cos(0.4), math.sin(0.4))
    e = nexp_table(state, setting, FIT_DET)
    np.testing.assert_allclose(e, e.T, atol=1e-10)


def test_precise_table_agrees_with_double():
    s = compose_setting(0.7, 0.2)
    fast = nexp_table(FIT, s, FIT_DET)
    precise = np.array(nexp_table_precise(FIT, s, FIT_DET), dtype=float)
    np.testing.assert_allclose(precise, fast, atol=1e-14)


def test_mean_photon_numbers_are_thermal():
    nbar = 0.36 ** 2 / (1 - 0.36 ** 2)
    n_a, n_b = mean_photon_numbers(FIT, compose_setting(0.2, 0.5))
    assert n_a == pytest.approx(nbar, abs=1e-8)
    assert n_b == pytest.approx(nbar, abs=1e-8)


def test_argument_validation():
    with pytest.raises(InvalidArgument):
        nexp_expectation_general(FIT, IDENTITY_SETTING, -0.1, 0.0)
    with pytest.raises(InvalidArgument):
        nexp_expectation(FIT, IDENTITY_SETTING, FIT_DET, 9, 0)
    with pytest.raises(InvalidArgument):
        nexp_table(FIT, IDENTITY_SETTING, FIT_DET, max_index=9)

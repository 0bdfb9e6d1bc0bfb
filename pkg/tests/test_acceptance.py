"""Acceptance criteria, one pass/fail line each (see the summary at the end of the run)."""

import math
import time

import numpy as np
import pytest

from clickpol import (
    BellStateParams,
    DetectorConfig,
    click_probabilities_analytic,
    compose_setting,
    estimate_witnesses,
    moment_matrix_M,
    moment_matrix_Mprime,
    moments_from_statistics,
    oracle_click_statistics,
    pi_moments_analytic,
    s_nl_moments,
    sample,
    second_order_witness,
)
from clickpol.clicks import JointClickStatistics, second_order_witness_with_sigma
from clickpol.fock import coherent_beam_distribution, coherent_click_statistics, click_statistics_from_distribution
from clickpol.noise import LINEAR, NONLINEAR, noise_threshold, threshold_improvement
from clickpol.polarization import IDENTITY_SETTING

LAM, ETA, BINS = 0.36, 0.135, 8
FIT_DET = DetectorConfig(BINS, ETA)
GRID_DEG = [0.0, 22.5, 45.0, 67.5, 90.0]
PHASES = [0.0, math.pi]


@pytest.fixture(scope="module")
def grid_tables():
    """Analytic and oracle click tables plus analytic moments over the acceptance grid."""
    start = time.perf_counter()
    out = []
    for phi in PHASES:
        state = BellStateParams(LAM, phi)
        for q in GRID_DEG:
            for h in GRID_DEG:
                setting = compose_setting(math.radians(q), math.radians(h))
                out.append((
                    click_probabilities_analytic(state, setting, FIT_DET),
                    oracle_click_statistics(state, setting, FIT_DET),
                    pi_moments_analytic(state, setting, FIT_DET),
                ))
    return out, time.perf_counter() - start


def test_c1_oracle_equivalence(grid_tables, acceptance):
    tables, elapsed = grid_tables
    dev = max(np.max(np.abs(a.table - o.table)) for a, o, _ in tables)
    ok = dev < 1e-8 and elapsed < 60
    acceptance("C1 oracle equivalence", ok,
               f"max |dc| = {dev:.2e} (< 1e-8) over {len(tables)} settings in {elapsed:.1f} s (< 60 s)")
    assert ok


def test_c2_noise_thresholds(acceptance):
    start = time.perf_counter()
    lin = noise_threshold(LINEAR, 0.0, 8)
    nl8 = noise_threshold(NONLINEAR, 0.0, 8)
    gains = {n: 100 * threshold_improvement(0.0, n) for n in (2, 8, 128)}
    targets = {2: 75.0, 8: 54.0, 128: 47.0}
    elapsed = time.perf_counter() - start
    ok = (lin == 0.25 and abs(nl8 - 0.385) <= 0.005
          and all(abs(gains[n] - targets[n]) <= 1.0 for n in targets) and elapsed < 10)
    acceptance("C2 noise thresholds", ok,
               f"linear {lin!r}, nonlinear(N=8) {nl8:.5f}, gains "
               + ", ".join(f"N={n}: {g:.2f}%" for n, g in gains.items())
               + f" ({elapsed:.2f} s)")
    assert ok


def test_c3_classical_psd_baseline(acceptance):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst = [math.inf, math.inf, math.inf]
    for _ in range(100):
        mean = rng.uniform(0, 4)
        direction = rng.normal(size=4)
        jones = math.sqrt(mean) * (direction[:2] + 1j * direction[2:]) / np.linalg.norm(direction)
        setting = compose_setting(*rng.uniform(0, math.pi, 2))
        det = DetectorConfig(BINS, rng.uniform(0.05, 1.0))
        stats = click_statistics_from_distribution(coherent_beam_distribution(jones, setting), det)
        m = moments_from_statistics(stats, det)
        vals = (moment_matrix_M(m).min_eigenvalue, moment_matrix_Mprime(m).min_eigenvalue,
                second_order_witness(m))
        worst = [min(w, v) for w, v in zip(worst, vals)]
    elapsed = time.perf_counter() - start
    ok = min(worst) >= -1e-10 and elapsed < 30
    acceptance("C3 classical PSD baseline", ok,
               f"min over 100 coherent inputs: M {worst[0]:.2e}, M' {worst[1]:.2e}, "
               f"2nd-order {worst[2]:.2e} (>= -1e-10) in {elapsed:.1f} s")
    assert ok


SCAN_DEG = [7.5 * i for i in range(25)]


def _scan(phi, family):
    state = BellStateParams(LAM, phi)
    rows = []
    for a in SCAN_DEG:
        q, h = (a, 0.0) if family == "qwp" else (0.0, a)
        m = pi_moments_analytic(state, compose_setting(math.radians(q), math.radians(h)), FIT_DET)
        rows.append((second_order_witness(m), moment_matrix_Mprime(m).min_eigenvalue))
    return np.array(rows)


def test_c4_sign_reproduction(acceptance):
    scans = {(phi, fam): _scan(phi, fam) for phi in PHASES for fam in ("qwp", "hwp")}
    anti = [scans[(math.pi, f)] for f in ("qwp", "hwp")]
    anti_ok = all(np.all(s[:, 0] < 0) and np.all(s[:, 1] < 0) for s in anti)
    sym = [scans[(0.0, f)] for f in ("qwp", "hwp")]
    sym_changes = any(np.any(s[:, 0] > 0) and np.any(s[:, 0] < 0) for s in sym)
    # higher order never rises above zero in any family
    never_above = max(float(s[:, 1].max()) for s in scans.values())
    ok = anti_ok and sym_changes and never_above <= 1e-12
    acceptance("C4 nonclassicality signs", ok,
               f"phi=pi all negative: {anti_ok}; phi=0 second-order changes sign: {sym_changes}; "
               f"max M' min-eig over all families {never_above:.1e} (<= 0)")
    assert ok


def test_c5_large_bin_limit(acceptance):
    jones = np.array([1.2, 0.7 + 0.9j])
    setting = compose_setting(math.radians(20.0), math.radians(10.0))
    det_eta = 0.6
    linear = det_eta * float(np.dot(setting.direction, _stokes_components(jones)))
    errors = []
    for n in (8, 16, 32, 64, 128):
        det = DetectorConfig(n, det_eta)
        stats = click_statistics_from_distribution(coherent_beam_distribution(jones, setting), det)
        snl = s_nl_moments(moments_from_statistics(stats, det, max_order=1), 1)[1]
        errors.append(abs(snl - linear))
    ratios = [b / a for a, b in zip(errors, errors[1:])]
    ok = all(0.4 <= r <= 0.6 for r in ratios)
    acceptance("C5 N -> infinity limit", ok,
               "error ratios per doubling " + ", ".join(f"{r:.3f}" for r in ratios) + " (in [0.4, 0.6])")
    assert ok


def _stokes_components(jones):
    # unnormalized classical Stokes vector (S1, S2, S3) in the (H, V) basis
    ex, ey = jones
    cross = np.conj(ex) * ey
    return np.array([2 * cross.real, 2 * cross.imag, abs(ex) ** 2 - abs(ey) ** 2])


def _standardized(stats, det, seeds, shots):
    z = []
    for seed in seeds:
        run = sample(stats, shots, seed)
        value, sigma = second_order_witness_with_sigma(moments_from_statistics(run.statistics, det))
        z.append(value / sigma if sigma > 0 else (0.0 if value == 0 else math.copysign(math.inf, value)))
    return np.array(z)


@pytest.mark.xfail(strict=True, reason="the vacuum null never produces a click: every estimate is 0 +- 0")
def test_c6a_calibration_vacuum_null(acceptance):
    stats = click_probabilities_analytic(BellStateParams(0.0), IDENTITY_SETTING, FIT_DET)
    z = _standardized(stats, FIT_DET, range(200), 10_000)
    ok = -0.2 <= z.mean() <= 0.2 and 0.7 <= z.var() <= 1.4
    acceptance("C6a calibration, lambda=0 null", ok,
               f"standardized witness mean {z.mean():.3f}, variance {z.var():.3f} "
               "(target [-0.2, 0.2], [0.7, 1.4]); degenerate: sigma = 0 in every run")
    assert ok


def test_c6b_calibration_classical_null(acceptance):
    stats = coherent_click_statistics(1.0, 1.0, FIT_DET)
    z = _standardized(stats, FIT_DET, range(200), 10_000)
    ok = -0.2 <= z.mean() <= 0.2 and 0.7 <= z.var() <= 1.4
    acceptance("C6b calibration, coherent null", ok,
               f"standardized witness mean {z.mean():.3f}, variance {z.var():.3f} over 200 seeds")
    assert ok


def test_c6c_significance_at_fit_parameters(acceptance):
    state = BellStateParams(LAM, math.pi)
    stats = click_probabilities_analytic(state, IDENTITY_SETTING, FIT_DET)
    exact = moments_from_statistics(JointClickStatistics(stats.table, shots=10**7), FIT_DET)
    value, sigma = second_order_witness_with_sigma(exact)
    expected = value / sigma
    est = estimate_witnesses(sample(stats, 10**7, 11), FIT_DET).second_order
    ok = est.value < 0 and abs(est.significance) > 15 and abs(est.significance - expected) < 10
    acceptance("C6c significance at 1e7 shots", ok,
               f"significance {est.significance:.1f} (expected {expected:.1f}, |.| > 15)")
    assert ok


def test_c7_round_trip(grid_tables, acceptance):
    tables, _ = grid_tables
    dev = max(np.max(np.abs(moments_from_statistics(a, FIT_DET).values - m.values))
              for a, _, m in tables)
    ok = dev < 1e-10
    acceptance("C7 round trip", ok, f"max |moments(clicks) - moments| = {dev:.2e} (< 1e-10)")
    assert ok

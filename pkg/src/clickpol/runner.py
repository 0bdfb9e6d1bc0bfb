"""Scan, noise-study, sampling and oracle-check runs producing result tables."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clicks import (
    click_probabilities_analytic,
    moment_matrix_Mprime,
    moments_from_statistics,
    pi_moments_analytic,
    s0_nl_moments,
    s_nl_moments,
    second_order_witness,
)
from .config import ConfigError, RunConfig
from .fock import oracle_click_statistics
from .noise import (
    LINEAR,
    NONLINEAR,
    NoisySingleProbe,
    linear_noisy_variance,
    noise_threshold,
    nonlinear_noisy_variance,
)
from .polarization import BellStateParams, DetectorConfig, compose_setting
from .sampling import estimate_witnesses, sample

SCAN_COLUMNS = [
    ("angle_deg", "scanned wave-plate angle in degrees"),
    ("witness_2nd", "<:S_NL^2:> - <:S_NL:>^2 (dimensionless; negative = nonclassical); estimate in sampling mode"),
    ("witness_2nd_sigma", "standard deviation of witness_2nd, delta method (empty in analytic mode)"),
    ("mprime_mineig", "minimum eigenvalue of the M' moment matrix (negative = nonclassical)"),
    ("mprime_mineig_sigma", "standard deviation of mprime_mineig, bootstrap (empty in analytic mode)"),
    ("s0nl_mean", "<:S0_NL:> = N(<pi_A> + <pi_B>), mean total click count"),
    ("snl_mean", "<:S_NL:> = N(<pi_A> - <pi_B>), mean click-count difference"),
]
SAMPLING_COLUMNS = [
    ("seed", "per-point RNG seed (PCG64) derived from the run seed"),
    ("witness_2nd_analytic", "exact witness_2nd for the scanned setting"),
    ("witness_2nd_significance", "witness_2nd / witness_2nd_sigma"),
    ("witness_2nd_sigma_bootstrap", "standard deviation of witness_2nd, bootstrap"),
    ("mprime_mineig_analytic", "exact mprime_mineig for the scanned setting"),
    ("mprime_mineig_significance", "mprime_mineig / mprime_mineig_sigma"),
]
NOISE_COLUMNS = [
    ("cos_theta", "cosine of the single-photon polarization angle to the z axis"),
    ("nbar", "mean thermal photons per polarization mode"),
    ("nl_variance", "nonlinear normally ordered variance (negative = nonclassical)"),
    ("lin_variance", "linear normally ordered variance 4 nbar - cos^2 theta"),
    ("lin_threshold", "largest nbar with negative linear variance at this cos_theta (empty if none)"),
    ("nl_threshold", "largest nbar with negative nonlinear variance at this cos_theta (empty if none)"),
]
ORACLE_COLUMNS = [
    ("phi_deg", "Bell-state phase in degrees"),
    ("qwp_deg", "quarter-wave plate angle in degrees"),
    ("hwp_deg", "half-wave plate angle in degrees"),
    ("max_abs_dev", "max over (k, l) of |analytic c_kl - Fock-oracle c_kl|"),
    ("status", "PASS if max_abs_dev is below the tolerance"),
]
SAMPLE_COLUMNS = [
    ("quantity", "estimated witness"),
    ("estimate", "value from the sampled click table"),
    ("sigma", "standard deviation of the estimate"),
    ("significance", "estimate / sigma"),
    ("method", "uncertainty method: delta or bootstrap"),
    ("analytic", "exact value for the sampled setting"),
]


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def column(self, name: str) -> list:
        i = self.names.index(name)
        return [row[i] for row in self.rows]


def _state(cfg: RunConfig, phi_deg: float | None = None) -> BellStateParams:
    phi = cfg["state"]["phi_deg"] if phi_deg is None else phi_deg
    return BellStateParams(cfg["state"]["lambda"], math.radians(phi))


def _detector(cfg: RunConfig) -> DetectorConfig:
    return DetectorConfig(cfg["detector"]["bins"], cfg["detector"]["efficiency"])


def grid(start: float, stop: float, step: float) -> list[float]:
    """``start, start + step, ...`` up to ``stop`` inclusive (tolerant to float drift)."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def point_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def _analytic_witnesses(moments):
    w = second_order_witness(moments)
    mp = moment_matrix_Mprime(moments).min_eigenvalue if moments.bins % 2 == 0 else None
    return w, mp


def _scan_point(task):
    cfg, angle, seed = task
    scan = cfg["scan"]
    state, det = _state(cfg), _detector(cfg)
    fixed = math.radians(scan["fixed_deg"])
    a = math.radians(angle)
    setting = compose_setting(a, fixed) if scan["axis"] == "qwp" else compose_setting(fixed, a)
    outputs = scan["outputs"]
    moments = pi_moments_analytic(state, setting, det)
    w, mp = _analytic_witnesses(moments)
    shots = cfg["sampling"]["shots"]
    if shots is None:
        s0, s1 = s0_nl_moments(moments, 1)[1], s_nl_moments(moments, 1)[1]
        row = [angle, w, None, mp, None, s0, s1]
    else:
        stats = click_probabilities_analytic(state, setting, det)
        run = sample(stats, shots, seed, setting, state)
        est = estimate_witnesses(run, det, cfg["sampling"]["resamples"])
        emp = moments_from_statistics(run.statistics, det)
        s0, s1 = s0_nl_moments(emp, 1)[1], s_nl_moments(emp, 1)[1]
        row = [angle, est.second_order.value, est.second_order.sigma,
               est.mprime.value, est.mprime.sigma, s0, s1,
               seed, w, est.second_order.significance, est.second_order_bootstrap.sigma,
               mp, est.mprime.significance]
    if "second-order" not in outputs:
        row[1] = row[2] = None
    if "mprime-mineig" not in outputs:
        row[3] = row[4] = None
    if "s-nl-moments" not in outputs:
        row[5] = row[6] = None
    return row


def _map(func, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    # map preserves task order whatever the completion order
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def run_scan(cfg: RunConfig) -> ResultTable:
    scan = cfg["scan"]
    angles = grid(scan["start"], scan["stop"], scan["step"])
    sampling = cfg["sampling"]["shots"] is not None
    seeds = point_seeds(cfg["sampling"]["seed"], len(angles)) if sampling else [None] * len(angles)
    columns = SCAN_COLUMNS + (SAMPLING_COLUMNS if sampling else [])
    rows = _map(_scan_point, [(cfg, a, s) for a, s in zip(angles, seeds)], cfg["run"]["jobs"])
    return ResultTable(columns, rows)


def run_noise_study(cfg: RunConfig) -> ResultTable:
    noise = cfg["noise"]
    bins = noise["bins"]
    cos_values = np.linspace(0.0, 1.0, noise["cos_theta_points"])
    nbars = grid(0.0, noise["nbar_max"], noise["nbar_step"])
    rows = []
    for c in cos_values:
        theta = math.acos(float(c))
        if c == 0.0:
            lin_t = nl_t = None
        else:
            lin_t = noise_threshold(LINEAR, theta, bins)
            nl_t = noise_threshold(NONLINEAR, theta, bins)
        for nb in nbars:
            probe = NoisySingleProbe(theta, nb, bins)
            rows.append([float(c), nb, nonlinear_noisy_variance(probe),
                         linear_noisy_variance(probe), lin_t, nl_t])
    return ResultTable(NOISE_COLUMNS, rows)


def _oracle_point(task):
    cfg, phi, qwp, hwp, oracle_efficiency = task
    state, det = _state(cfg, phi), _detector(cfg)
    setting = compose_setting(math.radians(qwp), math.radians(hwp))
    analytic = click_probabilities_analytic(state, setting, det).table
    det_oracle = det if oracle_efficiency is None else DetectorConfig(det.bins, oracle_efficiency)
    oracle = oracle_click_statistics(state, setting, det_oracle, cfg["oracle"]["cutoff"]).table
    return float(np.max(np.abs(analytic - oracle)))


def run_oracle_check(cfg: RunConfig, oracle_efficiency: float | None = None) -> ResultTable:
    """Analytic vs Fock-oracle click tables over the configured grid.

    ``oracle_efficiency`` replaces the detector efficiency on the oracle path
    only; it exists to exercise the failure branch.
    """
    ora = cfg["oracle"]
    tol = ora["tolerance"]
    points = [(phi, q, h) for phi in ora["phi_deg"] for q in ora["angles_deg"] for h in ora["angles_deg"]]
    devs = _map(_oracle_point, [(cfg, *p, oracle_efficiency) for p in points], cfg["run"]["jobs"])
    rows = [[phi, q, h, d, "PASS" if d < tol else "FAIL"] for (phi, q, h), d in zip(points, devs)]
    worst = max(devs)
    return ResultTable(ORACLE_COLUMNS, rows,
                       {"max_abs_dev": worst, "tolerance": tol, "passed": worst < tol})


def run_sample(cfg: RunConfig) -> tuple[ResultTable, np.ndarray]:
    smp = cfg["sampling"]
    if smp["shots"] is None:
        raise ConfigError("sampling.shots must be set for the sample subcommand", field="sampling.shots")
    state, det = _state(cfg), _detector(cfg)
    det.require_even()
    setting = compose_setting(math.radians(smp["qwp_deg"]), math.radians(smp["hwp_deg"]))
    stats = click_probabilities_analytic(state, setting, det)
    run = sample(stats, smp["shots"], smp["seed"], setting, state)
    est = estimate_witnesses(run, det, smp["resamples"])
    w, mp = _analytic_witnesses(pi_moments_analytic(state, setting, det))
    rows = [
        ["witness_2nd", est.second_order.value, est.second_order.sigma,
         est.second_order.significance, est.second_order.method, w],
        ["witness_2nd", est.second_order_bootstrap.value, est.second_order_bootstrap.sigma,
         est.second_order_bootstrap.significance, est.second_order_bootstrap.method, w],
        ["mprime_mineig", est.mprime.value, est.mprime.sigma,
         est.mprime.significance, est.mprime.method, mp],
    ]
    return ResultTable(SAMPLE_COLUMNS, rows, {"shots": run.shots, "seed": run.seed}), run.counts

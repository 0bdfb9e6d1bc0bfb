"""Finite-shot click data and witness estimation with error bars.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``; auxiliary streams (bootstrap) are obtained with
``SeedSequence.spawn`` so that every stream is reproducible from one integer.
Multinomial draws use sequential binomial conditioning over the row-major
flattened table, which is exact and fixes the order in which random numbers
are consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clicks import (
    PROBABILITY,
    JointClickStatistics,
    moment_transfer_matrix,
    moments_from_statistics,
    mprime_min_eigenvalue,
    second_order_witness_with_sigma,
)
from .exceptions import InsufficientData, InvalidArgument
from .polarization import BellStateParams, DetectorConfig, MeasurementSetting

DELTA = "delta"
BOOTSTRAP = "bootstrap"
DEFAULT_RESAMPLES = 200


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def multinomial(rng: np.random.Generator, shots: int, probs: np.ndarray) -> np.ndarray:
    """One multinomial draw by sequential binomial conditioning."""
    p = np.asarray(probs, dtype=float).ravel()
    # tail[i] = sum(p[i:]) without the cancellation of 1 - cumsum
    tail = np.cumsum(p[::-1])[::-1]
    out = np.zeros(p.size, dtype=np.int64)
    remaining = int(shots)
    for i in range(p.size - 1):
        if remaining == 0:
            break
        if tail[i] <= 0:
            break
        cond = min(max(p[i] / tail[i], 0.0), 1.0)
        out[i] = rng.binomial(remaining, cond)
        remaining -= out[i]
    out[-1] += remaining
    return out.reshape(np.shape(probs))


@dataclass(frozen=True)
class SampleRun:
    seed: int
    shots: int
    counts: np.ndarray
    source_setting: MeasurementSetting | None = None
    source_state: BellStateParams | None = None

    def __post_init__(self):
        if int(self.counts.sum()) != self.shots:
            raise InvalidArgument("counts do not add up to the number of shots")

    @property
    def statistics(self) -> JointClickStatistics:
        return JointClickStatistics.from_counts(self.counts)


@dataclass(frozen=True)
class WitnessReport:
    value: float
    sigma: float
    method: str

    @property
    def significance(self) -> float:
        """``value / sigma``; a zero-variance estimate of exactly zero counts as 0."""
        if self.sigma > 0:
            return self.value / self.sigma
        return 0.0 if self.value == 0 else math.copysign(math.inf, self.value)


@dataclass(frozen=True)
class WitnessEstimates:
    second_order: WitnessReport
    second_order_bootstrap: WitnessReport
    mprime: WitnessReport

    def __iter__(self):
        # unpacks as the (second-order, M' min-eig) pair
        return iter((self.second_order, self.mprime))


def sample(stats: JointClickStatistics, shots: int, seed: int,
           setting: MeasurementSetting | None = None,
           state: BellStateParams | None = None) -> SampleRun:
    if stats.kind != PROBABILITY:
        raise InvalidArgument("can only sample from a probability table")
    if shots < 1:
        raise InvalidArgument(f"shots must be positive, got {shots}")
    counts = multinomial(make_rng(seed), shots, stats.table)
    return SampleRun(seed, int(shots), counts, setting, state)


def _second_order_from_table(table: np.ndarray, t: np.ndarray, bins: int) -> float:
    m = t @ table @ t.T
    s1 = bins * (m[1, 0] - m[0, 1])
    s2 = bins * bins * (m[2, 0] - 2 * m[1, 1] + m[0, 2])
    return s2 - s1 * s1


def bootstrap_witnesses(run: SampleRun, det: DetectorConfig,
                        resamples: int = DEFAULT_RESAMPLES,
                        seed: int | np.random.SeedSequence | None = None) -> np.ndarray:
    """Parametric bootstrap: ``(resamples, 2)`` array of (second-order, M' min-eig)."""
    if seed is None:
        seed = np.random.SeedSequence(run.seed).spawn(1)[0]
    rng = make_rng(seed)
    freq = run.counts / run.shots
    t = moment_transfer_matrix(det.bins)
    out = np.empty((resamples, 2))
    for r in range(resamples):
        table = multinomial(rng, run.shots, freq) / run.shots
        m = t @ table @ t.T
        out[r, 0] = _second_order_from_table(table, t, det.bins)
        out[r, 1] = mprime_min_eigenvalue(m, det.bins)
    return out


def estimate_witnesses(run: SampleRun, det: DetectorConfig,
                       resamples: int = DEFAULT_RESAMPLES,
                       bootstrap_seed: int | None = None) -> WitnessEstimates:
    """Second-order witness (delta method and bootstrap) and M' minimum eigenvalue.

    The M' uncertainty is bootstrap-only: the delta method needs a stable
    eigenvector, which fails where eigenvalues cluster around zero.
    """
    if run.shots < 2:
        raise InsufficientData("at least two shots are needed to estimate a variance")
    if run.counts.shape != (det.bins + 1, det.bins + 1):
        raise InvalidArgument(f"count table shape {run.counts.shape} does not match {det.bins} bins")
    det.require_even()
    moments = moments_from_statistics(run.statistics, det)
    value, sigma = second_order_witness_with_sigma(moments)
    mprime = mprime_min_eigenvalue(moments.values, det.bins)
    boot = bootstrap_witnesses(run, det, resamples, bootstrap_seed)
    return WitnessEstimates(
        second_order=WitnessReport(value, sigma, DELTA),
        second_order_bootstrap=WitnessReport(value, float(np.std(boot[:, 0], ddof=1)), BOOTSTRAP),
        mprime=WitnessReport(mprime, float(np.std(boot[:, 1], ddof=1)), BOOTSTRAP),
    )

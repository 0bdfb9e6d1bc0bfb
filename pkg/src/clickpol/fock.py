"""Brute-force reference path in a truncated Fock basis.

The Bell state is expanded in pair numbers, each arm is rotated with the exact
two-mode beam-splitter matrix elements, the undetected modes are traced out,
and the resulting photon-number distribution is folded through the click
response of an N-bin detector. Nothing here touches the Gaussian integral
machinery in :mod:`clickpol.gaussian`; agreement between the two paths is the
central correctness check of the package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import stats as sps

from .clicks import JointClickStatistics
from .exceptions import InvalidArgument
from .gaussian import precise_digits
from .polarization import BellStateParams, DetectorConfig, MeasurementSetting

TAIL_TOL = 1e-12
# high click numbers of weak coherent light are ~1e-8, so the tail must be far smaller
COHERENT_TAIL_TOL = 1e-30


class TruncationWarning(UserWarning):
    """The Fock cutoff discards more probability than the configured tolerance."""


@dataclass(frozen=True)
class FockStateVector:
    """Amplitudes ``amplitudes[m, n]`` of ``|m, n, n, m>`` for ``m, n <= cutoff``."""

    amplitudes: np.ndarray
    cutoff: int
    tail_mass: float

    @property
    def norm_deficit(self) -> float:
        return 1.0 - float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class JointPhotonDistribution:
    """``probs[n_A, n_B]`` for the two detected modes."""

    probs: np.ndarray
    tail_mass: float

    @property
    def max_photons(self) -> int:
        return self.probs.shape[0] - 1

    def means(self) -> tuple[float, float]:
        n = np.arange(self.probs.shape[0])
        return float(n @ self.probs.sum(axis=1)), float(n @ self.probs.sum(axis=0))


def bell_tail_mass(lam_abs: float, cutoff: int) -> float:
    """Probability of ``m > cutoff`` or ``n > cutoff`` (two independent geometrics)."""
    x = lam_abs ** 2
    return 1.0 - (1.0 - x ** (cutoff + 1)) ** 2


def default_cutoff(lam_abs: float, tol: float = TAIL_TOL) -> int:
    cutoff = 1
    while bell_tail_mass(lam_abs, cutoff) >= tol:
        cutoff += 1
    return cutoff


def build_bell_state(state: BellStateParams, cutoff: int | None = None) -> FockStateVector:
    if cutoff is None:
        cutoff = default_cutoff(abs(state.lam))
    if cutoff < 1:
        raise InvalidArgument(f"cutoff must be >= 1, got {cutoff}")
    idx = np.arange(cutoff + 1)
    lam = state.lam
    amp = (1 - abs(lam) ** 2) * np.power(lam, idx)[:, None] \
        * np.power(np.exp(1j * state.phi) * lam, idx)[None, :]
    tail = bell_tail_mass(abs(lam), cutoff)
    if tail > TAIL_TOL:
        warnings.warn(f"Fock cutoff {cutoff} leaves tail mass {tail:.2e}", TruncationWarning)
    return FockStateVector(amp, cutoff, tail)


def beam_splitter_block(tau: complex, rho: complex, total: int) -> np.ndarray:
    """Fock matrix elements on the ``total``-photon block.

    ``U[m, k] = <k, total-k | U | m, total-m>`` for the mode map
    ``u = tau a + rho b``, ``v = -conj(rho) a + conj(tau) b``, obtained by
    expanding ``(tau u^+ - conj(rho) v^+)^m (rho u^+ + conj(tau) v^+)^(total-m)``.
    """
    s = total
    out = np.zeros((s + 1, s + 1), dtype=complex)
    log_fact = [math.lgamma(i + 1) for i in range(s + 1)]
    for m in range(s + 1):
        n = s - m
        first = [math.comb(m, i) * tau ** i * (-rho.conjugate()) ** (m - i) for i in range(m + 1)]
        second = [math.comb(n, j) * rho ** j * tau.conjugate() ** (n - j) for j in range(n + 1)]
        coeff = np.convolve(first, second)
        for k in range(s + 1):
            scale = math.exp(0.5 * (log_fact[k] + log_fact[s - k] - log_fact[m] - log_fact[n]))
            out[m, k] = coeff[k] * scale
    return out


def detected_photon_distribution(fock: FockStateVector,
                                 setting: MeasurementSetting) -> JointPhotonDistribution:
    """Photon numbers of mode ``tau a_AH + rho a_AV`` and ``-conj(rho) a_BH + conj(tau) a_BV``.

    Arm A holds ``|m, n>`` and arm B ``|n, m>``; the pair-number sum ``s = m + n``
    is conserved in each arm, so different ``s`` never interfere.
    """
    c = fock.cutoff
    probs = np.zeros((2 * c + 1, 2 * c + 1))
    for s in range(2 * c + 1):
        ms = np.arange(max(0, s - c), min(s, c) + 1)
        amp = fock.amplitudes[ms, s - ms]
        u = beam_splitter_block(setting.tau, setting.rho, s)
        # arm B: input first-mode count s-m, detected mode is the second output
        u_b = u[::-1, ::-1]
        joint = (u[ms].T * amp) @ u_b[ms]
        probs[: s + 1, : s + 1] += np.abs(joint) ** 2
    return JointPhotonDistribution(probs, fock.tail_mass)


def click_response(n: int, k: int, det: DetectorConfig) -> float:
    """P(k clicks | n photons): inclusion-exclusion over which k bins fire.

    Each photon is lost with probability ``1 - eta`` or lands in one of N bins
    uniformly. The alternating sum has terms up to ``C(N, k) 2^k``, so it runs
    in extended precision.
    """
    big_n = det.bins
    if not (0 <= k <= big_n):
        raise InvalidArgument(f"click number must lie in 0..{big_n}, got {k}")
    if n < 0:
        raise InvalidArgument(f"photon number must be >= 0, got {n}")
    with mpmath.workdps(precise_digits(big_n)):
        eta = mpmath.mpf(det.efficiency)
        terms = [(-1) ** j * math.comb(k, j) * (1 - eta + eta * (k - j) / big_n) ** n
                 for j in range(k + 1)]
        return float(math.comb(big_n, k) * mpmath.fsum(terms))


def click_response_matrix(det: DetectorConfig, max_photons: int) -> np.ndarray:
    """``R[k, n] = P(k | n)`` by adding photons one at a time.

    A new photon is lost (``1 - eta``), hits an already firing bin
    (``eta k / N``) or a fresh one (``eta (N - k) / N``). All terms are
    non-negative, so this stays accurate for any N.
    """
    big_n, eta = det.bins, det.efficiency
    k = np.arange(big_n + 1)
    stay = 1 - eta + eta * k / big_n
    move = eta * (big_n - k) / big_n
    out = np.zeros((big_n + 1, max_photons + 1))
    col = np.zeros(big_n + 1)
    col[0] = 1.0
    out[:, 0] = col
    for n in range(1, max_photons + 1):
        nxt = stay * col
        nxt[1:] += move[:-1] * col[:-1]
        col = nxt
        out[:, n] = col
    return out


def click_statistics_from_distribution(dist: JointPhotonDistribution,
                                       det: DetectorConfig) -> JointClickStatistics:
    """Fold a photon-number distribution through both click detectors.

    The truncated distribution is renormalized, i.e. conditioned on the
    retained photon numbers.
    """
    resp = click_response_matrix(det, dist.max_photons)
    table = resp @ dist.probs @ resp.T
    table = np.clip(table, 0.0, None)
    return JointClickStatistics(table / table.sum())


def oracle_click_statistics(state: BellStateParams, setting: MeasurementSetting,
                            det: DetectorConfig, cutoff: int | None = None) -> JointClickStatistics:
    fock = build_bell_state(state, cutoff)
    return click_statistics_from_distribution(detected_photon_distribution(fock, setting), det)


def poisson_cutoff(mean: float, tol: float = COHERENT_TAIL_TOL) -> int:
    """Smallest cutoff whose Poisson tail mass is below ``tol``."""
    cutoff = max(1, int(mean))
    while sps.poisson.sf(cutoff, mean) > tol:
        cutoff += 1
    return cutoff


def coherent_photon_distribution(mean_a: float, mean_b: float,
                                 cutoff: int | None = None) -> JointPhotonDistribution:
    """Product of Poissonians: coherent light in both detected modes."""
    if mean_a < 0 or mean_b < 0:
        raise InvalidArgument("mean photon numbers must be non-negative")
    if cutoff is None:
        cutoff = poisson_cutoff(max(mean_a, mean_b))
    n = np.arange(cutoff + 1)
    pa, pb = sps.poisson.pmf(n, mean_a), sps.poisson.pmf(n, mean_b)
    tail = 1.0 - pa.sum() * pb.sum()
    return JointPhotonDistribution(np.outer(pa, pb), max(tail, 0.0))


def coherent_beam_distribution(jones: np.ndarray, setting: MeasurementSetting,
                               cutoff: int | None = None) -> JointPhotonDistribution:
    """Coherent beam with field ``jones = (alpha_H, alpha_V)`` split by the plates and PBS.

    The "+" port goes to detector A and the "-" port to detector B, so
    ``<n_A> - <n_B>`` is the classical Stokes projection onto ``setting.direction``.
    """
    out = setting.matrix @ np.asarray(jones, dtype=complex)
    return coherent_photon_distribution(abs(out[0]) ** 2, abs(out[1]) ** 2, cutoff)


def coherent_click_statistics(mean_a: float, mean_b: float,
                              det: DetectorConfig) -> JointClickStatistics:
    return click_statistics_from_distribution(coherent_photon_distribution(mean_a, mean_b), det)

"""Click-counting statistics, normally ordered moments and moment-matrix witnesses.

Each arm is an N-bin click detector with POVM ``:C(N,k) pi^k (1-pi)^(N-k):`` and
``pi = 1 - :exp(-eta n / N):``. Everything below is expressed through

    moment(j, j') = < :pi_A^j pi_B^j': >,

which can be computed either from the generating function of
:mod:`clickpol.gaussian` or directly from a (measured) click table ``c[k, l]``.
The nonlinear Stokes observables are ``S_NL = N pi_A - N pi_B`` and
``S0_NL = N pi_A + N pi_B``.

The alternating binomial sums have O(1) terms while high-order click
probabilities are twenty or more orders of magnitude smaller, so the analytic
path evaluates E and the sums in extended precision (mpmath) and rounds only
the final values. Sums over measured tables use ``math.fsum``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .exceptions import InsufficientData, InvalidArgument, NumericDegeneracy
from .gaussian import nexp_table_precise, precise_digits
from .polarization import BellStateParams, DetectorConfig, MeasurementSetting

PROBABILITY = "probability"
EMPIRICAL = "empirical-frequency"

_NORM_TOL = 1e-10
_CLAMP_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointClickStatistics:
    """Joint click table ``table[k, l]`` for k clicks in arm A and l in arm B."""

    table: np.ndarray
    kind: str = PROBABILITY
    shots: int | None = None

    def __post_init__(self):
        table = _frozen(self.table)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 2:
            raise InvalidArgument(f"click table must be square (N+1)x(N+1), got shape {table.shape}")
        if self.kind not in (PROBABILITY, EMPIRICAL):
            raise InvalidArgument(f"unknown statistics kind {self.kind!r}")
        if np.any(table < 0):
            raise InvalidArgument("click table has negative entries")
        if abs(table.sum() - 1.0) > _NORM_TOL:
            raise InvalidArgument(f"click table sums to {table.sum()!r}, expected 1")
        if self.shots is not None and self.shots < 1:
            raise InvalidArgument(f"shots must be positive, got {self.shots}")
        object.__setattr__(self, "table", table)

    @property
    def bins(self) -> int:
        return self.table.shape[0] - 1

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "JointClickStatistics":
        counts = np.asarray(counts)
        total = int(counts.sum())
        if total < 1:
            raise InsufficientData("count table is empty")
        return cls(counts / total, kind=EMPIRICAL, shots=total)


@dataclass(frozen=True)
class MomentSet:
    """``values[j, j'] = <:pi_A^j pi_B^j':>`` for ``0 <= j, j' <= max_order``.

    ``covariance`` (optional) is the estimator covariance of the row-major
    flattened ``values``.
    """

    values: np.ndarray
    bins: int
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidArgument(f"moment array must be square, got shape {values.shape}")
        if values.shape[0] - 1 > self.bins:
            raise InvalidArgument("moment orders beyond the number of bins are not measurable")
        object.__setattr__(self, "values", values)
        if self.covariance is not None:
            object.__setattr__(self, "covariance", _frozen(self.covariance))

    @property
    def max_order(self) -> int:
        return self.values.shape[0] - 1

    def moment(self, j: int, jp: int) -> float:
        if j > self.max_order or jp > self.max_order:
            raise InsufficientData(f"moment ({j}, {jp}) exceeds available order {self.max_order}")
        return float(self.values[j, jp])


@dataclass(frozen=True)
class MomentMatrix:
    entries: np.ndarray
    labels: tuple
    min_eigenvalue: float
    min_eigenvalue_sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def certifies_nonclassicality(self) -> bool:
        return self.min_eigenvalue < 0


def _clamp(table: np.ndarray) -> np.ndarray:
    worst = table.min()
    if worst < -_CLAMP_TOL:
        raise NumericDegeneracy(f"click probability {worst:.3e} is negative beyond roundoff")
    return np.where(table < 0, 0.0, table)


def _fsum(terms) -> float:
    terms = list(terms)
    if terms and isinstance(terms[0], mpmath.mpf):
        return float(mpmath.fsum(terms))
    return math.fsum(terms)


def click_table_from_nexp(nexp: np.ndarray, bins: int) -> np.ndarray:
    """``c[k, l]`` from the full table ``E[m_a, m_b]`` (normally ordered POVM expansion).

    ``nexp`` may hold floats or mpmath numbers; with mpmath inputs the sums run
    at the current mpmath precision and only the results are rounded.
    """
    n = bins
    c = np.empty((n + 1, n + 1))
    for k in range(n + 1):
        for l in range(n + 1):
            c[k, l] = _fsum(
                (-1) ** (i + j) * (math.comb(n, k) * math.comb(k, i) * math.comb(n, l) * math.comb(l, j))
                * nexp[n - k + i, n - l + j]
                for i in range(k + 1)
                for j in range(l + 1)
            )
    return c


def click_probabilities_analytic(state: BellStateParams, setting: MeasurementSetting,
                                 det: DetectorConfig) -> JointClickStatistics:
    with mpmath.workdps(precise_digits(det.bins)):
        nexp = nexp_table_precise(state, setting, det)
        table = _clamp(click_table_from_nexp(nexp, det.bins))
    return JointClickStatistics(table, kind=PROBABILITY)


def moments_from_nexp(nexp: np.ndarray) -> np.ndarray:
    """``<:pi_A^j pi_B^j':>`` from ``E[m_a, m_b]`` via ``pi^j = sum_a C(j,a) (-1)^a :e^{-a eta n/N}:``."""
    top = nexp.shape[0] - 1
    out = np.empty((top + 1, top + 1))
    for j in range(top + 1):
        for jp in range(top + 1):
            out[j, jp] = _fsum(
                (-1) ** (a + b) * (math.comb(j, a) * math.comb(jp, b)) * nexp[a, b]
                for a in range(j + 1)
                for b in range(jp + 1)
            )
    return out


def pi_moments_analytic(state: BellStateParams, setting: MeasurementSetting,
                        det: DetectorConfig, max_order: int | None = None) -> MomentSet:
    with mpmath.workdps(precise_digits(det.bins)):
        nexp = nexp_table_precise(state, setting, det, max_index=max_order)
        values = moments_from_nexp(nexp)
    return MomentSet(values, bins=det.bins)


def moment_transfer_matrix(bins: int, max_order: int | None = None) -> np.ndarray:
    """``T[j, k] = C(k, j) / C(N, j)``, so that ``moments = T @ c @ T.T``."""
    top = bins if max_order is None else max_order
    t = np.zeros((top + 1, bins + 1))
    for j in range(top + 1):
        for k in range(j, bins + 1):
            t[j, k] = math.comb(k, j) / math.comb(bins, j)
    return t


def moments_from_statistics(stats: JointClickStatistics, det: DetectorConfig,
                            max_order: int | None = None) -> MomentSet:
    """Normally ordered pi-moments from a click table.

    When ``stats.shots`` is set the multinomial covariance
    ``(diag(c) - c c^T) / shots`` is pushed through the (linear) map.
    """
    if stats.bins != det.bins:
        raise InvalidArgument(f"click table has {stats.bins} bins, detector has {det.bins}")
    top = det.bins if max_order is None else max_order
    if not (0 <= top <= det.bins):
        raise InvalidArgument(f"max_order must lie in 0..{det.bins}, got {top}")
    t = moment_transfer_matrix(det.bins, top)
    values = t @ stats.table @ t.T
    cov = None
    if stats.shots is not None:
        lin = np.kron(t, t)
        c = stats.table.ravel()
        mean = lin @ c
        cov = ((lin * c) @ lin.T - np.outer(mean, mean)) / stats.shots
    return MomentSet(values, bins=det.bins, covariance=cov)


def _check_order(m: MomentSet, order: int) -> None:
    if order > m.bins:
        raise InsufficientData(f"order {order} exceeds the {m.bins} available bins")
    if order > m.max_order:
        raise InsufficientData(f"order {order} needs moments beyond the computed order {m.max_order}")


def _stokes_moments(m: MomentSet, order: int, sign: int) -> list[float]:
    _check_order(m, order)
    n = m.bins
    out = []
    for k in range(order + 1):
        s = math.fsum(math.comb(k, i) * sign ** (k - i) * m.values[i, k - i] for i in range(k + 1))
        out.append(n ** k * s)
    return out


def s_nl_moments(m: MomentSet, order: int) -> list[float]:
    """``<:S_NL^k:>`` for ``k = 0..order``."""
    return _stokes_moments(m, order, -1)


def s0_nl_moments(m: MomentSet, order: int) -> list[float]:
    """``<:S0_NL^k:>`` for ``k = 0..order``."""
    return _stokes_moments(m, order, +1)


def second_order_witness(m: MomentSet) -> float:
    """Normally ordered variance ``<:S_NL^2:> - <:S_NL:>^2`` (negative: nonclassical)."""
    _, s1, s2 = s_nl_moments(m, 2)
    return s2 - s1 * s1


def second_order_gradient(m: MomentSet) -> np.ndarray:
    """Gradient of the second-order witness with respect to the flattened moments."""
    n = m.bins
    _, s1, _ = s_nl_moments(m, 2)
    g = np.zeros_like(m.values)
    g[2, 0] = g[0, 2] = n * n
    g[1, 1] = -2 * n * n
    g[1, 0] = -2 * s1 * n
    g[0, 1] = 2 * s1 * n
    return g.ravel()


def second_order_witness_with_sigma(m: MomentSet) -> tuple[float, float]:
    """Witness value and its first-order (delta-method) standard deviation."""
    if m.covariance is None:
        raise InvalidArgument("moment set carries no covariance")
    g = second_order_gradient(m)
    var = float(g @ m.covariance @ g)
    return second_order_witness(m), math.sqrt(max(var, 0.0))


def _min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(a)[0])


def moment_matrix_M(m: MomentSet) -> MomentMatrix:
    """Hankel matrix ``(<:S_NL^(k+l):>)`` for ``k, l = 0..N//2``."""
    size = m.bins // 2 + 1
    s = s_nl_moments(m, 2 * (size - 1))
    entries = np.array([[s[k + l] for l in range(size)] for k in range(size)])
    return MomentMatrix(entries, tuple(range(size)), _min_eig(entries))


def mprime_labels(bins: int) -> list[tuple[int, int]]:
    half = bins // 2
    return list(itertools.product(range(half + 1), repeat=2))


def mprime_entries(values: np.ndarray, bins: int) -> np.ndarray:
    labels = mprime_labels(bins)
    ja = np.array([a for a, _ in labels])
    jb = np.array([b for _, b in labels])
    return values[ja[:, None] + ja[None, :], jb[:, None] + jb[None, :]]


def moment_matrix_Mprime(m: MomentSet) -> MomentMatrix:
    """``(<:pi_A^(jA+jA') pi_B^(jB+jB'):>)`` indexed by pairs in ``{0..N/2}^2``."""
    if m.bins % 2:
        raise InvalidArgument(f"M' needs an even number of bins, got {m.bins}")
    _check_order(m, m.bins)
    entries = mprime_entries(m.values, m.bins)
    return MomentMatrix(entries, tuple(mprime_labels(m.bins)), _min_eig(entries))


def mprime_min_eigenvalue(values: np.ndarray, bins: int) -> float:
    return _min_eig(mprime_entries(values, bins))


def linear_stokes_limit(mean_a: float, mean_b: float, det: DetectorConfig) -> float:
    """Large-N limit of ``<S_NL>``: ``eta (<n_A> - <n_B>)``."""
    return det.efficiency * (mean_a - mean_b)


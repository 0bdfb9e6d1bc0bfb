"""Normally ordered exponentials of the detected photon numbers.

For the macroscopic Bell state the generating function

    E(x_a, x_d) = < :exp(-x_a n_A - x_d n_B): >

has the closed form ``(1-|lam|^2)^2 (1-x_a)(1-x_d) / det K`` where ``K`` is the
4x4 matrix returned by :func:`quadratic_form_matrix`. Its diagonal blocks are
``I - x P`` with rank-one projectors ``P``, so ``det K`` vanishes like
``(1-x_a)(1-x_d)`` at full absorption. :func:`nexp_expectation_general` divides
this factor out analytically by a similarity transform with
``S = (I - P) + sqrt(1-x) P``, which leaves a determinant bounded below by
``(1-|lam|)^4`` for every admissible argument, including ``x = 1``.

Click probabilities are high-order finite differences of E, so
:func:`nexp_table_precise` evaluates the same determinant (reduced to its 2x2
Schur complement) with mpmath at a working precision that grows with N.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

from .exceptions import InvalidArgument, NumericDegeneracy
from .polarization import BellStateParams, DetectorConfig, MeasurementSetting

_DET_FLOOR = 1e-300
_IMAG_TOL = 1e-12


def _projectors(setting: MeasurementSetting) -> tuple[np.ndarray, np.ndarray]:
    tau, rho = setting.tau, setting.rho
    w = np.array([rho, -tau])
    v = np.array([tau, rho])
    return np.outer(w, w.conj()), np.outer(v, v.conj())


def _coupling(state: BellStateParams) -> np.ndarray:
    return np.array([[0.0, 1.0], [np.exp(1j * state.phi), 0.0]])


def _check_args(x_a: float, x_d: float) -> None:
    for name, x in (("x_a", x_a), ("x_d", x_d)):
        if not (0.0 <= x <= 1.0):
            raise InvalidArgument(f"{name} must lie in [0, 1], got {x!r}")


def quadratic_form_matrix(state: BellStateParams, setting: MeasurementSetting,
                          x_a: float, x_d: float) -> np.ndarray:
    """The 4x4 matrix whose determinant normalizes the Gaussian integral.

    Entries (1,4), (2,3) carry ``lam~`` and ``lam~ e^{i phi}``, with
    ``lam~ = sqrt((1-x_a)(1-x_d)) lam``; the lower-left block holds conjugates.
    """
    _check_args(x_a, x_d)
    p_a, p_b = _projectors(setting)
    lam_t = math.sqrt((1 - x_a) * (1 - x_d)) * state.lam
    g = _coupling(state)
    eye = np.eye(2)
    return np.block([[eye - x_a * p_a, lam_t * g],
                     [np.conj(lam_t) * g.conj().T, eye - x_d * p_b]])


def regularized_matrix(state: BellStateParams, setting: MeasurementSetting,
                       x_a: float, x_d: float) -> np.ndarray:
    """``S^-1 K S^-1`` with the vanishing block determinants divided out."""
    _check_args(x_a, x_d)
    p_a, p_b = _projectors(setting)
    eye = np.eye(2)
    r_a = math.sqrt(1 - x_a) * (eye - p_a) + p_a
    r_b = math.sqrt(1 - x_d) * (eye - p_b) + p_b
    q = state.lam * (r_a @ _coupling(state) @ r_b)
    return np.block([[eye, q], [q.conj().T, eye]])


def nexp_expectation_general(state: BellStateParams, setting: MeasurementSetting,
                             x_a: float, x_d: float) -> float:
    """``< :exp(-x_a n_A - x_d n_B): >`` for continuous absorption arguments in [0, 1]."""
    det = np.linalg.det(regularized_matrix(state, setting, x_a, x_d))
    if abs(det) < _DET_FLOOR:
        raise NumericDegeneracy(f"quadratic-form determinant underflowed ({det!r})")
    value = (1.0 - abs(state.lam) ** 2) ** 2 / det
    if abs(value.imag) > _IMAG_TOL:
        raise NumericDegeneracy(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def nexp_expectation(state: BellStateParams, setting: MeasurementSetting,
                     det: DetectorConfig, m_a: int, m_b: int) -> float:
    """E(m_a, m_b) with absorption arguments ``eta * m / N``."""
    n = det.bins
    if not (0 <= m_a <= n and 0 <= m_b <= n):
        raise InvalidArgument(f"bin indices must lie in 0..{n}, got ({m_a}, {m_b})")
    eta = det.efficiency
    return nexp_expectation_general(state, setting, eta * m_a / n, eta * m_b / n)


def nexp_table(state: BellStateParams, setting: MeasurementSetting,
               det: DetectorConfig, max_index: int | None = None) -> np.ndarray:
    """Array ``E[m_a, m_b]`` for ``0 <= m_a, m_b <= max_index`` (default: all bins)."""
    top = det.bins if max_index is None else max_index
    if not (0 <= top <= det.bins):
        raise InvalidArgument(f"max_index must lie in 0..{det.bins}, got {top}")
    table = np.empty((top + 1, top + 1))
    for m_a in range(top + 1):
        for m_b in range(top + 1):
            table[m_a, m_b] = nexp_expectation(state, setting, det, m_a, m_b)
    return table


def precise_digits(bins: int) -> int:
    """Working precision for the N-th order alternating sums (coefficients grow like 4^N)."""
    return 25 + math.ceil(bins * math.log10(4.0))


def nexp_table_precise(state: BellStateParams, setting: MeasurementSetting,
                       det: DetectorConfig, max_index: int | None = None,
                       dps: int | None = None) -> np.ndarray:
    """Like :func:`nexp_table` but returns mpmath numbers (object array).

    Uses ``det K' = det(I - Q Q^+)`` with ``Q = lam R_A G R_B``, the Schur
    complement of the regularized matrix.
    """
    top = det.bins if max_index is None else max_index
    if not (0 <= top <= det.bins):
        raise InvalidArgument(f"max_index must lie in 0..{det.bins}, got {top}")
    with mpmath.workdps(dps or precise_digits(det.bins)):
        tau, rho = mpmath.mpc(setting.tau), mpmath.mpc(setting.rho)
        lam = mpmath.mpc(state.lam)
        phase = mpmath.expjpi(mpmath.mpf(state.phi) / mpmath.pi)
        w = mpmath.matrix([rho, -tau])
        v = mpmath.matrix([tau, rho])
        p_a = w * w.H
        p_b = v * v.H
        eye = mpmath.eye(2)
        g = mpmath.matrix([[0, 1], [phase, 0]])
        prefactor = (1 - abs(lam) ** 2) ** 2
        n, eta = det.bins, mpmath.mpf(det.efficiency)
        r_a = [mpmath.sqrt(1 - eta * m / n) * (eye - p_a) + p_a for m in range(top + 1)]
        r_b = [mpmath.sqrt(1 - eta * m / n) * (eye - p_b) + p_b for m in range(top + 1)]
        table = np.empty((top + 1, top + 1), dtype=object)
        for m_a in range(top + 1):
            left = lam * r_a[m_a] * g
            for m_b in range(top + 1):
                q = left * r_b[m_b]
                h = q * q.H
                schur = (1 - h[0, 0]) * (1 - h[1, 1]) - h[0, 1] * h[1, 0]
                if abs(schur) < _DET_FLOOR:
                    raise NumericDegeneracy(f"quadratic-form determinant underflowed ({schur})")
                table[m_a, m_b] = (prefactor / schur).real
    return table


def mean_photon_numbers(state: BellStateParams, setting: MeasurementSetting,
                        step: float = 1e-6) -> tuple[float, float]:
    """``(<n_A>, <n_B>)`` from the slope of E at zero absorption.

    ``E(x, 0) = 1 - x <n_A> + O(x^2)``. E is undefined for x < 0, so the slope
    uses a second-order one-sided stencil.
    """
    def first(f):
        return -(-3 * f(0.0) + 4 * f(step) - f(2 * step)) / (2 * step)

    n_a = first(lambda x: nexp_expectation_general(state, setting, x, 0.0))
    n_b = first(lambda x: nexp_expectation_general(state, setting, 0.0, x))
    return n_a, n_b

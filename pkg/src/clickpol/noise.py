"""Linear vs nonlinear polarization squeezing of a single photon on thermal noise.

The probe is ``cos(theta/2)|1,0> + e^{i phi} sin(theta/2)|0,1>`` with both
polarization modes convolved with thermal light of ``nbar`` mean photons, unit
efficiency, and the Stokes direction along z. Both modes receive independent
noise, so the single-mode rule

    <:exp(-z n):>_nbar = <:exp(-z n / (1 + nbar z)):> / (1 + nbar z)

applies factor by factor to a two-mode generating function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .exceptions import InvalidArgument, NoThreshold

LINEAR = "linear"
NONLINEAR = "nonlinear"
CRITERIA = (LINEAR, NONLINEAR)

EXP = "exp"
MEAN = "n"
SECOND = "n2"

SEARCH_INTERVAL = (0.0, 10.0)
THRESHOLD_XTOL = 1e-9
_COS_ZERO = 1e-12


@dataclass(frozen=True)
class NoisySingleProbe:
    theta: float
    nbar: float
    bins: int = 8

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise InvalidArgument(f"theta must be finite, got {self.theta!r}")
        if not (self.nbar >= 0 and math.isfinite(self.nbar)):
            raise InvalidArgument(f"nbar must be finite and >= 0, got {self.nbar!r}")
        if int(self.bins) != self.bins or self.bins < 1:
            raise InvalidArgument(f"bins must be a positive integer, got {self.bins!r}")

    def generating_function(self, z_a: float, z_b: float) -> float:
        """Noiseless ``<:exp(-z_a n_a - z_b n_b):>``; exactly one photon is present."""
        c2 = math.cos(self.theta / 2) ** 2
        return c2 * (1 - z_a) + (1 - c2) * (1 - z_b)


def linear_noisy_variance(probe: NoisySingleProbe) -> float:
    """Linear normally ordered variance ``4 nbar - cos^2 theta`` used for the thresholds."""
    return 4 * probe.nbar - math.cos(probe.theta) ** 2


def linear_noisy_variance_rules(probe: NoisySingleProbe) -> float:
    """Linear variance rebuilt from the moment rules ``n -> n + nbar`` and
    ``:n^2: -> :n^2: + 4 nbar n + 2 nbar^2`` with independent noise per mode.

    Gives ``2 nbar + 2 nbar^2 - cos^2 theta``, which disagrees with
    :func:`linear_noisy_variance` for ``nbar > 0``.
    """
    nb = probe.nbar
    c2 = math.cos(probe.theta / 2) ** 2
    n_a, n_b = c2, 1 - c2
    # the single photon has :n_a^2: = :n_b^2: = :n_a n_b: = 0
    sq_a = noisy_moment_transform(SECOND, nb, mean=n_a, second=0.0)
    sq_b = noisy_moment_transform(SECOND, nb, mean=n_b, second=0.0)
    cross = (n_a + nb) * (n_b + nb) - n_a * n_b
    second = sq_a + sq_b - 2 * cross
    first = noisy_moment_transform(MEAN, nb, mean=n_a) - noisy_moment_transform(MEAN, nb, mean=n_b)
    return second - first * first


def nonlinear_noisy_moments(probe: NoisySingleProbe) -> tuple[float, float]:
    """``(<:S_NL:>, <:S_NL^2:>)`` in closed form."""
    n, nb = probe.bins, probe.nbar
    mean = math.cos(probe.theta) / (1 + nb / n) ** 2
    second = (2 * n * (n + 2 * nb - 1) / (1 + 2 * nb / n) ** 2
              - 2 * n * (n + nb - 1) / (1 + nb / n) ** 3)
    return mean, second


def noisy_two_mode_nexp(generating: Callable[[float, float], float],
                        z_a: float, z_b: float, nbar: float) -> float:
    """Noisy ``<:exp(-z_a n_a - z_b n_b):>`` from the noiseless generating function."""
    da, db = 1 + nbar * z_a, 1 + nbar * z_b
    if da <= 0 or db <= 0:
        raise InvalidArgument("need z * nbar > -1 in both modes")
    return generating(z_a / da, z_b / db) / (da * db)


def nonlinear_noisy_moments_rules(probe: NoisySingleProbe) -> tuple[float, float]:
    """Same moments via the exponential noise rule.

    ``:S_NL: = N(:e_b: - :e_a:)`` and ``:S_NL^2: = N^2(:e_a^2: - 2 :e_a e_b: + :e_b^2:)``
    with ``e = exp(-n/N)``, so only generating-function values are needed.
    """
    n, nb = probe.bins, probe.nbar
    x = 1.0 / n

    def g(z_a, z_b):
        return noisy_two_mode_nexp(probe.generating_function, z_a, z_b, nb)

    mean = n * (g(0.0, x) - g(x, 0.0))
    second = n * n * (g(2 * x, 0.0) - 2 * g(x, x) + g(0.0, 2 * x))
    return mean, second


def nonlinear_noisy_variance(probe: NoisySingleProbe) -> float:
    mean, second = nonlinear_noisy_moments(probe)
    return second - mean * mean


def noisy_variance(criterion: str, probe: NoisySingleProbe) -> float:
    if criterion == LINEAR:
        return linear_noisy_variance(probe)
    if criterion == NONLINEAR:
        return nonlinear_noisy_variance(probe)
    raise InvalidArgument(f"criterion must be one of {CRITERIA}, got {criterion!r}")


def _sign_changes(f: Callable[[float], float], lo: float, hi: float, points: int = 2001) -> int:
    values = np.array([f(x) for x in np.linspace(lo, hi, points)])
    signs = np.sign(values[values != 0])
    return int(np.count_nonzero(np.diff(signs)))


def noise_threshold(criterion: str, theta: float, bins: int = 8) -> float:
    """Largest ``nbar`` for which the noisy variance stays negative."""
    if criterion not in CRITERIA:
        raise InvalidArgument(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    cos2 = math.cos(theta) ** 2
    if cos2 < _COS_ZERO:
        raise NoThreshold("no squeezing threshold exists for cos(theta) = 0")
    if criterion == LINEAR:
        return cos2 / 4

    def f(nb):
        return noisy_variance(criterion, NoisySingleProbe(theta, nb, bins))

    lo, hi = SEARCH_INTERVAL
    if not (f(lo) < 0 < f(hi)):
        raise NoThreshold(f"variance does not change sign on [{lo}, {hi}]")
    crossings = _sign_changes(f, lo, hi)
    assert crossings == 1, f"expected a single sign change, found {crossings}"
    return brentq(f, lo, hi, xtol=THRESHOLD_XTOL)


def threshold_improvement(theta: float, bins: int) -> float:
    """Relative gain of the nonlinear over the linear noise threshold."""
    return noise_threshold(NONLINEAR, theta, bins) / noise_threshold(LINEAR, theta, bins) - 1


def noisy_moment_transform(kind: str, nbar: float, *, mean: float | None = None,
                           second: float | None = None,
                           generating: Callable[[float], float] | None = None,
                           z: float | None = None) -> float:
    """Apply one single-mode thermal-noise rule at the expectation level.

    ``exp``: needs ``generating`` (noiseless ``z -> <:exp(-z n):>``) and ``z``.
    ``n``: needs ``mean``. ``n2``: needs ``second = <:n^2:>`` and ``mean``.
    """
    if not (nbar >= 0 and math.isfinite(nbar)):
        raise InvalidArgument(f"nbar must be finite and >= 0, got {nbar!r}")
    if kind == EXP:
        if generating is None or z is None:
            raise InvalidArgument("exp rule needs a generating function and z")
        d = 1 + nbar * z
        if d <= 0:
            raise InvalidArgument(f"exp rule needs z * nbar > -1, got {z * nbar}")
        return generating(z / d) / d
    if kind == MEAN:
        if mean is None:
            raise InvalidArgument("n rule needs the mean")
        return mean + nbar
    if kind == SECOND:
        if mean is None or second is None:
            raise InvalidArgument("n2 rule needs the mean and the second factorial moment")
        return second + 4 * nbar * mean + 2 * nbar * nbar
    raise InvalidArgument(f"unknown transform kind {kind!r}")

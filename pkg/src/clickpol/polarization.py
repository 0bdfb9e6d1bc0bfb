"""State, detector and wave-plate types.

Conventions
-----------
Jones vectors are ordered (horizontal, vertical). A wave-plate combination is
represented by its SU(2) matrix ``[[tau, rho], [-conj(rho), conj(tau)]]``; the
first row gives the mode that reaches the detector behind the "+" port of the
polarizing beam splitter, ``u = tau * a_H + rho * a_V``.

The quarter-wave plate is traversed first, so the composite matrix is
``HWP @ QWP``. Both arms use identical plate angles.

The Poincare direction follows ``|tau| = cos(theta/2)``, ``|rho| = sin(theta/2)``
and azimuth ``arg(conj(rho) * tau)``. With these choices the direction equals the
normalized Stokes vector of the input polarization ``J^dagger (1, 0)``, i.e. the
polarization that the plates route entirely into the "+" port.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgument, InvalidState

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BellStateParams:
    """Macroscopic Bell state ``(1-|lam|^2) sum lam^m (e^{i phi} lam)^n |m,n,n,m>``.

    Mode order is (A horizontal, A vertical, B horizontal, B vertical).
    ``phi`` is reduced to ``[0, 2 pi)``; ``phi = 0`` and ``phi = pi`` give the
    symmetric and antisymmetric states.
    """

    lam: complex
    phi: float = 0.0

    def __post_init__(self):
        lam = complex(self.lam)
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            raise InvalidState(f"squeezing amplitude must be finite, got {self.lam!r}")
        if abs(lam) >= 1.0:
            raise InvalidState(f"|lambda| must be < 1 for a normalizable state, got {abs(lam)}")
        if not math.isfinite(self.phi):
            raise InvalidArgument(f"phase must be finite, got {self.phi!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "phi", math.fmod(self.phi, TWO_PI) % TWO_PI)

    @property
    def mean_photons_per_mode(self) -> float:
        x = abs(self.lam) ** 2
        return x / (1.0 - x)


@dataclass(frozen=True)
class DetectorConfig:
    """Click-counting detector: ``bins`` equal-intensity bins, overall efficiency."""

    bins: int = 8
    efficiency: float = 1.0

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 1:
            raise InvalidArgument(f"bins must be a positive integer, got {self.bins!r}")
        object.__setattr__(self, "bins", int(self.bins))
        if not (0.0 <= self.efficiency <= 1.0):
            raise InvalidArgument(f"efficiency must lie in [0, 1], got {self.efficiency!r}")

    def require_even(self) -> None:
        if self.bins % 2:
            raise InvalidArgument(f"this witness needs an even number of bins, got {self.bins}")


@dataclass(frozen=True)
class MeasurementSetting:
    qwp_angle: float
    hwp_angle: float
    tau: complex
    rho: complex

    def __post_init__(self):
        norm = abs(self.tau) ** 2 + abs(self.rho) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgument(f"|tau|^2 + |rho|^2 must be 1, got {norm}")

    @classmethod
    def from_coefficients(cls, tau: complex, rho: complex) -> "MeasurementSetting":
        """Setting defined directly by its beam-splitter coefficients (no plate angles)."""
        return cls(math.nan, math.nan, complex(tau), complex(rho))

    @property
    def polar_angle(self) -> float:
        return 2.0 * math.atan2(abs(self.rho), abs(self.tau))

    @property
    def azimuth(self) -> float:
        return math.atan2((self.rho.conjugate() * self.tau).imag,
                          (self.rho.conjugate() * self.tau).real) % TWO_PI

    @property
    def direction(self) -> np.ndarray:
        theta, phi = self.polar_angle, self.azimuth
        return np.array([math.sin(theta) * math.cos(phi),
                         math.sin(theta) * math.sin(phi),
                         math.cos(theta)])

    @property
    def matrix(self) -> np.ndarray:
        t, r = self.tau, self.rho
        return np.array([[t, r], [-r.conjugate(), t.conjugate()]])


IDENTITY_SETTING = MeasurementSetting(0.0, 0.0, 1.0 + 0j, 0j)


def _check_angle(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidArgument(f"wave-plate angle must be finite, got {theta!r}")
    return theta


def jones_qwp(theta: float) -> np.ndarray:
    """Quarter-wave plate with fast axis at ``theta`` (radians)."""
    theta = _check_angle(theta)
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[1 - 1j * c, -1j * s],
                     [-1j * s, 1 + 1j * c]]) / math.sqrt(2.0)


def jones_hwp(theta: float) -> np.ndarray:
    """Half-wave plate with fast axis at ``theta`` (radians)."""
    theta = _check_angle(theta)
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[-1j * c, -1j * s],
                     [-1j * s, 1j * c]])


def compose_setting(qwp_angle: float, hwp_angle: float) -> MeasurementSetting:
    """Measurement setting for a QWP followed by a HWP (angles in radians)."""
    composite = jones_hwp(hwp_angle) @ jones_qwp(qwp_angle)
    tau, rho = complex(composite[0, 0]), complex(composite[0, 1])
    # renormalize away the last-ulp drift of the product
    norm = math.sqrt(abs(tau) ** 2 + abs(rho) ** 2)
    return MeasurementSetting(float(qwp_angle), float(hwp_angle), tau / norm, rho / norm)


def stokes_vector(jones: np.ndarray) -> np.ndarray:
    """Normalized classical Stokes vector (S1, S2, S3) of a Jones vector."""
    ex, ey = complex(jones[0]), complex(jones[1])
    s0 = abs(ex) ** 2 + abs(ey) ** 2
    cross = ex.conjugate() * ey
    return np.array([2 * cross.real, 2 * cross.imag, abs(ex) ** 2 - abs(ey) ** 2]) / s0

"""Nonlinear polarization squeezing with click-counting detectors.

Analytic click statistics of macroscopic Bell states, normally ordered moment
witnesses, a brute-force Fock-space reference, finite-shot estimation and a
thermal-noise robustness study.
"""

__version__ = "0.1.0"

from .clicks import (
    EMPIRICAL,
    PROBABILITY,
    JointClickStatistics,
    MomentMatrix,
    MomentSet,
    click_probabilities_analytic,
    linear_stokes_limit,
    moment_matrix_M,
    moment_matrix_Mprime,
    moments_from_statistics,
    pi_moments_analytic,
    s0_nl_moments,
    s_nl_moments,
    second_order_witness,
)
from .exceptions import (
    ClickPolError,
    InsufficientData,
    InvalidArgument,
    InvalidState,
    NoThreshold,
    NumericDegeneracy,
)
from .fock import (
    FockStateVector,
    JointPhotonDistribution,
    build_bell_state,
    click_response,
    detected_photon_distribution,
    oracle_click_statistics,
)
from .gaussian import nexp_expectation, nexp_expectation_general
from .noise import (
    NoisySingleProbe,
    linear_noisy_variance,
    noise_threshold,
    noisy_moment_transform,
    nonlinear_noisy_moments,
)
from .polarization import (
    BellStateParams,
    DetectorConfig,
    MeasurementSetting,
    compose_setting,
    jones_hwp,
    jones_qwp,
)
from .sampling import SampleRun, WitnessReport, estimate_witnesses, sample

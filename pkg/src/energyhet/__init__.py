"""Energy distance and energy coefficient for feature heterogeneity.

Exact pairwise statistics live in :mod:`energyhet.empirical`; linear-time
moment-based estimates in :mod:`energyhet.moments` and
:mod:`energyhet.approx`; the node/coordinator exchange in
:mod:`energyhet.proto`.
"""
from .approx import (
    ApproxInputs,
    adjusted_exx,
    adjusted_exy,
    energy_from_summaries,
    gaussian_exact_exx,
    gaussian_exact_exy,
    residual_r3,
    taylor_exx_1d,
    taylor_exx_dd,
    taylor_exy_1d,
    taylor_exy_dd,
    variance_diagnostic,
)
from .empirical import (
    DistanceEstimate,
    energy_coefficient,
    energy_statistic,
    mean_pairwise_distance,
    quadratic_distance,
)
from .moments import MomentSummary, derived_moments, merge, read_csv, summarize
from .proto import HMatrix, NodeSummaryMessage, collect, h_matrix, penalty_weights
from .testing import TestResult, permutation_test

__version__ = "0.1.0"

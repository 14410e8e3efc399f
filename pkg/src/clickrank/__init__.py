"""Stellar-rank certification from two-detector click statistics."""

from .detector import (
    DetectorParams,
    Outcome,
    ThermalCombo,
    physical_boundary,
    povm_diagonal,
    povm_thermal_decomposition,
    prob_double_click,
    prob_no_click,
    prob_single_click,
    wmax_single_click,
)
from .gaussian_states import GaussianParams, dst_block, dst_block_oracle
from .regions import CertificationVerdict, RegionBoundary, certify, lambda_sweep, region_boundaries
from .witness import (
    SearchConfig,
    ThresholdResult,
    fidelity_lower_bound,
    gap_delta,
    lambda_witness,
    optimize_threshold,
    single_click_thresholds,
    single_click_witness,
)

__version__ = "0.1.0"

__all__ = [
    "CertificationVerdict",
    "DetectorParams",
    "GaussianParams",
    "Outcome",
    "RegionBoundary",
    "SearchConfig",
    "ThermalCombo",
    "ThresholdResult",
    "certify",
    "dst_block",
    "dst_block_oracle",
    "fidelity_lower_bound",
    "gap_delta",
    "lambda_sweep",
    "lambda_witness",
    "optimize_threshold",
    "physical_boundary",
    "povm_diagonal",
    "povm_thermal_decomposition",
    "prob_double_click",
    "prob_no_click",
    "prob_single_click",
    "region_boundaries",
    "single_click_thresholds",
    "single_click_witness",
    "wmax_single_click",
]

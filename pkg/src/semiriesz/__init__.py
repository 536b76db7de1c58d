"""Second-order Riesz transforms on products of cyclic groups and tori.

Two routes are provided: Fourier multipliers on band-limited functions and
martingale transforms of a jump-diffusion that samples the group.
"""
from .analysis import NormReport, dual_pair_bounds, lp_norm, operator_norm_lower_bound, sharpness_sweep, upper_bound
from .group import GroupPoint, GroupSpec, SpectralFunction, inner, read_coefficients, write_coefficients
from .spectral import CoefficientMatrix, brute_force_matrix, multiplier_matrix, riesz2, riesz2_symbols
from .stochastic import SimConfig, run_ensemble, sample_trajectory
from .verify import HorizonBiasWarning, VerifyRecord, representation_pairing, subordination_ensemble

__version__ = "0.1.0"

__all__ = [
    "CoefficientMatrix", "GroupPoint", "GroupSpec", "HorizonBiasWarning", "NormReport", "SimConfig",
    "SpectralFunction", "VerifyRecord", "brute_force_matrix", "dual_pair_bounds", "inner", "lp_norm",
    "multiplier_matrix", "operator_norm_lower_bound", "read_coefficients", "representation_pairing",
    "riesz2", "riesz2_symbols", "run_ensemble", "sample_trajectory", "sharpness_sweep",
    "subordination_ensemble", "upper_bound", "write_coefficients",
]

"""Stability certificates and maximum sampling interval estimates for
discrete-time LTI systems under aperiodic sample-and-hold feedback."""
from .data import (AssumptionViolation, DataSet, DisturbanceModel, QmiSet, build_qmi,
                   certify_data, membership, norm_bound_disturbance)
from .delay import (SamplingPattern, apply_delay, build_E, exact_gain, frobenius_gain,
                    gain_bundle, gain_value, legacy_gain, lifted_matrix)
from .iqc import MultiplierSet, assemble_pi, check_iqc, check_passivity
from .model import (Certificate, SystemModel, certify_model, frequency_check, scalar_condition,
                    scalar_region)
from .msi import SearchResult, exponential_search, linear_search
from .simulate import closed_loop, falsify, generate_experiment

__all__ = [
    "AssumptionViolation", "DataSet", "DisturbanceModel", "QmiSet", "build_qmi", "certify_data",
    "membership", "norm_bound_disturbance", "SamplingPattern", "apply_delay", "build_E",
    "exact_gain", "frobenius_gain", "gain_bundle", "gain_value", "legacy_gain", "lifted_matrix",
    "MultiplierSet", "assemble_pi", "check_iqc", "check_passivity", "Certificate", "SystemModel",
    "certify_model", "frequency_check", "scalar_condition", "scalar_region", "SearchResult",
    "exponential_search", "linear_search", "closed_loop", "falsify", "generate_experiment",
]

"""Multimode parametric networks: scattering, Gaussian states, certification.

The package models a comb of resonator modes coupled pairwise by pump
tones through a shared nonlinear mirror, predicts the output Gaussian
state, emulates the amplified measurement chain and certifies two-mode
and genuine multipartite entanglement with calibrated error bars.
"""

from .bases import symplectic_form
from .calibration import (
    CalibrationStore,
    CorrelationFitResult,
    PlanckFitResult,
    added_noise_from_pump_off,
    c_lineshape,
    fit_gain_from_correlations,
    planck_fit,
    planck_power,
    ppt_temperature_sweep,
)
from .cli import RunReport, ScenarioConfig, main, run_scenario
from .coupling_graph import (
    CouplingMatrix,
    FourWaveMatch,
    assign_probe_frequencies,
    build_coupling_matrix,
    default_tolerance,
    match_four_wave,
    mode_frequency_shifts,
    pair_couplings,
)
from .entanglement import (
    Bipartition,
    EntanglementReport,
    all_bipartition_reports,
    all_bipartitions,
    decorrelate_iq,
    entanglement_sigma,
    ppt_min_eigenvalue,
    propagate_errors,
    significance,
    svl_test,
    svl_value,
)
from .errors import (
    ConfigError,
    DegenerateModeError,
    DimensionMismatchError,
    EmptySamplesError,
    FitDivergedError,
    GainBelowUnityError,
    InsufficientDataError,
    MissingFitCovarianceError,
    ModecombError,
    NegativeNoiseError,
    NonConvergenceWarning,
    NonPhysicalInputError,
    NotPSDError,
    NumericalError,
    OptimizerFailureError,
    PhysicalityWarning,
    SingularMatrixError,
    UnstablePumpError,
    ZeroVarianceError,
)
from .gaussian_state import (
    AmplifierModel,
    CovarianceMatrix,
    QuadratureSamples,
    amplify,
    bose_occupation,
    correlation_quantity,
    deamplify,
    drift_compensation_angle,
    histogram2d_subtracted,
    output_covariance,
    sample,
    squeezing_stats,
    thermal_covariance,
    two_mode_squeezed_covariance,
)
from .modesys import (
    GAAS_REFERENCE,
    MaterialParams,
    MirrorSpec,
    ModeSpec,
    ModeSystem,
    PumpTone,
    effective_couplings,
    estimate_vacuum_coupling,
    parametric_coupling,
    pump_amplitude,
)
from .reconstruct import ReconstructionResult, project_physical, reconstruct_physical
from .scattering import (
    ScatteringPair,
    export_db_table,
    pseudo_unitarity_residual,
    scattering_matrices,
    symplectic_residual,
)

__version__ = "0.1.0"

__all__ = [
    "AmplifierModel",
    "Bipartition",
    "CalibrationStore",
    "ConfigError",
    "CorrelationFitResult",
    "CouplingMatrix",
    "CovarianceMatrix",
    "DegenerateModeError",
    "DimensionMismatchError",
    "EmptySamplesError",
    "EntanglementReport",
    "FitDivergedError",
    "FourWaveMatch",
    "GainBelowUnityError",
    "GAAS_REFERENCE",
    "MaterialParams",
    "InsufficientDataError",
    "MirrorSpec",
    "MissingFitCovarianceError",
    "ModeSpec",
    "ModeSystem",
    "ModecombError",
    "NegativeNoiseError",
    "NonConvergenceWarning",
    "NonPhysicalInputError",
    "NotPSDError",
    "NumericalError",
    "OptimizerFailureError",
    "PhysicalityWarning",
    "PlanckFitResult",
    "PumpTone",
    "QuadratureSamples",
    "ReconstructionResult",
    "RunReport",
    "ScatteringPair",
    "ScenarioConfig",
    "SingularMatrixError",
    "UnstablePumpError",
    "ZeroVarianceError",
    "added_noise_from_pump_off",
    "all_bipartition_reports",
    "all_bipartitions",
    "amplify",
    "assign_probe_frequencies",
    "bose_occupation",
    "build_coupling_matrix",
    "c_lineshape",
    "correlation_quantity",
    "deamplify",
    "decorrelate_iq",
    "default_tolerance",
    "drift_compensation_angle",
    "effective_couplings",
    "entanglement_sigma",
    "estimate_vacuum_coupling",
    "export_db_table",
    "fit_gain_from_correlations",
    "histogram2d_subtracted",
    "main",
    "match_four_wave",
    "mode_frequency_shifts",
    "output_covariance",
    "pair_couplings",
    "parametric_coupling",
    "planck_fit",
    "planck_power",
    "ppt_min_eigenvalue",
    "ppt_temperature_sweep",
    "project_physical",
    "propagate_errors",
    "pseudo_unitarity_residual",
    "pump_amplitude",
    "reconstruct_physical",
    "run_scenario",
    "sample",
    "scattering_matrices",
    "significance",
    "squeezing_stats",
    "svl_test",
    "svl_value",
    "symplectic_form",
    "symplectic_residual",
    "thermal_covariance",
    "two_mode_squeezed_covariance",
]

"""Simulation and analysis of multiphoton interference in a cyclic interferometer."""

__version__ = "0.1.0"

from .analysis import (
    Bounds,
    FitResult,
    FringeDataset,
    OverlapSet,
    bootstrap_bounds,
    c1_bounds,
    fit_visibility,
    hom_indistinguishability,
    phase_calibration,
    unmeasured_overlap_bounds,
)
from .circuit import CircuitSpec, build_unitary, collapse_phases, equivalent_single_phase, is_equivalent
from .errors import CalibrationError, ClassificationError, FitError, InputError
from .fock import FockState, enumerate_states, from_modes, parse_state
from .interference import (
    Gram,
    Mixture,
    closed_form_fringe,
    fringe_outputs,
    fringe_sign,
    output_distribution,
    prob_distinguishable,
    prob_indistinguishable,
    prob_partial,
    scan_fringe,
)
from .noise import NoiseConfig, predicted_c1, simulate_experiment
from .permanent import permanent_fast, permanent_naive

__all__ = [
    "Bounds",
    "CalibrationError",
    "CircuitSpec",
    "ClassificationError",
    "FitError",
    "FitResult",
    "FockState",
    "FringeDataset",
    "Gram",
    "InputError",
    "Mixture",
    "NoiseConfig",
    "OverlapSet",
    "bootstrap_bounds",
    "build_unitary",
    "c1_bounds",
    "closed_form_fringe",
    "collapse_phases",
    "enumerate_states",
    "equivalent_single_phase",
    "fit_visibility",
    "fringe_outputs",
    "fringe_sign",
    "from_modes",
    "hom_indistinguishability",
    "is_equivalent",
    "output_distribution",
    "parse_state",
    "permanent_fast",
    "permanent_naive",
    "phase_calibration",
    "predicted_c1",
    "prob_distinguishable",
    "prob_indistinguishable",
    "prob_partial",
    "scan_fringe",
    "simulate_experiment",
    "unmeasured_overlap_bounds",
]

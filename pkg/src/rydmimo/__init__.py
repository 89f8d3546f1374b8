"""Magnitude-only channel estimation for Rydberg atomic receiver arrays.

Simulation (scenes, channels, magnitude measurements with a strong
reference), estimators (gradient descent, rank-projected gradient descent,
a Gerchberg-Saxton style baseline), Cramer-Rao bounds, and a seeded Monte
Carlo benchmark harness. Hot iteration kernels run on a compiled extension
when available, with a pure numpy fallback selected at import time.
"""

from ._backend import BACKEND, available_backends, get_kernels
from .constants import PhysicalConstants, default_constants
from .scene import (DEFAULT_REF_SYMBOL_AMP, PROFILES, SCENE_SCHEMA,
                    ArrayGeometry, PathComponent, ReferenceEmitter, Scene,
                    draw_scene, half_wavelength_geometry, scene_from_dict,
                    scene_to_dict)
from .channel import (ChannelSet, dipole_coupling, synth_channel_1d,
                      synth_channel_2d, synth_reference)
from .measurement import (MeasurementSet, export_measurements,
                          linearization_gap, measure_exact,
                          measure_linearized, sigma_from_snr)
from .estimators import (DivergenceError, EstimateReport, EstimatorConfig,
                         estimate_gd_1d, estimate_gs_1d, estimate_pgd_2d,
                         fold3, grad_1d, grad_2d, loss_1d, loss_2d,
                         project_rank, unfold3)
from .crlb import (CrlbResult, VectorizedModel, build_vectorized, crlb_matrix,
                   crlb_report, expected_channel_power, fim_closed_form,
                   fim_numerical, nmse_floor, complex_crb_trace, real_crb_trace,
                   real_jacobian, vectorize_channel)
from .bench import (ExperimentResult, ExperimentSpec, load_table, nmse,
                    run_sweep, run_trial, spec_from_dict, spec_to_dict,
                    trial_seed, write_manifest, write_table)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "available_backends", "get_kernels",
    "PhysicalConstants", "default_constants",
    "ArrayGeometry", "PathComponent", "ReferenceEmitter", "Scene",
    "draw_scene", "half_wavelength_geometry", "scene_to_dict",
    "scene_from_dict", "PROFILES", "SCENE_SCHEMA", "DEFAULT_REF_SYMBOL_AMP",
    "ChannelSet", "dipole_coupling", "synth_channel_1d", "synth_channel_2d",
    "synth_reference",
    "MeasurementSet", "measure_exact", "measure_linearized",
    "linearization_gap", "sigma_from_snr", "export_measurements",
    "DivergenceError", "EstimatorConfig", "EstimateReport",
    "loss_1d", "grad_1d", "loss_2d", "grad_2d",
    "unfold3", "fold3", "project_rank",
    "estimate_gd_1d", "estimate_pgd_2d", "estimate_gs_1d",
    "VectorizedModel", "CrlbResult", "build_vectorized", "vectorize_channel",
    "fim_closed_form", "crlb_matrix", "nmse_floor", "expected_channel_power",
    "real_jacobian", "fim_numerical", "crlb_report", "complex_crb_trace",
    "real_crb_trace",
    "ExperimentSpec", "ExperimentResult", "nmse", "trial_seed", "run_trial",
    "run_sweep", "write_table", "write_manifest", "load_table",
    "spec_to_dict", "spec_from_dict",
]

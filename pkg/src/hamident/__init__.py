"""Hamiltonian identification for a qubit under several linear control fields."""

from .bloch import (
    AxisSpherical,
    HamiltonianModel,
    cartesian_from_spherical,
    effective_axis,
    evolve_z,
    rotate,
    spherical_from_cartesian,
)
from .identification import AxisMeasurement, error_norms, extract_hamiltonian, linear_fit
from .measurement import EXACT, SamplingConfig, TimeSeries, read_series, run_precession_experiment, write_series
from .pipeline import RunConfig, run_identification

__all__ = [
    "AxisMeasurement",
    "AxisSpherical",
    "EXACT",
    "HamiltonianModel",
    "RunConfig",
    "SamplingConfig",
    "TimeSeries",
    "cartesian_from_spherical",
    "effective_axis",
    "error_norms",
    "evolve_z",
    "extract_hamiltonian",
    "linear_fit",
    "read_series",
    "rotate",
    "run_identification",
    "run_precession_experiment",
    "spherical_from_cartesian",
    "write_series",
]
__version__ = "0.1.0"

"""Difficulty ranking of selectively taken examinations from acceptance counts."""

from .dataset import Dataset, DatasetError, HighSchool, Ranking, University, build_dataset
from .estimator import EstimatorConfig, RunTrace, aggregate_rankings, estimate, run_single_estimation
from .simulator import SimulationParams, check_sigma_identity, generate_population, run_admissions, simulate
from .standardize import Mode, StandardizedMatrix, standardize

__version__ = "0.1.0"

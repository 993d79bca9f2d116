"""Multivariate conditional outlier detection in a chain-model probability space."""

from .bench import BenchConfig, BenchReport, auc, run_benchmark
from .chain import ChainModel, ChainOrder, DimModel, fit_chain, joint_prob
from .data import Dataset, load_csv, perturb_flip, save_csv, standardize_inputs
from .detectors import LofParams, OcsParams, lof_scores, ocs_fit, ocs_scores
from .rho import RhoMatrix, neg_log_joint_score, reliability_weights, transform, weighted_score
from .strategies import StrategySpec, detect, parse_method
from .synth import SyntheticSpec, synth_generate

__version__ = "0.1.0"

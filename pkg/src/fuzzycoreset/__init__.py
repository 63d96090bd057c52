"""Coresets, streaming summaries and a small exhaustive solver for fuzzy K-means."""
from .core import (CONSTANT_PRESETS, DimensionError, FuzzyParams, InfeasibleError, WeightedDataset,
                   as_dataset, brute_force_fuzzy_cost, cluster_cost, cluster_size, fm_algorithm,
                   fuzzy_cost, fuzzy_cost_of_means, is_negligible, kmeans_cost, optimal_means,
                   optimal_memberships, remove_negligible_means)
from .bicriteria import bicriteria_kmeans, induce_partition
from .coreset import Coreset, build_rings, chens_sampling, coreset_from_weighted, fuzzy_coreset, round_cell_weights
from .streaming import finalize, merge, new_stream, reduce, stream_extend, stream_insert
from .ptas import derandomized_sampling_ptas, enumerate_candidates, inaba_concentration_check, ptas_on_coreset
from .harness import TrialReport, evaluate_coreset, generate_dataset
from .kernels import BACKEND

__version__ = "0.1.0"

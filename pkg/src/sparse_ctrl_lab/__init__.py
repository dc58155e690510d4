"""Sparse controllability of opinion dynamics on random graphs."""

__version__ = "0.1.0"

from .bounds import BoundParams, BoundResult, directed_bound, structural_bound, undirected_bound
from .control import (
    ControllabilityVerdict,
    LinearSystem,
    RankPolicy,
    brute_force_controllable,
    condition_a,
    condition_b,
    is_sparse_controllable,
    numeric_rank,
)
from .design import ControlPlan, SteeringProblem, build_reachability_matrix, design_inputs, simulate
from .graphs import (
    BinaryAdjacency,
    DegreeSequence,
    RowNormalizedSystem,
    WeightVector,
    configuration_model,
    row_normalize,
    sample_er_directed,
    sample_er_undirected,
    sample_power_law_degrees,
    sample_weight_vector,
)
from .montecarlo import ExperimentConfig, SweepResult, SweepRow, estimate_nonsingularity, estimate_probability, run_trial, sweep
from .sparsity import (
    SupportFamily,
    block_to_piecewise_permutation,
    contains_support,
    count_subsets_q,
    enumerate_supports,
    family_size,
)

"""Least-squares curve prototypes with Schur-function invertibility checks."""

from .basis import (
    DesignMatrix,
    ExponentSet,
    TimeGrid,
    design_matrix,
    generalized_vandermonde,
    make_exponent_set,
    vandermonde_det,
)
from .cluster import ClusterState, KMeansConfig, apply_membership_moves, assign_signals, kmeans_curves
from .kernels import BACKEND
from .lsq import (
    Centroid,
    NumericalError,
    Prototype,
    SignalSet,
    SolverHandle,
    SolverMode,
    assemble_normal_system,
    centroid,
    evaluate_prototype,
    fit_prototype,
    group_objective,
    precompute_solver,
    solve_with_handle,
    update_centroid,
)
from .schur import (
    InvertibilityReport,
    Partition,
    SchurMethod,
    SchurValue,
    exponents_from_partition,
    is_gram_invertible,
    partition_from_exponents,
    schur_bialternant,
    schur_combinatorial,
)

__version__ = "0.1.0"

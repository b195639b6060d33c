"""Multidimensional continued fractions: six classical algorithms, a
renormalized Lyapunov-spectrum estimator, and machine-verified upper
bounds on the second exponent of the subtract-the-smallest algorithm."""

from ._backend import COMPILED, backend_name
from .algorithms import (
    ALGORITHMS,
    AlgorithmId,
    BranchStep,
    branch,
    branch_matrix,
    burn_in,
    step,
)
from .certifier import (
    Certificate,
    Cylinder,
    base_simplex,
    certify,
    cylinder_weight,
    enumerate_cylinders,
    measure_bounds,
    oracle_recompute,
)
from .cocycle import (
    CocycleState,
    accumulate_A,
    d_matrix,
    h_matrix,
    new_state,
    pi_matrix,
    renorm_iterate,
    wedge2,
)
from .core import (
    DomainError,
    IntMatrix,
    Rational,
    RationalMatrix,
    Simplex,
    SimplexPoint,
    lift,
    ord_desc,
    proj,
    sample_point,
    simplex_volume,
)
from .estimator import (
    EstimatorConfig,
    EstimatorReport,
    balancedness_monitor,
    conjugacy_check,
    estimate,
    table,
    wedge_monitor,
)
from .pisot import (
    WordClassification,
    char_poly,
    classify_word,
    is_pisot,
    is_primitive,
    verify_theorem,
)

__version__ = "0.1.0"

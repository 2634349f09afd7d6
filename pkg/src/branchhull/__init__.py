"""Recovering two vectors from their entrywise product with known signs.

The BranchHull program relaxes each measurement ``y_l = (b_l^T h)(c_l^T m)``
to the convex hull of one branch of a hyperbola and minimizes
``||h||^2 + ||m||^2`` over the intersection.  This package provides the
planar projections, an ADMM solver, its l1-robust variant, closed-form
recovery bounds with Monte-Carlo checks, and the synthetic experiments.
"""
from .core import (
    BalancedSignal,
    GroundTruth,
    NoiseModel,
    ProblemInstance,
    balance,
    check_feasible,
    generate_instance,
    instance_from_json,
    instance_to_json,
    make_instance,
    recovery_error,
)
from .projection import HullConstraint, project_constraint, project_hull
from .robust import RbhOptions, solve_rbh
from .solver import SolverOptions, SolverResult, kkt_residuals, solve_bh, solve_bh_oracle

__version__ = "0.1.0"

__all__ = [
    "BalancedSignal",
    "GroundTruth",
    "NoiseModel",
    "ProblemInstance",
    "balance",
    "check_feasible",
    "generate_instance",
    "instance_from_json",
    "instance_to_json",
    "make_instance",
    "recovery_error",
    "HullConstraint",
    "project_constraint",
    "project_hull",
    "RbhOptions",
    "solve_rbh",
    "SolverOptions",
    "SolverResult",
    "kkt_residuals",
    "solve_bh",
    "solve_bh_oracle",
]

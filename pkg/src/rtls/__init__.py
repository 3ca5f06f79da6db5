"""Weighted and Tikhonov-regularized total least squares, desk scale.

Finite-dimensional models of the TLS family

    min |A - X|_{2,W}^2 + |Xx - b|_W^2            (+ |Tx|^2 regularized)

with the one-variable reduction through the rank-one lift, a Dinkelbach
solver for T = sqrt(rho) I, a semidefinite certificate of the infimum, a
classic SVD baseline, and a laboratory of unattained-infimum constructions.
"""

from .model import (
    PairReport,
    ProblemFormatError,
    ProblemSpec,
    RankOneLift,
    RegularizerSpec,
    WeightOperator,
    frechet_check,
    is_trivial_rtls,
    is_trivial_tls,
    objective_rtls,
    objective_tls,
    w_hs_seminorm,
    w_vec_seminorm,
)
from .reduction import (
    GValue,
    eval_g,
    lift_operator,
    normal_residual,
    recover_pair,
    verify_lift_identities,
)
from .trs import SecularBracketError, TrsSolution, trs_equality
from .solver import (
    DinkelbachTrace,
    QuarticSolution,
    classify_existence,
    eval_phi,
    grad_g,
    solve_rls_quartic,
    solve_rtls_general_t,
    solve_tstar,
)
from .certificate import Certificate, assemble_c, certify_tstar, feasible_at_t
from .classic import (
    ClassicTlsSolution,
    NongenericTlsError,
    RepeatedSingularValueError,
    min_direction,
    solve_classic_tls,
)
from .lab import (
    DiagonalModel,
    IntegralModel,
    SequencePoint,
    SweepRow,
    default_diagonal_model,
    default_rtls_nonexistence_model,
    default_tls_nonexistence_model,
    diagonal_solve,
    nonexistence_rtls_sequence,
    nonexistence_tls_sequence,
    truncation_sweep,
    weak_continuity_demo,
)

__version__ = "0.1.0"

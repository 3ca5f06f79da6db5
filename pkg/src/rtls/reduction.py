"""Reduction of the regularized problem to a one-variable objective.

For a fixed coefficient vector x the operator variable can be eliminated in
closed form: the minimizer of X -> |Tx|^2 + |A-X|_{2,W}^2 + |Xx-b|_W^2 is the
rank-one update

    A_x = A + <., x> (b - A x) / (1 + |x|^2),

and the attained value is

    G(x) = |A x - b|_W^2 / (1 + |x|^2) + |T x|^2.

A pair (A_0, x_0) solves the full problem exactly when x_0 minimizes G and
A_0 = A_{x_0}.  This module evaluates G, builds the lift, and measures the
identities and first-order conditions that a candidate minimizer must
satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    PairReport,
    RankOneLift,
    STATUS_HEURISTIC,
    w_hs_seminorm,
    w_vec_seminorm,
)


@dataclass(frozen=True)
class GValue:
    """Value of the reduced objective split into its two terms."""

    x: np.ndarray
    g: float
    data_term: float
    reg_term: float


@dataclass(frozen=True)
class LiftIdentityReport:
    """Relative gaps in the algebraic identities satisfied by the lift.

    contraction: (1+|x|^2)^2 |A_x x - b|_W^2 = |Ax - b|_W^2
    correction:  |A - A_x|_{2,W}^2 = |x|^2 |A_x x - b|_W^2
    vector:      A_x x - b = (Ax - b) / (1+|x|^2), componentwise
    """

    contraction_lhs: float
    contraction_rhs: float
    contraction_gap: float
    correction_lhs: float
    correction_rhs: float
    correction_gap: float
    vector_gap: float


def _check_x(p, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.shape[1],):
        raise ValueError(f"x has shape {x.shape}, expected ({p.shape[1]},)")
    return x


def eval_g(p, x):
    """Evaluate G(x) = |Ax-b|_W^2/(1+|x|^2) + |Tx|^2."""
    x = _check_x(p, x)
    misfit = w_vec_seminorm(p.W, p.A @ x - p.b) ** 2
    data_term = misfit / (1.0 + float(x @ x))
    reg_term = p.T.value(x)
    return GValue(x, data_term + reg_term, data_term, reg_term)


def lift_operator(p, x):
    """Rank-one lift A_x = A + <., x>(b - Ax)/(1 + |x|^2)."""
    x = _check_x(p, x)
    correction = (p.b - p.A @ x) / (1.0 + float(x @ x))
    return RankOneLift(p.A, x, correction)


def verify_lift_identities(p, x):
    """Evaluate both lift identities and return their relative gaps."""
    x = _check_x(p, x)
    lift = lift_operator(p, x)
    ax = lift.materialize()
    r2 = float(x @ x)
    axx_b = ax @ x - p.b
    misfit_lift = w_vec_seminorm(p.W, axx_b) ** 2
    misfit = w_vec_seminorm(p.W, p.A @ x - p.b) ** 2

    contraction_lhs = (1.0 + r2) ** 2 * misfit_lift
    contraction_rhs = misfit
    correction_lhs = w_hs_seminorm(p.W, p.A - ax) ** 2
    correction_rhs = r2 * misfit_lift

    def rel_gap(lhs, rhs):
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30)

    predicted = (p.A @ x - p.b) / (1.0 + r2)
    vector_gap = float(np.max(np.abs(axx_b - predicted), initial=0.0))
    vector_gap /= 1.0 + float(np.max(np.abs(predicted), initial=0.0))

    return LiftIdentityReport(
        contraction_lhs,
        contraction_rhs,
        rel_gap(contraction_lhs, contraction_rhs),
        correction_lhs,
        correction_rhs,
        rel_gap(correction_lhs, correction_rhs),
        vector_gap,
    )


def normal_residual(p, x):
    """Scaled residual of the stationarity equation for G:

        (1+|x|^2) T^T T x + A^T W (Ax - b) = (|Ax-b|_W^2 / (1+|x|^2)) x.

    The Euclidean norm of LHS - RHS is divided by 1 + |x| + |A^T W b| so the
    returned number is comparable across instances.  It vanishes at critical
    points of G; it is a necessary condition only.
    """
    x = _check_x(p, x)
    r2 = float(x @ x)
    residual_vec = p.A @ x - p.b
    lhs = (1.0 + r2) * p.T.gram_dot(x) + p.A.T @ p.W.apply(residual_vec)
    rhs = (w_vec_seminorm(p.W, residual_vec) ** 2 / (1.0 + r2)) * x
    scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(p.gram_rhs)
    return float(np.linalg.norm(lhs - rhs)) / scale


def _report_scale(p):
    fro_a = np.linalg.norm(p.A)
    return 1.0 + p.W.lam_max * fro_a + p.b_norm_w_sq


def rank_one_stationarity_residual(p, x):
    """Scaled Frobenius residual of W(A_x - A) + <., x> W(A_x x - b) = 0.

    The lift satisfies this identity for every x, so the value measures
    numerical consistency of the construction rather than optimality of x.
    """
    x = _check_x(p, x)
    ax = lift_operator(p, x).materialize()
    residual = p.W.apply(ax - p.A) + np.outer(p.W.apply(ax @ x - p.b), x)
    return float(np.linalg.norm(residual)) / _report_scale(p)


def recover_pair(p, x, status=STATUS_HEURISTIC):
    """Bundle x with its lift, objective value and first-order residuals.

    The orthogonality report measures |A_x^T W (A_x - A) - (T^T T x) x^T|_F
    (scaled): combining the rank-one perturbation identity with the normal
    equation shows A_x^T W (A_x - A) equals the rank-one matrix (T^T T x) x^T
    at any critical point of G, which degenerates to zero exactly when the
    regularizer annihilates x (in particular in the unregularized problem).
    """
    x = _check_x(p, x)
    lift = lift_operator(p, x)
    gval = eval_g(p, x)
    ax = lift.materialize()
    ortho = ax.T @ p.W.apply(ax - p.A) - np.outer(p.T.gram_dot(x), x)
    return PairReport(
        x=x,
        lift=lift,
        objective=gval.g,
        data_term=gval.data_term,
        reg_term=gval.reg_term,
        residual_normal_eq=normal_residual(p, x),
        residual_rank_one=rank_one_stationarity_residual(p, x),
        residual_orthogonality=float(np.linalg.norm(ortho)) / _report_scale(p),
        status=status,
    )

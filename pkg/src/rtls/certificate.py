"""Semidefinite characterization of the infimum t* for T = sqrt(rho) I.

t* equals the largest t for which nonnegative multipliers (alpha, beta)
exist making the symmetric operator C(t, alpha, beta) on R^{n+3} positive
semidefinite, where in coordinates (x, z1, z2, tau):

    x block      alpha A^T W A + beta I
    (x, tau)     -alpha A^T W b
    (z1, tau)    (1 - alpha) / 2
    (z2, z2)     rho
    (z2, tau)    (rho - t - beta) / 2
    (tau, tau)   alpha |b|_W^2 - t

The defining computation is the scalar expansion, for y = (x, z1, z2, 1):

    <C y, y> = z1 + rho z2^2 + (rho - t) z2 - t
               + alpha (|Ax-b|_W^2 - z1) + beta (|x|^2 - z2).

Feasibility in t is monotone (every t' < t feasible with t), so the maximum
is found by bisection on [0, |b|_W^2]; at each t the smallest eigenvalue of
C is maximized over (alpha, beta), a concave problem since C is affine in
the multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solver import _golden_min

_PSD_FLOOR_REL = 1e-9


@dataclass
class Certificate:
    """A witness (t, alpha, beta) with the smallest eigenvalue it achieves."""

    t: float
    alpha: float
    beta: float
    lambda_min: float
    C: np.ndarray | None = None

    @property
    def feasible(self):
        scale = 1.0 if self.C is None else float(np.linalg.norm(self.C))
        return self.lambda_min >= -_PSD_FLOOR_REL * (1.0 + scale)


def _require_identity_scaled(p):
    if p.T.kind != "identity_scaled":
        raise ValueError("the certificate is defined for the scaled-identity regularizer")
    return p.T.rho


def assemble_c(p, t, alpha, beta):
    """Assemble C(t, alpha, beta); alpha and beta must be nonnegative."""
    rho = _require_identity_scaled(p)
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    n = p.shape[1]
    c_mat = np.zeros((n + 3, n + 3))
    c_mat[:n, :n] = alpha * p.gram_matrix + beta * np.eye(n)
    c_mat[:n, -1] = c_mat[-1, :n] = -alpha * p.gram_rhs
    c_mat[n, -1] = c_mat[-1, n] = (1.0 - alpha) / 2.0
    c_mat[n + 1, n + 1] = rho
    c_mat[n + 1, -1] = c_mat[-1, n + 1] = (rho - t - beta) / 2.0
    c_mat[-1, -1] = alpha * p.b_norm_w_sq - t
    return c_mat


def default_box(p):
    """Default multiplier box 10 max(1, rho, |b|_W^2, |A^T W A|_2), squared."""
    rho = _require_identity_scaled(p)
    lam, _ = p.gram_eig
    top = float(lam[-1]) if lam.size else 0.0
    bound = 10.0 * max(1.0, rho, p.b_norm_w_sq, top)
    return bound, bound


def feasible_at_t(p, t, box=None, keep_c=False):
    """Maximize lambda_min(C(t, alpha, beta)) over the multiplier box.

    lambda_min of the affine family is concave in (alpha, beta), so repeated
    coordinate golden-section passes from a few fixed starts reach the global
    maximum; the warm start alpha = 1 is where exact feasibility lives.
    Returns (feasible, best certificate).
    """
    alpha_max, beta_max = box if box is not None else default_box(p)
    if alpha_max <= 0 or beta_max <= 0:
        raise ValueError("search box must be positive")
    rho = p.T.rho

    def lam_min(alpha, beta):
        return float(np.linalg.eigvalsh(assemble_c(p, t, alpha, beta))[0])

    starts = [
        (1.0, min(max(rho - t, 0.0), beta_max)),
        (1.0, 0.0),
        (0.5 * alpha_max, 0.5 * beta_max),
    ]
    best = (-np.inf, 1.0, 0.0)
    for alpha, beta in starts:
        for _ in range(3):
            beta, _val = _golden_min(
                lambda v: -lam_min(alpha, v), 0.0, beta_max, 1e-10 * (1.0 + beta_max)
            )
            alpha, val = _golden_min(
                lambda u: -lam_min(u, beta), 0.0, alpha_max, 1e-10 * (1.0 + alpha_max)
            )
            # alpha = 1 is the only point where the z1 coupling vanishes;
            # snap to it when the search lands nearby
            if abs(alpha - 1.0) <= 1e-6 and 1.0 <= alpha_max:
                alpha = 1.0
        val = lam_min(alpha, beta)
        if val > best[0]:
            best = (val, alpha, beta)

    val, alpha, beta = best
    c_mat = assemble_c(p, t, alpha, beta)
    tol_psd = _PSD_FLOOR_REL * (1.0 + float(np.linalg.norm(c_mat)))
    cert = Certificate(t, alpha, beta, val, c_mat if keep_c else None)
    return val >= -tol_psd, cert


def certify_tstar(p, tol_t=None, box=None, keep_c=False):
    """Largest feasible t by bisection on [0, |b|_W^2], to width tol_t.

    The returned certificate is the last feasible one.  An infeasible lower
    endpoint signals that the multiplier box was too small; it is doubled up
    to three times before giving up.
    """
    _require_identity_scaled(p)
    b_sq = p.b_norm_w_sq
    if tol_t is None:
        tol_t = 1e-6 * (1.0 + b_sq)
    current_box = box if box is not None else default_box(p)

    for attempt in range(4):
        feas_hi, cert_hi = feasible_at_t(p, b_sq, box=current_box, keep_c=keep_c)
        if feas_hi:
            return cert_hi
        feas_lo, cert_lo = feasible_at_t(p, 0.0, box=current_box, keep_c=keep_c)
        if not feas_lo:
            # t = 0 is always feasible in exact arithmetic; enlarge the box
            current_box = (2.0 * current_box[0], 2.0 * current_box[1])
            continue
        lo, hi = 0.0, b_sq
        best = cert_lo
        while hi - lo > tol_t:
            mid = 0.5 * (lo + hi)
            feas, cert = feasible_at_t(p, mid, box=current_box, keep_c=keep_c)
            if feas:
                lo, best = mid, cert
            else:
                hi = mid
        return best
    raise RuntimeError(
        "multiplier search box exhausted after 3 doublings; "
        f"last box {current_box!r}"
    )

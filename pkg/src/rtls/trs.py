"""Equality-constrained trust-region subproblem via the secular equation.

Solves min <S x, x> - 2 <c, x> over the sphere |x| = r for a symmetric PSD
matrix S.  In the eigenbasis S = Q diag(lam) Q^T with d = Q^T c the global
minimizer is x(mu) = Q (d / (lam + mu)) where mu >= -lam_min solves the
secular equation

    sum_i d_i^2 / (lam_i + mu)^2 = r^2.

When d has no component in the minimal eigenspace the secular curve may top
out below r (the hard case); the solution is then completed with a component
inside that eigenspace at mu = -lam_min.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

_EIGENGAP_REL = 1e-12  # relative width of the minimal eigenspace
_HARD_CASE_REL = 1e-13  # |d| components below this are treated as zero


class SecularBracketError(RuntimeError):
    """The secular root could not be bracketed (diagnostics in message)."""


@dataclass(frozen=True)
class TrsSolution:
    r: float
    x: np.ndarray
    lam: float
    hard_case: bool


def _decompose(S, c, eig):
    if eig is None:
        lam, q = np.linalg.eigh(np.asarray(S, dtype=float))
        lam = np.clip(lam, 0.0, None)
    else:
        lam, q = eig
    d = q.T @ np.asarray(c, dtype=float)
    return lam, q, d


def _min_space(lam, d):
    spread = max(lam[-1] - lam[0], abs(lam[0]), 1.0)
    in_min = lam - lam[0] <= _EIGENGAP_REL * spread
    d_min_norm = float(np.linalg.norm(d[in_min]))
    d_eff = np.where(in_min, 0.0, d)
    gaps = np.where(in_min, 1.0, lam - lam[0])
    limit_sq = float(np.sum((d_eff / gaps) ** 2))
    return in_min, d_min_norm, d_eff, gaps, limit_sq


def trs_equality(S, c, r, eig=None):
    """Minimize <Sx,x> - 2<c,x> subject to |x| = r.

    ``eig`` may pass a precomputed ``(eigenvalues, eigenvectors)`` pair of S
    (ascending); S itself is then ignored.  r = 0 returns x = 0 with the
    multiplier undefined (NaN).
    """
    lam, q, d = _decompose(S, c, eig)
    n = lam.shape[0]
    r = float(r)
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r == 0.0:
        return TrsSolution(0.0, np.zeros(n), float("nan"), False)

    in_min, d_min_norm, d_eff, gaps, limit_sq = _min_space(lam, d)
    lam_min = float(lam[0])
    d_scale = max(1.0, float(np.linalg.norm(d)))

    if d_min_norm <= _HARD_CASE_REL * d_scale and limit_sq <= r * r * (1.0 + 1e-12):
        # hard case: complete with a minimal-eigenspace component
        x_eig = d_eff / gaps
        x_eig[in_min] = 0.0
        tau = np.sqrt(max(r * r - limit_sq, 0.0))
        k = int(np.argmax(in_min))
        x_eig[k] = tau
        x = q @ x_eig
        nrm = np.linalg.norm(x)
        if nrm > 0:
            x *= r / nrm
        return TrsSolution(r, x, -lam_min, True)

    def secular(mu):
        return float(np.sum((d / (lam + mu)) ** 2)) - r * r

    if d_min_norm > _HARD_CASE_REL * d_scale:
        lo = -lam_min + d_min_norm / r  # secular(lo) >= 0 from the minimal block alone
    else:
        spread = max(lam[-1] - lam[0], abs(lam_min), 1.0)
        lo = -lam_min + 1e-15 * spread
    hi = -lam_min + float(np.linalg.norm(d)) / r  # secular(hi) <= 0
    f_lo, f_hi = secular(lo), secular(hi)
    if f_lo == 0.0:
        mu = lo
    elif f_hi == 0.0:
        mu = hi
    elif f_lo < 0.0 or f_hi > 0.0:
        if abs(f_lo) <= 1e-10 * r * r:
            mu = lo
        elif abs(f_hi) <= 1e-10 * r * r:
            mu = hi
        else:
            raise SecularBracketError(
                "secular equation not bracketed: "
                f"r={r!r}, lam_min={lam_min!r}, |d|={np.linalg.norm(d)!r}, "
                f"limit={np.sqrt(limit_sq)!r}, f(lo)={f_lo!r}, f(hi)={f_hi!r}"
            )
    else:
        mu = brentq(secular, lo, hi, xtol=1e-30, rtol=8.9e-16, maxiter=200)

    x = q @ (d / (lam + mu))
    nrm = np.linalg.norm(x)
    if nrm > 0:
        x *= r / nrm
    return TrsSolution(r, x, float(mu), False)


def radial_values(lam, d, rs, iters=70):
    """Vectorized values of min_{|x|=r} <Sx,x> - 2<c,x> over an array of radii.

    Same reduction as :func:`trs_equality` (eigenbasis data lam, d), solved by
    bisection on the secular equation simultaneously for all radii.  Radii in
    the hard-case regime use the closed form with a minimal-eigenspace
    completion.
    """
    lam = np.asarray(lam, dtype=float)
    d = np.asarray(d, dtype=float)
    rs = np.asarray(rs, dtype=float)
    in_min, d_min_norm, d_eff, gaps, limit_sq = _min_space(lam, d)
    lam_min = float(lam[0])
    d_scale = max(1.0, float(np.linalg.norm(d)))
    d_norm = float(np.linalg.norm(d))

    out = np.zeros_like(rs)
    pos = rs > 0.0
    degenerate = d_min_norm <= _HARD_CASE_REL * d_scale

    hard = pos & ((rs * rs >= limit_sq) if degenerate else np.zeros_like(pos))
    if np.any(hard):
        x_bar = d_eff / gaps
        x_bar[in_min] = 0.0
        base = float(np.sum(lam * x_bar**2) - 2.0 * np.sum(d * x_bar))
        out[hard] = base + lam_min * (rs[hard] ** 2 - limit_sq)

    solve = pos & ~hard
    if np.any(solve):
        r = rs[solve]
        if degenerate:
            spread = max(lam[-1] - lam[0], abs(lam_min), 1.0)
            lo = np.full(r.shape, -lam_min + 1e-15 * spread)
        else:
            lo = -lam_min + d_min_norm / r
        hi = -lam_min + d_norm / r
        lam_row = lam[None, :]
        d_sq = (d * d)[None, :]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            g = np.sum(d_sq / (lam_row + mid[:, None]) ** 2, axis=1)
            too_big = g > r * r
            lo = np.where(too_big, mid, lo)
            hi = np.where(too_big, hi, mid)
        mu = 0.5 * (lo + hi)
        x = d[None, :] / (lam_row + mu[:, None])
        # rescale onto the sphere exactly before evaluating
        norms = np.linalg.norm(x, axis=1)
        x *= (r / norms)[:, None]
        out[solve] = np.sum(lam_row * x * x, axis=1) - 2.0 * np.sum(d[None, :] * x, axis=1)
    return out

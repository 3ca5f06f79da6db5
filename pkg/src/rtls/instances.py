"""Reference fixtures and seeded random instance generators."""

from __future__ import annotations

import numpy as np

from .model import ProblemSpec, RegularizerSpec, WeightOperator


def closed_form_problem(rho=1.0):
    """A = 0 (2x2), W = I, b = (3, 4).

    With the scaled identity the reduced objective depends on u = |x|^2 only:
    f(u) = |b|^2/(1+u) + rho u, minimized at u = |b|/sqrt(rho) - 1 with value
    2 sqrt(rho) |b| - rho whenever |b|^2 >= rho.  For rho = 1 the infimum is
    9, attained at |x|^2 = 4.
    """
    return ProblemSpec(
        np.zeros((2, 2)),
        np.array([3.0, 4.0]),
        WeightOperator.diagonal(np.ones(2)),
        RegularizerSpec.identity_scaled(rho),
    )


def random_weight(rng, m, kind="dense", lo=0.2, hi=2.0):
    """Random PSD weight with spectrum in [lo, hi]."""
    lam = rng.uniform(lo, hi, size=m)
    if kind == "diagonal":
        return WeightOperator.diagonal(lam)
    q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    return WeightOperator.dense((q * lam) @ q.T)


def random_problem(rng, n, m=None, rho_factor=1.5, weight_kind=None):
    """Seeded dense instance; rho = rho_factor * |b|_W^2.

    rho_factor >= 1 puts the instance in the certified-uniqueness regime.
    """
    m = n if m is None else m
    kind = weight_kind or ("diagonal" if rng.uniform() < 0.5 else "dense")
    a_mat = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    weight = random_weight(rng, m, kind=kind)
    wb = weight.apply_sqrt(b)
    b_sq = float(wb @ wb)
    rho = rho_factor * max(b_sq, 1e-6)
    return ProblemSpec(a_mat, b, weight, RegularizerSpec.identity_scaled(rho))

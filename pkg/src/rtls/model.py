"""Problem data, weighted seminorms, objectives and triviality tests.

A problem instance bundles a dense operator ``A``, data vector ``b``, a
positive semidefinite weight ``W`` (inducing the seminorms ``|z|_W =
|W^{1/2} z|`` and ``|X|_{2,W} = |W^{1/2} X|_F``) and a regularizer ``T``.
The two objectives implemented here are

    tls :   |A - X|_{2,W}^2 + |X x - b|_W^2
    rtls:   |T x|^2 + |A - X|_{2,W}^2 + |X x - b|_W^2

over matrix/vector pairs (X, x).  An instance is called trivial when the
infimum is zero and attained: b in R(A) + N(W) for the unregularized
objective, b in A(N(T)) + N(W) for the regularized one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ProblemFormatError(ValueError):
    """Invalid problem or model data (bad shape, non-finite entry, ...)."""


def _check_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise ProblemFormatError(f"non-finite value in field '{name}'")


def _as_vector(data, name):
    arr = np.atleast_1d(np.asarray(data, dtype=float))
    if arr.ndim != 1:
        raise ProblemFormatError(f"field '{name}' must be a 1-d vector")
    _check_finite(arr, name)
    return arr


def _as_matrix(data, name):
    arr = np.atleast_2d(np.asarray(data, dtype=float))
    if arr.ndim != 2:
        raise ProblemFormatError(f"field '{name}' must be a 2-d matrix")
    _check_finite(arr, name)
    return arr


@dataclass(frozen=True)
class WeightOperator:
    """PSD weight with its square root cached at construction.

    ``data`` is a nonnegative vector for kind ``"diagonal"`` or a symmetric
    PSD matrix for kind ``"dense"``.  Eigenvalues within
    ``eig_floor * lambda_max`` below zero are clamped to zero when the square
    root is formed; anything more negative is rejected.
    """

    kind: str
    data: np.ndarray
    sqrt_data: np.ndarray = field(repr=False)
    lam_max: float = 0.0
    eig_floor: float = 1e-12

    @classmethod
    def diagonal(cls, values, eig_floor=1e-12):
        w = _as_vector(values, "W.data")
        lam_max = float(np.max(w, initial=0.0))
        floor = eig_floor * max(lam_max, 1.0)
        if np.any(w < -floor):
            raise ProblemFormatError("field 'W.data' has a negative diagonal weight")
        w = np.clip(w, 0.0, None)
        return cls("diagonal", w, np.sqrt(w), lam_max, eig_floor)

    @classmethod
    def dense(cls, matrix, eig_floor=1e-12):
        w = _as_matrix(matrix, "W.data")
        if w.shape[0] != w.shape[1]:
            raise ProblemFormatError("field 'W.data' must be square")
        scale = float(np.max(np.abs(w), initial=0.0))
        if np.max(np.abs(w - w.T), initial=0.0) > 1e-12 * max(scale, 1.0):
            raise ProblemFormatError("field 'W.data' is not symmetric")
        w = 0.5 * (w + w.T)
        lam, q = np.linalg.eigh(w)
        lam_max = float(lam[-1]) if lam.size else 0.0
        if lam.size and lam[0] < -eig_floor * max(lam_max, 1.0):
            raise ProblemFormatError("field 'W.data' is not positive semidefinite")
        lam = np.clip(lam, 0.0, None)
        root = (q * np.sqrt(lam)) @ q.T
        # construction self-check: the cached root must reproduce W
        err = np.linalg.norm(root @ root - w)
        if err > 1e-10 * max(np.linalg.norm(w), 1e-30):
            raise ProblemFormatError("square root of 'W' failed to reproduce it")
        return cls("dense", w, root, lam_max, eig_floor)

    @property
    def dim(self):
        return self.data.shape[0]

    def as_matrix(self):
        if self.kind == "diagonal":
            return np.diag(self.data)
        return self.data

    def sqrt_matrix(self):
        if self.kind == "diagonal":
            return np.diag(self.sqrt_data)
        return self.sqrt_data

    def apply(self, z):
        """W z for a vector or W Z columnwise for a matrix."""
        if self.kind == "diagonal":
            z = np.asarray(z)
            w = self.data[:, None] if z.ndim == 2 else self.data
            return w * z
        return self.data @ z

    def apply_sqrt(self, z):
        """W^{1/2} z, vector or matrix."""
        if self.kind == "diagonal":
            z = np.asarray(z)
            w = self.sqrt_data[:, None] if z.ndim == 2 else self.sqrt_data
            return w * z
        return self.sqrt_data @ z

    def sqrt_times(self, X):
        """W^{1/2} X for a matrix X."""
        return self.apply_sqrt(X)


@dataclass(frozen=True)
class RegularizerSpec:
    """Regularizer, either sqrt(rho) * I or an explicit dense matrix.

    For the scaled identity the stored ``rho`` is the squared scale:
    |T x|^2 = rho |x|^2.
    """

    kind: str
    rho: float | None = None
    matrix: np.ndarray | None = None

    @classmethod
    def identity_scaled(cls, rho):
        rho = float(rho)
        if not np.isfinite(rho) or rho <= 0.0:
            raise ProblemFormatError("field 'T.rho' must be a positive real")
        return cls("identity_scaled", rho=rho)

    @classmethod
    def dense(cls, matrix):
        return cls("dense", matrix=_as_matrix(matrix, "T.data"))

    def in_dim(self):
        """Number of columns; None when the scaled identity fits any n."""
        return None if self.kind == "identity_scaled" else self.matrix.shape[1]

    def apply(self, x):
        if self.kind == "identity_scaled":
            return np.sqrt(self.rho) * x
        return self.matrix @ x

    def value(self, x):
        """|T x|^2."""
        if self.kind == "identity_scaled":
            return self.rho * float(x @ x)
        tx = self.matrix @ x
        return float(tx @ tx)

    def gram(self, n):
        """T^T T as an n x n matrix."""
        if self.kind == "identity_scaled":
            return self.rho * np.eye(n)
        return self.matrix.T @ self.matrix

    def gram_dot(self, x):
        """T^T T x."""
        if self.kind == "identity_scaled":
            return self.rho * x
        return self.matrix.T @ (self.matrix @ x)

    def as_matrix(self, n):
        if self.kind == "identity_scaled":
            return np.sqrt(self.rho) * np.eye(n)
        return self.matrix


@dataclass
class ProblemSpec:
    """One finite-dimensional instance (A, b, W, T).

    ``origin`` optionally records which parametric family and truncation
    order produced the instance, e.g. ``{"model_kind": "diagonal",
    "truncation_order": 40}``.
    """

    A: np.ndarray
    b: np.ndarray
    W: WeightOperator
    T: RegularizerSpec
    origin: dict | None = None

    def __post_init__(self):
        self.A = _as_matrix(self.A, "A")
        self.b = _as_vector(self.b, "b")
        m, n = self.A.shape
        if m < 1 or n < 1:
            raise ProblemFormatError("'A' must have at least one row and column")
        if self.b.shape[0] != m:
            raise ProblemFormatError(
                f"'b' has {self.b.shape[0]} entries, expected {m}"
            )
        if self.W.dim != m:
            raise ProblemFormatError(
                f"'W' acts on dimension {self.W.dim}, expected {m}"
            )
        t_dim = self.T.in_dim()
        if t_dim is not None and t_dim != n:
            raise ProblemFormatError(
                f"'T' has {t_dim} columns, expected {n}"
            )

    @property
    def shape(self):
        return self.A.shape

    @cached_property
    def gram_matrix(self):
        """A^T W A."""
        return self.A.T @ self.W.apply(self.A)

    @cached_property
    def gram_rhs(self):
        """A^T W b."""
        return self.A.T @ self.W.apply(self.b)

    @cached_property
    def gram_eig(self):
        """Eigendecomposition (ascending) of A^T W A, shared by solvers."""
        lam, q = np.linalg.eigh(self.gram_matrix)
        return np.clip(lam, 0.0, None), q

    @cached_property
    def b_norm_w_sq(self):
        """|b|_W^2."""
        wb = self.W.apply_sqrt(self.b)
        return float(wb @ wb)


@dataclass(frozen=True)
class RankOneLift:
    """Operator A + <., x> c stored without materializing the update."""

    base: np.ndarray
    x: np.ndarray
    correction_vector: np.ndarray

    def materialize(self):
        return self.base + np.outer(self.correction_vector, self.x)

    def apply(self, v):
        return self.base @ v + self.correction_vector * float(self.x @ v)


# status of a candidate pair
STATUS_SOLVED = "solved"
STATUS_INFIMUM_ONLY = "infimum_only"
STATUS_TRIVIAL = "trivial"
STATUS_HEURISTIC = "heuristic"


@dataclass
class PairReport:
    """A candidate pair (A_x, x) with objective value and residuals.

    The residuals are necessary-condition certificates only: a zero normal
    equation residual does not by itself certify global optimality.
    """

    x: np.ndarray
    lift: RankOneLift
    objective: float
    data_term: float
    reg_term: float
    residual_normal_eq: float
    residual_rank_one: float
    residual_orthogonality: float
    status: str


def _check_weight_dim(W, z, op):
    if W.dim != np.shape(z)[0]:
        raise ValueError(f"{op}: weight dimension {W.dim} does not match {np.shape(z)[0]}")


def w_vec_seminorm(W, z):
    """|z|_W = |W^{1/2} z|_2."""
    z = np.asarray(z, dtype=float)
    _check_weight_dim(W, z, "w_vec_seminorm")
    return float(np.linalg.norm(W.apply_sqrt(z)))


def w_hs_seminorm(W, X):
    """|X|_{2,W} = Frobenius norm of W^{1/2} X."""
    X = np.asarray(X, dtype=float)
    _check_weight_dim(W, X, "w_hs_seminorm")
    return float(np.linalg.norm(W.sqrt_times(X)))


def _check_pair_dims(p, X, x):
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    m, n = p.shape
    if X.shape != (m, n):
        raise ValueError(f"operator candidate has shape {X.shape}, expected {(m, n)}")
    if x.shape != (n,):
        raise ValueError(f"vector candidate has shape {x.shape}, expected ({n},)")
    return X, x


def objective_tls(p, X, x):
    """|A - X|_{2,W}^2 + |X x - b|_W^2."""
    X, x = _check_pair_dims(p, X, x)
    op_term = w_hs_seminorm(p.W, p.A - X) ** 2
    fit_term = w_vec_seminorm(p.W, X @ x - p.b) ** 2
    return op_term + fit_term


def objective_rtls(p, X, x):
    """|T x|^2 + |A - X|_{2,W}^2 + |X x - b|_W^2."""
    X, x = _check_pair_dims(p, X, x)
    return p.T.value(x) + objective_tls(p, X, x)


def is_trivial_tls(p, tol):
    """Test b in R(A) + N(W); returns (flag, witness x or None).

    Membership is decided by the least squares residual of W^{1/2} b against
    the columns of W^{1/2} A, measured relative to 1 + |W^{1/2} b|.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    wa = p.W.sqrt_times(p.A)
    wb = p.W.apply_sqrt(p.b)
    x, *_ = np.linalg.lstsq(wa, wb, rcond=None)
    resid = np.linalg.norm(wa @ x - wb)
    if resid <= tol * (1.0 + np.linalg.norm(wb)):
        return True, x
    return False, None


def nullspace_basis(M, cutoff):
    """Orthonormal basis of N(M) via SVD with singular values <= cutoff."""
    M = np.asarray(M, dtype=float)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    n = M.shape[1]
    s_full = np.zeros(n)
    s_full[: s.shape[0]] = s
    keep = s_full <= cutoff
    return vt[keep].T


def is_trivial_rtls(p, tol):
    """Test b in A(N(T)) + N(W); returns (flag, witness x or None)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, n = p.shape
    if p.T.kind == "identity_scaled":
        basis = np.zeros((n, 0))
    else:
        t_mat = p.T.as_matrix(n)
        smax = np.linalg.norm(t_mat, 2) if t_mat.size else 0.0
        basis = nullspace_basis(t_mat, tol * max(1.0, smax))
    wa = p.W.sqrt_times(p.A @ basis)
    wb = p.W.apply_sqrt(p.b)
    coeffs, *_ = np.linalg.lstsq(wa, wb, rcond=None)
    resid = np.linalg.norm(wa @ coeffs - wb)
    if resid <= tol * (1.0 + np.linalg.norm(wb)):
        return True, basis @ coeffs
    return False, None


def frechet_check(W1, W2, x0, X, Y, h):
    """Central-difference check of the two derivative formulas

        D |W1^{1/2} X|_F^2 (Y)      = 2 tr(X^T W1 Y)
        D <W2 X x0, X x0> (Y)       = 2 <W2 X x0, Y x0>

    Returns the pair of errors, relative to the analytic value when it
    exceeds 1e-8 in magnitude, absolute otherwise.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    x0 = np.asarray(x0, dtype=float)

    def big_k(M):
        return w_hs_seminorm(W1, M) ** 2

    def small_k(M):
        mx = M @ x0
        return float(W2.apply(mx) @ mx)

    diff_k = (big_k(X + h * Y) - big_k(X - h * Y)) / (2.0 * h)
    analytic_k = 2.0 * float(np.tensordot(W1.as_matrix() @ Y, X, axes=2))
    diff_l = (small_k(X + h * Y) - small_k(X - h * Y)) / (2.0 * h)
    analytic_l = 2.0 * float(W2.apply(X @ x0) @ (Y @ x0))

    def rel(diff, analytic):
        gap = abs(diff - analytic)
        if abs(analytic) < 1e-8:
            return gap
        return gap / abs(analytic)

    return rel(diff_k, analytic_k), rel(diff_l, analytic_l)

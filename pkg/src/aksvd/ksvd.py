"""Kernel SVD through the coupled covariances route.

Fitting solves, in coefficient space, the coupled system

    G' G B_psi = G' B_phi Lambda,
    G G' B_phi = G B_psi Lambda,

whose solution is the top-r left/right singular vectors of the scaled
asymmetric Gram matrix G.  The fitted coefficients parameterize direction
sets in feature space implicitly; new points are handled through kernel
vectors against the training samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import solvers
from .compat import CompatStrategy, realize_compat
from .kernels import GramMatrix, KernelOperator, KernelSpec, as_matrix, center

SIDES = ("left", "right", "concat")


@dataclass(frozen=True)
class Embeddings:
    """Sample embeddings: left coefficients (rows of X), right (rows of Z),
    or both concatenated row-aligned (square case only)."""

    side: str
    values: np.ndarray


@dataclass
class KsvdModel:
    """Fitted kernel-SVD factors plus the training references needed to
    evaluate projections of new points."""

    b_phi: np.ndarray            # n x r left coefficients, orthonormal columns
    b_psi: np.ndarray            # m x r right coefficients
    lambdas: np.ndarray          # positive, nonincreasing
    kernel: KernelSpec
    x_train: np.ndarray          # post-compat sample sets
    z_train: np.ndarray
    operator: KernelOperator
    gram: Optional[GramMatrix]   # None when fitted through a lazy solver
    compat: Optional[np.ndarray] = None
    compat_side: Optional[str] = None   # which side was projected: "x" or "z"
    requested_rank: int = 0
    achieved_rank: int = 0

    @property
    def centered(self) -> bool:
        return self.gram is not None and self.gram.centered

    @property
    def rank_deficient(self) -> bool:
        return self.achieved_rank < self.requested_rank

    def gram_values(self) -> np.ndarray:
        if self.gram is not None:
            return self.gram.values
        return self.operator.materialize()


def _apply_compat(X, Z, strategy):
    """Reconcile unequal sample dimensions via a compatibility matrix.

    Only the canonical pairing is supported, where X and Z are the rows
    and columns of one data matrix A (so dim(x) == #Z and dim(z) == #X);
    the higher-dimensional side is projected down per the realization
    algorithm.
    """
    n, dx = X.shape
    m, dz = Z.shape
    if dx == dz:
        return X, Z, None, None
    if strategy is None:
        raise ValueError(
            f"X and Z have different dimensions ({dx} vs {dz}); a compat strategy is required"
        )
    if dx != m or dz != n:
        raise ValueError(
            "compat requires adjoint-paired inputs: X must be the rows and Z the "
            f"columns of one matrix (got X {n}x{dx}, Z {m}x{dz})"
        )
    if dx > dz:
        C = realize_compat(strategy, X)       # dx x dz
        return X @ C, Z, C, "x"
    C = realize_compat(strategy, Z)           # dz x dx
    return X, Z @ C, C, "z"


def fit(X, Z, kernel: KernelSpec, rank: int,
        compat: Optional[CompatStrategy] = None, do_center: bool = False,
        solver: Optional[solvers.SolverChoice] = None) -> KsvdModel:
    """Fit the rank-r kernel SVD of the scaled Gram matrix of (X, Z).

    When fewer than ``rank`` positive singular values exist the model is
    truncated to the achievable rank and a warning is issued.  With an
    AsymNystrom solver and no centering the Gram matrix is never
    materialized.
    """
    X = as_matrix(X, "X")
    Z = as_matrix(Z, "Z")
    X, Z, C, c_side = _apply_compat(X, Z, compat)
    n, m = X.shape[0], Z.shape[0]
    if not 1 <= rank <= min(n, m):
        raise ValueError(f"rank {rank} out of range for {n} x-samples and {m} z-samples")
    if solver is None:
        solver = solvers.Dense()

    op = KernelOperator(X, Z, kernel, scaled=True)
    lazy = isinstance(solver, solvers.AsymNystrom) and not do_center
    if lazy:
        g = None
        target = op
    else:
        g = GramMatrix(op.materialize(), scaled=True)
        if do_center:
            g = center(g)
        target = g.values

    res = solvers.solve(target, rank, solver)
    if res.achieved_rank < rank:
        warnings.warn(
            f"requested rank {rank} but only {res.achieved_rank} positive singular "
            "values exist; model truncated", RuntimeWarning)
    b_phi = res.u.copy()
    b_psi = res.v.copy()
    solvers._sign_fix_pairs(b_phi, b_psi)
    return KsvdModel(
        b_phi=b_phi, b_psi=b_psi, lambdas=res.lambdas.copy(), kernel=kernel,
        x_train=X, z_train=Z, operator=op, gram=g,
        compat=C, compat_side=c_side,
        requested_rank=rank, achieved_rank=res.achieved_rank,
    )


def fit_matrix(A, kernel: KernelSpec, rank: int,
               compat: Optional[CompatStrategy] = None, do_center: bool = False,
               solver: Optional[solvers.SolverChoice] = None) -> KsvdModel:
    """Fit on a single data matrix: X = rows of A, Z = columns of A."""
    A = as_matrix(A, "A")
    return fit(A, np.ascontiguousarray(A.T), kernel, rank,
               compat=compat, do_center=do_center, solver=solver)


def residuals(model: KsvdModel):
    """Frobenius residuals of the coupled system the factors must solve:
    r1 = ||G'G B_psi - G'B_phi L||_F, r2 = ||GG'B_phi - G B_psi L||_F."""
    G = model.gram_values()
    lam = model.lambdas
    r1 = np.linalg.norm(G.T @ (G @ model.b_psi) - (G.T @ model.b_phi) * lam[None, :])
    r2 = np.linalg.norm(G @ (G.T @ model.b_phi) - (G @ model.b_psi) * lam[None, :])
    return float(r1), float(r2)


def _center_x_vector(model, k):
    g = model.gram
    return k - k.mean() - g.row_means + g.grand_mean


def _center_z_vector(model, k):
    g = model.gram
    return k - k.mean() - g.col_means + g.grand_mean


def _maybe_transform(v, model, side):
    """Route a new point through the stored compat projection if its
    dimension matches the pre-projection space."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if model.compat is not None and model.compat_side == side:
        if v.shape[0] == model.compat.shape[0]:
            return v @ model.compat
    return v


def project_x(model: KsvdModel, x_new) -> np.ndarray:
    """Feature scores of a new x against the psi-side directions.

    Returns sqrt(n) * B_psi' g where g is the (scaled, centered like
    training) kernel vector of x_new; at a training point x_i this equals
    sqrt(n) * lambda_l * b_phi[i, l] coordinate-wise.
    """
    x = _maybe_transform(x_new, model, "x")
    k = model.operator.x_row(x)
    if model.centered:
        k = _center_x_vector(model, k)
    return np.sqrt(model.x_train.shape[0]) * (model.b_psi.T @ k)


def project_z(model: KsvdModel, z_new) -> np.ndarray:
    """Mirror of project_x: sqrt(m) * B_phi' g with g the kernel vector
    of z_new against the training X."""
    z = _maybe_transform(z_new, model, "z")
    k = model.operator.z_col(z)
    if model.centered:
        k = _center_z_vector(model, k)
    return np.sqrt(model.z_train.shape[0]) * (model.b_phi.T @ k)


def embeddings(model: KsvdModel, side: str = "left") -> Embeddings:
    """Training embeddings: B_phi, B_psi, or their row-aligned concatenation."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    if side == "left":
        return Embeddings("left", model.b_phi.copy())
    if side == "right":
        return Embeddings("right", model.b_psi.copy())
    if model.b_phi.shape[0] != model.b_psi.shape[0]:
        raise ValueError(
            "concatenated embeddings require equally many x- and z-samples "
            f"(got {model.b_phi.shape[0]} and {model.b_psi.shape[0]})"
        )
    return Embeddings("concat", np.hstack([model.b_phi, model.b_psi]))

"""Dimensionality-compatibility matrices for rectangular data.

When the rows and columns of an N x M data matrix A are treated as two
sample sets, their dimensions (M and N) differ unless A is square.  A
compatibility matrix C projects the higher-dimensional set down so that a
kernel expecting equal input dimensions applies.  For M > N a C of shape
M x N is built so that A C is N x N; for N > M the construction mirrors.

Strategies: a0 pseudo-inverse, a1 PCA projection, a2 random projection,
a3 learned against a downstream task by alternating SVD refreshes with
gradient steps on C and a linear head.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import NumericalError
from .kernels import KernelOperator, KernelSpec, as_matrix


@dataclass(frozen=True)
class PseudoInverse:
    """a0: C = ((A A')^+ A)'."""


@dataclass(frozen=True)
class PcaProjection:
    """a1: C = argmin_C ||A - A C C'||_F over orthonormal C, i.e. the top
    right singular vectors of A."""


@dataclass(frozen=True)
class RandomProjection:
    """a2: i.i.d. standard normal entries, fully determined by the seed."""

    seed: int = 0


@dataclass(frozen=True)
class LearnableConfig:
    rank_r: int = 4
    steps: int = 50               # gradient steps per outer iteration
    learning_rate: float = 1e-2
    seed: int = 0
    task: str = "regression"      # or "classification"
    gradient: str = "fd"          # or "analytic_rbf"
    fd_step: float = 1e-5
    outer_iters: int = 10

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.gradient not in ("fd", "analytic_rbf"):
            raise ValueError(f"unknown gradient mode {self.gradient!r}")
        if self.rank_r < 1 or self.steps < 0:
            raise ValueError("rank_r must be >= 1 and steps >= 0")


@dataclass(frozen=True)
class Learnable:
    """a3: learn C against the downstream objective."""

    config: LearnableConfig = LearnableConfig()


CompatStrategy = Union[PseudoInverse, PcaProjection, RandomProjection, Learnable]

_NAMES = {"a0": PseudoInverse, "a1": PcaProjection, "a2": RandomProjection, "a3": Learnable}


def strategy_from_name(name: str, seed: int = 0,
                       config: Optional[LearnableConfig] = None) -> CompatStrategy:
    if name not in _NAMES:
        raise ValueError(f"unknown compat strategy {name!r}; expected one of {sorted(_NAMES)}")
    if name == "a2":
        return RandomProjection(seed=seed)
    if name == "a3":
        return Learnable(config or LearnableConfig(seed=seed))
    return _NAMES[name]()


def _sign_fix_columns(C: np.ndarray) -> np.ndarray:
    for s in range(C.shape[1]):
        i = int(np.argmax(np.abs(C[:, s])))
        if C[i, s] < 0:
            C[:, s] = -C[:, s]
    return C


def realize_compat(strategy: CompatStrategy, A) -> np.ndarray:
    """Realize the compatibility matrix for the data matrix A.

    Square A returns the identity for every strategy.  For M > N the
    result C is M x N with A C square; for N > M the construction is
    mirrored through A'.  Learnable strategies need targets: use
    :func:`learn_compat` (here a3 falls back to its a1 initialization).
    """
    A = as_matrix(A, "A")
    N, M = A.shape
    if N == M:
        return np.eye(N)
    if M < N:
        return realize_compat(strategy, np.ascontiguousarray(A.T))

    if isinstance(strategy, PseudoInverse):
        AAt = A @ A.T
        s = np.linalg.svd(AAt, compute_uv=False)
        rcond = max(AAt.shape) * np.finfo(np.float64).eps
        if s[0] <= 0.0 or s[-1] <= rcond * s[0]:
            raise NumericalError(
                "A A' is numerically singular beyond pseudo-inverse tolerance; "
                "consider the PCA projection strategy (a1) instead"
            )
        return ((np.linalg.pinv(AAt) @ A).T).copy()
    if isinstance(strategy, PcaProjection):
        _, _, vt = np.linalg.svd(A, full_matrices=False)
        return _sign_fix_columns(vt[:N].T.copy())
    if isinstance(strategy, RandomProjection):
        rng = np.random.default_rng(strategy.seed)
        return rng.standard_normal((M, N))
    if isinstance(strategy, Learnable):
        return realize_compat(PcaProjection(), A)
    raise ValueError(f"unknown compat strategy {strategy!r}")


# ---------------------------------------------------------------------------
# learnable C (a3)
# ---------------------------------------------------------------------------

@dataclass
class LinearHead:
    """Linear model on the projected features; least-squares loss, with
    one-vs-rest +-1 encoding for classification."""

    weights: np.ndarray   # d x k
    bias: np.ndarray      # k
    classes: Optional[np.ndarray] = None

    def decision(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.bias[None, :]

    def predict(self, features: np.ndarray) -> np.ndarray:
        d = self.decision(features)
        if self.classes is None:
            return d[:, 0]
        return self.classes[np.argmax(d, axis=1)]


@dataclass
class LearnCompatResult:
    c: np.ndarray
    head: LinearHead
    losses: List[float]   # loss at the end of each outer iteration


def _encode_targets(targets, task):
    targets = np.asarray(targets)
    if task == "regression":
        return targets.astype(np.float64).reshape(-1, 1), None
    classes = np.unique(targets)
    Y = np.where(targets[:, None] == classes[None, :], 1.0, -1.0)
    return Y, classes


def _effective_sets(A, C):
    """Transformed sample sets for the current C (projects the
    higher-dimensional side, mirroring realize_compat)."""
    N, M = A.shape
    if M > N:
        return A @ C, np.ascontiguousarray(A.T)
    return A, np.ascontiguousarray(A.T) @ C


def _gram_values(A, C, kernel):
    X_eff, Z_eff = _effective_sets(A, C)
    return KernelOperator(X_eff, Z_eff, kernel, scaled=True).materialize()


def _loss(G, V, Y, W, b):
    pred = (G @ V) @ W + b[None, :]
    return float(np.mean((pred - Y) ** 2))


def _head_gradients(G, V, Y, W, b):
    F = G @ V
    resid = F @ W + b[None, :] - Y
    scale = 2.0 / resid.size
    dW = scale * (F.T @ resid)
    db = scale * resid.sum(axis=0)
    dG = scale * (resid @ W.T) @ V.T
    return dW, db, dG


def _c_gradient_analytic_rbf(A, C, kernel, dG):
    """Chain dL/dG through the rbf kernel into C.

    With the rbf family G_ij = s exp(-||x_i - z_j||^2 / g^2), so
    dG_ij/dz_j = G_ij (2/g^2)(x_i - z_j) and symmetrically for x_i; the
    projected side's samples are linear in C.
    """
    if kernel.family != "rbf":
        raise ValueError("analytic gradient is implemented for the rbf kernel only")
    N, M = A.shape
    X_eff, Z_eff = _effective_sets(A, C)
    G = KernelOperator(X_eff, Z_eff, kernel, scaled=True).materialize()
    W = dG * G
    g2 = kernel.gamma ** 2
    if M > N:
        # x side projected: x_i = A[i, :] @ C
        S = (2.0 / g2) * (W @ Z_eff - W.sum(axis=1)[:, None] * X_eff)
        return A.T @ S
    # z side projected: z_j = A[:, j]' @ C
    T = (2.0 / g2) * (W.T @ X_eff - W.sum(axis=0)[:, None] * Z_eff)
    return A @ T


def _c_gradient_fd(A, C, kernel, V, Y, W, b, h):
    """Central finite differences of the loss over the entries of C."""
    grad = np.zeros_like(C)
    for p in range(C.shape[0]):
        for q in range(C.shape[1]):
            orig = C[p, q]
            C[p, q] = orig + h
            lp = _loss(_gram_values(A, C, kernel), V, Y, W, b)
            C[p, q] = orig - h
            lm = _loss(_gram_values(A, C, kernel), V, Y, W, b)
            C[p, q] = orig
            grad[p, q] = (lp - lm) / (2.0 * h)
    return grad


def learn_compat(A, targets, kernel: KernelSpec, cfg: LearnableConfig) -> LearnCompatResult:
    """Learn C by alternating SVD refreshes and gradient descent.

    Each outer iteration (i) recomputes V as the top-r right singular
    vectors of the current Gram matrix and freezes it, then (ii) takes
    cfg.steps joint gradient steps on C and the head against the task
    loss on features G V.  An outer iteration that fails to improve the
    loss is rolled back and training stops, so the recorded end-of-
    iteration losses are nonincreasing.
    """
    A = as_matrix(A, "A")
    N, M = A.shape
    Y, classes = _encode_targets(targets, cfg.task)
    if Y.shape[0] != N:
        raise ValueError(f"targets length {Y.shape[0]} does not match {N} rows of A")
    r = cfg.rank_r
    if r > min(N, M):
        raise ValueError(f"rank_r {r} exceeds min(N, M) = {min(N, M)}")

    C = realize_compat(PcaProjection(), A)
    k = Y.shape[1]
    W = np.zeros((r, k))
    b = np.zeros(k)
    losses: List[float] = []
    prev = np.inf

    for _ in range(cfg.outer_iters):
        G = _gram_values(A, C, kernel)
        _, _, vt = np.linalg.svd(G, full_matrices=False)
        V = vt[:r].T                      # refreshed then held fixed
        snapshot = (C.copy(), W.copy(), b.copy())
        for _ in range(cfg.steps):
            G = _gram_values(A, C, kernel)
            dW, db, dG = _head_gradients(G, V, Y, W, b)
            if cfg.gradient == "analytic_rbf":
                dC = _c_gradient_analytic_rbf(A, C, kernel, dG)
            else:
                dC = _c_gradient_fd(A, C, kernel, V, Y, W, b, cfg.fd_step)
            W -= cfg.learning_rate * dW
            b -= cfg.learning_rate * db
            C -= cfg.learning_rate * dC
        loss = _loss(_gram_values(A, C, kernel), V, Y, W, b)
        if not np.isfinite(loss):
            raise NumericalError("training loss diverged; decrease the learning rate")
        if loss > prev - 1e-12:
            C, W, b = snapshot            # roll back the failed iteration
            break
        losses.append(loss)
        prev = loss
        if cfg.steps == 0:
            break

    if not losses:   # zero-step budget or immediate rollback
        G = _gram_values(A, C, kernel)
        _, _, vt = np.linalg.svd(G, full_matrices=False)
        losses.append(_loss(G, vt[:r].T, Y, W, b))
    head = LinearHead(weights=W, bias=b, classes=classes)
    return LearnCompatResult(c=C, head=head, losses=losses)

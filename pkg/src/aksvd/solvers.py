"""Low-rank SVD solvers and the subsample-escalation benchmark.

All solvers accept either a dense ndarray or an operator exposing
``shape``/``block``/``matvec``/``rmatvec`` (see :class:`MatrixOperator`
and :class:`aksvd.kernels.KernelOperator`) and return a :class:`SvdResult`
with columns sorted by nonincreasing positive singular value.

The asymmetric Nystrom method approximates the top singular triplets of an
N x M matrix from an n x m submatrix: it takes the SVD of the submatrix
and extends the singular vectors to all rows/columns through the sampled
column and row blocks, touching only O(N*m + n*M) entries of the matrix.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import NumericalError

# relative cutoff below which singular values count as numerically zero
_RANK_RTOL = 1e-12


class MatrixOperator:
    """Wrap a dense matrix behind the lazy-operator interface, counting
    how many entries are read through block/entry access."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("MatrixOperator expects a 2-D array")
        self._eval_count = 0

    @property
    def shape(self):
        return self.values.shape

    @property
    def eval_count(self) -> int:
        return self._eval_count

    def block(self, rows, cols) -> np.ndarray:
        rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
        cols = np.atleast_1d(np.asarray(cols, dtype=np.intp))
        self._eval_count += rows.size * cols.size
        return self.values[np.ix_(rows, cols)]

    def entry(self, i, j) -> float:
        return float(self.block([i], [j])[0, 0])

    def materialize(self) -> np.ndarray:
        return self.values

    def matvec(self, w):
        return self.values @ w

    def rmatvec(self, w):
        return self.values.T @ w

    def matmat(self, W):
        return self.values @ W

    def rmatmat(self, W):
        return self.values.T @ W


def as_operator(G):
    """ndarray -> MatrixOperator; operators pass through."""
    if isinstance(G, np.ndarray):
        return MatrixOperator(G)
    if hasattr(G, "shape") and (hasattr(G, "block") or hasattr(G, "matvec")):
        return G
    return MatrixOperator(np.asarray(G, dtype=np.float64))


@dataclass
class SvdResult:
    """Rank-r factors U (N x r), lambdas (r,), V (M x r)."""

    u: np.ndarray
    lambdas: np.ndarray
    v: np.ndarray
    converged: bool = True
    achieved_rank: int = 0
    iterations: int = 0

    def __post_init__(self):
        if self.achieved_rank == 0:
            self.achieved_rank = self.lambdas.shape[0]


# ---------------------------------------------------------------------------
# solver choices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dense:
    pass


@dataclass(frozen=True)
class Truncated:
    tol: float = 1e-10
    max_iter: Optional[int] = None


@dataclass(frozen=True)
class Randomized:
    oversample: int = 10
    power: int = 2
    seed: int = 0


@dataclass(frozen=True)
class SymNystrom:
    n_sub: int
    seed: int = 0


@dataclass(frozen=True)
class AsymNystrom:
    n_sub: int
    m_sub: int
    seed: int = 0


SolverChoice = Union[Dense, Truncated, Randomized, SymNystrom, AsymNystrom]


def _positive_rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > _RANK_RTOL * s[0]))


def dense_svd(G, r: int) -> SvdResult:
    """Reference solver: full LAPACK SVD, truncated to rank r."""
    A = as_operator(G).materialize()
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    rr = min(r, _positive_rank(s))
    return SvdResult(u[:, :rr].copy(), s[:rr].copy(), vt[:rr].T.copy(),
                     converged=True, achieved_rank=rr)


# ---------------------------------------------------------------------------
# truncated SVD (Golub-Kahan bidiagonalization, full reorthogonalization)
# ---------------------------------------------------------------------------

class _TransposedOperator:
    def __init__(self, op):
        self._op = op
        self.shape = (op.shape[1], op.shape[0])

    def matvec(self, w):
        return self._op.rmatvec(w)

    def rmatvec(self, w):
        return self._op.matvec(w)


def truncated_svd(G, r: int, tol: float = 1e-10, max_iter: Optional[int] = None) -> SvdResult:
    """Iterative top-r SVD via Lanczos bidiagonalization.

    Grows the Krylov subspace (with full reorthogonalization) until the
    top-r Ritz residuals satisfy ||G' u_s - lambda_s v_s|| <= tol*lambda_1
    or max_iter steps were taken; on non-convergence the best iterate is
    returned with ``converged=False``.
    """
    op = as_operator(G)
    N, M = op.shape
    if r < 1 or r > min(N, M):
        raise ValueError(f"rank {r} out of range for a {N}x{M} matrix")
    if M > N:
        # start the recursion on the smaller side so the right Krylov
        # space can span it entirely (exact at exhaustion)
        res = truncated_svd(_TransposedOperator(op), r, tol=tol, max_iter=max_iter)
        return SvdResult(res.v, res.lambdas, res.u, converged=res.converged,
                         achieved_rank=res.achieved_rank, iterations=res.iterations)
    kmax = min(N, M) if max_iter is None else max(min(max_iter, min(N, M)), 1)

    rng = np.random.default_rng(0x5EED)  # fixed start; contract carries no seed
    v = rng.standard_normal(M)
    v /= np.linalg.norm(v)
    us: List[np.ndarray] = []
    vs: List[np.ndarray] = [v]
    alphas: List[float] = []
    betas: List[float] = []
    norm_est = 0.0

    def reorth(w, basis):
        for _ in range(2):
            for q in basis:
                w -= (q @ w) * q
        return w

    k = 0
    exhausted = False
    while k < kmax and not exhausted:
        u = op.matvec(vs[k])
        if k > 0:
            u -= betas[k - 1] * us[k - 1]
        u = reorth(u, us)
        alpha = float(np.linalg.norm(u))
        norm_est = max(norm_est, alpha)
        if alpha <= _RANK_RTOL * max(norm_est, 1.0):
            # x-side breakdown: restart with a fresh direction
            u = reorth(rng.standard_normal(N), us)
            un = float(np.linalg.norm(u))
            if un <= 1e-12:
                exhausted = True
                break
            u /= un
            alpha = 0.0
        else:
            u /= alpha
        us.append(u)
        alphas.append(alpha)

        w = op.rmatvec(u) - alpha * vs[k]
        w = reorth(w, vs)
        beta = float(np.linalg.norm(w))
        if beta <= _RANK_RTOL * max(norm_est, 1.0):
            # invariant subspace reached; try to continue in a new direction
            w = reorth(rng.standard_normal(M), vs)
            wn = float(np.linalg.norm(w))
            if wn <= 1e-12:
                betas.append(0.0)
                k += 1
                exhausted = True
                break
            vs.append(w / wn)
            betas.append(0.0)
        else:
            vs.append(w / beta)
            betas.append(beta)
        k += 1

        if k >= r or exhausted:
            B = np.diag(alphas)
            for j in range(k - 1):
                B[j, j + 1] = betas[j]
            P, s, Qt = np.linalg.svd(B)
            rr = min(r, _positive_rank(s))
            tail = betas[k - 1] if k <= len(betas) else 0.0
            resid = tail * np.abs(P[k - 1, :rr])
            if rr > 0 and (np.all(resid <= tol * s[0]) or k == min(N, M)):
                U = np.column_stack(us) @ P[:, :rr]
                V = np.column_stack(vs[:k]) @ Qt[:rr].T
                return SvdResult(U, s[:rr].copy(), V, converged=True,
                                 achieved_rank=rr, iterations=k)

    # budget exhausted: return the best iterate
    if not alphas:
        raise NumericalError("bidiagonalization produced no iterates")
    B = np.diag(alphas)
    for j in range(len(alphas) - 1):
        B[j, j + 1] = betas[j]
    P, s, Qt = np.linalg.svd(B)
    rr = min(r, _positive_rank(s))
    U = np.column_stack(us) @ P[:, :rr]
    V = np.column_stack(vs[: len(alphas)]) @ Qt[:rr].T
    converged = exhausted  # space exhausted means the factors are exact
    return SvdResult(U, s[:rr].copy(), V, converged=converged,
                     achieved_rank=rr, iterations=len(alphas))


# ---------------------------------------------------------------------------
# randomized SVD (range finder with power iterations)
# ---------------------------------------------------------------------------

def randomized_svd(G, r: int, oversample: int = 10, power: int = 2, seed: int = 0) -> SvdResult:
    """Halko-style randomized SVD; deterministic given the seed."""
    op = as_operator(G)
    N, M = op.shape
    l = r + oversample
    if l > min(N, M):
        raise ValueError(f"rank {r} + oversample {oversample} exceeds min(N, M) = {min(N, M)}")
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((M, l))
    Q, _ = np.linalg.qr(op.matmat(omega))
    for _ in range(power):
        W, _ = np.linalg.qr(op.rmatmat(Q))
        Q, _ = np.linalg.qr(op.matmat(W))
    B = op.rmatmat(Q).T  # l x M
    P, s, Vt = np.linalg.svd(B, full_matrices=False)
    rr = min(r, _positive_rank(s))
    return SvdResult((Q @ P)[:, :rr], s[:rr].copy(), Vt[:rr].T.copy(),
                     converged=True, achieved_rank=rr, iterations=power)


# ---------------------------------------------------------------------------
# Nystrom methods
# ---------------------------------------------------------------------------

def _sample_indices(rng, total: int, count: int) -> np.ndarray:
    if not 1 <= count <= total:
        raise ValueError(f"subsample size {count} out of range [1, {total}]")
    return np.sort(rng.choice(total, size=count, replace=False))


def sym_nystrom_eig(K, n_sub: int, r: int, seed: int = 0, indices=None):
    """Nystrom eigendecomposition of a symmetric PSD N x N operator.

    Samples n_sub rows/columns, eigendecomposes the submatrix and extends:
    lambda_s -> (N/n) * lambda_s^(n),  u_s -> sqrt(n/N) K[:, idx] u_s^(n) / lambda_s^(n),
    with columns unit-normalized afterwards.  Returns (U_tilde, lambdas_tilde).
    """
    op = as_operator(K)
    N, M = op.shape
    if N != M:
        raise ValueError("sym_nystrom_eig requires a square operator")
    idx = (np.sort(np.asarray(indices, dtype=np.intp)) if indices is not None
           else _sample_indices(np.random.default_rng(seed), N, n_sub))
    n = idx.size
    K_sub = op.block(idx, idx)
    evals, evecs = np.linalg.eigh(K_sub)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    rank = int(np.sum(evals > _RANK_RTOL * max(evals[0], 0.0))) if evals.size else 0
    if rank < r:
        raise NumericalError(
            f"submatrix has rank {rank} < requested {r}: resample or increase n_sub"
        )
    lam_sub = evals[:r]
    u_sub = evecs[:, :r]
    lam_tilde = (N / n) * lam_sub
    u_tilde = np.sqrt(n / N) * op.block(np.arange(N), idx) @ (u_sub / lam_sub[None, :])
    u_tilde /= np.linalg.norm(u_tilde, axis=0, keepdims=True)
    return u_tilde, lam_tilde


@dataclass
class NystromResult:
    """Approximated singular triplets with subsampling metadata."""

    u_tilde: np.ndarray
    v_tilde: np.ndarray
    lambdas_tilde: np.ndarray
    n_sub: int
    m_sub: int
    row_indices: np.ndarray
    col_indices: np.ndarray
    seed: int
    eta: Optional[float] = None


def _sign_fix_pairs(U: np.ndarray, V: np.ndarray):
    """Flip each (u_s, v_s) pair so the largest-|entry| of u_s is positive."""
    for s in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, s])))
        if U[i, s] < 0:
            U[:, s] = -U[:, s]
            V[:, s] = -V[:, s]
    return U, V


def asym_nystrom(op, n_sub: int, m_sub: int, r: int, seed: int = 0,
                 row_indices=None, col_indices=None) -> NystromResult:
    """Asymmetric Nystrom approximation of the top-r singular triplets.

    Takes the SVD of a uniformly sampled n_sub x m_sub submatrix and
    extends through the sampled column block (for left vectors) and row
    block (for right vectors):

        u_tilde_s = G[:, cols] v_s / lambda_s,
        v_tilde_s = G[rows, :]' u_s / lambda_s,
        lambda_tilde_s = sqrt(N*M/(n*m)) * lambda_s,

    followed by unit normalization.  Only the submatrix plus its row and
    column complements are evaluated, never the full matrix.
    """
    op = as_operator(op)
    N, M = op.shape
    rng = np.random.default_rng(seed)
    rows = (np.sort(np.asarray(row_indices, dtype=np.intp)) if row_indices is not None
            else _sample_indices(rng, N, n_sub))
    cols = (np.sort(np.asarray(col_indices, dtype=np.intp)) if col_indices is not None
            else _sample_indices(rng, M, m_sub))
    n, m = rows.size, cols.size
    if r > min(n, m):
        raise ValueError(f"rank {r} exceeds subsample sizes ({n}, {m})")

    G_sub = op.block(rows, cols)
    u_sub, s_sub, vt_sub = np.linalg.svd(G_sub, full_matrices=False)
    rank = _positive_rank(s_sub)
    if rank < r:
        raise NumericalError(
            f"submatrix has {rank} positive singular values < requested {r}: increase subsamples"
        )
    lam = s_sub[:r]
    u_sub = u_sub[:, :r]
    v_sub = vt_sub[:r].T

    # assemble G[:, cols] and G[rows, :] reusing the submatrix entries
    G_Nm = np.empty((N, m))
    G_Nm[rows] = G_sub
    comp_rows = np.setdiff1d(np.arange(N), rows, assume_unique=True)
    if comp_rows.size:
        G_Nm[comp_rows] = op.block(comp_rows, cols)
    G_nM = np.empty((n, M))
    G_nM[:, cols] = G_sub
    comp_cols = np.setdiff1d(np.arange(M), cols, assume_unique=True)
    if comp_cols.size:
        G_nM[:, comp_cols] = op.block(rows, comp_cols)

    u_tilde = G_Nm @ (v_sub / lam[None, :])
    v_tilde = G_nM.T @ (u_sub / lam[None, :])
    u_norms = np.linalg.norm(u_tilde, axis=0)
    v_norms = np.linalg.norm(v_tilde, axis=0)
    if np.any(u_norms == 0.0) or np.any(v_norms == 0.0):
        raise NumericalError("extended singular vector collapsed to zero")
    u_tilde /= u_norms[None, :]
    v_tilde /= v_norms[None, :]
    _sign_fix_pairs(u_tilde, v_tilde)
    lam_tilde = np.sqrt((N * M) / (n * m)) * lam
    return NystromResult(u_tilde, v_tilde, lam_tilde, n, m, rows, cols, seed)


def sym_nystrom_svd(G, n_sub: int, r: int, seed: int = 0) -> SvdResult:
    """SVD baseline from two symmetric Nystrom eigenproblems.

    Applies sym_nystrom_eig to G G' and G' G separately, pairs factors by
    eigenvalue order, and sign-aligns each pair by u_s' G v_s > 0 (the two
    eigenproblems carry no joint sign information).
    """
    A = as_operator(G).materialize()
    N, M = A.shape
    left_k = A @ A.T
    right_k = A.T @ A
    u_tilde, lam_left = sym_nystrom_eig(left_k, min(n_sub, N), r, seed=seed)
    v_tilde, _ = sym_nystrom_eig(right_k, min(n_sub, M), r, seed=seed + 1)
    lam = np.sqrt(np.maximum(lam_left, 0.0))
    for s in range(r):
        if u_tilde[:, s] @ A @ v_tilde[:, s] < 0:
            v_tilde[:, s] = -v_tilde[:, s]
    return SvdResult(u_tilde, lam, v_tilde, converged=True, achieved_rank=r)


def solve(G, r: int, choice: SolverChoice) -> SvdResult:
    """Dispatch a solver choice on a matrix or lazy operator."""
    if isinstance(choice, Dense):
        return dense_svd(G, r)
    if isinstance(choice, Truncated):
        return truncated_svd(G, r, tol=choice.tol, max_iter=choice.max_iter)
    if isinstance(choice, Randomized):
        return randomized_svd(G, r, oversample=choice.oversample,
                              power=choice.power, seed=choice.seed)
    if isinstance(choice, SymNystrom):
        return sym_nystrom_svd(G, choice.n_sub, r, seed=choice.seed)
    if isinstance(choice, AsymNystrom):
        res = asym_nystrom(G, choice.n_sub, choice.m_sub, r, seed=choice.seed)
        return SvdResult(res.u_tilde, res.lambdas_tilde, res.v_tilde,
                         converged=True, achieved_rank=res.lambdas_tilde.shape[0])
    raise ValueError(f"unknown solver choice {choice!r}")


# ---------------------------------------------------------------------------
# accuracy metric
# ---------------------------------------------------------------------------

def eta_metric(u_ref: np.ndarray, lambdas_ref: np.ndarray, v_ref: np.ndarray,
               u_approx: np.ndarray, v_approx: np.ndarray,
               normalized: bool = False) -> float:
    """Singular-value-weighted misalignment of approximated singular vectors.

    eta = (1/r) sum_i w_i (1 - |u_i' u~_i| / ||u~_i||)
        + (1/r) sum_i w_i (1 - |v_i' v~_i| / ||v~_i||),

    with w_i the reference singular values (or, when ``normalized``,
    w_i / sum(w)).  Zero iff every approximated column is collinear with
    its reference; invariant to independent sign flips.
    """
    r = lambdas_ref.shape[0]
    if u_approx.shape != u_ref.shape or v_approx.shape != v_ref.shape:
        raise ValueError("reference and approximation shapes differ")
    u_norms = np.linalg.norm(u_approx, axis=0)
    v_norms = np.linalg.norm(v_approx, axis=0)
    if np.any(u_norms == 0.0) or np.any(v_norms == 0.0):
        raise NumericalError("approximated singular vector has zero norm")
    w = lambdas_ref / lambdas_ref.sum() if normalized else lambdas_ref
    # clamp: round-off can push |cos| infinitesimally above 1
    cos_u = np.minimum(np.abs(np.sum(u_ref * u_approx, axis=0)) / u_norms, 1.0)
    cos_v = np.minimum(np.abs(np.sum(v_ref * v_approx, axis=0)) / v_norms, 1.0)
    return float((w * (1.0 - cos_u)).sum() / r + (w * (1.0 - cos_v)).sum() / r)


# ---------------------------------------------------------------------------
# benchmark harness
# ---------------------------------------------------------------------------

@dataclass
class BenchTrial:
    solver: str
    n_sub: Optional[int]
    m_sub: Optional[int]
    oversample: Optional[int]
    eta: float
    seconds: float
    seed: int
    success: bool

    def to_json(self) -> str:
        return json.dumps({
            "solver": self.solver, "n_sub": self.n_sub, "m_sub": self.m_sub,
            "oversample": self.oversample, "eta": self.eta,
            "seconds": self.seconds, "seed": self.seed, "success": self.success,
        })


@dataclass
class BenchReport:
    trials: List[BenchTrial] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_ldjson(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for t in self.trials:
                f.write(t.to_json() + "\n")


_DEFAULT_SOLVERS = ("tsvd", "rsvd", "symnys", "asymnys")


def bench(G, r: int, epsilon: float, solvers: Sequence[str] = _DEFAULT_SOLVERS,
          m_schedule: Sequence[int] = (), seed: int = 0,
          reference=None, oversample_schedule: Optional[Sequence[int]] = None,
          power: int = 2, tsvd_tol: float = 1e-12) -> BenchReport:
    """Escalate each solver's fidelity knob until eta <= epsilon.

    The knob is the subsample count (through ``m_schedule``) for the
    Nystrom methods and the oversampling count for randomized SVD;
    truncated SVD runs once at machine-precision tolerance.  Each trial
    records wall-clock seconds and the literal eta against the rank-r
    reference SVD (computed densely unless ``reference`` is supplied).
    A schedule exhausted without reaching epsilon is recorded as failure.
    """
    op = as_operator(G)
    N, M = op.shape
    if reference is None:
        ref = dense_svd(op.materialize(), r)
        u_ref, lam_ref, v_ref = ref.u, ref.lambdas, ref.v
    else:
        u_ref, lam_ref, v_ref = reference
    if lam_ref.shape[0] < r:
        raise NumericalError(f"reference rank {lam_ref.shape[0]} < requested {r}")

    if not m_schedule:
        m_schedule = [max(r, min(N, M) // 8), min(N, M) // 4, min(N, M) // 2, min(N, M)]
    if oversample_schedule is None:
        oversample_schedule = []
        p = 5
        while r + p <= min(N, M):
            oversample_schedule.append(p)
            p *= 2
        if not oversample_schedule:
            oversample_schedule = [min(N, M) - r]

    report = BenchReport()
    for name in solvers:
        knobs = _knob_schedule(name, m_schedule, oversample_schedule, N, M)
        solved = None
        for trial_no, knob in enumerate(knobs):
            trial_seed = seed + 1000 * trial_no
            t0 = time.perf_counter()
            try:
                res = _run_bench_solver(name, op, r, knob, trial_seed, power, tsvd_tol)
                seconds = time.perf_counter() - t0
                if res.achieved_rank < r:
                    eta = float("inf")
                else:
                    eta = eta_metric(u_ref, lam_ref, v_ref, res.u, res.v)
            except NumericalError:
                seconds = time.perf_counter() - t0
                eta = float("inf")
            success = eta <= epsilon
            if name == "asymnys":
                n_sub, m_sub = knob
            elif name == "symnys":
                n_sub, m_sub = knob, None
            else:
                n_sub = m_sub = None
            report.trials.append(BenchTrial(
                solver=name, n_sub=n_sub, m_sub=m_sub,
                oversample=knob if name == "rsvd" else None,
                eta=eta, seconds=seconds, seed=trial_seed, success=success,
            ))
            if success:
                solved = report.trials[-1]
                break
        report.summary[name] = {
            "success": solved is not None,
            "eta": solved.eta if solved else report.trials[-1].eta,
            "seconds": solved.seconds if solved else None,
            "knob": (solved.n_sub or solved.oversample) if solved else None,
        }
    rsvd = report.summary.get("rsvd")
    if rsvd and rsvd["success"]:
        for name, s in report.summary.items():
            if s["success"] and s["seconds"]:
                s["speedup_vs_rsvd"] = rsvd["seconds"] / s["seconds"]
    return report


def _knob_schedule(name, m_schedule, oversample_schedule, N, M):
    if name in ("dense", "tsvd"):
        return [None]
    if name == "rsvd":
        return list(oversample_schedule)
    if name == "symnys":
        return sorted({min(k, N, M) for k in m_schedule})
    if name == "asymnys":
        return sorted({(min(k, N), min(k, M)) for k in m_schedule},
                      key=lambda t: t[0] * t[1])
    raise ValueError(f"unknown bench solver {name!r}")


def _run_bench_solver(name, op, r, knob, seed, power, tsvd_tol) -> SvdResult:
    if name == "dense":
        return dense_svd(op, r)
    if name == "tsvd":
        return truncated_svd(op, r, tol=tsvd_tol)
    if name == "rsvd":
        return randomized_svd(op, r, oversample=knob, power=power, seed=seed)
    if name == "symnys":
        return sym_nystrom_svd(op, knob, r, seed=seed)
    if name == "asymnys":
        n_sub, m_sub = knob
        res = asym_nystrom(op, n_sub, m_sub, r, seed=seed)
        return SvdResult(res.u_tilde, res.lambdas_tilde, res.v_tilde,
                         achieved_rank=res.lambdas_tilde.shape[0])
    raise ValueError(f"unknown bench solver {name!r}")

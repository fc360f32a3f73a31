"""Asymmetric kernel evaluation and Gram matrix assembly.

A kernel here couples two sample sets X (n x d) and Z (m x d) through a
similarity kappa(x, z) that need not be symmetric in its arguments.  The
central object is the n x m Gram matrix with entries

    g_ij = s * kappa(x_i, z_j),    s = 1/sqrt(n*m) when scaled,

which downstream code decomposes by SVD.  Assembly is available both as a
materialized :class:`GramMatrix` and as a :class:`KernelOperator` that
evaluates arbitrary sub-blocks on demand without ever forming the full
matrix.  Both paths share one entry-evaluation routine, so a lazily
fetched entry is bit-for-bit equal to the materialized one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError

FAMILIES = ("linear", "rbf", "poly", "sne")

# cap on float64 elements of the (rows x cols x d) broadcast buffer (~128 MB)
_BLOCK_BUDGET = 2 ** 24


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    gamma is the bandwidth of the rbf/sne families, entering as
    exp(-||x - z||^2 / gamma^2); degree and offset parameterize the
    polynomial family (x'z + offset)^degree.
    """

    family: str = "linear"
    gamma: Optional[float] = None
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family in ("rbf", "sne"):
            if self.gamma is None or not self.gamma > 0:
                raise ValueError(f"{self.family} kernel requires gamma > 0, got {self.gamma}")
        if self.family == "poly" and self.degree < 1:
            raise ValueError(f"poly kernel requires degree >= 1, got {self.degree}")

    @staticmethod
    def linear() -> "KernelSpec":
        return KernelSpec("linear")

    @staticmethod
    def rbf(gamma: float) -> "KernelSpec":
        return KernelSpec("rbf", gamma=gamma)

    @staticmethod
    def poly(degree: int = 2, offset: float = 1.0) -> "KernelSpec":
        return KernelSpec("poly", degree=degree, offset=offset)

    @staticmethod
    def sne(gamma: float) -> "KernelSpec":
        return KernelSpec("sne", gamma=gamma)


def auto_gamma(X: np.ndarray, k: float = 1.0) -> float:
    """Bandwidth heuristic gamma = k * sqrt(M * var(X)) with M the column count."""
    X = as_matrix(X, "X")
    var = float(X.var())
    if var == 0.0:
        raise NumericalError("auto gamma undefined: training data has zero variance")
    return k * float(np.sqrt(X.shape[1] * var))


def as_matrix(a, name: str = "array") -> np.ndarray:
    """Validate and convert to a C-contiguous float64 2-D array."""
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if out.ndim == 1:
        out = out.reshape(1, -1)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    return out


def _pair_products(xb: np.ndarray, zb: np.ndarray) -> np.ndarray:
    """Inner products <x_i, z_j> for all pairs, chunked over rows.

    Uses broadcast multiply + last-axis sum instead of BLAS gemm: the
    per-entry reduction order is then independent of the block shape, so
    sub-block evaluation agrees bit-for-bit with full assembly (gemm does
    not guarantee that across shapes).
    """
    nb, d = xb.shape
    mb = zb.shape[0]
    out = np.empty((nb, mb))
    step = max(1, _BLOCK_BUDGET // max(1, mb * d))
    for s in range(0, nb, step):
        out[s : s + step] = (xb[s : s + step, None, :] * zb[None, :, :]).sum(axis=2)
    return out


def _sq_dists(xb, zb, x_sq, z_sq):
    d2 = x_sq[:, None] + z_sq[None, :] - 2.0 * _pair_products(xb, zb)
    np.maximum(d2, 0.0, out=d2)  # clamp round-off
    return d2


class KernelOperator:
    """Entry-on-demand view of the (optionally scaled) Gram matrix.

    Caches squared row norms at construction and, for the sne family, the
    per-row softmax denominators sum_{z' in Z} exp(-||x_i - z'||^2/gamma^2)
    the first time a row is touched.  ``eval_count`` tracks how many Gram
    entries have been requested through :meth:`block` / :meth:`entry`
    (sne denominators are internal to the kernel and not counted).
    """

    def __init__(self, x_data, z_data, spec: KernelSpec, scaled: bool = True):
        self.x_data = as_matrix(x_data, "x_data")
        self.z_data = as_matrix(z_data, "z_data")
        if self.x_data.shape[1] != self.z_data.shape[1]:
            raise ValueError(
                f"feature dimensions differ: X has {self.x_data.shape[1]}, "
                f"Z has {self.z_data.shape[1]} (use a compatibility matrix)"
            )
        self.spec = spec
        self.scaled = scaled
        n, m = self.x_data.shape[0], self.z_data.shape[0]
        self.scale = 1.0 / np.sqrt(n * m) if scaled else 1.0
        self._eval_count = 0
        if spec.family in ("rbf", "sne"):
            self._x_sq = (self.x_data * self.x_data).sum(axis=1)
            self._z_sq = (self.z_data * self.z_data).sum(axis=1)
        if spec.family == "sne":
            self._sne_den = np.full(n, np.nan)

    @property
    def shape(self):
        return (self.x_data.shape[0], self.z_data.shape[0])

    @property
    def eval_count(self) -> int:
        return self._eval_count

    # -- evaluation ---------------------------------------------------

    def block(self, rows, cols) -> np.ndarray:
        """Evaluate the sub-block G[rows][:, cols]."""
        rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
        cols = np.atleast_1d(np.asarray(cols, dtype=np.intp))
        self._eval_count += rows.size * cols.size
        xb = self.x_data[rows]
        zb = self.z_data[cols]
        fam = self.spec.family
        if fam == "linear":
            vals = _pair_products(xb, zb)
        elif fam == "poly":
            vals = (_pair_products(xb, zb) + self.spec.offset) ** self.spec.degree
        elif fam == "rbf":
            g2 = self.spec.gamma ** 2
            vals = np.exp(-_sq_dists(xb, zb, self._x_sq[rows], self._z_sq[cols]) / g2)
        else:  # sne
            g2 = self.spec.gamma ** 2
            num = np.exp(-_sq_dists(xb, zb, self._x_sq[rows], self._z_sq[cols]) / g2)
            vals = num / self._sne_denominators(rows)[:, None]
        if self.scaled:
            vals = vals * self.scale
        return vals

    def entry(self, i: int, j: int) -> float:
        return float(self.block([i], [j])[0, 0])

    def materialize(self) -> np.ndarray:
        n, m = self.shape
        return self.block(np.arange(n), np.arange(m))

    def _sne_denominators(self, rows) -> np.ndarray:
        missing = rows[np.isnan(self._sne_den[rows])]
        if missing.size:
            g2 = self.spec.gamma ** 2
            num = np.exp(-_sq_dists(self.x_data[missing], self.z_data,
                                    self._x_sq[missing], self._z_sq) / g2)
            den = num.sum(axis=1)
            if np.any(den <= 0.0) or not np.all(np.isfinite(den)):
                raise NumericalError(
                    "sne denominator underflowed to 0: bandwidth gamma too small for the data"
                )
            self._sne_den[missing] = den
        return self._sne_den[rows]

    # -- new-point kernel vectors --------------------------------------

    def x_row(self, x_new) -> np.ndarray:
        """kappa(x_new, z_j) over the training Z, in this operator's scaling.

        For sne the softmax denominator is computed for x_new over the
        training Z, matching how training rows are normalized.
        """
        x = np.asarray(x_new, dtype=np.float64).reshape(1, -1)
        if x.shape[1] != self.x_data.shape[1]:
            raise ValueError(f"x_new has dimension {x.shape[1]}, expected {self.x_data.shape[1]}")
        fam = self.spec.family
        if fam == "linear":
            vals = _pair_products(x, self.z_data)[0]
        elif fam == "poly":
            vals = (_pair_products(x, self.z_data)[0] + self.spec.offset) ** self.spec.degree
        else:
            x_sq = (x * x).sum(axis=1)
            g2 = self.spec.gamma ** 2
            num = np.exp(-_sq_dists(x, self.z_data, x_sq, self._z_sq)[0] / g2)
            if fam == "rbf":
                vals = num
            else:
                den = num.sum()
                if den <= 0.0 or not np.isfinite(den):
                    raise NumericalError(
                        "sne denominator underflowed to 0: bandwidth gamma too small for the data"
                    )
                vals = num / den
        return vals * self.scale if self.scaled else vals

    def z_col(self, z_new) -> np.ndarray:
        """kappa(x_i, z_new) over the training X, in this operator's scaling.

        For sne the denominators stay those of the training Z set: a new
        z does not alter how existing rows are normalized.
        """
        z = np.asarray(z_new, dtype=np.float64).reshape(1, -1)
        if z.shape[1] != self.z_data.shape[1]:
            raise ValueError(f"z_new has dimension {z.shape[1]}, expected {self.z_data.shape[1]}")
        fam = self.spec.family
        if fam == "linear":
            vals = _pair_products(self.x_data, z)[:, 0]
        elif fam == "poly":
            vals = (_pair_products(self.x_data, z)[:, 0] + self.spec.offset) ** self.spec.degree
        else:
            z_sq = (z * z).sum(axis=1)
            g2 = self.spec.gamma ** 2
            num = np.exp(-_sq_dists(self.x_data, z, self._x_sq, z_sq)[:, 0] / g2)
            if fam == "rbf":
                vals = num
            else:
                n = self.x_data.shape[0]
                vals = num / self._sne_denominators(np.arange(n))
        return vals * self.scale if self.scaled else vals

    # -- operator algebra (used by iterative solvers) -------------------

    def matvec(self, w: np.ndarray) -> np.ndarray:
        return self.matmat(np.asarray(w).reshape(-1, 1))[:, 0]

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        return self.rmatmat(np.asarray(w).reshape(-1, 1))[:, 0]

    def matmat(self, W: np.ndarray) -> np.ndarray:
        n, m = self.shape
        out = np.empty((n, W.shape[1]))
        step = max(1, _BLOCK_BUDGET // max(1, m * self.x_data.shape[1]))
        cols = np.arange(m)
        for s in range(0, n, step):
            out[s : s + step] = self.block(np.arange(s, min(s + step, n)), cols) @ W
        return out

    def rmatmat(self, W: np.ndarray) -> np.ndarray:
        n, m = self.shape
        out = np.zeros((m, W.shape[1]))
        step = max(1, _BLOCK_BUDGET // max(1, m * self.x_data.shape[1]))
        cols = np.arange(m)
        for s in range(0, n, step):
            rows = np.arange(s, min(s + step, n))
            out += self.block(rows, cols).T @ W[rows]
        return out


@dataclass(frozen=True)
class GramMatrix:
    """Materialized Gram matrix with scaling/centering bookkeeping.

    When centered, the pre-centering statistics are retained so that
    out-of-sample kernel vectors can be centered consistently:
    ``row_means[j]`` is the mean of column j taken over rows (length m),
    ``col_means[i]`` the mean of row i over columns (length n).
    """

    values: np.ndarray
    scaled: bool
    centered: bool = False
    row_means: Optional[np.ndarray] = field(default=None, repr=False)
    col_means: Optional[np.ndarray] = field(default=None, repr=False)
    grand_mean: Optional[float] = None

    @property
    def shape(self):
        return self.values.shape


def gram(spec: KernelSpec, X, Z, scaled: bool = True) -> GramMatrix:
    """Assemble the full Gram matrix g_ij = s * kappa(x_i, z_j)."""
    op = KernelOperator(X, Z, spec, scaled=scaled)
    return GramMatrix(op.materialize(), scaled=scaled)


def center(g: GramMatrix) -> GramMatrix:
    """Double-center: subtract row and column means, add back the grand mean.

    Equivalent to centering both feature maps around their empirical
    means.  Idempotent: centering an already-centered matrix returns it
    unchanged (statistics from the first pass are what out-of-sample
    projection needs).
    """
    if g.centered:
        return g
    v = g.values
    row_means = v.mean(axis=0)  # length m
    col_means = v.mean(axis=1)  # length n
    grand = float(v.mean())
    centered = v - row_means[None, :] - col_means[:, None] + grand
    return GramMatrix(centered, g.scaled, True, row_means, col_means, grand)


def center_vector(k: np.ndarray, row_means: np.ndarray, grand_mean: float) -> np.ndarray:
    """Center a new x-side kernel vector with training statistics."""
    return k - k.mean() - row_means + grand_mean


def kernel_vector(spec: KernelSpec, x_new, Z, centering: Optional[GramMatrix] = None) -> np.ndarray:
    """Raw kernel vector [kappa(x_new, z_j)]_j, optionally centered.

    If ``centering`` is a centered GramMatrix its statistics are applied
    (rescaled to raw units when the Gram was assembled scaled).
    """
    op = KernelOperator(np.asarray(x_new, dtype=np.float64).reshape(1, -1), Z, spec, scaled=False)
    k = op.x_row(np.asarray(x_new, dtype=np.float64).reshape(-1))
    if centering is not None:
        if not centering.centered:
            raise ValueError("centering GramMatrix is not centered")
        n, m = centering.shape
        s = 1.0 / np.sqrt(n * m) if centering.scaled else 1.0
        k = center_vector(k, centering.row_means / s, centering.grand_mean / s)
    return k

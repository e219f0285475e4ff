"""Noncausal second-order lattice GMRF in matrix form.

The field satisfies, at every interior node ``p = (i, j)``::

    alpha[p] * x[p] = sum_o beta[p][o] * x[p + o] + v[p]

with ``o`` ranging over the eight chebyshev-distance-1 offsets. Stacking the
interior row-major and the boundary ring clockwise from node ``(0, 0)`` gives
``A x = A_b x_b + v`` with ``E[v v^T] = A`` and ``E[x v^T] = I``. The boundary
``x_b`` is zero-mean Gaussian with covariance ``boundary_cov`` and is taken to
be independent of ``v``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

from ._linalg import cholesky_attempt, max_asymmetry, pivoted_cholesky, symmetrize
from .errors import ModelError

# (d_row, d_col) displacement to the neighbor; rows grow downward.
OFFSETS = {
    "n": (-1, 0),
    "ne": (-1, 1),
    "e": (0, 1),
    "se": (1, 1),
    "s": (1, 0),
    "sw": (1, -1),
    "w": (0, -1),
    "nw": (-1, -1),
}
OFFSET_NAMES = {v: k for k, v in OFFSETS.items()}

DENSE_CAP = 4096


@dataclass(frozen=True)
class LatticeSpec:
    """Interior is ``[1, n_rows] x [1, n_cols]``; full lattice adds a one-node ring."""

    n_rows: int
    n_cols: int

    def __post_init__(self):
        for name in ("n_rows", "n_cols"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ModelError(f"{name} must be a positive integer, got {v!r}")

    @property
    def n_interior(self):
        return self.n_rows * self.n_cols

    @property
    def n_boundary(self):
        return 2 * (self.n_rows + 1) + 2 * (self.n_cols + 1)

    def interior_index(self, i, j):
        """Row-major position of interior node ``(i, j)`` (1-based coordinates)."""
        return (i - 1) * self.n_cols + (j - 1)

    def is_interior(self, i, j):
        return 1 <= i <= self.n_rows and 1 <= j <= self.n_cols

    def boundary_nodes(self):
        return clockwise_ring(0, 0, self.n_rows + 1, self.n_cols + 1)


def clockwise_ring(top, left, bottom, right):
    """Nodes on the boundary of the rectangle ``[top, bottom] x [left, right]``.

    Clockwise from the top-left node. A single row is walked left to right, a
    single column top to bottom, each node once. Empty rectangle -> ``[]``.
    """
    if top > bottom or left > right:
        return []
    if top == bottom:
        return [(top, j) for j in range(left, right + 1)]
    if left == right:
        return [(i, left) for i in range(top, bottom + 1)]
    nodes = [(top, j) for j in range(left, right + 1)]
    nodes += [(i, right) for i in range(top + 1, bottom + 1)]
    nodes += [(bottom, j) for j in range(right - 1, left - 1, -1)]
    nodes += [(i, left) for i in range(bottom - 1, top, -1)]
    return nodes


@dataclass(frozen=True)
class NeighborhoodCoefficients:
    """Per-node weights ``alpha`` (n_rows x n_cols) and ``beta[offset]`` arrays.

    ``beta`` maps an offset ``(d_row, d_col)`` to an ``n_rows x n_cols`` array
    whose ``[i-1, j-1]`` entry weighs the neighbor ``(i + d_row, j + d_col)``.
    Missing offsets are zero.
    """

    alpha: np.ndarray
    beta: dict
    homogeneous: bool = False

    @classmethod
    def uniform(cls, spec, alpha, beta=None):
        """Same ``alpha`` everywhere; ``beta`` maps offsets (tuples or compass
        names) to scalars."""
        shape = (spec.n_rows, spec.n_cols)
        b = {}
        for key, value in (beta or {}).items():
            off = OFFSETS[key] if isinstance(key, str) else tuple(key)
            b[off] = np.full(shape, float(value))
        return cls(np.full(shape, float(alpha)), b, homogeneous=True)

    def validate(self, spec):
        shape = (spec.n_rows, spec.n_cols)
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != shape:
            raise ModelError(f"alpha has shape {alpha.shape}, expected {shape}")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
            raise ModelError("alpha must be finite and strictly positive at every node")
        for off, arr in self.beta.items():
            if off not in OFFSET_NAMES:
                raise ModelError(f"offset {off!r} is not a second-order neighbor offset")
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise ModelError(f"beta{off} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"beta{off} has non-finite entries")
        # beta_p(o) must equal beta_{p+o}(-o) for interior pairs.
        zero = np.zeros(shape)
        for (di, dj) in OFFSET_NAMES:
            fwd = np.asarray(self.beta.get((di, dj), zero), dtype=float)
            back = np.asarray(self.beta.get((-di, -dj), zero), dtype=float)
            rows = slice(max(0, -di), spec.n_rows - max(0, di))
            cols = slice(max(0, -dj), spec.n_cols - max(0, dj))
            rows2 = slice(max(0, di), spec.n_rows - max(0, -di))
            cols2 = slice(max(0, dj), spec.n_cols - max(0, -dj))
            if not np.array_equal(fwd[rows, cols], back[rows2, cols2]):
                raise ModelError(
                    f"beta is not symmetric for offset {OFFSET_NAMES[(di, dj)]}: "
                    f"beta_p(o) != beta_(p+o)(-o)"
                )

    def weight(self, off):
        arr = self.beta.get(off)
        return None if arr is None else np.asarray(arr, dtype=float)


@dataclass(frozen=True)
class PrecisionSystem:
    spec: LatticeSpec
    A: sparse.csr_matrix
    A_b: sparse.csr_matrix
    boundary_cov: np.ndarray = field(repr=False)

    def dense(self):
        return self.A.toarray(), self.A_b.toarray()


def _check_boundary_cov(spec, cov):
    cov = np.asarray(cov, dtype=float)
    nb = spec.n_boundary
    if cov.shape != (nb, nb):
        raise ModelError(f"boundary covariance has shape {cov.shape}, expected ({nb}, {nb})")
    if not np.all(np.isfinite(cov)):
        raise ModelError("boundary covariance has non-finite entries")
    scale = float(np.max(np.abs(cov))) if cov.size else 0.0
    if max_asymmetry(cov) > 1e-10 * scale:
        raise ModelError("boundary covariance is not symmetric")
    _, _, residual = pivoted_cholesky(cov)
    if residual > 1e-10 * max(scale, 1.0):
        raise ModelError("boundary covariance is not positive semidefinite")
    return cov


def build_precision(spec, coeffs, boundary_cov):
    """Assemble ``A`` (interior) and ``A_b`` (interior-to-boundary) as CSR.

    Diagonal is ``alpha``; an interior neighbor gets ``-beta``, a boundary
    neighbor ``+beta`` in ``A_b``. Symmetric entries of ``A`` are written from
    the same validated value, so ``A == A.T`` holds exactly.
    """
    coeffs.validate(spec)
    cov = _check_boundary_cov(spec, boundary_cov)

    n, m = spec.n_rows, spec.n_cols
    bindex = {node: k for k, node in enumerate(spec.boundary_nodes())}
    alpha = np.asarray(coeffs.alpha, dtype=float)

    rows, cols, vals = [], [], []
    brows, bcols, bvals = [], [], []
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            p = spec.interior_index(i, j)
            rows.append(p)
            cols.append(p)
            vals.append(alpha[i - 1, j - 1])
            for off in OFFSET_NAMES:
                w = coeffs.weight(off)
                if w is None:
                    continue
                b = w[i - 1, j - 1]
                if b == 0.0:
                    continue
                qi, qj = i + off[0], j + off[1]
                if spec.is_interior(qi, qj):
                    rows.append(p)
                    cols.append(spec.interior_index(qi, qj))
                    vals.append(-b)
                else:
                    brows.append(p)
                    bcols.append(bindex[(qi, qj)])
                    bvals.append(b)

    nm, nb = spec.n_interior, spec.n_boundary
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(nm, nm))
    A_b = sparse.csr_matrix((bvals, (brows, bcols)), shape=(nm, nb))
    return PrecisionSystem(spec, A, A_b, cov)


@dataclass(frozen=True)
class SPDReport:
    ok: bool
    min_pivot: float
    failed_index: int = -1

    def __str__(self):
        if self.ok:
            return f"spd=ok min_pivot={self.min_pivot!r}"
        return f"spd=fail first_nonpositive_pivot={self.failed_index}"


def validate_spd(sys):
    """Dense Cholesky attempt on ``A``; failure is reported, not raised.

    ``failed_index`` is 0-based. Pivots are the squared diagonal entries of
    the Cholesky factor.
    """
    c, info = cholesky_attempt(sys.A.toarray())
    if info > 0:
        return SPDReport(False, float("nan"), info - 1)
    return SPDReport(True, float(np.min(np.diag(c) ** 2)))


def joint_covariance(sys):
    """Dense ``Cov(x)`` and ``Cov(x, x_b)``.

    From ``x = A^-1 (A_b x_b + v)`` with ``v`` independent of ``x_b``:
    ``Cov(x) = A^-1 A_b S A_b^T A^-1 + A^-1`` and ``Cov(x, x_b) = A^-1 A_b S``.
    """
    nm = sys.spec.n_interior
    if nm > DENSE_CAP:
        raise ModelError(f"dense covariance capped at {DENSE_CAP} interior nodes, got {nm}")
    A, A_b = sys.dense()
    try:
        cf = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as exc:
        raise ModelError("precision matrix A is not positive definite") from exc
    a_inv = symmetrize(linalg.cho_solve(cf, np.eye(nm)))
    cov_xb = linalg.cho_solve(cf, A_b @ sys.boundary_cov)
    cov_xx = symmetrize(cov_xb @ A_b.T @ a_inv + a_inv)
    return cov_xx, cov_xb

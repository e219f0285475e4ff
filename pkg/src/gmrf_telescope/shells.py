"""Telescoping shells of the lattice and the permuted block-tridiagonal system.

Shell ``k`` is the ring of ``T_k = [k, N+1-k] x [k, M+1-k]`` left after removing
``T_{k+1}``; shell 0 is the boundary, shells ``1..tau`` partition the interior
with ``tau = ceil(min(N, M) / 2)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import EnvelopeError
from .lattice import clockwise_ring


@dataclass(frozen=True)
class ShellDecomposition:
    n_rows: int
    n_cols: int
    tau: int
    shells: tuple          # shells[k] is a tuple of (row, col) nodes
    order: np.ndarray      # shell position -> row-major interior index
    perm: np.ndarray       # row-major interior index -> shell position

    @property
    def sizes(self):
        return [len(s) for s in self.shells]

    def offsets(self):
        """Start of each interior shell ``1..tau`` inside the stacked vector."""
        starts = np.concatenate([[0], np.cumsum(self.sizes[1:])])
        return starts

    def block(self, k):
        """Slice of shell ``k`` (``k >= 1``) in the stacked interior vector."""
        starts = self.offsets()
        return slice(int(starts[k - 1]), int(starts[k]))

    def to_shells(self, x):
        """Row-major interior vector (or N x M array) -> stacked shell vector."""
        return np.asarray(x).reshape(-1)[self.order]

    def to_lattice(self, z):
        """Stacked shell vector -> N x M array."""
        x = np.empty(len(self.order), dtype=np.asarray(z).dtype)
        x[self.order] = z
        return x.reshape(self.n_rows, self.n_cols)

    def shell_of(self):
        """Shell index for every interior node, as an N x M integer array."""
        out = np.zeros((self.n_rows, self.n_cols), dtype=int)
        for k in range(1, self.tau + 1):
            for (i, j) in self.shells[k]:
                out[i - 1, j - 1] = k
        return out


def shells(spec):
    n, m = spec.n_rows, spec.n_cols
    tau = -(-min(n, m) // 2)
    rings = [tuple(clockwise_ring(k, k, n + 1 - k, m + 1 - k)) for k in range(tau + 1)]
    order = np.array(
        [(i - 1) * m + (j - 1) for ring in rings[1:] for (i, j) in ring], dtype=np.int64
    )
    perm = np.empty_like(order)
    perm[order] = np.arange(len(order))
    return ShellDecomposition(n, m, tau, tuple(rings), order, perm)


@dataclass(frozen=True)
class BlockTridiagonal:
    """Blocks of ``P A P^T`` and ``P A_b``, all dense, indexed by shell 1..tau.

    ``P A P^T`` has ``M0[k]`` on the diagonal, ``-Mminus[k]`` below it and
    ``-Mplus[k]`` above; ``P A_b`` is ``[Mminus[1]; 0; ...]``. Index 0 of each
    list is unused (``None``) so that list index equals shell index.
    """

    tau: int
    sizes: list
    M0: list
    Mminus: list
    Mplus: list

    def assemble(self):
        """Dense ``P A P^T``."""
        n = sum(self.sizes[1:])
        out = np.zeros((n, n))
        starts = np.concatenate([[0], np.cumsum(self.sizes[1:])])
        for k in range(1, self.tau + 1):
            a, b = starts[k - 1], starts[k]
            out[a:b, a:b] = self.M0[k]
            if k > 1:
                c = starts[k - 2]
                out[a:b, c:a] = -self.Mminus[k]
            if k < self.tau:
                out[a:b, b:starts[k + 1]] = -self.Mplus[k]
        return out


def permute_system(sys, dec):
    """Reorder the precision system into shell order and cut out its blocks.

    Raises EnvelopeError if ``P A P^T`` couples non-adjacent shells or if the
    boundary touches any shell other than shell 1.
    """
    A = sys.A.tocsr()
    pap = A[dec.order][:, dec.order].tocoo()
    pab = sys.A_b.tocsr()[dec.order].tocoo()

    shell_id = np.concatenate(
        [np.full(s, k, dtype=int) for k, s in enumerate(dec.sizes[1:], start=1)]
    )
    if pap.nnz:
        gap = np.abs(shell_id[pap.row] - shell_id[pap.col])
        bad = (gap > 1) & (pap.data != 0)
        if np.any(bad):
            r, c = pap.row[bad][0], pap.col[bad][0]
            raise EnvelopeError(
                f"entry between shells {shell_id[r]} and {shell_id[c]} lies outside "
                "the block-tridiagonal envelope"
            )
    if pab.nnz:
        bad = (shell_id[pab.row] != 1) & (pab.data != 0)
        if np.any(bad):
            raise EnvelopeError(
                f"boundary couples to shell {shell_id[pab.row[bad][0]]}; only shell 1 may"
            )

    pap = sparse.csr_matrix(pap)
    pab = sparse.csr_matrix(pab)
    tau = dec.tau
    M0, Mminus, Mplus = [None] * (tau + 1), [None] * (tau + 1), [None] * (tau + 1)
    for k in range(1, tau + 1):
        blk = dec.block(k)
        M0[k] = pap[blk, blk].toarray()
        if k == 1:
            Mminus[1] = pab[blk].toarray()
        else:
            Mminus[k] = -pap[blk, dec.block(k - 1)].toarray()
        if k < tau:
            Mplus[k] = -pap[blk, dec.block(k + 1)].toarray()
    return BlockTridiagonal(tau, list(dec.sizes), M0, Mminus, Mplus)

"""Shell-chain parameters ``z_k = F_k z_{k-1} + w_k``, ``w_k ~ N(0, Q_k)``.

Two independent routes:

* ``factorize`` runs the backward block recursion on the permuted precision
  (``Q_tau^-1 = M0_tau``; ``Q_k^-1 = M0_k - M+_k F_{k+1}``; ``F_k = Q_k M-_k``).
* ``factorize_oracle`` reads the same quantities off dense second moments:
  ``F_k = C(k, k-1) C(k-1, k-1)^-1``, ``Q_k = C(k, k) - F_k C(k-1, k)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._linalg import max_asymmetry, symmetrize
from .errors import ModelError, NotPositiveDefiniteError


@dataclass(frozen=True)
class TelescopingModel:
    tau: int
    F: list                 # F[k], k = 1..tau; F[0] is None
    Q: list                 # Q[k], k = 1..tau; Q[0] is None
    boundary_cov: np.ndarray

    @property
    def sizes(self):
        return [self.boundary_cov.shape[0]] + [self.Q[k].shape[0] for k in range(1, self.tau + 1)]

    def check(self, tol=1e-12):
        for k in range(1, self.tau + 1):
            if self.F[k].shape != (self.Q[k].shape[0], self.sizes[k - 1]):
                raise ModelError(f"F_{k} has shape {self.F[k].shape}, inconsistent with the chain")
            if max_asymmetry(self.Q[k]) >= tol * max(1.0, float(np.max(np.abs(self.Q[k])))):
                raise ModelError(f"Q_{k} is not symmetric")
            try:
                linalg.cholesky(self.Q[k], lower=True)
            except linalg.LinAlgError as exc:
                raise NotPositiveDefiniteError(f"Q_{k} is not positive definite", k) from exc
        return self


def _pd_factor(a, stage):
    try:
        return linalg.cho_factor(symmetrize(a), lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"Q_{stage}^-1 is not positive definite: the field model is invalid", stage
        ) from exc


def factorize(bt, boundary_cov):
    tau = bt.tau
    F, Q = [None] * (tau + 1), [None] * (tau + 1)
    for k in range(tau, 0, -1):
        q_inv = bt.M0[k] if k == tau else bt.M0[k] - bt.Mplus[k] @ F[k + 1]
        cf = _pd_factor(q_inv, k)
        F[k] = linalg.cho_solve(cf, bt.Mminus[k])
        Q[k] = symmetrize(linalg.cho_solve(cf, np.eye(q_inv.shape[0])))
    return TelescopingModel(tau, F, Q, np.asarray(boundary_cov, dtype=float))


def _shell_cov(cov_xx, cov_xb, boundary_cov, dec):
    """Dense covariance of the stacked vector ``[z_0; z_1; ...; z_tau]``."""
    o = dec.order
    zz = cov_xx[np.ix_(o, o)]
    zb = cov_xb[o]
    return np.block([[boundary_cov, zb.T], [zb, zz]])


def _slices(sizes):
    starts = np.concatenate([[0], np.cumsum(sizes)])
    return [slice(int(starts[k]), int(starts[k + 1])) for k in range(len(sizes))]


def factorize_oracle(cov_xx, cov_xb, boundary_cov, dec):
    if cov_xx.shape[0] > 4096:
        raise ModelError("covariance oracle capped at 4096 interior nodes")
    full = _shell_cov(cov_xx, cov_xb, np.asarray(boundary_cov, dtype=float), dec)
    sl = _slices(dec.sizes)
    tau = dec.tau
    F, Q = [None] * (tau + 1), [None] * (tau + 1)
    for k in range(1, tau + 1):
        prev, cur = sl[k - 1], sl[k]
        c_pp = full[prev, prev]
        try:
            cf = linalg.cho_factor(c_pp, lower=True)
        except linalg.LinAlgError as exc:
            raise ModelError(f"E[z_{k-1} z_{k-1}^T] is singular") from exc
        # F C_pp = C_cp  =>  F = (C_pp^-1 C_pc)^T
        F[k] = linalg.cho_solve(cf, full[prev, cur]).T
        Q[k] = symmetrize(full[cur, cur] - F[k] @ full[prev, cur])
    return TelescopingModel(tau, F, Q, np.asarray(boundary_cov, dtype=float))


def chain_covariance(model):
    """Joint covariance of ``[z_0; ...; z_tau]`` implied by the chain.

    ``Cov(z_k, z_j) = F_k Cov(z_{k-1}, z_j)`` for ``j < k`` and
    ``Cov(z_k, z_k) = F_k Cov(z_{k-1}, z_{k-1}) F_k^T + Q_k``.
    """
    sizes = model.sizes
    sl = _slices(sizes)
    n = sum(sizes)
    out = np.zeros((n, n))
    out[sl[0], sl[0]] = model.boundary_cov
    for k in range(1, model.tau + 1):
        F = model.F[k]
        prev = sl[k - 1]
        upto = slice(0, prev.stop)
        # rows of z_k against everything up to z_{k-1}
        cross = F @ out[prev, upto]
        out[sl[k], upto] = cross
        out[upto, sl[k]] = cross.T
        out[sl[k], sl[k]] = symmetrize(F @ out[prev, prev] @ F.T + model.Q[k])
    return out


def shell_marginals(model):
    """Prior covariances ``Cov(z_k)`` for ``k = 0..tau``."""
    covs = [model.boundary_cov]
    for k in range(1, model.tau + 1):
        F = model.F[k]
        covs.append(symmetrize(F @ covs[-1] @ F.T + model.Q[k]))
    return covs


def cholesky_blocks(bt, model):
    """Block bidiagonal ``L`` with ``L^T L = P A P^T``.

    Diagonal blocks are upper-triangular ``U_k`` with ``U_k^T U_k = Q_k^-1``;
    sub-diagonal blocks are ``-U_k^-T M-_k``. Returned dense.
    """
    sizes = bt.sizes[1:]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    n = int(starts[-1])
    L = np.zeros((n, n))
    for k in range(1, bt.tau + 1):
        q_inv = bt.M0[k] if k == bt.tau else bt.M0[k] - bt.Mplus[k] @ model.F[k + 1]
        U = linalg.cholesky(symmetrize(q_inv), lower=False)
        a, b = starts[k - 1], starts[k]
        L[a:b, a:b] = U
        if k > 1:
            P = linalg.solve_triangular(U, bt.Mminus[k], trans="T", lower=False)
            L[a:b, starts[k - 2]:a] = -P
    return L

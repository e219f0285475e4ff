"""Exact field synthesis by running the shell chain forward from the boundary."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._linalg import pivoted_cholesky
from .errors import ModelError


def standard_normals(seed, count):
    """``count`` standard normals from Box-Muller on a Philox stream.

    Uniforms are ``(raw >> 11 + 1) * 2**-53`` in ``(0, 1]``; pair ``i`` yields
    the cos draw then the sin draw. Same seed -> same bits.
    """
    if count <= 0:
        return np.zeros(0)
    bitgen = np.random.Philox(int(seed))
    n_pairs = (count + 1) // 2
    raw = bitgen.random_raw(2 * n_pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * n_pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


@dataclass(frozen=True)
class FieldSample:
    boundary: np.ndarray    # z_0 in clockwise order
    interior: np.ndarray    # n_rows x n_cols
    seed: int


def _noise_factors(model):
    s_factor, _, _ = pivoted_cholesky(model.boundary_cov)
    q_factors = [None]
    for k in range(1, model.tau + 1):
        try:
            q_factors.append(linalg.cholesky(model.Q[k], lower=True))
        except linalg.LinAlgError as exc:
            raise ModelError(f"Q_{k} is not positive definite") from exc
    return s_factor, q_factors


def sample_fields(model, dec, seed, count):
    """``count`` independent fields from one stream.

    Returns ``(boundary, interior)`` with shapes ``(count, |dT0|)`` and
    ``(count, n_rows, n_cols)``. Sample ``i`` consumes a contiguous block of
    draws: boundary nodes first, then shells ``1..tau`` in clockwise order.
    """
    sizes = model.sizes
    per_sample = sum(sizes)
    xi = standard_normals(seed, count * per_sample).reshape(count, per_sample)
    s_factor, q_factors = _noise_factors(model)

    pos = sizes[0]
    z = xi[:, :pos] @ s_factor.T
    boundary = z
    shells = []
    for k in range(1, model.tau + 1):
        noise = xi[:, pos:pos + sizes[k]]
        pos += sizes[k]
        z = z @ model.F[k].T + noise @ q_factors[k].T
        shells.append(z)
    stacked = np.concatenate(shells, axis=1) if shells else np.zeros((count, 0))
    interior = np.empty_like(stacked)
    interior[:, dec.order] = stacked
    return boundary, interior.reshape(count, dec.n_rows, dec.n_cols)


def sample_field(model, dec, seed):
    boundary, interior = sample_fields(model, dec, seed, 1)
    return FieldSample(boundary[0], interior[0], int(seed))


def empirical_covariance(samples, cross=False):
    """Unbiased covariance of flattened interiors; with ``cross=True`` also the
    interior-by-boundary cross block."""
    if len(samples) < 2:
        raise ModelError("need at least two samples")
    shape = samples[0].interior.shape
    bshape = samples[0].boundary.shape
    for s in samples:
        if s.interior.shape != shape or s.boundary.shape != bshape:
            raise ModelError("samples have mismatched shapes")
    x = np.stack([s.interior.reshape(-1) for s in samples])
    cov = covariance_rows(x)
    if not cross:
        return cov
    b = np.stack([s.boundary for s in samples])
    xc = x - x.mean(axis=0)
    bc = b - b.mean(axis=0)
    return cov, xc.T @ bc / (len(samples) - 1)


def covariance_rows(x):
    """Unbiased covariance of the rows of ``x`` (one observation per row)."""
    x = np.asarray(x, dtype=float)
    xc = x - x.mean(axis=0)
    return xc.T @ xc / (x.shape[0] - 1)

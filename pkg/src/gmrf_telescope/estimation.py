"""Bayesian field estimation over the shell chain.

Observations are pointwise, ``y[p] = g[p] x[p] + n[p]`` with independent
``n[p] ~ N(0, r[p])``. The filter sweeps shells from the boundary inward,
absorbing every observation of a shell in one block update; the RTS pass then
runs back out to the boundary. ``direct_mmse`` solves the same problem densely.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._linalg import symmetrize
from .errors import ModelError
from .lattice import joint_covariance


@dataclass(frozen=True)
class ObservationModel:
    """Per-node gain, noise variance and observed mask on the interior lattice.

    Boundary observations are off unless ``boundary_mask`` is given; boundary
    arrays follow the clockwise boundary order.
    """

    gain: np.ndarray
    variance: np.ndarray
    mask: np.ndarray
    boundary_gain: np.ndarray = None
    boundary_variance: np.ndarray = None
    boundary_mask: np.ndarray = None

    @classmethod
    def uniform(cls, shape, gain=1.0, variance=1.0, mask=None):
        mask = np.ones(shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        return cls(np.full(shape, float(gain)), np.full(shape, float(variance)), mask)

    def validate(self, n_rows, n_cols, n_boundary):
        shape = (n_rows, n_cols)
        for name in ("gain", "variance", "mask"):
            if np.shape(getattr(self, name)) != shape:
                raise ModelError(f"observation {name} has shape {np.shape(getattr(self, name))}, expected {shape}")
        mask = np.asarray(self.mask, dtype=bool)
        if np.any(~(np.asarray(self.variance)[mask] > 0)):
            raise ModelError("observation variance must be positive wherever observed")
        if self.boundary_mask is not None:
            for name in ("boundary_gain", "boundary_variance", "boundary_mask"):
                if np.shape(getattr(self, name)) != (n_boundary,):
                    raise ModelError(f"{name} must have length {n_boundary}")
            bm = np.asarray(self.boundary_mask, dtype=bool)
            if np.any(~(np.asarray(self.boundary_variance)[bm] > 0)):
                raise ModelError("boundary observation variance must be positive wherever observed")
        return self

    def shell_terms(self, dec, k, y, y_boundary=None):
        """``(idx, gain, var, values)`` for the observed nodes of shell ``k``;
        ``idx`` indexes into the shell's clockwise order."""
        if k == 0:
            if self.boundary_mask is None:
                return np.zeros(0, dtype=int), np.zeros(0), np.zeros(0), np.zeros(0)
            m = np.asarray(self.boundary_mask, dtype=bool)
            idx = np.flatnonzero(m)
            if y_boundary is None:
                raise ModelError("boundary is observed but no boundary values were given")
            return (idx, np.asarray(self.boundary_gain, float)[idx],
                    np.asarray(self.boundary_variance, float)[idx],
                    np.asarray(y_boundary, float)[idx])
        nodes = dec.shells[k]
        rows = np.array([i - 1 for i, _ in nodes])
        cols = np.array([j - 1 for _, j in nodes])
        m = np.asarray(self.mask, dtype=bool)[rows, cols]
        idx = np.flatnonzero(m)
        r, c = rows[idx], cols[idx]
        return (idx, np.asarray(self.gain, float)[r, c],
                np.asarray(self.variance, float)[r, c], np.asarray(y, float)[r, c])


@dataclass
class EstimationResult:
    filtered_means: list
    filtered_covs: list
    predicted_means: list
    predicted_covs: list
    smoothed_means: list = field(default=None)
    smoothed_covs: list = field(default=None)
    interior_mean: np.ndarray = field(default=None)
    interior_variance: np.ndarray = field(default=None)
    boundary_mean: np.ndarray = field(default=None)
    boundary_variance: np.ndarray = field(default=None)


def _joseph_update(m, P, idx, gain, var, values):
    if len(idx) == 0:
        return m, P
    d = P.shape[0]
    H = np.zeros((len(idx), d))
    H[np.arange(len(idx)), idx] = gain
    R = np.diag(var)
    S = symmetrize(H @ P @ H.T + R)
    try:
        cf = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:  # pragma: no cover - r > 0 rules this out
        raise RuntimeError("innovation covariance is not positive definite") from exc
    K = linalg.cho_solve(cf, H @ P).T
    m = m + K @ (values - H @ m)
    IKH = np.eye(d) - K @ H
    P = symmetrize(IKH @ P @ IKH.T + (K * var) @ K.T)
    return m, P


def kalman_filter(model, dec, obs, y, y_boundary=None):
    """Boundary-inward sweep; prior ``z_0 ~ N(0, boundary_cov)``."""
    obs.validate(dec.n_rows, dec.n_cols, model.sizes[0])
    m = np.zeros(model.sizes[0])
    P = np.array(model.boundary_cov, dtype=float)
    pred_m, pred_P, filt_m, filt_P = [m], [P], [], []
    for k in range(model.tau + 1):
        if k > 0:
            F = model.F[k]
            m = F @ filt_m[-1]
            P = symmetrize(F @ filt_P[-1] @ F.T + model.Q[k])
            pred_m.append(m)
            pred_P.append(P)
        m, P = _joseph_update(m, P, *obs.shell_terms(dec, k, y, y_boundary))
        filt_m.append(m)
        filt_P.append(P)
    return EstimationResult(filt_m, filt_P, pred_m, pred_P)


def rts_smoother(model, filtered, dec=None):
    """Backward pass from the innermost shell out to the boundary.

    Fills the smoothed lists of ``filtered`` (and, given ``dec``, the
    reassembled lattice arrays) and returns it.
    """
    tau = model.tau
    sm = [None] * (tau + 1)
    sP = [None] * (tau + 1)
    sm[tau] = filtered.filtered_means[tau]
    sP[tau] = filtered.filtered_covs[tau]
    for k in range(tau - 1, -1, -1):
        Pf = filtered.filtered_covs[k]
        Pp = filtered.predicted_covs[k + 1]
        try:
            cf = linalg.cho_factor(Pp, lower=True)
        except linalg.LinAlgError as exc:
            raise ModelError(f"predicted covariance at shell {k + 1} is singular") from exc
        J = linalg.cho_solve(cf, model.F[k + 1] @ Pf).T
        sm[k] = filtered.filtered_means[k] + J @ (sm[k + 1] - filtered.predicted_means[k + 1])
        sP[k] = symmetrize(Pf + J @ (sP[k + 1] - Pp) @ J.T)
    filtered.smoothed_means = sm
    filtered.smoothed_covs = sP
    if dec is not None:
        _reassemble(filtered, dec)
    return filtered


def _reassemble(res, dec):
    if dec.tau:
        z = np.concatenate(res.smoothed_means[1:])
        v = np.concatenate([np.diag(P) for P in res.smoothed_covs[1:]])
    else:
        z = v = np.zeros(0)
    res.interior_mean = dec.to_lattice(z)
    res.interior_variance = dec.to_lattice(v)
    res.boundary_mean = res.smoothed_means[0]
    res.boundary_variance = np.diag(res.smoothed_covs[0]).copy()


def estimate(model, dec, obs, y, y_boundary=None):
    """Filter then smooth; the lattice fields are filled in."""
    return rts_smoother(model, kalman_filter(model, dec, obs, y, y_boundary), dec)


def direct_mmse(sys, obs, y, y_boundary=None, cov=None):
    """Dense posterior mean and covariance of the interior.

    Interior-only data: ``(S^-1 + H^T R^-1 H) x = H^T R^-1 y`` with
    ``S = Cov(x)``. With boundary data the joint ``[x_b; x]`` is conditioned
    in covariance form, since ``Cov(x_b)`` may be singular.
    ``cov`` may carry a precomputed ``joint_covariance(sys)``.
    """
    spec = sys.spec
    obs.validate(spec.n_rows, spec.n_cols, spec.n_boundary)
    cov_xx, cov_xb = joint_covariance(sys) if cov is None else cov
    nm, nb = spec.n_interior, spec.n_boundary
    mask = np.asarray(obs.mask, dtype=bool).reshape(-1)
    g = np.where(mask, np.asarray(obs.gain, float).reshape(-1), 0.0)
    r = np.asarray(obs.variance, float).reshape(-1)
    yv = np.where(mask, np.asarray(y, float).reshape(-1), 0.0)

    if obs.boundary_mask is None or not np.any(obs.boundary_mask):
        info = np.zeros(nm)
        info[mask] = g[mask] ** 2 / r[mask]
        rhs = np.zeros(nm)
        rhs[mask] = g[mask] * yv[mask] / r[mask]
        prec = linalg.cho_solve(linalg.cho_factor(cov_xx, lower=True), np.eye(nm))
        system = symmetrize(prec) + np.diag(info)
        cf = linalg.cho_factor(system, lower=True)
        return linalg.cho_solve(cf, rhs), symmetrize(linalg.cho_solve(cf, np.eye(nm)))

    joint = np.block([[sys.boundary_cov, cov_xb.T], [cov_xb, cov_xx]])
    bmask = np.asarray(obs.boundary_mask, dtype=bool)
    rows = np.concatenate([np.flatnonzero(bmask), nb + np.flatnonzero(mask)])
    gains = np.concatenate([np.asarray(obs.boundary_gain, float)[bmask], g[mask]])
    var = np.concatenate([np.asarray(obs.boundary_variance, float)[bmask], r[mask]])
    vals = np.concatenate([np.asarray(y_boundary, float)[bmask], yv[mask]])
    H = np.zeros((len(rows), nb + nm))
    H[np.arange(len(rows)), rows] = gains
    S = symmetrize(H @ joint @ H.T + np.diag(var))
    cf = linalg.cho_factor(S, lower=True)
    G = linalg.cho_solve(cf, H @ joint).T
    mean = G @ vals
    post = symmetrize(joint - G @ H @ joint)
    return mean[nb:], post[nb:, nb:]


def denoise_array(model, dec, image, noise_var, gain=1.0):
    """Posterior mean of a fully observed, mean-centered float image.

    Returns ``(estimate, offset)`` where ``estimate`` already has the mean
    ``offset`` added back; nothing is clamped.
    """
    image = np.asarray(image, dtype=float)
    if image.shape != (dec.n_rows, dec.n_cols):
        raise ModelError(
            f"image is {image.shape[0]}x{image.shape[1]}, model expects "
            f"{dec.n_rows}x{dec.n_cols}"
        )
    offset = float(image.mean())
    obs = ObservationModel.uniform(image.shape, gain=gain, variance=noise_var)
    res = estimate(model, dec, obs, image - offset)
    return res.interior_mean + offset, offset


def denoise_image(model, dec, image, noise_var, reference=None):
    """8-bit image in, 8-bit posterior-mean image out, plus a report dict."""
    est, offset = denoise_array(model, dec, image, noise_var)
    out = np.clip(np.rint(est), 0, 255).astype(np.uint8)
    report = {
        "rows": dec.n_rows,
        "cols": dec.n_cols,
        "noise_var": float(noise_var),
        "mean_offset": offset,
    }
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        if ref.shape != out.shape:
            raise ModelError("reference image size does not match the input")
        report["mse_in"] = float(np.mean((np.asarray(image, float) - ref) ** 2))
        report["mse_out"] = float(np.mean((out.astype(float) - ref) ** 2))
    return out, report

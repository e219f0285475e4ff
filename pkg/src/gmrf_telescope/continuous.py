"""Desk-scale checks of continuous-index telescoping results.

Covers: the radial covariance on a unit disc and the jump ``C_lambda`` of its
normal derivative across a telescoping circle, driving-noise moments, the
Whittle covariance, and the Brownian bridge as a one-dimensional telescoping
recursion.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .bessel import QuadratureError, hankel_integral

FD_STEP_MU = 1e-5      # one-sided step for the d/dmu jump
FD_STEP_PRIME = 1e-6   # step for a numeric radial derivative
ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class RadialCovariance:
    """Covariance as a function of Euclidean distance."""

    upsilon: Callable[[float], float]
    upsilon_prime: Optional[Callable[[float], float]] = None
    name: str = "custom"

    def prime(self, t):
        if self.upsilon_prime is not None:
            return self.upsilon_prime(t)
        h = FD_STEP_PRIME
        if t < h:
            return (self.upsilon(t + h) - self.upsilon(t)) / h
        return (self.upsilon(t + h) - self.upsilon(t - h)) / (2 * h)

    def __call__(self, t):
        return self.upsilon(t)


def exponential_covariance(rate=1.0):
    return RadialCovariance(
        lambda t: math.exp(-rate * t),
        lambda t: -rate * math.exp(-rate * t),
        name=f"exp(-{rate:g}t)",
    )


def whittle_covariance(tol=1e-12):
    return RadialCovariance(
        lambda t: whittle_upsilon(t, tol),
        lambda t: whittle_upsilon_prime(t, tol),
        name="whittle",
    )


def polar_distance(mu, lam, theta1, theta2):
    """Distance between ``(mu, theta1)`` and ``(lam, theta2)``; radius is ``1 - mu``."""
    r1, r2 = 1.0 - mu, 1.0 - lam
    d2 = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(theta1 - theta2)
    return math.sqrt(max(d2, 0.0))


def _same_angle(theta1, theta2):
    d = math.remainder(theta1 - theta2, 2.0 * math.pi)
    return abs(d) <= ANGLE_TOL


def c_lambda_isotropic(cov, lam, theta1, theta2, numeric=False, step=FD_STEP_MU):
    """Jump of ``d/dmu R_{mu,lam}(theta1, theta2)`` across ``mu = lam``.

    Closed form: ``-2 cov'(0)`` on the diagonal and 0 off it. With
    ``numeric=True`` the left and right one-sided derivatives are taken
    directly from ``R = cov(distance)``.
    """
    if not numeric:
        return -2.0 * cov.prime(0.0) if _same_angle(theta1, theta2) else 0.0
    R = lambda mu: cov(polar_distance(mu, lam, theta1, theta2))
    r0 = R(lam)
    left = (r0 - R(lam - step)) / step
    right = (R(lam + step) - r0) / step
    return left - right


@dataclass(frozen=True)
class NoiseSpec:
    c_lambda: Callable[[float, float, float], float]
    b_lambda: Callable[[float, float], float]
    K: float = 1.0


def isotropic_noise(cov, K=1.0, numeric=False):
    """Noise spec of a homogeneous isotropic field; ``B = sqrt(C)`` or ``K`` if ``C = 0``."""
    if K == 0:
        raise ValueError("K must be non-zero")

    def c(lam, t1, t2):
        return c_lambda_isotropic(cov, lam, t1, t2, numeric=numeric)

    def b(lam, theta):
        cc = c(lam, theta, theta)
        return math.sqrt(cc) if cc != 0 else K

    return NoiseSpec(c, b, K)


def _quad(f, a, b, tol):
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def w_increment_moments(spec, lambda1, lambda2, theta1, theta2, tol=1e-8):
    """Driving-noise second moments.

    Returns ``(same_level, increment_var)``:
    ``same_level = E[w_{l1}(t1) w_{l1}(t2)] = int_0^l1 C_u / (B_u(t1) B_u(t2)) du``
    and ``increment_var = E[(w_{l1}(t1) - w_{l2}(t2))^2]
    = l1 + l2 - 2 int_0^l2 C_u / (B_u(t1) B_u(t2)) du``.
    """
    if lambda2 > lambda1:
        raise ValueError("need lambda2 <= lambda1")

    def ratio(u):
        return spec.c_lambda(u, theta1, theta2) / (spec.b_lambda(u, theta1) * spec.b_lambda(u, theta2))

    same = _quad(ratio, 0.0, lambda1, tol)
    cross = _quad(ratio, 0.0, lambda2, tol)
    return same, lambda1 + lambda2 - 2.0 * cross


def _check_t(t):
    if not 0.0 <= t <= 4.0:
        raise ValueError(f"Whittle covariance is evaluated on [0, 4], got {t}")


def whittle_upsilon(t, tol=1e-10):
    """``int_0^inf b / (1 + b^2)^2 J0(b t) db``."""
    _check_t(t)
    return hankel_integral(
        lambda b: b / (1.0 + b * b) ** 2, 0, t, tol, tail=lambda B: 0.5 / (1.0 + B * B)
    )


def whittle_upsilon_prime(t, tol=1e-10):
    """``-int_0^inf b^2 / (1 + b^2)^2 J1(b t) db``; exactly 0 at ``t = 0``."""
    _check_t(t)
    return -hankel_integral(lambda b: b * b / (1.0 + b * b) ** 2, 1, t, tol)


def bb_cov(t, s):
    """Brownian bridge covariance ``min(t, s) (1 - max(t, s))``."""
    return min(t, s) * (1.0 - max(t, s))


def bb_predict(r, s):
    """Coefficient of ``x(r)`` in ``E[x(s) | x(u), u <= r]``."""
    if not (0.0 <= r < s < 1.0):
        raise ValueError("need 0 <= r < s < 1")
    return (1.0 - s) / (1.0 - r)


def bb_predict_ratio(r, s):
    """``R(s, r) / R(r, r)``; undefined at ``r = 0``."""
    return bb_cov(s, r) / bb_cov(r, r)


def bb_telescope_paths(n_steps, seed, count):
    """Bridge paths on ``t_i = i / n_steps`` from the conditional recursion.

    ``x(0) = 0``; each step draws ``x(s) = c x(r) + sqrt(R(s,s) - c^2 R(r,r)) xi``
    with ``c = (1-s)/(1-r)``. Returns ``(count, n_steps + 1)``.
    """
    from .sampling import standard_normals

    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    grid = np.arange(n_steps + 1) / n_steps
    xi = standard_normals(seed, count * n_steps).reshape(count, n_steps)
    paths = np.zeros((count, n_steps + 1))
    for i in range(1, n_steps + 1):
        r, s = grid[i - 1], grid[i]
        coeff = (1.0 - s) / (1.0 - r)
        var = max(bb_cov(s, s) - coeff * coeff * bb_cov(r, r), 0.0)
        paths[:, i] = coeff * paths[:, i - 1] + math.sqrt(var) * xi[:, i - 1]
    return paths


def bb_telescope_sample(n_steps, seed):
    return bb_telescope_paths(n_steps, seed, 1)[0]

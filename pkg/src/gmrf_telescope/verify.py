"""The continuous-index verification suite behind ``gmrf-telescope verify``."""

import math
from dataclasses import dataclass

import numpy as np

from . import continuous as cc

LAMBDA_GRID = (0.1, 0.25, 0.4, 0.55, 0.7)
DTHETA_GRID = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)
THETA_BASE = 0.3


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    error: float
    tol: float
    note: str = ""


def _check(name, error, tol, note=""):
    error = float(error)
    return Check(name, bool(error <= tol), error, float(tol), note)


def bb_checks(seed=0, n_paths=100_000):
    out = []
    grid = np.linspace(0.0, 0.98, 50)
    worst = 0.0
    for r in grid:
        s = r + 0.5 * (1.0 - r)
        if r == 0.0:
            continue
        a, b = cc.bb_predict(r, s), cc.bb_predict_ratio(r, s)
        worst = max(worst, abs(a - b) / abs(b))
    out.append(_check("bb_coefficient_vs_ratio", worst, 8 * np.finfo(float).eps,
                      "relative, 49 (r, s) pairs"))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        t, r, s = np.sort(rng.uniform(0.0, 1.0, 3))
        worst = max(worst, abs(cc.bb_cov(s, t) - cc.bb_predict(r, s) * cc.bb_cov(r, t)))
    out.append(_check("bb_covariance_identity", worst, 1e-14, "100 seeded t < r < s"))

    paths = cc.bb_telescope_paths(4, seed, n_paths)
    grid = np.arange(5) / 4
    emp = paths.T @ paths / n_paths  # mean is zero by construction
    worst_z = 0.0
    for i in range(1, 4):
        for j in range(1, 4):
            target = cc.bb_cov(grid[i], grid[j])
            se = (math.sqrt(cc.bb_cov(grid[i], grid[i]) * cc.bb_cov(grid[j], grid[j])) + abs(target)) / math.sqrt(n_paths)
            worst_z = max(worst_z, abs(emp[i, j] - target) / se)
    out.append(_check("bb_telescope_covariance", worst_z, 5.0,
                      f"max standard errors, {n_paths} paths"))
    out.append(_check("bb_start_at_zero", float(np.max(np.abs(paths[:, 0]))), 0.0))
    return out


def c_lambda_checks(include_whittle=True):
    covs = [cc.exponential_covariance(1.0), cc.exponential_covariance(2.0)]
    if include_whittle:
        covs.append(cc.whittle_covariance())
    out = []
    for cov in covs:
        worst = 0.0
        for lam in LAMBDA_GRID:
            for d in DTHETA_GRID:
                a = cc.c_lambda_isotropic(cov, lam, THETA_BASE, THETA_BASE + d)
                n = cc.c_lambda_isotropic(cov, lam, THETA_BASE, THETA_BASE + d, numeric=True)
                worst = max(worst, abs(a - n))
        out.append(_check(f"c_lambda_closed_vs_numeric[{cov.name}]", worst, 1e-4, "5x5 (lambda, dtheta) grid"))

    e = cc.exponential_covariance(1.0)
    diag = cc.c_lambda_isotropic(e, 0.5, 0.0, 0.0, numeric=True)
    out.append(_check("c_lambda_diagonal[exp(-1t)]", abs(diag - 2.0), 1e-4, f"numeric={diag!r}"))
    off = cc.c_lambda_isotropic(e, 0.5, 0.0, math.pi / 2, numeric=True)
    out.append(_check("c_lambda_off_diagonal[exp(-1t)]", abs(off), 1e-4))
    return out


def noise_checks():
    out = []
    for cov in (cc.exponential_covariance(1.0), cc.exponential_covariance(2.0)):
        spec = cc.isotropic_noise(cov)
        worst = 0.0
        for a, b in ((0.2, 0.7), (0.0, 1.0), (0.35, 0.4)):
            _, inc = cc.w_increment_moments(spec, b, a, 0.4, 0.4)
            worst = max(worst, abs(inc - (b - a)))
        out.append(_check(f"increment_variance[{cov.name}]", worst, 1e-7, "equals b - a"))
        same, _ = cc.w_increment_moments(spec, 0.6, 0.6, 0.4, 1.9)
        out.append(_check(f"same_level_cross_cov[{cov.name}]", abs(same), 1e-12))
    return out


def whittle_checks():
    out = [
        _check("whittle_upsilon0", abs(cc.whittle_upsilon(0.0) - 0.5), 1e-7),
        _check("whittle_upsilon_prime0", abs(cc.whittle_upsilon_prime(0.0)), 1e-6),
    ]
    grid = np.linspace(0.0, 1.0, 21)
    vals = np.array([cc.whittle_upsilon(t) for t in grid])
    rise = float(np.max(np.diff(vals)))
    out.append(Check("whittle_monotone_0_1", bool(rise < 0), rise, 0.0, "max successive increase"))
    coarse = np.array([cc.whittle_upsilon(t, 2e-10) for t in grid])
    out.append(_check("whittle_tolerance_stability", float(np.max(np.abs(coarse - vals))), 1e-7))
    spec = cc.isotropic_noise(cc.whittle_covariance())
    out.append(_check("whittle_driving_noise_scale",
                      abs(spec.b_lambda(0.5, 0.0) - spec.K), 0.0, "B = K since C = 0"))
    return out


def run_verification(seed=0):
    checks = []
    checks += bb_checks(seed)
    checks += c_lambda_checks()
    checks += noise_checks()
    checks += whittle_checks()
    return checks


def report_items(checks):
    items = [
        ("fd_step_mu", cc.FD_STEP_MU),
        ("fd_step_upsilon_prime", cc.FD_STEP_PRIME),
        ("lambda_grid", " ".join(format(x, "g") for x in LAMBDA_GRID)),
    ]
    for c in checks:
        status = "pass" if c.passed else "fail"
        line = f"{status} error={c.error!r} tol={c.tol!r}"
        if c.note:
            line += f" ({c.note})"
        items.append((c.name, line))
    items.append(("all_passed", "yes" if all(c.passed for c in checks) else "no"))
    return items

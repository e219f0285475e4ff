"""Model builders shared by the test modules."""

import numpy as np

from gmrf_telescope import telescope
from gmrf_telescope.lattice import (
    OFFSETS,
    LatticeSpec,
    NeighborhoodCoefficients,
    build_precision,
)

ALL8 = {name: 1.0 for name in OFFSETS}
HALF = [(0, 1), (1, 1), (1, 0), (1, -1)]


def homogeneous(n, m, alpha=9.0, beta=1.0, sigma2=1.0, offsets=ALL8):
    spec = LatticeSpec(n, m)
    coeffs = NeighborhoodCoefficients.uniform(spec, alpha, {k: beta * v for k, v in offsets.items()})
    return build_precision(spec, coeffs, sigma2 * np.eye(spec.n_boundary))


def identity_model(n, m, sigma2=1.0):
    return homogeneous(n, m, alpha=1.0, beta=0.0, sigma2=sigma2, offsets={})


def random_beta(rng, n, m, low=0.0, high=1.0):
    """Per-node weights with beta_p(o) == beta_{p+o}(-o) on interior pairs."""
    beta = {}
    for di, dj in HALF:
        fwd = rng.uniform(low, high, (n, m))
        back = rng.uniform(low, high, (n, m))
        for i in range(n):
            for j in range(m):
                si, sj = i - di, j - dj
                if 0 <= si < n and 0 <= sj < m:
                    back[i, j] = fwd[si, sj]
        beta[(di, dj)] = fwd
        beta[(-di, -dj)] = back
    return beta


def random_boundary_cov(rng, nb):
    w = rng.standard_normal((nb, nb))
    return w @ w.T / nb + 0.5 * np.eye(nb)


def random_system(rng, n, m, alpha=9.0):
    """PD by diagonal dominance: off-diagonal mass < 8 < alpha."""
    spec = LatticeSpec(n, m)
    coeffs = NeighborhoodCoefficients(np.full((n, m), alpha), random_beta(rng, n, m))
    return build_precision(spec, coeffs, random_boundary_cov(rng, spec.n_boundary))


def pipeline(system):
    return telescope(system)


def rel_dev(a, b):
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


def write_cli_inputs(root):
    """Model configs, observations, images and a polygon for CLI runs."""
    from gmrf_telescope import io

    root.mkdir(parents=True, exist_ok=True)
    io.write_config(root / "model.toml", 4, 4, 9.0, ALL8, "identity:1")
    io.write_config(root / "identity.toml", 3, 5, 1.0, {}, "identity:1")
    rng = np.random.default_rng(17)
    with open(root / "obs.csv", "w") as fh:
        fh.write("row,col,gain,variance,value\n")
        for i in range(1, 5):
            for j in range(1, 5):
                if rng.uniform() < 0.6:
                    fh.write(f"{i},{j},1,0.25,{float(rng.standard_normal())!r}\n")
    x = np.linspace(40, 200, 4)
    clean = np.rint(np.add.outer(x, x) / 2)
    io.write_pgm(root / "clean.pgm", clean)
    io.write_pgm(root / "noisy.pgm", clean + rng.normal(0, 5, clean.shape))
    io.write_pgm(root / "wrong.pgm", np.zeros((5, 4)))
    io.write_csv(root / "square.csv", [[0, 0], [2, 0], [2, 2], [0, 2]])
    return root

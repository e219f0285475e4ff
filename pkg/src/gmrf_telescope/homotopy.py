"""Telescoping surfaces of planar domains generated by homotopies.

A homotopy ``h(theta, lam)`` maps a boundary parameter ``theta`` in ``[0, 1)``
and ``lam`` in ``[0, 1]`` to a point; ``lam = 0`` traces the boundary and
``lam = 1`` collapses to a point ``c``. Surfaces are sampled polylines.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

EDGE_TOL = 1e-12


@dataclass(frozen=True)
class PlanarDomain:
    """Simple polygon, vertices counterclockwise, closing edge implied."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("a domain needs at least 3 vertices in the plane")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        if signed_area(v) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", v)
        if not is_simple(v):
            raise ValueError("domain polygon self-intersects")

    @classmethod
    def regular(cls, n, radius=1.0, center=(0.0, 0.0)):
        """Regular n-gon inscribed in a circle, first vertex at angle 0."""
        a = 2.0 * np.pi * np.arange(n) / n
        return cls(np.column_stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)]))

    def contains(self, points, tol=EDGE_TOL):
        return contains(self.vertices, points, tol)

    def boundary_point(self, theta):
        """Arc-length parametrization of the boundary, ``theta`` in ``[0, 1)``."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        seg = np.linalg.norm(w - v, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        s = (np.asarray(theta, dtype=float) % 1.0) * cum[-1]
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(v) - 1)
        frac = (s - cum[idx]) / seg[idx]
        return v[idx] + frac[..., None] * (w[idx] - v[idx])

    def distance_to_boundary(self, points):
        return polyline_distance(self.vertices, points, closed=True)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p, q, r, s):
    """Proper or touching intersection test for segments pq and rs (arrays)."""
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0)) & (d1 != 0) & (d2 != 0) & (d3 != 0) & (d4 != 0)


def is_simple(v):
    """No two non-adjacent edges of the closed polyline cross."""
    n = len(v)
    if n < 4:
        return True
    a = v
    b = np.roll(v, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    return not np.any(_segments_cross(a[i], b[i], a[j], b[j]))


def polyline_distance(vertices, points, closed=True):
    """Distance from each point to the nearest segment of the polyline."""
    v = np.asarray(vertices, dtype=float)
    p = np.atleast_2d(np.asarray(points, dtype=float))
    a = v if closed else v[:-1]
    b = np.roll(v, -1, axis=0) if closed else v[1:]
    ab = b - a
    ap = p[:, None, :] - a[None, :, :]
    denom = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    t = np.clip(np.sum(ap * ab[None], axis=2) / denom[None], 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.min(np.linalg.norm(p[:, None, :] - proj, axis=2), axis=1)


def contains(vertices, points, tol=EDGE_TOL):
    """Closed-polygon membership by ray casting; points within ``tol`` of an
    edge count as inside."""
    v = np.asarray(vertices, dtype=float)
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = p[:, 0:1], p[:, 1:2]
    x1, y1 = v[:, 0][None], v[:, 1][None]
    x2, y2 = np.roll(v[:, 0], -1)[None], np.roll(v[:, 1], -1)[None]
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    crossings = np.sum(straddle & (x < xcross), axis=1)
    inside = crossings % 2 == 1
    if tol > 0 and not inside.all():
        out = ~inside
        inside[out] = polyline_distance(v, p[out], closed=True) <= tol
    return inside


@dataclass(frozen=True)
class HomotopySpec:
    """``evaluate(theta, lam)`` returns points for an array of ``theta``."""

    kind: str
    evaluate: Callable = field(repr=False)
    center: np.ndarray = None

    def __call__(self, theta, lam):
        return self.evaluate(np.asarray(theta, dtype=float), float(lam))


def _circle(theta):
    a = 2.0 * np.pi * theta
    return np.stack([np.cos(a), np.sin(a)], axis=-1)


def radial():
    """Concentric circles on the unit disc: ``(1 - lam) (cos a, sin a)``."""
    return HomotopySpec("radial", lambda th, lam: (1.0 - lam) * _circle(th), np.zeros(2))


def affine(center, boundary=None):
    """``(1 - lam) t + lam c`` for boundary points ``t``; ``boundary`` is a
    PlanarDomain or a callable on ``[0, 1)`` (unit circle by default)."""
    c = np.asarray(center, dtype=float)
    if boundary is None:
        curve = _circle
    elif isinstance(boundary, PlanarDomain):
        curve = boundary.boundary_point
    else:
        curve = boundary
    return HomotopySpec("affine", lambda th, lam: (1.0 - lam) * curve(th) + lam * c, c)


def shifted_circles(c1, c2):
    """Circles shrinking toward ``(c1, c2)``: the affine homotopy of the unit circle."""
    return affine((c1, c2))


def ellipse(a, b):
    """``(a(lam) cos, b(lam) sin)``; P1 needs ``a(0) = b(0) = 1`` and
    ``a(1) = b(1) = 0``."""
    return HomotopySpec(
        "ellipse",
        lambda th, lam: _circle(th) * np.array([a(lam), b(lam)]),
        np.zeros(2),
    )


def tabulated(lambdas, polylines):
    """Surfaces given as equal-length closed polylines at increasing ``lambdas``;
    linear interpolation in ``lam`` and along the polyline."""
    lambdas = np.asarray(lambdas, dtype=float)
    curves = np.asarray(polylines, dtype=float)
    n = curves.shape[1]

    def along(curve, th):
        s = (th % 1.0) * n
        i = np.floor(s).astype(int) % n
        f = (s - np.floor(s))[..., None]
        return (1 - f) * curve[i] + f * curve[(i + 1) % n]

    def ev(th, lam):
        k = int(np.clip(np.searchsorted(lambdas, lam, side="right") - 1, 0, len(lambdas) - 2))
        w = (lam - lambdas[k]) / (lambdas[k + 1] - lambdas[k])
        return (1 - w) * along(curves[k], th) + w * along(curves[k + 1], th)

    return HomotopySpec("tabulated", ev, curves[-1].mean(axis=0))


def surface(h, lam, n_samples):
    """``n_samples`` points of the surface at ``lam``, at ``theta = i / n_samples``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if n_samples < 8:
        raise ValueError("need at least 8 samples per surface")
    return h(np.arange(n_samples) / n_samples, lam)


def check_star_center(domain, c, lambda_grid=64, boundary_grid=256):
    """Whether ``(1 - lam) t + lam c`` stays in the closed domain for every
    sampled boundary point ``t`` and ``lam`` on the grid."""
    lams = np.linspace(0.0, 1.0, lambda_grid) if np.isscalar(lambda_grid) else np.asarray(lambda_grid)
    ths = np.arange(boundary_grid) / boundary_grid if np.isscalar(boundary_grid) else np.asarray(boundary_grid)
    t = domain.boundary_point(ths)
    c = np.asarray(c, dtype=float)
    pts = (1.0 - lams)[:, None, None] * t[None] + lams[:, None, None] * c[None, None]
    return bool(np.all(domain.contains(pts.reshape(-1, 2))))


@dataclass
class PropertyReport:
    verdicts: dict
    details: dict
    lambdas: np.ndarray = None
    nesting: np.ndarray = None   # nesting[i, j]: surface j inside surface i

    @property
    def passed(self):
        return all(v in ("pass", "sample-checked: pass") for v in self.verdicts.values())

    def lines(self):
        out = [f"{k}={v}" for k, v in self.verdicts.items()]
        out += [f"{k}={v}" for k, v in self.details.items()]
        return out


def validate_homotopy(h, domain, n_samples=256, n_levels=32, n_coverage=10000,
                      seed=0, hausdorff_tol=1e-6):
    """Sampled checks of P1-P4 for ``h`` on ``domain``.

    P1: the ``lam = 0`` trace is within ``hausdorff_tol`` of the boundary and
    ``lam = 1`` collapses to one point strictly inside the domain.
    P2: only necessary sampled conditions (surfaces inside the domain, sampled
    polylines closed and simple); labelled ``sample-checked``.
    P3: for every pair ``l1 < l2`` on the grid, samples of surface ``l2`` lie in
    the polygon of surface ``l1``; ``nesting`` holds the pair matrix.
    P4: fraction of random domain points within ``2 / sqrt(n_samples)`` of a
    sampled surface point must exceed 0.99.
    """
    lams = np.linspace(0.0, 1.0, n_levels + 1)
    surfs = np.stack([surface(h, lam, n_samples) for lam in lams])
    verdicts, details = {}, {}

    # P1
    trace = surfs[0]
    d_trace = float(np.max(domain.distance_to_boundary(trace)))
    d_verts = float(np.max(polyline_distance(trace, domain.vertices, closed=True)))
    hausdorff = max(d_trace, d_verts)
    collapse = float(np.max(np.linalg.norm(surfs[-1] - surfs[-1][0], axis=1)))
    c = surfs[-1][0]
    c_depth = float(domain.distance_to_boundary(c[None])[0])
    c_inside = bool(domain.contains(c[None], tol=0.0)[0]) and c_depth > 1e-9
    p1 = hausdorff <= hausdorff_tol and collapse <= 1e-12 and c_inside
    verdicts["P1"] = "pass" if p1 else "fail"
    details.update(P1_hausdorff=hausdorff, P1_collapse=collapse, P1_center_inside=c_inside)

    # P2 (necessary conditions only)
    inner = surfs[1:-1]
    in_domain = bool(np.all(domain.contains(inner.reshape(-1, 2), tol=1e-9)))
    simple = all(is_simple(s) for s in inner if np.ptp(s, axis=0).max() > 1e-9)
    steps = np.linalg.norm(np.roll(inner, -1, axis=1) - inner, axis=2)
    closed = bool(np.all(steps.max(axis=1) <= 4.0 * np.maximum(np.median(steps, axis=1), 1e-15)))
    verdicts["P2"] = "sample-checked: pass" if (in_domain and simple and closed) else "sample-checked: fail"
    details.update(P2_inside_domain=in_domain, P2_simple=simple, P2_closed=closed)

    # P3
    k = len(lams)
    nest = np.ones((k, k), dtype=bool)
    for i in range(k - 1):
        poly = surfs[i]
        if np.ptp(poly, axis=0).max() <= 1e-12:
            continue
        if signed_area(poly) < 0:
            poly = poly[::-1]
        for j in range(i + 1, k):
            nest[i, j] = bool(np.all(contains(poly, surfs[j], tol=1e-9)))
    verdicts["P3"] = "pass" if nest[np.triu_indices(k, 1)].all() else "fail"
    details["P3_pairs_failed"] = int((~nest[np.triu_indices(k, 1)]).sum())

    # P4
    eps = 2.0 / np.sqrt(n_samples)
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounding_box()
    pts = np.zeros((0, 2))
    while len(pts) < n_coverage:
        cand = rng.uniform(lo, hi, size=(2 * n_coverage, 2))
        pts = np.concatenate([pts, cand[domain.contains(cand)]])
    pts = pts[:n_coverage]
    dist, _ = cKDTree(surfs.reshape(-1, 2)).query(pts)
    frac = float(np.mean(dist <= eps))
    verdicts["P4"] = "pass" if frac > 0.99 else "fail"
    details.update(P4_epsilon=eps, P4_covered_fraction=frac, P4_points=n_coverage)
    details.update(samples_per_surface=n_samples, levels=k)

    return PropertyReport(verdicts, details, lams, nest)

"""Numerical lattice geometry: short-vector enumeration and Voronoi-cell constants.

These routines are independent of the fast decoders in :mod:`mmewm.lattice`
(they only use the generator matrix), which is what makes them usable as
test oracles.  They are also how constants are obtained for rectangular
sublattices that do not appear in the standard table.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .lattice import Lattice, _as_batch, mod_lattice


def enumerate_ball(generator, center, radius: float) -> np.ndarray:
    """All integer ``z`` with ``||G z - center|| <= radius`` (Fincke-Pohst).

    Breadth-first over coordinates of the QR-triangularised problem, so the
    search is exhaustive by construction.  Returns an ``(K, N)`` float
    array of integer-valued rows.
    """
    g = np.asarray(generator, dtype=float)
    n = g.shape[0]
    q, r = np.linalg.qr(g)
    y = q.T @ np.asarray(center, dtype=float)
    r2 = radius * radius * (1 + 1e-12) + 1e-300
    zs = np.zeros((1, n))
    acc = np.zeros(1)
    for k in range(n - 1, -1, -1):
        rkk = r[k, k]
        t = (y[k] - zs[:, k + 1:] @ r[k, k + 1:]) / rkk
        w = np.sqrt(np.maximum(r2 - acc, 0.0)) / abs(rkk)
        lo = np.ceil(t - w)
        hi = np.floor(t + w)
        counts = np.maximum(hi - lo + 1, 0).astype(np.int64)
        if counts.sum() == 0:
            return np.zeros((0, n))
        rows = np.repeat(np.arange(len(zs)), counts)
        start = np.cumsum(counts) - counts
        zk = lo[rows] + (np.arange(counts.sum()) - start[rows])
        zs = zs[rows].copy()
        zs[:, k] = zk
        acc = acc[rows] + (rkk * (zk - t[rows])) ** 2
        keep = acc <= r2
        zs, acc = zs[keep], acc[keep]
    return zs


def short_vectors(lattice: Lattice, radius: float) -> np.ndarray:
    """Nonzero lattice points with norm at most ``radius``."""
    z = enumerate_ball(lattice.generator, np.zeros(lattice.dim), radius)
    z = z[np.any(z != 0, axis=1)]
    return lattice.point(z)


def cvp_sphere(lattice: Lattice, x) -> np.ndarray:
    """Exact nearest point by enumerating the ball of radius ``r_cov`` around x.

    Slow (Python loop per vector) but exhaustive; used to check the fast
    decoders where a coefficient box would be too large (E8).
    """
    x, flat = _as_batch(lattice, x)
    out = np.empty_like(flat)
    radius = lattice.r_cov * (1 + 1e-9) + 1e-12 * lattice.scale
    for i, v in enumerate(flat):
        z = enumerate_ball(lattice.generator, v, radius)
        if len(z) == 0:
            raise RuntimeError(f"no lattice point within covering radius of {v}; r_cov is wrong")
        pts = lattice.point(z)
        d2 = ((pts - v) ** 2).sum(-1)
        pts = pts[d2 <= d2.min() + 1e-12 * lattice.scale**2]
        out[i] = pts[np.lexsort(pts.T[::-1])[0]]
    return out.reshape(x.shape)


def packing_radius(lattice: Lattice) -> float:
    bound = float(np.linalg.norm(lattice.generator, axis=0).min())
    vecs = short_vectors(lattice, bound)
    return float(np.linalg.norm(vecs, axis=1).min()) / 2


def _voronoi_constraints(lattice: Lattice, reach: float):
    vecs = short_vectors(lattice, reach)
    return vecs, 0.5 * (vecs**2).sum(1)


def _climb(a, b, start, box):
    """Walk Voronoi-cell vertices, each step maximising <u, x> with u the last vertex."""
    n = a.shape[1]
    u = start
    best = None
    for _ in range(100):
        res = linprog(-u, A_ub=a, b_ub=b, bounds=[(-box, box)] * n, method="highs")
        if res.status != 0:
            raise RuntimeError(f"Voronoi LP failed: {res.message}")
        x = res.x
        slack = b - a @ x
        active = slack < 1e-7 * b.max()
        if active.sum() >= n and np.linalg.matrix_rank(a[active]) == n:
            x = np.linalg.lstsq(a[active], b[active], rcond=None)[0]
        if best is not None and x @ x <= best @ best * (1 + 1e-14):
            break
        best = x
        u = x
    return best


def covering_radius(lattice: Lattice, starts: int = 48, seed: int = 0) -> float:
    """Largest vertex norm of the Voronoi cell, found by repeated LP vertex climbs.

    The cell is cut out by all lattice vectors up to a reach that is grown
    until it covers twice the resulting radius (every Voronoi-relevant
    vector is no longer than ``2 r_cov``).
    """
    g = lattice.generator
    min_norm = 2 * packing_radius(lattice)
    reach = max(math.sqrt(2) * min_norm, float(np.linalg.norm(g, axis=0).max())) * (1 + 1e-9)
    box = float(np.linalg.norm(g, axis=0).sum())
    rng = np.random.default_rng(seed)
    while True:
        a, b = _voronoi_constraints(lattice, reach)
        radius = 0.0
        for _ in range(starts):
            v = _climb(a, b, rng.standard_normal(lattice.dim), box)
            radius = max(radius, float(np.linalg.norm(v)))
        if 2 * radius <= reach * (1 + 1e-9):
            return radius
        reach = 2 * radius * (1 + 1e-6)


def voronoi_vertices(lattice: Lattice) -> np.ndarray:
    """Vertices of the fundamental Voronoi cell via qhull (practical for N <= 4)."""
    reach = 2 * covering_radius(lattice) * (1 + 1e-6)
    a, b = _voronoi_constraints(lattice, reach)
    hs = HalfspaceIntersection(np.hstack([a, -b[:, None]]), np.zeros(lattice.dim))
    return hs.intersections


def second_moment_exact(lattice: Lattice) -> float:
    """Normalized second moment by integrating over the triangulated Voronoi cell."""
    n = lattice.dim
    if n == 1:
        return 1.0 / 12.0
    verts = voronoi_vertices(lattice)
    hull = ConvexHull(verts)
    total = 0.0
    volume = 0.0
    fact = math.factorial(n)
    for simplex in hull.simplices:
        v = verts[simplex]
        vol = abs(np.linalg.det(v)) / fact
        s = v.sum(0)
        total += vol / ((n + 1) * (n + 2)) * ((v**2).sum() + s @ s)
        volume += vol
    return total / (n * volume ** (1 + 2 / n))


def second_moment_mc(lattice: Lattice, samples: int = 1_000_000, seed: int = 0) -> float:
    """Monte Carlo normalized second moment, sampling the fundamental parallelepiped."""
    rng = np.random.default_rng(seed)
    t = rng.random((samples, lattice.dim))
    e = mod_lattice(lattice, t @ lattice.generator.T)
    mse = (e**2).sum(1).mean() / lattice.dim
    return float(mse / lattice.volume ** (2 / lattice.dim))


def normalized_second_moment(lattice: Lattice) -> float:
    if lattice.dim <= 4:
        return second_moment_exact(lattice)
    return second_moment_mc(lattice, samples=1 << 20)

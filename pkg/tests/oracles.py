"""Independent oracles used by the test suite.

Everything here is deliberately implemented from first principles
(rejection sampling, ascending series, finite differences, grid search)
so it shares no code path with the package routines it checks.
"""

from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# Monte-Carlo area oracles


def _inside_convex(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    inside = np.ones(points.shape[0], dtype=bool)
    m = vertices.shape[0]
    for i in range(m):
        p, q = vertices[i], vertices[(i + 1) % m]
        d = q - p
        cr = d[0] * (points[:, 1] - p[1]) - d[1] * (points[:, 0] - p[0])
        inside &= cr >= 0.0
    return inside


def mc_polygon_intersection_area(va: np.ndarray, vb: np.ndarray, n: int, rng) -> tuple[float, float]:
    """Rejection-sampling estimate (and its standard error) of area(A intersect B)."""
    lo = np.maximum(va.min(axis=0), vb.min(axis=0))
    hi = np.minimum(va.max(axis=0), vb.max(axis=0))
    if np.any(hi <= lo):
        return 0.0, 0.0
    box = float(np.prod(hi - lo))
    pts = lo[None, :] + rng.random((n, 2)) * (hi - lo)[None, :]
    hit = _inside_convex(pts, va) & _inside_convex(pts, vb)
    p = float(hit.mean())
    return p * box, box * math.sqrt(max(p * (1 - p), 1e-30) / n)


def mc_lens_area(a1: float, a2: float, d: float, n: int, rng) -> tuple[float, float]:
    """Rejection-sampling estimate of the two-disc lens area (centers on the x axis)."""
    c1 = np.array([0.0, 0.0])
    c2 = np.array([d, 0.0])
    lo = np.maximum(c1 - a1, c2 - a2)
    hi = np.minimum(c1 + a1, c2 + a2)
    if np.any(hi <= lo):
        return 0.0, 0.0
    box = float(np.prod(hi - lo))
    pts = lo[None, :] + rng.random((n, 2)) * (hi - lo)[None, :]
    hit = (np.linalg.norm(pts - c1, axis=1) <= a1) & (np.linalg.norm(pts - c2, axis=1) <= a2)
    p = float(hit.mean())
    return p * box, box * math.sqrt(max(p * (1 - p), 1e-30) / n)


def random_convex_polygon(rng, n_points: int = 12, scale: float = 1.0,
                          center=(0.0, 0.0)) -> np.ndarray:
    """CCW convex hull of random points (guaranteed >= 3 vertices)."""
    from scipy.spatial import ConvexHull

    while True:
        pts = np.asarray(center)[None, :] + scale * (rng.random((n_points, 2)) - 0.5)
        hull = ConvexHull(pts)
        if len(hull.vertices) >= 3:
            return pts[hull.vertices]


# ---------------------------------------------------------------------------
# Bessel / Hankel series oracles


def j0_series(x: float, terms: int = 40) -> float:
    """Ascending series of J0."""
    total, term = 1.0, 1.0
    q = x * x / 4.0
    for m in range(1, terms):
        term *= -q / (m * m)
        total += term
    return total


def y0_series(x: float, terms: int = 40) -> float:
    """Ascending series of Y0 (Abramowitz & Stegun 9.1.13)."""
    euler_gamma = 0.5772156649015329
    q = x * x / 4.0
    total = 0.0
    term = 1.0
    harmonic = 0.0
    for m in range(1, terms):
        term *= -q / (m * m)
        harmonic += 1.0 / m
        total -= term * harmonic
    return (2.0 / math.pi) * ((math.log(x / 2.0) + euler_gamma) * j0_series(x, terms) + total)


def hankel2_0_series(x: float, terms: int = 40) -> complex:
    return j0_series(x, terms) - 1j * y0_series(x, terms)


def hankel2_0_asymptotic_abs(x: float) -> float:
    """Leading-order large-argument magnitude of H0(2)."""
    return math.sqrt(2.0 / (math.pi * x))


# ---------------------------------------------------------------------------
# Dyadic kernel finite-difference oracle


def _g3(r: np.ndarray, rp: np.ndarray, k: float) -> complex:
    dist = float(np.linalg.norm(r - rp))
    return np.exp(-1j * k * dist) / (4.0 * math.pi * dist)


def dyadic_fd(r, rp, k: float, step: float) -> np.ndarray:
    """(I + grad grad / k**2) G3 by central finite differences in the observation point."""
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    eye = np.eye(3)
    out = np.zeros((3, 3), dtype=complex)
    g0 = _g3(r, rp, k)
    for a in range(3):
        for b in range(3):
            if a == b:
                second = (_g3(r + step * eye[a], rp, k) - 2.0 * g0
                          + _g3(r - step * eye[a], rp, k)) / step**2
            else:
                second = (_g3(r + step * (eye[a] + eye[b]), rp, k)
                          - _g3(r + step * (eye[a] - eye[b]), rp, k)
                          - _g3(r - step * (eye[a] - eye[b]), rp, k)
                          + _g3(r - step * (eye[a] + eye[b]), rp, k)) / (4.0 * step**2)
            out[a, b] = second / k**2
    return out + eye * g0


# ---------------------------------------------------------------------------
# Water-filling grid oracle (two modes)


def waterfill_grid_capacity_two(nu1: float, nu2: float, gamma: float,
                                n_grid: int = 1_000_000) -> float:
    """Best capacity over a dense grid of power splits between two modes."""
    p1 = np.linspace(0.0, 1.0, n_grid)
    cap = np.log2(1.0 + gamma * nu1 * p1) + np.log2(1.0 + gamma * nu2 * (1.0 - p1))
    return float(cap.max())

"""Generalized radiation modes, the trace identity, and water-filling capacity.

Radiation modes are the generalized eigenpairs of

    F^H Lambda^2 F I_n = nu_n R_x I_n

solved through the factorization R_x = G^H G and an SVD of F G^{-1} (the
far-field matrix F carries the sqrt(Lambda^2) port weights on its rows).
The modal currents are orthonormal over R_x and their received fields are
orthogonal with norms nu_n.  Capacity at SNR gamma follows from
water-filling over the efficiencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelOperator
from .errors import AllZeroEfficienciesError, NotSPDError

__all__ = [
    "RadiationModes",
    "WaterfillResult",
    "radiation_modes",
    "trace_identity",
    "max_effective_area",
    "waterfill",
    "inverse_eigen_curve",
]


@dataclass(frozen=True, eq=False)
class RadiationModes:
    """Efficiencies (descending) and the matching R_x-orthonormal current columns."""

    efficiencies: np.ndarray  # (N,) descending, >= 0
    currents: np.ndarray  # (N_T, N), column n is I_n
    constraint: str  # description of R_x

    @property
    def count(self) -> int:
        return self.efficiencies.shape[0]


@dataclass(frozen=True, eq=False)
class WaterfillResult:
    """Optimal power split over modal efficiencies at one SNR."""

    allocations: np.ndarray  # (N,) >= 0, summing to 1, original mode order
    water_level: float
    capacity_bits: float
    gamma: float

    @property
    def active_count(self) -> int:
        return int(np.sum(self.allocations > 0.0))


def _as_matrix(f) -> np.ndarray:
    if isinstance(f, ChannelOperator):
        return f.dense()
    return np.asarray(f)


def _cholesky_upper(r_x: np.ndarray) -> np.ndarray:
    """Upper-triangular G with R_x = G^H G, or NotSPDError."""
    r_x = np.asarray(r_x)
    if r_x.ndim != 2 or r_x.shape[0] != r_x.shape[1]:
        raise NotSPDError("constraint matrix must be square")
    if not np.allclose(r_x, r_x.conj().T, rtol=1e-10, atol=1e-12):
        raise NotSPDError("constraint matrix must be Hermitian")
    try:
        lower = np.linalg.cholesky(r_x)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("constraint matrix is not positive definite") from exc
    return lower.conj().T


def radiation_modes(f, r_x) -> RadiationModes:
    """Solve F^H Lambda^2 F I = nu R_x I via R_x = G^H G and SVD of F G^{-1}.

    r_x is either a positive scalar rho (meaning rho * I) or an SPD matrix.
    For scalar r_x the efficiencies are exactly the squared singular values
    of F divided by rho.
    """
    fm = _as_matrix(f)
    n_t = fm.shape[1]
    if np.isscalar(r_x):
        rho = float(r_x)
        if rho <= 0:
            raise NotSPDError("scalar constraint must be positive")
        u, svals, vh = np.linalg.svd(fm, full_matrices=False)
        nu = svals**2 / rho
        currents = vh.conj().T / math.sqrt(rho)
        label = f"{rho} * I"
    else:
        r_x = np.asarray(r_x)
        if r_x.shape != (n_t, n_t):
            raise NotSPDError(f"constraint matrix must be {n_t} x {n_t}")
        g = _cholesky_upper(r_x)
        h = scipy.linalg.solve_triangular(g.conj().T, fm.conj().T, lower=True).conj().T
        u, svals, vh = np.linalg.svd(h, full_matrices=False)
        nu = svals**2
        currents = scipy.linalg.solve_triangular(g, vh.conj().T, lower=False)
        label = "user SPD matrix"
    return RadiationModes(nu, currents, label)


def trace_identity(f, lam2, r_x) -> tuple[float, float, float]:
    """Check sum(nu_n) = sum_p Lambda_p^2 F_p R_x^{-1} F_p^H by two routes.

    f holds the *unweighted* far-field rows and lam2 the port weights.
    Returns (lhs, rhs, relative mismatch).  The left side sums the
    generalized eigenvalues; the right side evaluates the per-row quadratic
    forms with a direct solve, no eigendecomposition involved.
    """
    fm = _as_matrix(f)
    lam2 = np.asarray(lam2, dtype=float)
    if lam2.shape[0] != fm.shape[0]:
        raise ValueError("one weight per far-field row required")
    if np.any(lam2 <= 0):
        raise ValueError("port weights must be positive")
    weighted = np.sqrt(lam2)[:, None] * fm
    lhs = float(np.sum(radiation_modes(weighted, r_x).efficiencies))
    if np.isscalar(r_x):
        if float(r_x) <= 0:
            raise NotSPDError("scalar constraint must be positive")
        solved = fm.conj().T / float(r_x)
    else:
        _cholesky_upper(np.asarray(r_x))  # SPD validation
        solved = np.linalg.solve(np.asarray(r_x), fm.conj().T)
    quad = np.real(np.einsum("pn,np->p", fm, solved))  # F_p R^{-1} F_p^H per row
    rhs = float(np.sum(lam2 * quad))
    return lhs, rhs, abs(lhs - rhs) / abs(lhs)


def max_effective_area(f_row, r_x, wavelength: float) -> float:
    """Maximal partial effective area lambda**2 F_p R^{-1} F_p^H of one far-field row.

    F_p is treated as a row vector throughout, matching the per-row terms of
    the trace identity (for a real-symmetric resistance matrix the transposed
    reading gives the same scalar).
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    row = np.asarray(f_row).reshape(-1)
    if np.isscalar(r_x):
        if float(r_x) <= 0:
            raise NotSPDError("scalar constraint must be positive")
        quad = float(np.real(row @ row.conj())) / float(r_x)
    else:
        _cholesky_upper(np.asarray(r_x))
        quad = float(np.real(row @ np.linalg.solve(np.asarray(r_x), row.conj())))
    return wavelength**2 * quad


def waterfill(nu, gamma: float) -> WaterfillResult:
    """Capacity-optimal power allocation max sum log2(1 + gamma nu_n P_n), sum P_n = 1.

    Exact active-set solution: with the m strongest modes active the water
    level is mu = (1 + sum 1/(gamma nu_i)) / m, and m is the largest count
    keeping every active power nonnegative.
    """
    if gamma <= 0:
        raise ValueError("SNR gamma must be positive")
    nu = np.asarray(nu, dtype=float)
    order = np.argsort(-nu, kind="stable")
    nu_sorted = nu[order]
    n_pos = int(np.sum(nu_sorted > 0))
    if n_pos == 0:
        raise AllZeroEfficienciesError("no positive efficiency to allocate power to")
    inv = 1.0 / (gamma * nu_sorted[:n_pos])
    csum = np.cumsum(inv)
    m_values = np.arange(1, n_pos + 1)
    mu_candidates = (1.0 + csum) / m_values
    feasible = mu_candidates >= inv  # water above the m-th floor
    m = int(np.max(m_values[feasible]))
    mu = float((1.0 + csum[m - 1]) / m)
    powers = np.zeros_like(nu_sorted)
    powers[:m] = mu - inv[:m]
    capacity = float(np.sum(np.log2(gamma * nu_sorted[:m] * mu)))
    allocations = np.zeros_like(powers)
    allocations[order] = powers
    return WaterfillResult(allocations, mu, capacity, gamma)


def inverse_eigen_curve(zeta, n_a: float) -> np.ndarray:
    """Reciprocal normalized spectrum (zeta_n N_a)^{-1} (water-level comparison curve)."""
    if n_a <= 0:
        raise ValueError("N_a must be positive")
    z = np.asarray(zeta, dtype=float)
    out = np.full(z.shape, np.inf)
    mask = z > 0
    out[mask] = 1.0 / (z[mask] * n_a)
    return out

"""Channel spectra: dense and randomized SVD, effective and knee NDoF.

The spectrum of a channel is reported as the squared singular values
sigma_n of H (eigenvalues of H H^H), their normalization
zeta_n = sigma_n / sum(sigma), the effective NDoF

    N_e = (sum sigma)**2 / sum(sigma**2),

and the knee NDoF N_k, the count of modes still on the plateau before the
rapid decay.  zeta, N_e and N_k are invariant under rescaling of H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import DENSE_CAP_ENTRIES, ChannelOperator
from .errors import AllZeroSpectrumError, TooLargeForDenseError

__all__ = [
    "SpectrumResult",
    "dense_spectrum",
    "randomized_spectrum",
    "effective_ndof",
    "knee_ndof",
    "spectrum_from_sigma",
]


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Descending squared singular values with their normalized form and NDoF."""

    sigma: np.ndarray
    zeta: np.ndarray
    n_effective: float
    n_knee: int
    method: str
    seed: int | None = None

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        z = np.asarray(self.zeta, dtype=float)
        if np.any(s < 0) or np.any(np.diff(s) > 0):
            raise ValueError("sigma must be nonnegative and descending")
        if abs(z.sum() - 1.0) > 1e-12:
            raise ValueError("zeta must sum to one")
        if abs(float(z @ z) * self.n_effective - 1.0) > 1e-12:
            raise ValueError("sum(zeta**2) must equal 1/N_e")
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "zeta", z)

    @property
    def n_values(self) -> int:
        return self.sigma.shape[0]


def effective_ndof(sigma) -> float:
    """Participation-ratio NDoF (sum sigma)**2 / sum(sigma**2)."""
    s = np.asarray(sigma, dtype=float)
    total = float(s.sum())
    if total <= 0.0:
        raise AllZeroSpectrumError("all spectrum values are zero")
    return total * total / float(s @ s)


def knee_ndof(zeta) -> int:
    """Modes on the plateau: count of zeta_n >= plateau/2.

    The plateau level is the median of the top ceil(0.25 N_e) values, so the
    rule is insensitive to the exact plateau shape and to the decaying tail.
    """
    z = np.sort(np.asarray(zeta, dtype=float))[::-1]
    n_e = effective_ndof(z)  # zeta is a valid (normalized) spectrum
    m = max(1, math.ceil(0.25 * n_e))
    plateau = float(np.median(z[:m]))
    return int(np.sum(z >= 0.5 * plateau))


def spectrum_from_sigma(sigma, method: str, seed: int | None = None) -> SpectrumResult:
    """Package raw squared singular values into a SpectrumResult."""
    s = np.asarray(sigma, dtype=float)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    total = float(s.sum())
    if total <= 0.0:
        raise AllZeroSpectrumError("all spectrum values are zero")
    zeta = s / total
    zeta = zeta / zeta.sum()  # exact renormalization for the 1e-12 identities
    n_e = 1.0 / float(zeta @ zeta)
    return SpectrumResult(s, zeta, n_e, knee_ndof(zeta), method, seed)


def _as_dense(h, cap: int) -> np.ndarray:
    if isinstance(h, ChannelOperator):
        return h.dense(cap)
    m = np.asarray(h)
    if m.size > cap:
        raise TooLargeForDenseError(f"matrix with {m.size} entries exceeds the dense cap")
    return m


def dense_spectrum(h, cap: int = DENSE_CAP_ENTRIES) -> SpectrumResult:
    """Full SVD spectrum of a channel operator or matrix."""
    matrix = _as_dense(h, cap)
    svals = np.linalg.svd(matrix, compute_uv=False)
    return spectrum_from_sigma(svals**2, "dense")


def randomized_spectrum(h, p: int, seed: int, power_iters: int = 1) -> SpectrumResult:
    """Randomized sketch of the dominant squared singular values.

    Draws a complex Gaussian N_T x P test matrix A (counter-based Philox
    stream, so a seed pins the spectrum bit-for-bit), forms Y = H A, an
    orthonormal basis W of Y (optionally refreshed by power iterations
    Y <- H (H^H W)), and reduces to B = W^H H whose singular values
    approximate the top of the spectrum of H.
    """
    n_rows, n_cols = (h.shape if isinstance(h, ChannelOperator) else np.asarray(h).shape)
    if not 0 < p <= min(n_rows, n_cols):
        raise ValueError("sketch size P must be in 1..min(N_R, N_T)")

    def mul(x):
        return h.apply(x) if isinstance(h, ChannelOperator) else h @ x

    def mul_h(y):
        return h.adjoint_apply(y) if isinstance(h, ChannelOperator) else h.conj().T @ y

    rng = np.random.Generator(np.random.Philox(seed))
    a = (rng.standard_normal((n_cols, p)) + 1j * rng.standard_normal((n_cols, p))) / math.sqrt(2)
    y = mul(a)
    w, _ = np.linalg.qr(y)
    for _ in range(power_iters):
        y = mul(mul_h(w))
        w, _ = np.linalg.qr(y)
    b = mul_h(w).conj().T  # W^H H, evaluated through the adjoint
    svals = np.linalg.svd(b, compute_uv=False)
    return spectrum_from_sigma(svals**2, f"randomized(P={p}, power_iters={power_iters})", seed)

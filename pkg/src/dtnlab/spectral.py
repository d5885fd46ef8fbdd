"""Spectral calculus for symmetric pencils ``(S, M)`` with ``M`` positive diagonal.

Everything (semigroup, kernel, resolvent) is evaluated from the full
decomposition ``S Phi = M Phi diag(lam)``, ``Phi^T M Phi = I``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class EigensolveError(RuntimeError):
    pass


class ResolventPole(ValueError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def coefficients(self, phi) -> np.ndarray:
        """Expansion coefficients ``Phi^T M phi``."""
        phi = np.asarray(phi, dtype=float)
        w = self.mass if phi.ndim == 1 else self.mass[:, None]
        return self.vectors.T @ (w * phi)

    def ground_state(self) -> np.ndarray:
        """First eigenvector with its sign fixed so that its sum is positive."""
        v = self.vectors[:, 0]
        return v if v.sum() >= 0 else -v


def eigensolve(S, M) -> SpectralDecomposition:
    """Full decomposition of the symmetric pencil ``(S, diag(M))``.

    The pencil is reduced to the standard symmetric problem
    ``M^{-1/2} S M^{-1/2}``; only the symmetric part of ``S`` is used.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    M = np.asarray(M, dtype=float).ravel()
    if S.shape != (len(M), len(M)):
        raise ValueError(f"shape mismatch: S {S.shape}, M {M.shape}")
    if np.any(M <= 0) or not np.all(np.isfinite(M)):
        raise ValueError("mass must be a strictly positive diagonal")
    d = 1.0 / np.sqrt(M)
    C = S * d[:, None] * d[None, :]
    C = 0.5 * (C + C.T)
    try:
        lam, Q = sla.eigh(C)
    except sla.LinAlgError as exc:
        cond = np.linalg.cond(C)
        raise EigensolveError(
            f"eigensolver did not converge (condition number {cond:.3e})"
        ) from exc
    return SpectralDecomposition(lam, d[:, None] * Q, M.copy())


def semigroup_apply(dec: SpectralDecomposition, t: float, phi) -> np.ndarray:
    """``sum_i exp(-lam_i t) (phi, Phi_i)_M Phi_i``."""
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    phi = np.asarray(phi, dtype=float)
    if t == 0:
        return phi.copy()
    c = dec.vectors.T @ (dec.mass * phi)
    return dec.vectors @ (np.exp(-dec.eigenvalues * t) * c)


@dataclass(frozen=True)
class SemigroupKernel:
    """Kernel matrix ``K_t`` with ``(S_t phi)_x = sum_y K_t[x, y] m_y phi_y``."""

    t: float
    K: np.ndarray
    weights: np.ndarray

    def apply(self, phi) -> np.ndarray:
        return self.K @ (self.weights * phi)

    def operator(self) -> np.ndarray:
        """Matrix of ``S_t`` acting on nodal vectors."""
        return self.K * self.weights[None, :]


def kernel_matrix(dec: SpectralDecomposition, t: float) -> SemigroupKernel:
    if t <= 0:
        raise ValueError("kernel time must be positive")
    P = dec.vectors * np.exp(-0.5 * dec.eigenvalues * t)
    K = P @ P.T
    return SemigroupKernel(float(t), K, dec.mass)


def resolvent_apply(dec: SpectralDecomposition, lam: float, psi) -> np.ndarray:
    """``(lam I + D)^{-1} psi`` with ``D = M^{-1} S``."""
    denom = lam + dec.eigenvalues
    if np.min(np.abs(denom)) < 1e-12:
        raise ResolventPole(f"{lam} is (numerically) minus an eigenvalue")
    c = dec.vectors.T @ (dec.mass * np.asarray(psi, dtype=float))
    return dec.vectors @ (c / denom)


def trace(dec: SpectralDecomposition, t: float) -> float:
    return float(np.exp(-dec.eigenvalues * t).sum())


def weighted_operator_norm(kernel: SemigroupKernel, p) -> float:
    """Norm of ``S_t`` on ``L_p(m)`` for ``p`` in ``{1, 2, inf}``."""
    K, m = kernel.K, kernel.weights
    if p == 1:
        return float(np.max(np.abs(K).T @ m))
    if p in (np.inf, "inf"):
        return float(np.max(np.abs(K) @ m))
    if p == 2:
        s = np.sqrt(m)
        return float(np.linalg.norm(s[:, None] * K * s[None, :], 2))
    raise ValueError(f"unsupported p={p!r}; use 1, 2 or inf")

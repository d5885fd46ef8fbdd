"""Discrete Dirichlet-to-Neumann and Robin operators.

The DtN operator is kept as the symmetric pair ``(S, M_Gamma)`` with ``S``
the Schur complement of the interior block; applying it to boundary data
``phi`` means solving ``M_Gamma psi = S phi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import (
    OperatorBundle,
    SpectralGateViolation,
    dirichlet_eigenvalues,
    p1_gradients,
    spectral_gate,
)
from .spectral import eigensolve


class NearSingularNeumann(RuntimeError):
    """The Neumann matrix ``A`` has an eigenvalue too close to zero."""


@dataclass(frozen=True)
class DtnOperator:
    S: np.ndarray
    boundary_mass: np.ndarray
    bundle: OperatorBundle
    _lu: object

    @property
    def size(self) -> int:
        return len(self.boundary_mass)

    def apply(self, phi) -> np.ndarray:
        """Conormal derivative ``M_Gamma^{-1} S phi``."""
        return (self.S @ phi) / self.boundary_mass

    def interior_solve(self, rhs) -> np.ndarray:
        """Solve with the factorized interior block ``A_II``."""
        if self._lu is None:
            return np.zeros((0,) + np.shape(rhs)[1:])
        return self._lu.solve(np.asarray(rhs, dtype=float))


@dataclass(frozen=True)
class RobinOperator:
    R: sp.csr_matrix
    mass: np.ndarray
    bundle: OperatorBundle

    def dense(self) -> np.ndarray:
        return self.R.toarray()


def build_dtn(bundle: OperatorBundle, gate_tol: float | None = None,
              check_gate: bool = True) -> DtnOperator:
    """Eliminate interior unknowns: ``S = A_BB - A_BI A_II^{-1} A_IB``.

    Raises
    ------
    SpectralGateViolation
        If the interior pencil ``(A_II, M_II)`` has an eigenvalue within
        ``gate_tol`` of zero.
    """
    if check_gate and len(bundle.interior):
        gate = spectral_gate(bundle, gate_tol)
        if not gate.passed:
            raise SpectralGateViolation(gate.distance, gate.tol)
    A_BB = bundle.block("B", "B").toarray()
    if len(bundle.interior) == 0:
        return DtnOperator(A_BB, bundle.boundary_mass, bundle, None)
    A_II = bundle.block("I", "I").tocsc()
    A_IB = bundle.block("I", "B").toarray()
    try:
        lu = splu(A_II)
    except RuntimeError as exc:
        raise SpectralGateViolation(0.0, gate_tol or 0.0) from exc
    X = lu.solve(A_IB)
    S = A_BB - A_IB.T @ X
    if not np.all(np.isfinite(S)):
        raise SpectralGateViolation(0.0, gate_tol or 0.0)
    return DtnOperator(S, bundle.boundary_mass, bundle, lu)


def lift(dtn: DtnOperator, phi) -> np.ndarray:
    """Discrete solution with boundary values ``phi``: ``A_II u_I + A_IB phi = 0``."""
    b = dtn.bundle
    phi = np.asarray(phi, dtype=float)
    u = np.zeros((b.n,) + phi.shape[1:])
    u[b.boundary] = phi
    if len(b.interior):
        u[b.interior] = -dtn.interior_solve(b.block("I", "B") @ phi)
    return u


def nodal_flux(bundle: OperatorBundle, u) -> np.ndarray:
    """Pointwise conormal derivative ``nu . (a grad u)`` at boundary nodes.

    Each boundary edge contributes the flux of the unique triangle that owns
    it; node values are the length-weighted average of the incident edges.
    """
    mesh = bundle.mesh
    grads, _ = p1_gradients(mesh)
    owner = mesh.boundary_triangle()
    grad_u = np.einsum("tk,tkd->td", u[mesh.triangles[owner]], grads[owner])
    flux = np.einsum("ed,edk,ek->e", mesh.outward_normals,
                     bundle.coeffs.a[owner], grad_u)
    half = 0.5 * mesh.edge_lengths
    num = np.zeros(mesh.n_vertices)
    den = np.zeros(mesh.n_vertices)
    for col in (0, 1):
        np.add.at(num, mesh.boundary_edges[:, col], half * flux)
        np.add.at(den, mesh.boundary_edges[:, col], half)
    nodes = bundle.boundary
    return num[nodes] / den[nodes]


@dataclass(frozen=True)
class ConormalComparison:
    psi_schur: np.ndarray
    psi_flux: np.ndarray
    discrepancy: float


def conormal_two_routes(dtn: DtnOperator, bundle: OperatorBundle,
                        phi) -> ConormalComparison:
    """Compare the variational and the pointwise conormal derivative of the
    lifting of ``phi``; the discrepancy is measured in the boundary L2 norm."""
    psi_schur = dtn.apply(phi)
    psi_flux = nodal_flux(bundle, lift(dtn, phi))
    diff = psi_schur - psi_flux
    disc = float(np.sqrt(np.sum(bundle.boundary_mass * diff ** 2)))
    return ConormalComparison(psi_schur, psi_flux, disc)


def build_robin(bundle: OperatorBundle) -> RobinOperator:
    """``R = A + B_beta``; no spectral gate is required."""
    diag = np.zeros(bundle.n)
    diag[bundle.boundary] = bundle.robin
    R = (bundle.A + sp.diags(diag)).tocsr()
    return RobinOperator(R, bundle.mass, bundle)


def neumann_solve(bundle: OperatorBundle, tau, gate_tol: float | None = None):
    """Solve ``A u = (0, M_Gamma tau)`` (conormal data ``tau``).

    Raises
    ------
    NearSingularNeumann
        If the pencil ``(A, M_Omega)`` has an eigenvalue within ``gate_tol``
        of zero, e.g. the constants for the pure Neumann Laplacian.
    """
    if gate_tol is None:
        gate_tol = bundle.default_gate_tol()
    lam = eigensolve(bundle.A.toarray(), bundle.mass).eigenvalues
    dist = float(np.abs(lam).min())
    if dist < gate_tol:
        raise NearSingularNeumann(
            f"Neumann matrix has eigenvalue {dist:.3e} below {gate_tol:.3e}"
        )
    rhs = np.zeros(bundle.n)
    rhs[bundle.boundary] = bundle.boundary_mass * np.asarray(tau, dtype=float)
    return splu(bundle.A.tocsc()).solve(rhs)


def first_dirichlet_eigenvalue(bundle: OperatorBundle) -> float:
    return float(dirichlet_eigenvalues(bundle)[0])

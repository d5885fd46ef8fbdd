"""P1 assembly of the elliptic forms with lumped mass matrices.

All coefficients are piecewise constant: the diffusion matrix ``a`` and the
potential ``V`` per triangle, the Robin weight ``beta`` per boundary edge.
Stiffness integrals are exact for P1; the domain mass, the potential term,
the boundary mass and the Robin term are lumped to the diagonal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .mesh import Mesh


class EllipticityError(ValueError):
    """A diffusion matrix is not positive definite (or not symmetric)."""


class SpectralGateViolation(RuntimeError):
    """Zero lies (numerically) in the spectrum of the Dirichlet operator."""

    def __init__(self, distance, tol):
        self.distance = float(distance)
        self.tol = float(tol)
        super().__init__(
            f"Dirichlet operator has eigenvalue {self.distance:.3e} within "
            f"gate tolerance {self.tol:.3e} of zero"
        )


@dataclass(frozen=True)
class CoefficientField:
    """Piecewise-constant coefficients on a mesh.

    ``a`` has shape ``(nt, 2, 2)``, ``V`` shape ``(nt,)`` and ``beta`` shape
    ``(nb,)`` aligned with ``mesh.boundary_edges``.
    """

    a: np.ndarray
    V: np.ndarray
    beta: np.ndarray

    @property
    def mu(self) -> float:
        """Smallest eigenvalue of ``a`` over all triangles."""
        if len(self.a) == 0:
            return np.inf
        return float(np.linalg.eigvalsh(self.a).min())

    def scaled(self, c: float) -> "CoefficientField":
        return CoefficientField(c * self.a, c * self.V, c * self.beta)

    def with_potential(self, V) -> "CoefficientField":
        return CoefficientField(self.a, np.broadcast_to(V, self.V.shape).copy(),
                                self.beta)

    def with_beta(self, beta) -> "CoefficientField":
        return CoefficientField(self.a, self.V,
                                np.broadcast_to(beta, self.beta.shape).copy())


def anisotropic_tensor(ratio=4.0, angle=0.0):
    """Rotated diagonal tensor ``R diag(1, ratio) R^T``."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    T = R @ np.diag([1.0, ratio]) @ R.T
    return 0.5 * (T + T.T)


def coefficients(mesh: Mesh, a=None, V=0.0, beta=0.0) -> CoefficientField:
    """Broadcast coefficient data onto a mesh.

    ``a`` may be ``None`` (identity), a single 2x2 matrix, or an array of
    per-triangle matrices.  ``V`` and ``beta`` may be scalars or arrays.
    """
    nt, nb = mesh.n_triangles, len(mesh.boundary_edges)
    if a is None:
        a = np.eye(2)
    a = np.asarray(a, dtype=float)
    if a.shape == (2, 2):
        a = np.broadcast_to(a, (nt, 2, 2))
    a = np.array(a, dtype=float)
    V = np.array(np.broadcast_to(np.asarray(V, dtype=float), (nt,)))
    beta = np.array(np.broadcast_to(np.asarray(beta, dtype=float), (nb,)))
    return CoefficientField(a, V, beta)


def load_coefficients(mesh: Mesh, source) -> CoefficientField:
    """Coefficient field from a JSON file path or an already-parsed dict.

    Accepted layout::

        {"a": [[a11, a12, a22], ...] | {"preset": "identity"|"anisotropic", ...},
         "V": [...] | number, "beta": [...] | number}
    """
    if not isinstance(source, dict):
        source = json.loads(Path(source).read_text())
    a = source.get("a", {"preset": "identity"})
    if isinstance(a, dict):
        preset = a.get("preset", "identity")
        if preset == "identity":
            a = np.eye(2)
        elif preset == "anisotropic":
            a = anisotropic_tensor(a.get("ratio", 4.0), a.get("angle", 0.0))
        else:
            raise ValueError(f"unknown coefficient preset {preset!r}")
    else:
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[1] != 3 or len(a) != mesh.n_triangles:
            raise ValueError("'a' must list [a11, a12, a22] for every triangle")
        a = np.stack([a[:, [0, 1]], a[:, [1, 2]]], axis=1)
    V = source.get("V", 0.0)
    beta = source.get("beta", 0.0)
    if np.ndim(V) and len(V) != mesh.n_triangles:
        raise ValueError("'V' must have one value per triangle")
    if np.ndim(beta) and len(beta) != len(mesh.boundary_edges):
        raise ValueError("'beta' must have one value per boundary edge")
    return coefficients(mesh, a, V, beta)


def check_coefficients(mesh: Mesh, coeffs: CoefficientField) -> None:
    nt, nb = mesh.n_triangles, len(mesh.boundary_edges)
    if coeffs.a.shape != (nt, 2, 2):
        raise ValueError(f"a has shape {coeffs.a.shape}, expected {(nt, 2, 2)}")
    if coeffs.V.shape != (nt,) or coeffs.beta.shape != (nb,):
        raise ValueError("V must be per triangle and beta per boundary edge")
    asym = np.flatnonzero(coeffs.a[:, 0, 1] != coeffs.a[:, 1, 0])
    if len(asym):
        raise EllipticityError(f"triangle {int(asym[0])}: a is not symmetric")
    bad = np.flatnonzero(np.linalg.eigvalsh(coeffs.a)[:, 0] <= 0)
    if len(bad):
        raise EllipticityError(
            f"triangle {int(bad[0])}: a is not positive definite"
        )
    for name, arr in (("V", coeffs.V), ("beta", coeffs.beta)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} has non-finite entries")


def p1_gradients(mesh: Mesh):
    """Constant gradients of the three hat functions on every triangle.

    Returns ``grads`` of shape ``(nt, 3, 2)`` and the triangle areas.
    """
    p = mesh.vertices[mesh.triangles]
    area = mesh.areas
    # gradient of the hat at vertex i is rot(p_{i+2} - p_{i+1}) / (2 |T|)
    e = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2 * area[:, None, None])
    return grads, area


def local_stiffness(mesh: Mesh, a) -> np.ndarray:
    """Element matrices ``|T| * G a G^T`` of shape ``(nt, 3, 3)``."""
    grads, area = p1_gradients(mesh)
    return area[:, None, None] * np.einsum("tik,tkl,tjl->tij", grads, a, grads)


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    n = mesh.n_vertices
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def lumped_mass(mesh: Mesh, weight=None) -> np.ndarray:
    """Diagonal of the lumped mass matrix for ``int weight u v``."""
    w = mesh.areas / 3.0
    if weight is not None:
        w = w * weight
    out = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(out, mesh.triangles[:, k], w)
    return out


def lumped_boundary(mesh: Mesh, weight=None) -> np.ndarray:
    """Diagonal (over all nodes) of the lumped form ``int_Gamma weight u v``."""
    w = 0.5 * mesh.edge_lengths
    if weight is not None:
        w = w * weight
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, mesh.boundary_edges[:, 0], w)
    np.add.at(out, mesh.boundary_edges[:, 1], w)
    return out


@dataclass(frozen=True)
class OperatorBundle:
    """Assembled matrices of one (mesh, coefficients) pair.

    Attributes
    ----------
    A : sparse matrix
        Stiffness plus lumped potential: the form with potential on all nodes.
    K : sparse matrix
        Stiffness alone.
    mass : ndarray
        Diagonal of the lumped domain mass.
    boundary_mass : ndarray
        Diagonal of the lumped boundary mass, restricted to boundary nodes.
    robin : ndarray
        Diagonal of the lumped Robin term, restricted to boundary nodes.
    interior, boundary : ndarray
        Node index partition.
    """

    mesh: Mesh
    coeffs: CoefficientField
    A: sp.csr_matrix
    K: sp.csr_matrix
    mass: np.ndarray
    boundary_mass: np.ndarray
    robin: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    @property
    def A_max(self) -> float:
        return float(abs(self.A).max())

    def default_gate_tol(self) -> float:
        return 1e-8 * self.A_max

    def block(self, rows: str, cols: str) -> sp.csr_matrix:
        idx = {"I": self.interior, "B": self.boundary}
        return self.A[idx[rows]][:, idx[cols]]

    @property
    def potential_nonnegative(self) -> bool:
        return bool(np.all(self.coeffs.V >= 0))

    @property
    def beta_nonnegative(self) -> bool:
        return bool(np.all(self.coeffs.beta >= 0))


def assemble(mesh: Mesh, coeffs: CoefficientField) -> OperatorBundle:
    """Assemble stiffness, potential, mass and boundary matrices."""
    check_coefficients(mesh, coeffs)
    K = _scatter(mesh, local_stiffness(mesh, coeffs.a))
    K = ((K + K.T) * 0.5).tocsr()
    potential = lumped_mass(mesh, coeffs.V)
    A = (K + sp.diags(potential)).tocsr()
    boundary = mesh.boundary_nodes
    interior = mesh.interior_nodes
    mass = lumped_mass(mesh)
    bmass = lumped_boundary(mesh)[boundary]
    robin = lumped_boundary(mesh, coeffs.beta)[boundary]
    arrays = [mass, bmass, robin, interior, boundary]
    for arr in arrays:
        arr.setflags(write=False)
    return OperatorBundle(mesh, coeffs, A, K, *arrays)


def dirichlet_block(bundle: OperatorBundle) -> np.ndarray:
    """Dense interior block of ``A`` (discrete Dirichlet operator with potential)."""
    I = bundle.interior
    return bundle.A[I][:, I].toarray()


def dirichlet_eigenvalues(bundle: OperatorBundle) -> np.ndarray:
    """Ascending eigenvalues of the interior pencil ``(A_II, M_II)``."""
    I = bundle.interior
    if len(I) == 0:
        return np.zeros(0)
    d = 1.0 / np.sqrt(bundle.mass[I])
    C = dirichlet_block(bundle) * d[:, None] * d[None, :]
    return sla.eigvalsh(0.5 * (C + C.T))


@dataclass(frozen=True)
class GateResult:
    passed: bool
    distance: float
    tol: float
    lambda_min: float

    @property
    def positive_definite(self) -> bool:
        return self.passed and self.lambda_min > 0


def spectral_gate(bundle: OperatorBundle, tol: float | None = None) -> GateResult:
    """Distance of the Dirichlet spectrum from zero, compared with ``tol``.

    ``tol`` defaults to ``1e-8 * max|A_ij|``.
    """
    if tol is None:
        tol = bundle.default_gate_tol()
    lam = dirichlet_eigenvalues(bundle)
    if len(lam) == 0:
        raise ValueError("mesh has no interior nodes; the Dirichlet block is empty")
    dist = float(np.abs(lam).min())
    return GateResult(dist >= tol, dist, float(tol), float(lam[0]))

"""Scenario descriptors: which mesh, which coefficients, which operator."""
from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import (
    CoefficientField,
    OperatorBundle,
    anisotropic_tensor,
    assemble,
    coefficients,
    dirichlet_eigenvalues,
    load_coefficients,
)
from .mesh import Mesh, load_mesh, preset_domain, refine_n, two_squares

_LAMBDA_D = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*"
                       r"lambda1D\s*$")


def parse_potential(value):
    """Interpret a potential spec.

    Returns ``(kind, number)`` where ``kind`` is ``"const"`` for a plain
    number or ``"dirichlet"`` for a multiple of the first Dirichlet
    eigenvalue, written e.g. ``"-0.5*lambda1D"``.
    """
    if isinstance(value, (int, float, np.floating)):
        return "const", float(value)
    text = str(value).strip()
    try:
        return "const", float(text)
    except ValueError:
        pass
    m = _LAMBDA_D.match(text)
    if not m:
        raise ValueError(f"cannot parse potential {value!r}; use a number or "
                         "'<c>*lambda1D'")
    c = m.group(1)
    return "dirichlet", 1.0 if c in (None, "", "+") else (-1.0 if c == "-" else float(c))


@dataclass
class Scenario:
    """Everything needed to build an operator pair.

    ``V`` is a number or ``"<c>*lambda1D"`` (a multiple of the first
    Dirichlet eigenvalue with ``V = 0``).  ``a`` is ``"identity"``,
    ``"anisotropic"`` or a 2x2 matrix.  ``operator`` selects the boundary
    (``"dtn"``) or the domain (``"robin"``) semigroup.
    """

    domain: str = "square"
    resolution: int = 2
    refine: int = 1
    mesh_path: str | None = None
    a: object = "identity"
    V: object = 0.0
    beta: float = 0.0
    coeff_path: str | None = None
    operator: str = "dtn"
    times: tuple = (0.1, 0.5, 1.0)
    ps: tuple = (1, 2, np.inf)
    seed: int = 0
    gate_tol: float | None = None
    inject_asymmetry: float = 0.0
    extra: dict = field(default_factory=dict)

    def describe(self) -> dict:
        d = asdict(self)
        d["ps"] = ["inf" if p == np.inf else p for p in self.ps]
        d["times"] = list(self.times)
        d["a"] = self.a if isinstance(self.a, str) else np.asarray(self.a).tolist()
        d["V"] = self.V if isinstance(self.V, str) else float(self.V)
        return d


def build_mesh(scenario: Scenario) -> Mesh:
    if scenario.mesh_path:
        mesh = load_mesh(scenario.mesh_path)
    elif scenario.domain == "two_squares":
        mesh = two_squares(scenario.resolution)
    else:
        mesh = preset_domain(scenario.domain, scenario.resolution)
    if scenario.refine < 0:
        raise ValueError("refinement level must be >= 0")
    return refine_n(mesh, scenario.refine)


def _diffusion(a):
    if a is None or (isinstance(a, str) and a == "identity"):
        return np.eye(2)
    if isinstance(a, str) and a == "anisotropic":
        return anisotropic_tensor()
    return np.asarray(a, dtype=float)


def first_dirichlet(mesh: Mesh, a=None) -> float:
    """First eigenvalue of the interior pencil with zero potential."""
    bundle = assemble(mesh, coefficients(mesh, _diffusion(a)))
    return float(dirichlet_eigenvalues(bundle)[0])


def build_coefficients(scenario: Scenario, mesh: Mesh) -> CoefficientField:
    if scenario.coeff_path:
        return load_coefficients(mesh, scenario.coeff_path)
    kind, c = parse_potential(scenario.V)
    V = c if kind == "const" else c * first_dirichlet(mesh, scenario.a)
    return coefficients(mesh, _diffusion(scenario.a), V, scenario.beta)


def build_bundle(scenario: Scenario) -> OperatorBundle:
    mesh = build_mesh(scenario)
    return assemble(mesh, build_coefficients(scenario, mesh))

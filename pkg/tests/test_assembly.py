import numpy as np
import pytest

from dtnlab.assembly import (
    EllipticityError,
    anisotropic_tensor,
    assemble,
    coefficients,
    dirichlet_block,
    dirichlet_eigenvalues,
    load_coefficients,
    local_stiffness,
    spectral_gate,
)
from dtnlab.mesh import from_arrays, preset_domain, refine, refine_n


@pytest.fixture
def reference_triangle():
    return from_arrays([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


def test_reference_local_stiffness(reference_triangle):
    # hand integration: grads (-1,-1), (1,0), (0,1) on an area-1/2 triangle
    expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]], dtype=float)
    k = local_stiffness(reference_triangle, np.eye(2)[None])[0]
    np.testing.assert_allclose(k, expected, atol=1e-15)
    b = assemble(reference_triangle, coefficients(reference_triangle))
    np.testing.assert_allclose(b.K.toarray(), expected, atol=1e-15)


def test_local_stiffness_by_quadrature():
    # oracle: finite-difference gradients of the hat functions, integrated
    # as constants over the triangle
    rng = np.random.default_rng(3)
    p = np.array([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]])
    mesh = from_arrays(p, [[0, 1, 2]])
    a = anisotropic_tensor(3.0, 0.7)
    area = mesh.areas[0]
    grads = []
    for i in range(3):
        # barycentric coordinate i as a linear function: solve for its gradient
        rhs = np.eye(3)[i]
        coef = np.linalg.solve(np.column_stack([p, np.ones(3)]), rhs)
        x0 = p.mean(0) + rng.normal(scale=0.01, size=2)
        h = 1e-6
        f = lambda x: coef[:2] @ x + coef[2]
        grads.append([(f(x0 + [h, 0]) - f(x0 - [h, 0])) / (2 * h),
                      (f(x0 + [0, h]) - f(x0 - [0, h])) / (2 * h)])
    G = np.array(grads)
    expected = area * G @ a @ G.T
    k = local_stiffness(mesh, a[None])[0]
    np.testing.assert_allclose(k, expected, rtol=1e-8, atol=1e-9)


@pytest.mark.parametrize("name", ["square", "disk", "annulus", "lshape"])
def test_bundle_invariants(name):
    m = refine(preset_domain(name, 2))
    rng = np.random.default_rng(0)
    coeffs = coefficients(m, anisotropic_tensor(2.0, 0.3),
                          rng.normal(size=m.n_triangles),
                          rng.normal(size=len(m.boundary_edges)))
    b = assemble(m, coeffs)
    A = b.A.toarray()
    K = b.K.toarray()
    assert np.abs(A - A.T).max() <= 1e-14 * np.abs(A).max()
    assert np.abs(K - K.T).max() == 0.0
    assert np.abs(K.sum(axis=1)).max() <= 1e-14 * np.abs(K).max()
    assert np.all(b.mass > 0) and np.all(b.boundary_mass > 0)
    assert b.mass.sum() == pytest.approx(m.areas.sum(), rel=1e-13)
    assert b.boundary_mass.sum() == pytest.approx(m.boundary_length(), rel=1e-13)
    # lumped beta term integrates beta over the boundary exactly
    assert b.robin.sum() == pytest.approx(
        np.sum(coeffs.beta * m.edge_lengths), rel=1e-12, abs=1e-12)
    assert len(b.interior) + len(b.boundary) == m.n_vertices


def test_zero_potential_gives_stiffness():
    m = refine(preset_domain("square", 2))
    b = assemble(m, coefficients(m))
    assert (b.A != b.K).nnz == 0
    assert np.all(b.robin == 0)


def test_scaling_a_scales_K():
    m = refine(preset_domain("lshape", 1))
    K1 = assemble(m, coefficients(m)).K.toarray()
    K2 = assemble(m, coefficients(m, 2 * np.eye(2))).K.toarray()
    np.testing.assert_allclose(K2, 2 * K1, rtol=0, atol=1e-14)


def test_additive_in_potential_and_beta():
    m = refine(preset_domain("disk", 2))
    rng = np.random.default_rng(1)
    V1, V2 = rng.normal(size=(2, m.n_triangles))
    b1, b2 = rng.normal(size=(2, len(m.boundary_edges)))
    base = assemble(m, coefficients(m))
    x1 = assemble(m, coefficients(m, V=V1, beta=b1))
    x2 = assemble(m, coefficients(m, V=V2, beta=b2))
    x12 = assemble(m, coefficients(m, V=V1 + V2, beta=b1 + b2))
    np.testing.assert_allclose((x12.A - base.K).toarray(),
                               (x1.A - base.K + x2.A - base.K).toarray(), atol=1e-14)
    np.testing.assert_allclose(x12.robin, x1.robin + x2.robin, atol=1e-14)


def test_constant_beta_is_multiple_of_boundary_mass():
    m = refine(preset_domain("annulus", 2))
    b = assemble(m, coefficients(m, beta=-0.7))
    np.testing.assert_allclose(b.robin, -0.7 * b.boundary_mass, rtol=1e-14)


def test_ellipticity_inheritance():
    m = refine(preset_domain("square", 3))
    a = anisotropic_tensor(5.0, 0.4)
    coeffs = coefficients(m, a)
    mu = coeffs.mu
    assert mu == pytest.approx(1.0)
    K = assemble(m, coeffs).K.toarray()
    Kref = assemble(m, coefficients(m)).K.toarray()
    rng = np.random.default_rng(7)
    I = m.interior_nodes
    for _ in range(20):
        u = np.zeros(m.n_vertices)
        u[I] = rng.normal(size=len(I))
        assert u @ K @ u >= mu * (u @ Kref @ u) * (1 - 1e-12)


@pytest.mark.parametrize("bad", [np.array([[1.0, 0.0], [0.0, -1.0]]),
                                 np.array([[1.0, 2.0], [2.0, 1.0]]),
                                 np.zeros((2, 2))])
def test_ellipticity_violation(bad):
    m = preset_domain("square", 2)
    a = np.broadcast_to(np.eye(2), (m.n_triangles, 2, 2)).copy()
    a[5] = bad
    with pytest.raises(EllipticityError, match="triangle 5"):
        assemble(m, coefficients(m, a))


def test_asymmetric_a_rejected():
    m = preset_domain("square", 1)
    a = np.broadcast_to(np.eye(2), (2, 2, 2)).copy()
    a[1, 0, 1] = 0.3
    with pytest.raises(EllipticityError, match="triangle 1"):
        assemble(m, coefficients(m, a))


def test_dirichlet_block_empty():
    m = preset_domain("square", 1)
    assert dirichlet_block(assemble(m, coefficients(m))).shape == (0, 0)


def test_first_dirichlet_eigenvalue_square():
    # right-triangle grid + lumped mass = 5-point stencil; its first
    # eigenvalue is 8/h^2 sin^2(pi h / 2)
    m = refine_n(preset_domain("square", 2), 2)
    h = 1 / 8
    lam = dirichlet_eigenvalues(assemble(m, coefficients(m)))
    assert lam[0] == pytest.approx(8 / h ** 2 * np.sin(np.pi * h / 2) ** 2, rel=1e-12)
    assert lam[0] == pytest.approx(2 * np.pi ** 2, rel=0.05)


def test_constant_potential_shift():
    m = refine(preset_domain("disk", 2))
    lam0 = dirichlet_eigenvalues(assemble(m, coefficients(m)))
    lam1 = dirichlet_eigenvalues(assemble(m, coefficients(m, V=3.25)))
    np.testing.assert_allclose(lam1, lam0 + 3.25, rtol=1e-12, atol=1e-11)


def test_spectral_gate():
    m = refine(preset_domain("square", 4))
    base = assemble(m, coefficients(m))
    g = spectral_gate(base)
    assert g.passed and g.positive_definite
    lam1 = g.lambda_min

    singular = assemble(m, coefficients(m, V=-lam1))
    g = spectral_gate(singular)
    assert not g.passed
    assert g.distance <= g.tol

    half = assemble(m, coefficients(m, V=-0.5 * lam1))
    g = spectral_gate(half)
    assert g.passed and g.positive_definite
    assert g.lambda_min == pytest.approx(0.5 * lam1, rel=1e-10)
    assert np.all(np.linalg.eigvalsh(dirichlet_block(half)) > 0)


def test_gate_needs_interior():
    m = preset_domain("square", 1)
    with pytest.raises(ValueError, match="interior"):
        spectral_gate(assemble(m, coefficients(m)))


def test_load_coefficients_variants(tmp_path):
    m = refine(preset_domain("square", 1))
    c = load_coefficients(m, {"a": {"preset": "anisotropic", "ratio": 3.0,
                                    "angle": 0.0},
                              "V": 2.0, "beta": [0.5] * len(m.boundary_edges)})
    np.testing.assert_allclose(c.a[0], np.diag([1.0, 3.0]))
    assert np.all(c.V == 2.0) and np.all(c.beta == 0.5)

    per = [[2.0, 0.1, 1.0]] * m.n_triangles
    path = tmp_path / "c.json"
    import json
    path.write_text(json.dumps({"a": per, "V": list(range(m.n_triangles))}))
    c = load_coefficients(m, path)
    np.testing.assert_allclose(c.a[3], [[2.0, 0.1], [0.1, 1.0]])
    assert c.V[4] == 4.0

    with pytest.raises(ValueError):
        load_coefficients(m, {"a": {"preset": "bogus"}})
    with pytest.raises(ValueError):
        load_coefficients(m, {"V": [1.0, 2.0]})

"""
Finite element assembly and the spectral gate
=============================================

P1 stiffness with piecewise-constant diffusion, lumped potential and lumped
masses.  The Dirichlet operator is compared with the closed form of the
5-point stencil.  The spectral gate then decides whether a potential is
admissible.
"""
# %%
import numpy as np

from dtnlab.assembly import (
    anisotropic_tensor,
    assemble,
    coefficients,
    dirichlet_eigenvalues,
    spectral_gate,
)
from dtnlab.mesh import preset_domain, refine_n

# %% [markdown]
# On the right-triangle grid with lumped mass, the P1 Dirichlet operator is
# the 5-point Laplacian.  Its first eigenvalue is 8/h^2 sin^2(pi h/2), and it
# tends to 2 pi^2 as h goes to zero.

# %%
for level in range(4):
    m = refine_n(preset_domain("square", 2), level)
    h = 1 / (2 * 2 ** level)
    lam = dirichlet_eigenvalues(assemble(m, coefficients(m)))[0]
    exact = 8 / h ** 2 * np.sin(np.pi * h / 2) ** 2
    print(f"h={h:.4f}  lambda1={lam:.6f}  closed form={exact:.6f}  "
          f"vs 2pi^2: {lam / (2 * np.pi ** 2) - 1:+.3%}")

# %% [markdown]
# An anisotropic diffusion matrix changes the stiffness but keeps its
# structure: symmetric, with constants in the kernel.

# %%
m = refine_n(preset_domain("lshape", 2), 1)
b = assemble(m, coefficients(m, anisotropic_tensor(4.0, 0.3), V=0.5))
K = b.K.toarray()
print("symmetric:", np.allclose(K, K.T), " row sums ~ 0:", np.abs(K.sum(1)).max())
print("domain area from lumped mass:", b.mass.sum())

# %% [markdown]
# Negative potentials are allowed as long as zero is not a Dirichlet
# eigenvalue.  The gate reports how far the spectrum is from zero.

# %%
m = refine_n(preset_domain("square", 4), 1)
lamD = dirichlet_eigenvalues(assemble(m, coefficients(m)))
for c in (0.0, -0.5, -1.0, -1.5):
    g = spectral_gate(assemble(m, coefficients(m, V=c * lamD[0])))
    print(f"V = {c:+.1f} lambda1^D: passed={g.passed} distance={g.distance:.3e} "
          f"positive definite={g.positive_definite}")

"""
The discrete Dirichlet-to-Neumann operator
==========================================

Eliminating the interior unknowns gives the Schur complement S.  The pencil
(S, M_Gamma) is the discrete DtN map.  For the Laplacian on the unit disk its
eigenvalues are 0, 1, 1, 2, 2, 3, 3, ...
"""
# %%
import numpy as np

from dtnlab.assembly import assemble, coefficients
from dtnlab.dtn import build_dtn, build_robin, conormal_two_routes, lift, neumann_solve
from dtnlab.mesh import preset_domain, refine_n
from dtnlab.spectral import eigensolve

exact = np.array([0, 1, 1, 2, 2, 3, 3])
for level in range(4):
    m = refine_n(preset_domain("disk", 2), level)
    d = build_dtn(assemble(m, coefficients(m)))
    lam = eigensolve(d.S, d.boundary_mass).eigenvalues[:7]
    print(f"level {level}: {np.round(lam, 4)}  max error {np.abs(lam - exact).max():.4f}")

# %% [markdown]
# The harmonic lift extends boundary data into the domain.  Constants and
# linear functions are reproduced exactly.

# %%
m = refine_n(preset_domain("square", 3), 1)
b = assemble(m, coefficients(m))
d = build_dtn(b)
x = m.vertices
u = lift(d, x[b.boundary, 0] + 2 * x[b.boundary, 1])
print("lift of x + 2y, max error:", np.abs(u - x[:, 0] - 2 * x[:, 1]).max())

# %% [markdown]
# The conormal derivative can be computed two ways.  One is the Schur
# complement (variational).  The other averages the edge fluxes of the
# lifted solution (pointwise).  With a potential they differ at O(h).

# %%
for level in range(4):
    m = refine_n(preset_domain("disk", 2), level)
    b = assemble(m, coefficients(m, V=1.0))
    xb = m.vertices[b.boundary]
    phi = xb[:, 0] / np.hypot(xb[:, 0], xb[:, 1])
    print(f"level {level}: discrepancy "
          f"{conormal_two_routes(build_dtn(b), b, phi).discrepancy:.4e}")

# %% [markdown]
# With V > 0 the Neumann problem is uniquely solvable and inverts the DtN map.

# %%
m = refine_n(preset_domain("annulus", 2), 1)
b = assemble(m, coefficients(m, V=1.0))
d = build_dtn(b)
phi = np.cos(3 * np.arctan2(*m.vertices[b.boundary].T[::-1]))
back = neumann_solve(b, d.apply(phi))[b.boundary]
print("Neumann(DtN(phi)) - phi:", np.abs(back - phi).max())

# %% [markdown]
# The Robin operator adds the boundary term beta to the whole-domain form.
# With beta = -lambda1(DtN), its bottom eigenvalue is zero.

# %%
m = refine_n(preset_domain("square", 3), 1)
b = assemble(m, coefficients(m, V=1.0))
lam1 = eigensolve(build_dtn(b).S, build_dtn(b).boundary_mass).lambda1
r = build_robin(assemble(m, b.coeffs.with_beta(-lam1)))
print("lambda1(DtN) =", lam1, " bottom Robin eigenvalue =",
      eigensolve(r.dense(), r.mass).lambda1)

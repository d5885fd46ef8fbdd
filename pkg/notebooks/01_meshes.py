"""
Meshes, refinement and the boundary measure
===========================================

Every computation starts from a triangulation with a labelled boundary.
This script builds the four preset domains, refines them, and checks that
refinement of the disk converges to the true perimeter.
"""
# %%
import numpy as np

from dtnlab.mesh import boundary_measure, preset_domain, refine, refine_n, two_squares

for name in ("square", "lshape", "disk", "annulus"):
    m = preset_domain(name, 2)
    print(f"{name:8s} vertices={m.n_vertices:4d} triangles={m.n_triangles:4d} "
          f"boundary components={m.component_count} "
          f"boundary length={m.boundary_length():.5f}")

# %% [markdown]
# Red refinement splits every triangle into four.  New nodes on a circular
# boundary component are pushed back onto the circle, so the polygonal
# perimeter of the disk approaches 2*pi.

# %%
disk = preset_domain("disk", 2)
for level in range(5):
    m = refine_n(disk, level)
    print(f"level {level}: boundary edges={len(m.boundary_edges):4d} "
          f"perimeter error={abs(m.boundary_length() - 2 * np.pi):.2e}")

# %% [markdown]
# The annulus has two boundary components.  Their lengths are tracked
# separately.

# %%
ann = refine(preset_domain("annulus", 2))
print("outer length", ann.boundary_length(0), "inner length", ann.boundary_length(1))

# %% [markdown]
# The boundary measure holds the lumped weights: half of each incident edge
# length per boundary node.  The weights add up to the boundary length.

# %%
mu = boundary_measure(ann)
print("nodes", len(mu.nodes), "total", mu.total, "min weight", mu.weights.min())

# %% [markdown]
# Two disjoint squares form a disconnected domain.  It appears again in the
# verification demo, where it is used to show that connectedness matters.

# %%
pair = two_squares(2)
print("two squares connected?", pair.omega_connected)

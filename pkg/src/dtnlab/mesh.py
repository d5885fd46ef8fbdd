"""Conforming triangulations of polygonal domains with labelled boundary.

A :class:`Mesh` is immutable once built.  Vertex coordinates are stored as an
``(n, 2)`` float array, triangles as an ``(nt, 3)`` index array in
counter-clockwise order, and boundary edges as an ``(nb, 2)`` index array
oriented so that the domain lies on the left of each edge (so the outward
normal points to the right).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay

PRESETS = ("square", "disk", "annulus", "lshape")
ANNULUS_INNER_RADIUS = 0.5


class MeshError(ValueError):
    """Raised when a mesh violates one of the structural invariants."""


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def signed_areas(vertices, triangles):
    p = vertices[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _edge_table(triangles):
    """Directed half-edges of every triangle and their sorted keys."""
    half = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    owner = np.tile(np.arange(len(triangles)), 3)
    keys = np.sort(half, axis=1)
    return half, owner, keys


@dataclass(frozen=True)
class Mesh:
    """Triangulation with boundary structure.

    Parameters
    ----------
    vertices : array_like, shape (n, 2)
    triangles : array_like, shape (nt, 3)
        Vertex indices, counter-clockwise.
    boundary_edges : array_like, shape (nb, 2)
        Oriented boundary edges (domain on the left).
    boundary_component : array_like, shape (nb,)
        Component id of each boundary edge.
    circles : dict
        Optional map ``component id -> (cx, cy, radius)`` for boundary
        components approximating a circle; used by :func:`refine` to project
        new boundary nodes.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_component: np.ndarray
    circles: dict = field(default_factory=dict)
    name: str = "mesh"

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.intp))
        object.__setattr__(
            self, "boundary_edges", _frozen(self.boundary_edges, np.intp)
        )
        object.__setattr__(
            self, "boundary_component", _frozen(self.boundary_component, np.intp)
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @property
    def node_class(self) -> np.ndarray:
        """Per-vertex label, ``"boundary"`` or ``"interior"``."""
        cls = np.full(self.n_vertices, "interior", dtype=object)
        cls[self.boundary_nodes] = "boundary"
        return cls

    @property
    def component_ids(self) -> np.ndarray:
        return np.unique(self.boundary_component)

    @property
    def component_count(self) -> int:
        return len(self.component_ids)

    @property
    def omega_connected(self) -> bool:
        return triangle_components(self.triangles) == 1

    @property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[
            self.boundary_edges[:, 0]
        ]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def outward_normals(self) -> np.ndarray:
        """Unit outward normal of each boundary edge."""
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[
            self.boundary_edges[:, 0]
        ]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.hypot(n[:, 0], n[:, 1])[:, None]

    def boundary_triangle(self) -> np.ndarray:
        """Index of the unique triangle owning each boundary edge."""
        half, owner, _ = _edge_table(self.triangles)
        lookup = {(int(a), int(b)): int(t) for (a, b), t in zip(half, owner)}
        return np.array([lookup[(int(a), int(b))] for a, b in self.boundary_edges])

    def node_component(self) -> dict:
        """Map boundary node -> component id."""
        out = {}
        for (a, b), c in zip(self.boundary_edges, self.boundary_component):
            out[int(a)] = int(c)
            out[int(b)] = int(c)
        return out

    def boundary_length(self, component=None) -> float:
        lengths = self.edge_lengths
        if component is not None:
            lengths = lengths[self.boundary_component == component]
        return float(lengths.sum())

    def to_json(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": [
                [int(a), int(b), int(c)]
                for (a, b), c in zip(self.boundary_edges, self.boundary_component)
            ],
        }


def triangle_components(triangles) -> int:
    """Number of connected components of the edge-adjacency graph of triangles."""
    triangles = np.asarray(triangles)
    nt = len(triangles)
    if nt == 0:
        return 0
    _, owner, keys = _edge_table(triangles)
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    k = keys[order]
    same = np.all(k[1:] == k[:-1], axis=1)
    i = owner[order][:-1][same]
    j = owner[order][1:][same]
    graph = coo_matrix((np.ones(len(i)), (i, j)), shape=(nt, nt))
    n, _ = connected_components(graph, directed=False)
    return int(n)


def _boundary_from_triangles(triangles):
    """Oriented edges that belong to exactly one triangle."""
    half, _, keys = _edge_table(triangles)
    _, inverse, counts = np.unique(
        keys, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.ravel()
    if np.any(counts > 2):
        bad = int(np.flatnonzero(counts[inverse] > 2)[0] % len(triangles))
        raise MeshError(f"edge shared by more than two triangles (triangle {bad})")
    return half[counts[inverse] == 1]


def _label_cycles(edges):
    """Component id per boundary edge from the cycle structure."""
    nodes, local = np.unique(edges, return_inverse=True)
    local = local.reshape(edges.shape)
    m = len(nodes)
    graph = coo_matrix(
        (np.ones(len(edges)), (local[:, 0], local[:, 1])), shape=(m, m)
    )
    _, labels = connected_components(graph, directed=False)
    return labels[local[:, 0]]


def _check_cycles(edges, n_vertices):
    out_deg = np.bincount(edges[:, 0], minlength=n_vertices)
    in_deg = np.bincount(edges[:, 1], minlength=n_vertices)
    bad = np.flatnonzero((out_deg != in_deg) | (out_deg > 1))
    if len(bad):
        v = int(bad[0])
        e = int(np.flatnonzero((edges[:, 0] == v) | (edges[:, 1] == v))[0])
        raise MeshError(
            f"boundary edge {e}: vertex {v} is not on a simple closed boundary cycle"
        )


def from_arrays(vertices, triangles, boundary_component_of=None, circles=None,
                name="mesh") -> Mesh:
    """Build a mesh, deriving the oriented boundary from the triangles.

    ``boundary_component_of`` maps an oriented boundary edge ``(a, b)`` to its
    component id; by default components are numbered by cycle.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.intp)
    area = signed_areas(vertices, triangles)
    if np.any(area <= 0):
        raise MeshError(
            f"triangle {int(np.flatnonzero(area <= 0)[0])} has non-positive area"
        )
    edges = _boundary_from_triangles(triangles)
    _check_cycles(edges, len(vertices))
    if boundary_component_of is None:
        comp = _label_cycles(edges)
    else:
        comp = np.array([boundary_component_of(int(a), int(b)) for a, b in edges])
    order = np.lexsort((edges[:, 0], comp))
    return Mesh(vertices, triangles, edges[order], comp[order], dict(circles or {}),
                name)


# -- presets ---------------------------------------------------------------


def _grid_square(n, x0=0.0, y0=0.0, h=1.0):
    xs = x0 + h * np.arange(n + 1) / n
    ys = y0 + h * np.arange(n + 1) / n
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    tris = []
    for j in range(n):
        for i in range(n):
            a, b = idx[j, i], idx[j, i + 1]
            c, d = idx[j + 1, i + 1], idx[j + 1, i]
            tris.append([a, b, c])
            tris.append([a, c, d])
    return pts, np.array(tris)


def _merge_points(pts, tris, decimals=12):
    key = np.round(pts, decimals)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    first = np.zeros(len(uniq), dtype=np.intp)
    first[inv[::-1]] = np.arange(len(pts))[::-1]
    return pts[first], inv[tris]


def _ccw(pts, tris):
    tris = np.array(tris)
    flip = signed_areas(pts, tris) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _ring(radius, count, phase=0.0):
    theta = phase + 2 * np.pi * np.arange(count) / count
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


def _square(resolution):
    pts, tris = _grid_square(resolution)
    return from_arrays(pts, tris, name="square")


def _lshape(resolution):
    blocks = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    all_pts, all_tris, off = [], [], 0
    for x0, y0 in blocks:
        p, t = _grid_square(resolution, x0, y0)
        all_pts.append(p)
        all_tris.append(t + off)
        off += len(p)
    pts, tris = _merge_points(np.vstack(all_pts), np.vstack(all_tris))
    return from_arrays(pts, tris, name="lshape")


def _disk(resolution):
    r = resolution
    pts = [np.zeros((1, 2))]
    for k in range(1, r + 1):
        pts.append(_ring(k / r, 4 * k))
    pts = np.vstack(pts)
    tris = _ccw(pts, Delaunay(pts).simplices)
    return from_arrays(pts, tris, lambda a, b: 0, {0: (0.0, 0.0, 1.0)}, "disk")


def _annulus(resolution):
    r = resolution
    rho = ANNULUS_INNER_RADIUS
    count = 4 * r
    # the coarsest annulus staggers its inner ring, otherwise projecting the
    # inner midpoints at the first refinement inverts triangles
    phase = np.pi / count if r == 1 else 0.0
    rings = [_ring(rho + (1 - rho) * j / r, count, phase if j == 0 else 0.0)
             for j in range(r + 1)]
    pts = np.vstack(rings)
    inner = np.arange(count)
    tris = Delaunay(pts).simplices
    hole = np.all(np.isin(tris, inner), axis=1)
    tris = _ccw(pts, tris[~hole])
    inner_set = set(inner.tolist())

    def comp(a, b):
        return 1 if a in inner_set and b in inner_set else 0

    return from_arrays(
        pts, tris, comp, {0: (0.0, 0.0, 1.0), 1: (0.0, 0.0, rho)}, "annulus"
    )


def preset_domain(name: str, resolution: int = 1) -> Mesh:
    """Build one of the preset domains.

    Parameters
    ----------
    name : {"square", "disk", "annulus", "lshape"}
        Unit square, unit disk, annulus with radii 0.5 and 1, or the
        L-shaped union of three unit squares.
    resolution : int
        Grid cells per unit length for the polygonal presets; the circles
        of the disk and annulus are regular polygons with ``4 * resolution``
        sides.
    """
    builders = {"square": _square, "disk": _disk, "annulus": _annulus,
                "lshape": _lshape}
    if name not in builders:
        raise ValueError(f"unknown preset domain {name!r}; choose from {PRESETS}")
    if int(resolution) < 1:
        raise ValueError("resolution must be a positive integer")
    return builders[name](int(resolution))


def two_squares(resolution: int = 1, gap: float = 0.5) -> Mesh:
    """Two disjoint unit squares; a disconnected test domain."""
    p, t = _grid_square(resolution)
    q = p + np.array([1.0 + gap, 0.0])
    pts = np.vstack([p, q])
    tris = np.vstack([t, t + len(p)])
    return from_arrays(pts, tris, name="two_squares")


# -- refinement ------------------------------------------------------------


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement: each triangle is split into four.

    Boundary midpoints on components listed in ``mesh.circles`` are projected
    radially onto the circle.
    """
    tris = mesh.triangles
    nv = mesh.n_vertices
    half, _, keys = _edge_table(tris)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])

    edge_index = {(int(a), int(b)): k for k, (a, b) in enumerate(uniq)}
    for (a, b), c in zip(mesh.boundary_edges, mesh.boundary_component):
        circle = mesh.circles.get(int(c))
        if circle is None:
            continue
        cx, cy, rad = circle
        k = edge_index[(min(a, b), max(a, b))]
        d = mid[k] - (cx, cy)
        mid[k] = (cx, cy) + rad * d / np.hypot(*d)

    nt = len(tris)
    m01 = nv + inv[:nt]
    m12 = nv + inv[nt:2 * nt]
    m20 = nv + inv[2 * nt:]
    v0, v1, v2 = tris.T
    new_tris = np.concatenate([
        np.column_stack([v0, m01, m20]),
        np.column_stack([m01, v1, m12]),
        np.column_stack([m20, m12, v2]),
        np.column_stack([m01, m12, m20]),
    ])
    new_vertices = np.vstack([mesh.vertices, mid])

    edges, comps = [], []
    for (a, b), c in zip(mesh.boundary_edges, mesh.boundary_component):
        m = nv + edge_index[(min(a, b), max(a, b))]
        edges += [(a, m), (m, b)]
        comps += [c, c]
    edges = np.array(edges)
    comps = np.array(comps)
    order = np.lexsort((edges[:, 0], comps))
    area = signed_areas(new_vertices, new_tris)
    if np.any(area <= 0):
        raise MeshError("refinement produced an inverted triangle")
    return Mesh(new_vertices, new_tris, edges[order], comps[order],
                dict(mesh.circles), mesh.name)


def refine_n(mesh: Mesh, levels: int) -> Mesh:
    for _ in range(levels):
        mesh = refine(mesh)
    return mesh


# -- boundary measure --------------------------------------------------------


@dataclass(frozen=True)
class BoundaryMeasure:
    """Lumped boundary measure: half the length of the edges at each node."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def boundary_measure(mesh: Mesh) -> BoundaryMeasure:
    nodes = mesh.boundary_nodes
    w = np.zeros(mesh.n_vertices)
    half = 0.5 * mesh.edge_lengths
    np.add.at(w, mesh.boundary_edges[:, 0], half)
    np.add.at(w, mesh.boundary_edges[:, 1], half)
    return BoundaryMeasure(_frozen(nodes, np.intp), _frozen(w[nodes], float))


# -- file I/O ----------------------------------------------------------------


def validate_arrays(vertices, triangles, boundary_edges):
    """Check the raw mesh-file arrays; raise :class:`MeshError` on the first
    violation, naming the offending triangle or boundary edge."""
    for label, rows, width in (("triangle", triangles, 3),
                               ("boundary edge", boundary_edges, 3)):
        for k, row in enumerate(rows):
            if not isinstance(row, (list, tuple, np.ndarray)) or len(row) != width:
                raise MeshError(f"{label} {k}: expected {width} integers, got {row!r}")
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be a list of [x, y] pairs")
    triangles = np.asarray(triangles)
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise MeshError("triangles must be a list of [i, j, k] triples")
    bad = np.flatnonzero((triangles < 0).any(1) | (triangles >= len(vertices)).any(1))
    if len(bad):
        raise MeshError(f"triangle {int(bad[0])} references a missing vertex")
    area = signed_areas(vertices, triangles)
    bad = np.flatnonzero(area <= 0)
    if len(bad):
        raise MeshError(f"triangle {int(bad[0])} has non-positive signed area")

    half, _, keys = _edge_table(triangles)
    uniq, inv, counts = np.unique(keys, axis=0, return_inverse=True,
                                  return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        t = int(np.flatnonzero(counts[inv] > 2)[0] % len(triangles))
        raise MeshError(f"triangle {t}: edge shared by more than two triangles")
    count_of = {(int(a), int(b)): int(c) for (a, b), c in zip(uniq, counts)}
    oriented = {(int(a), int(b)) for a, b in half}

    be = np.asarray(boundary_edges)
    if be.ndim != 2 or be.shape[1] != 3:
        raise MeshError("boundary_edges must be a list of [i, j, component_id]")
    edges, comps, seen = [], [], set()
    for k, (a, b, c) in enumerate(be.tolist()):
        key = (min(a, b), max(a, b))
        if count_of.get(key) != 1:
            raise MeshError(
                f"boundary edge {k} ({a}, {b}) is not an edge of exactly one triangle"
            )
        if key in seen:
            raise MeshError(f"boundary edge {k} ({a}, {b}) is listed twice")
        seen.add(key)
        edges.append((a, b) if (a, b) in oriented else (b, a))
        comps.append(c)
    free = [key for key, c in count_of.items() if c == 1 and key not in seen]
    if free:
        raise MeshError(f"edge {free[0]} belongs to one triangle but is not "
                        "listed as a boundary edge")
    edges = np.array(edges, dtype=np.intp).reshape(-1, 2)
    comps = np.array(comps, dtype=np.intp)
    _check_cycles(edges, len(vertices))
    cycles = _label_cycles(edges)
    for cyc in np.unique(cycles):
        ids = np.flatnonzero(cycles == cyc)
        if len(np.unique(comps[ids])) > 1:
            k = int(ids[np.flatnonzero(comps[ids] != comps[ids[0]])[0]])
            raise MeshError(
                f"boundary edge {k}: component id differs along its boundary cycle"
            )
    return vertices, triangles, edges, comps


def load_mesh(path) -> Mesh:
    """Read a mesh JSON file ``{"vertices", "triangles", "boundary_edges"}``."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MeshError(f"{path}: invalid JSON ({exc})") from exc
    try:
        raw = data["vertices"], data["triangles"], data["boundary_edges"]
    except (KeyError, TypeError) as exc:
        raise MeshError(f"{path}: missing key {exc}") from exc
    v, t, e, c = validate_arrays(*raw)
    order = np.lexsort((e[:, 0], c))
    return Mesh(v, t, e[order], c[order], {}, Path(path).stem)


def save_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(json.dumps(mesh.to_json()))

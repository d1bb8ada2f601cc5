"""Structured triangulations of rectangles with tagged boundaries.

Cells are split along the bottom-left to top-right diagonal. Vertex ``(i, j)``
of an ``nx`` by ``ny`` grid has index ``j * (nx + 1) + i``. Boundary edges are
stored in counterclockwise order with respect to their triangle, so the
outward normal of edge ``a -> b`` is ``(dy, -dx) / |ab|``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np


class BoundaryTag(enum.Enum):
    INLET = "INLET"
    OUTLET = "OUTLET"
    INTERFACE = "INTERFACE"
    BOTTOM = "BOTTOM"
    STRUCTURE_OUTER = "STRUCTURE_OUTER"
    STRUCTURE_END = "STRUCTURE_END"


class EmptyInterfaceError(ValueError):
    """Raised when a mesh carries no INTERFACE-tagged edge."""


FLUID_TAGS = {
    "left": BoundaryTag.INLET,
    "right": BoundaryTag.OUTLET,
    "bottom": BoundaryTag.BOTTOM,
    "top": BoundaryTag.INTERFACE,
}

STRUCTURE_TAGS = {
    "left": BoundaryTag.STRUCTURE_END,
    "right": BoundaryTag.STRUCTURE_END,
    "bottom": BoundaryTag.INTERFACE,
    "top": BoundaryTag.STRUCTURE_OUTER,
}


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Conforming triangle mesh.

    ``vertex_parents`` and ``parent`` are only set on meshes produced by
    :func:`uniform_refine`; row ``k`` of ``vertex_parents`` holds the two coarse
    vertices whose midpoint is fine vertex ``k`` (equal for copied vertices).
    Fine triangles ``4t .. 4t+3`` subdivide coarse triangle ``t``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    vertex_parents: np.ndarray | None = None
    parent: "Mesh2D | None" = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(np.asarray(self.vertices, float)))
        object.__setattr__(self, "triangles", _frozen(np.asarray(self.triangles, np.int64)))
        object.__setattr__(
            self, "boundary_edges", _frozen(np.asarray(self.boundary_edges, np.int64).reshape(-1, 2))
        )
        object.__setattr__(self, "boundary_tags", tuple(self.boundary_tags))
        if self.vertex_parents is not None:
            object.__setattr__(self, "vertex_parents", _frozen(np.asarray(self.vertex_parents, np.int64)))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        mask = np.array([t is tag for t in self.boundary_tags], dtype=bool)
        return self.boundary_edges[mask] if len(mask) else np.empty((0, 2), np.int64)

    def vertices_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        return np.unique(self.edges_with_tag(tag))

    def max_diameter(self) -> float:
        p = self.vertices[self.triangles]
        lens = [np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]
        return float(np.max(lens))


@dataclass(frozen=True, eq=False)
class InterfaceMesh1D:
    """Interface nodes sorted by ``x`` and the 2D vertex each one came from."""

    nodes: np.ndarray
    parent_vertex: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(np.asarray(self.nodes, float)))
        object.__setattr__(self, "parent_vertex", _frozen(np.asarray(self.parent_vertex, np.int64)))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])


def _grid(x0: float, length: float, n: int) -> np.ndarray:
    x = x0 + np.arange(n + 1) * (length / n)
    x[-1] = x0 + length
    return x


def build_rectangle_mesh(
    L: float,
    H: float,
    nx: int,
    ny: int,
    tags: Mapping[str, BoundaryTag] | None = None,
    origin: tuple[float, float] = (0.0, 0.0),
) -> Mesh2D:
    """Triangulate ``(x0, x0+L) x (y0, y0+H)`` with ``2 * nx * ny`` triangles.

    ``tags`` maps each side name (``left``, ``right``, ``bottom``, ``top``) to
    a :class:`BoundaryTag`; fluid tagging is the default.
    """
    if not (L > 0 and H > 0):
        raise ValueError(f"rectangle dimensions must be positive, got L={L}, H={H}")
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive integers, got nx={nx}, ny={ny}")
    nx, ny = int(nx), int(ny)
    tags = dict(FLUID_TAGS if tags is None else tags)
    missing = {"left", "right", "bottom", "top"} - set(tags)
    if missing:
        raise ValueError(f"missing boundary tags for sides {sorted(missing)}")

    xs = _grid(origin[0], L, nx)
    ys = _grid(origin[1], H, ny)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    I, J = I.ravel(), J.ravel()
    a, b, c, d = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
    triangles = np.empty((2 * nx * ny, 3), np.int64)
    triangles[0::2] = np.column_stack([a, b, c])
    triangles[1::2] = np.column_stack([a, c, d])

    i = np.arange(nx)
    j = np.arange(ny)
    # counterclockwise traversal: bottom, right, top, left
    sides = [
        ("bottom", np.column_stack([vid(i, 0), vid(i + 1, 0)])),
        ("right", np.column_stack([vid(nx, j), vid(nx, j + 1)])),
        ("top", np.column_stack([vid(i + 1, ny), vid(i, ny)])[::-1]),
        ("left", np.column_stack([vid(0, j + 1), vid(0, j)])[::-1]),
    ]
    edges = np.vstack([e for _, e in sides])
    edge_tags = [tags[name] for name, e in sides for _ in range(len(e))]
    return Mesh2D(vertices, triangles, edges, edge_tags)


def _unique_edges(triangles: np.ndarray):
    local = np.array([[0, 1], [1, 2], [2, 0]])
    all_edges = triangles[:, local].reshape(-1, 2)
    key = np.sort(all_edges, axis=1)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    return uniq, inverse.reshape(-1, 3)


def uniform_refine(mesh: Mesh2D) -> Mesh2D:
    """Split every triangle into four through its edge midpoints."""
    if mesh.n_triangles == 0:
        raise ValueError("cannot refine an empty mesh")
    nv = mesh.n_vertices
    edges, tri_edge = _unique_edges(mesh.triangles)
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    parents = np.vstack([np.column_stack([np.arange(nv), np.arange(nv)]), edges])

    t = mesh.triangles
    m01, m12, m20 = (nv + tri_edge[:, k] for k in range(3))
    fine = np.empty((4 * len(t), 3), np.int64)
    fine[0::4] = np.column_stack([t[:, 0], m01, m20])
    fine[1::4] = np.column_stack([m01, t[:, 1], m12])
    fine[2::4] = np.column_stack([m20, m12, t[:, 2]])
    fine[3::4] = np.column_stack([m01, m12, m20])

    lookup = {tuple(e): k for k, e in enumerate(edges.tolist())}
    bedges, btags = [], []
    for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags):
        m = nv + lookup[(min(a, b), max(a, b))]
        bedges += [(a, m), (m, b)]
        btags += [tag, tag]
    return Mesh2D(vertices, fine, bedges, btags, vertex_parents=parents, parent=mesh)


def extract_interface(mesh: Mesh2D, tag: BoundaryTag = BoundaryTag.INTERFACE) -> InterfaceMesh1D:
    verts = mesh.vertices_with_tag(tag)
    if len(verts) == 0:
        raise EmptyInterfaceError(f"mesh has no {tag.value} edges")
    order = np.argsort(mesh.vertices[verts, 0], kind="stable")
    verts = verts[order]
    return InterfaceMesh1D(mesh.vertices[verts, 0], verts)


def dump_mesh(mesh: Mesh2D, path: str | Path) -> None:
    """Write the plain-text mesh format documented in the README."""
    lines = ["vertices %d" % mesh.n_vertices]
    lines += ["%.17g %.17g" % tuple(v) for v in mesh.vertices]
    lines.append("triangles %d" % mesh.n_triangles)
    lines += ["%d %d %d" % tuple(t) for t in mesh.triangles]
    lines.append("boundary %d" % len(mesh.boundary_edges))
    lines += [
        "%d %d %s" % (a, b, tag.value)
        for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path: str | Path) -> Mesh2D:
    lines = Path(path).read_text().splitlines()
    pos = 0

    def section(name):
        nonlocal pos
        head, count = lines[pos].split()
        if head != name:
            raise ValueError(f"expected section {name!r}, found {head!r}")
        rows = lines[pos + 1 : pos + 1 + int(count)]
        pos += 1 + int(count)
        return [r.split() for r in rows]

    verts = np.array(section("vertices"), float).reshape(-1, 2)
    tris = np.array(section("triangles"), np.int64).reshape(-1, 3)
    bnd = section("boundary")
    edges = np.array([[int(a), int(b)] for a, b, _ in bnd], np.int64)
    tags = [BoundaryTag(t) for _, _, t in bnd]
    return Mesh2D(verts, tris, edges, tags)

"""Degree-of-freedom maps for the finite element spaces.

Vector spaces interleave components node by node: dof ``ncomp * node + c``
carries component ``c`` of node ``node``. For the MINI space the nodes are the
mesh vertices followed by one bubble per triangle (node ``n_vertices + t``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from ..mesh import BoundaryTag, InterfaceMesh1D, Mesh2D


class SpaceKind(enum.Enum):
    P1 = "P1"
    P1_VECTOR = "P1_VECTOR"
    MINI = "MINI"
    P1_ISO_P2 = "P1_ISO_P2"
    INTERFACE_SCALAR = "INTERFACE_SCALAR"
    INTERFACE_VECTOR = "INTERFACE_VECTOR"


@dataclass(frozen=True, eq=False)
class DofMap:
    kind: SpaceKind
    mesh: object
    ncomp: int
    n_nodes: int
    cell_nodes: np.ndarray
    constraints: Mapping[int, float] = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.ncomp * self.n_nodes

    @property
    def has_bubble(self) -> bool:
        return self.kind is SpaceKind.MINI

    def dof(self, node, comp=0):
        return self.ncomp * np.asarray(node) + comp

    def cell_dofs(self) -> np.ndarray:
        """Element dof table ordered (node, component)."""
        nodes = self.cell_nodes
        return (self.ncomp * nodes[:, :, None] + np.arange(self.ncomp)).reshape(len(nodes), -1)

    def constrained_dofs(self) -> np.ndarray:
        return np.array(sorted(self.constraints), dtype=np.int64)

    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, bool)
        mask[self.constrained_dofs()] = False
        return np.flatnonzero(mask)

    def with_constraints(self, constraints: Mapping[int, float]) -> "DofMap":
        bad = [d for d in constraints if not 0 <= d < self.n_dofs]
        if bad:
            raise ValueError(f"constrained dofs out of range: {bad[:5]}")
        return replace(self, constraints=dict(constraints))


def p1_space(mesh: Mesh2D, ncomp: int = 1) -> DofMap:
    kind = SpaceKind.P1 if ncomp == 1 else SpaceKind.P1_VECTOR
    return DofMap(kind, mesh, ncomp, mesh.n_vertices, mesh.triangles)


def mini_space(mesh: Mesh2D) -> DofMap:
    bubbles = mesh.n_vertices + np.arange(mesh.n_triangles)
    cells = np.column_stack([mesh.triangles, bubbles])
    return DofMap(SpaceKind.MINI, mesh, 2, mesh.n_vertices + mesh.n_triangles, cells)


def p1_iso_p2_space(fine_mesh: Mesh2D) -> DofMap:
    """P1 vector velocity on a mesh produced by :func:`uniform_refine`."""
    if fine_mesh.parent is None:
        raise ValueError("P1-iso-P2 velocity needs a refined mesh (parent is None)")
    return DofMap(SpaceKind.P1_ISO_P2, fine_mesh, 2, fine_mesh.n_vertices, fine_mesh.triangles)


def interface_space(interface: InterfaceMesh1D, ncomp: int = 1) -> DofMap:
    n = interface.n_nodes
    cells = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    kind = SpaceKind.INTERFACE_SCALAR if ncomp == 1 else SpaceKind.INTERFACE_VECTOR
    return DofMap(kind, interface, ncomp, n, cells)


def interpolate(space: DofMap, func: Callable) -> np.ndarray:
    """Nodal interpolant at vertices; bubble coefficients are set to zero.

    ``func`` takes an ``(n, 2)`` (or ``(n,)`` on an interface) coordinate array
    and returns ``(n, ncomp)`` values.
    """
    mesh = space.mesh
    if isinstance(mesh, InterfaceMesh1D):
        coords = mesh.nodes
        n_vert = mesh.n_nodes
    else:
        coords = mesh.vertices
        n_vert = mesh.n_vertices
    vals = np.asarray(func(coords), float).reshape(n_vert, space.ncomp)
    out = np.zeros(space.n_dofs)
    out[: space.ncomp * n_vert] = vals.ravel()
    return out


def boundary_constraints(
    space: DofMap, tags: Mapping[BoundaryTag, tuple[int, ...]]
) -> dict[int, float]:
    """Homogeneous constraints on the listed components of tagged vertices."""
    mesh = space.mesh
    out: dict[int, float] = {}
    for tag, comps in tags.items():
        verts = mesh.vertices_with_tag(tag)
        for c in comps:
            for d in space.dof(verts, c).tolist():
                out[d] = 0.0
    return out

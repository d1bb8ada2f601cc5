"""Assembly of the bilinear forms and load vectors used by the FSI schemes.

All matrices are returned as ``scipy.sparse.csr_matrix`` with duplicates summed.
Triangle integrals use :func:`triangle_rule` of degree 4 for gradient terms
and degree ``2 * k`` for mass terms with basis degree ``k`` (6 with bubbles).
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from ..mesh import BoundaryTag, InterfaceMesh1D, Mesh2D
from .quadrature import edge_rule, triangle_rule
from .spaces import DofMap, SpaceKind


def _check_space(mesh, space: DofMap):
    if space.mesh is not mesh:
        raise ValueError(f"{space.kind.value} dof map is defined on a different mesh")


def _geometry(mesh: Mesh2D):
    """Triangle areas and barycentric gradients, shape (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    two_area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.empty((len(p), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (y[:, j] - y[:, k]) / two_area
        grads[:, i, 1] = (x[:, k] - x[:, j]) / two_area
    return 0.5 * two_area, grads


def _basis(space: DofMap, degree: int):
    """Basis values (nq, nloc), gradients (nt, nq, nloc, 2) and weights (nt, nq)."""
    rule = triangle_rule(degree)
    area, glam = _geometry(space.mesh)
    lam = rule.points
    nq = len(rule.weights)
    if space.has_bubble:
        b = 27.0 * lam[:, 0] * lam[:, 1] * lam[:, 2]
        values = np.column_stack([lam, b])
        # d(b)/d(lam_i) = 27 * product of the other two
        db = 27.0 * np.column_stack([lam[:, 1] * lam[:, 2], lam[:, 0] * lam[:, 2], lam[:, 0] * lam[:, 1]])
        gb = np.einsum("qi,eid->eqd", db, glam)
        grads = np.concatenate([np.broadcast_to(glam[:, None], (len(area), nq, 3, 2)), gb[:, :, None, :]], axis=2)
    else:
        values = lam
        grads = np.broadcast_to(glam[:, None], (len(area), nq, 3, 2))
    weights = 2.0 * area[:, None] * rule.weights[None, :]
    return values, grads, weights


def _scatter(rows_dofs, cols_dofs, local, shape):
    ne, nr = rows_dofs.shape
    nc = cols_dofs.shape[1]
    r = np.broadcast_to(rows_dofs[:, :, None], (ne, nr, nc)).ravel()
    c = np.broadcast_to(cols_dofs[:, None, :], (ne, nr, nc)).ravel()
    m = sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def _gradgrad(space: DofMap):
    """Element tensor GG[e, i, a, j, b] = integral of d_a N_i * d_b N_j."""
    _, grads, w = _basis(space, 4)
    return np.einsum("eq,eqia,eqjb->eiajb", w, grads, grads)


def _vector_form(space: DofMap, strain: float, divdiv: float, laplace: float = 0.0):
    if space.ncomp != 2:
        raise ValueError("vector form needs a two-component space")
    gg = _gradgrad(space)
    nloc = gg.shape[1]
    eye = np.eye(2)
    trace = np.einsum("eicjc->eij", gg)
    local = (
        strain * 0.5 * (np.einsum("eij,ab->eiajb", trace, eye) + np.einsum("eibja->eiajb", gg))
        + divdiv * gg
        + laplace * np.einsum("eij,ab->eiajb", trace, eye)
    )
    local = local.reshape(len(gg), 2 * nloc, 2 * nloc)
    dofs = space.cell_dofs()
    return _scatter(dofs, dofs, local, (space.n_dofs, space.n_dofs))


def assemble_fluid_stiffness(mesh: Mesh2D, vel_space: DofMap, mu: float) -> sp.csr_matrix:
    """Matrix of ``2 mu (D(u), D(phi))``."""
    _check_space(mesh, vel_space)
    if mu < 0:
        raise ValueError("viscosity must be non-negative")
    return _vector_form(vel_space, strain=2.0 * mu, divdiv=0.0)


def assemble_thick_elasticity(
    mesh: Mesh2D, disp_space: DofMap, mu_s: float, lam_s: float, C_as: float
) -> sp.csr_matrix:
    """``2 mu_s (D, D) + lam_s (div, div) + C_as (eta, xi)`` over the structure."""
    _check_space(mesh, disp_space)
    if not mu_s > 0 or lam_s < 0 or C_as < 0:
        raise ValueError(f"invalid elastic coefficients mu_s={mu_s}, lam_s={lam_s}, C_as={C_as}")
    K = _vector_form(disp_space, strain=2.0 * mu_s, divdiv=lam_s)
    if C_as:
        K = K + assemble_mass(mesh, disp_space, C_as)
    return K.tocsr()


def prolongation_matrix(fine: Mesh2D) -> sp.csr_matrix:
    """P1 prolongation from ``fine.parent`` vertices to ``fine`` vertices."""
    if fine.vertex_parents is None:
        raise ValueError("mesh was not produced by uniform_refine")
    par = fine.vertex_parents
    n = len(par)
    rows = np.repeat(np.arange(n), 2)
    return sp.csr_matrix(
        (np.full(2 * n, 0.5), (rows, par.ravel())), shape=(n, fine.parent.n_vertices)
    )


def assemble_divergence(mesh: Mesh2D, vel_space: DofMap, pres_space: DofMap) -> sp.csr_matrix:
    """Matrix ``B`` with ``(B u)_k = integral of q_k div(u)``.

    ``mesh`` is the velocity mesh. For P1-iso-P2 the pressure lives on
    ``mesh.parent`` and is prolongated exactly onto the fine triangles.
    """
    _check_space(mesh, vel_space)
    if pres_space.ncomp != 1:
        raise ValueError("pressure space must be scalar")
    if pres_space.mesh is mesh:
        prolong = None
    elif pres_space.mesh is mesh.parent:
        prolong = prolongation_matrix(mesh)
    else:
        raise ValueError("pressure space is not on the velocity mesh or its parent")
    vals, grads, w = _basis(vel_space, 4)
    lam = triangle_rule(4).points
    # local[e, k, j, b] = integral of lam_k * d_b N_j
    local = np.einsum("eq,qk,eqjb->ekjb", w, lam, grads).reshape(len(w), 3, -1)
    vdofs = vel_space.cell_dofs()
    B = _scatter(mesh.triangles, vdofs, local, (mesh.n_vertices, vel_space.n_dofs))
    if prolong is not None:
        B = (prolong.T @ B).tocsr()
    return B


def _interface_elements(interface: InterfaceMesh1D):
    h = np.diff(interface.nodes)
    if np.any(h <= 0):
        raise ValueError("interface nodes must be strictly increasing")
    n = interface.n_nodes
    return h, np.column_stack([np.arange(n - 1), np.arange(1, n)])


def _interface_matrix(interface: InterfaceMesh1D, ncomp: int, local_scalar):
    _, cells = _interface_elements(interface)
    ne = len(cells)
    if ncomp == 1:
        dofs, local = cells, local_scalar
    else:
        dofs = (ncomp * cells[:, :, None] + np.arange(ncomp)).reshape(ne, -1)
        local = np.einsum("eij,ab->eiajb", local_scalar, np.eye(ncomp)).reshape(ne, 2 * ncomp, 2 * ncomp)
    n = ncomp * interface.n_nodes
    return _scatter(dofs, dofs, local, (n, n))


def assemble_mass(mesh, space: DofMap, weight: float = 1.0) -> sp.csr_matrix:
    """``weight * (u, v)`` on a triangle mesh or on an interface mesh."""
    _check_space(mesh, space)
    if isinstance(mesh, InterfaceMesh1D):
        h, _ = _interface_elements(mesh)
        local = weight * h[:, None, None] * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        return _interface_matrix(mesh, space.ncomp, local)
    degree = 6 if space.has_bubble else 2
    vals, _, w = _basis(space, degree)
    scalar = weight * np.einsum("eq,qi,qj->eij", w, vals, vals)
    nloc = scalar.shape[1]
    if space.ncomp == 1:
        local, dofs = scalar, space.cell_nodes
    else:
        local = np.einsum("eij,ab->eiajb", scalar, np.eye(space.ncomp))
        local = local.reshape(len(scalar), nloc * space.ncomp, nloc * space.ncomp)
        dofs = space.cell_dofs()
    return _scatter(dofs, dofs, local, (space.n_dofs, space.n_dofs))


def assemble_string_operator(interface: InterfaceMesh1D, C0: float, C1: float) -> sp.csr_matrix:
    """Matrix of ``C0 (eta, xi) + C1 (eta', xi')`` on the interface.

    Clamping is not applied here; the schemes constrain the end dofs.
    """
    if C0 < 0 or C1 < 0:
        raise ValueError(f"string coefficients must be non-negative, got C0={C0}, C1={C1}")
    if C0 == 0 and C1 == 0:
        raise ValueError("string coefficients C0 and C1 are both zero")
    h, _ = _interface_elements(interface)
    mass = h[:, None, None] * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    stiff = (1.0 / h)[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return _interface_matrix(interface, 1, C0 * mass + C1 * stiff)


def string_coefficients(E: float, eps: float, R: float, poisson: float) -> tuple[float, float]:
    """``C0 = E eps / (R^2 (1 - s^2))`` and ``C1 = E eps / (2 (1 + s))``."""
    return E * eps / (R**2 * (1.0 - poisson**2)), E * eps / (2.0 * (1.0 + poisson))


def assemble_boundary_load(mesh: Mesh2D, vel_space: DofMap, tag: BoundaryTag, p_val: float) -> np.ndarray:
    """Vector with entries ``integral over tag of p_val * phi_i . n`` (outward n).

    The traction imposed by ``sigma n = -p n`` therefore enters a momentum
    right-hand side with a minus sign.
    """
    _check_space(mesh, vel_space)
    if not isinstance(tag, BoundaryTag):
        raise ValueError(f"unknown boundary tag {tag!r}")
    edges = mesh.edges_with_tag(tag)
    if len(edges) == 0:
        raise ValueError(f"mesh has no {tag.value} edges")
    a, b = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    rule = edge_rule(2)
    # integral of each endpoint hat function
    hat = length[:, None] * (rule.weights @ rule.points)[None, :]
    out = np.zeros(vel_space.n_dofs)
    for c in range(vel_space.ncomp):
        for k in range(2):
            np.add.at(out, vel_space.dof(edges[:, k], c), p_val * hat[:, k] * normal[:, c])
    return out


def trace_matrix(vel_space: DofMap, interface: InterfaceMesh1D, trace_space: DofMap) -> sp.csr_matrix:
    """Selection matrix ``T`` with ``T u`` the nodal values of ``u`` on the interface.

    A scalar trace space picks the radial (second) velocity component.
    """
    if trace_space.mesh is not interface:
        raise ValueError("trace space is not defined on the given interface")
    mesh = vel_space.mesh
    verts = interface.parent_vertex
    if np.any(verts >= mesh.n_vertices) or not np.allclose(
        mesh.vertices[verts, 0], interface.nodes, rtol=0, atol=0
    ):
        raise ValueError("interface node has no matching velocity vertex")
    comps = (1,) if trace_space.ncomp == 1 else tuple(range(trace_space.ncomp))
    rows, cols = [], []
    for k, v in enumerate(verts.tolist()):
        for r, c in enumerate(comps):
            rows.append(trace_space.ncomp * k + r)
            cols.append(vel_space.ncomp * v + c)
    return sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(trace_space.n_dofs, vel_space.n_dofs)
    )


def pressure_pulse(t: float, p_max: float, t_max: float) -> float:
    """Cosine pressure pulse, zero after ``t_max``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if t > t_max:
        return 0.0
    return 0.5 * p_max * (1.0 - math.cos(2.0 * math.pi * t / t_max))


def to_coordinate_text(matrix: sp.spmatrix) -> str:
    """Dump a sparse matrix as ``row col value`` lines (debugging aid)."""
    coo = matrix.tocoo()
    head = "%d %d %d" % (coo.shape[0], coo.shape[1], coo.nnz)
    body = ("%d %d %.17g" % t for t in zip(coo.row, coo.col, coo.data))
    return "\n".join([head, *body]) + "\n"

"""Fluid / thick-structure coupling with the kinematically coupled beta-scheme.

Fluid velocity and structure displacement meet on a conforming interface.
Both sub-steps are posed on a glued space ``w = [u, s_I]``: all fluid
velocity dofs plus the structure dofs off the interface. The structure
interface dofs are slaved to the fluid ones, so the kinematic condition
``u = v`` on the interface holds identically in both sub-steps.

Step 1 (structure elastodynamics with fluid inertia)::

    Z^T diag(rho_f/dt M_f, rho_s/dt M_s + dt K) Z w~
        = Z_F^T rho_f/dt M_f u^n + Z_S^T (rho_s/dt M_s v^n - K eta^n - beta T_S^T M_g lam^n)

Step 2 (Stokes with structure inertia)::

    Z^T diag(rho_f/dt M_f + A_f, rho_s/dt M_s) Z w - (B Z_F)^T p
        = Z_F^T (rho_f/dt M_f u~ + beta T_F^T M_g lam^n + load) + Z_S^T rho_s/dt M_s v~

followed by the algebraic traction update on the free interface dofs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..fem import (
    assemble_boundary_load,
    assemble_divergence,
    assemble_fluid_stiffness,
    assemble_mass,
    assemble_thick_elasticity,
    boundary_constraints,
    interface_space,
    p1_iso_p2_space,
    p1_space,
    pressure_pulse,
    trace_matrix,
)
from ..linalg import Factorization
from ..mesh import STRUCTURE_TAGS, BoundaryTag, build_rectangle_mesh, extract_interface, uniform_refine
from .energy import LedgerRow
from .params import PhysicalParams
from .state import FsiState, zero_state
from .thin import InvariantError, _quad, _saddle


def lump(M: sp.spmatrix) -> sp.csr_matrix:
    """Row-sum lumped (diagonal) version of a mass matrix."""
    return sp.diags(np.asarray(M.sum(axis=1)).ravel()).tocsr()


@dataclass
class ThickOperators:
    """Assembled operators of the thick benchmark.

    ``T_F`` and ``T_S`` map fluid velocity and structure dofs to the shared
    vector interface space; ``Z_F`` and ``Z_S`` embed the glued space.
    ``K_s`` is the structure elasticity including the ``C_as`` term.
    """

    M_f: sp.csr_matrix
    A_f: sp.csr_matrix
    B: sp.csr_matrix
    M_s: sp.csr_matrix
    K_s: sp.csr_matrix
    M_g: sp.csr_matrix
    T_F: sp.csr_matrix
    T_S: sp.csr_matrix
    Z_F: sp.csr_matrix
    Z_S: sp.csr_matrix
    load_in: np.ndarray
    load_out: np.ndarray
    glued_constraints: dict
    structure_constraints: dict
    free_interface: np.ndarray
    interior_fluid: np.ndarray
    interior_structure: np.ndarray
    fluid_mesh: object = None
    structure_mesh: object = None
    vel_space: object = None
    pres_space: object = None
    disp_space: object = None
    interface: object = None
    inflow_length: float = 0.0
    outflow_length: float = 0.0
    lumped_mass: bool = False

    @property
    def n_u(self) -> int:
        return self.M_f.shape[0]

    @property
    def n_p(self) -> int:
        return self.B.shape[0]

    @property
    def n_s(self) -> int:
        return self.M_s.shape[0]

    @property
    def n_g(self) -> int:
        return self.M_g.shape[0]

    @property
    def n_w(self) -> int:
        return self.Z_F.shape[1]

    def zero_state(self) -> FsiState:
        return zero_state(self.n_u, self.n_p, self.n_s, self.n_s, self.n_g, thick=True)

    def inflow_load(self, t: float, params: PhysicalParams) -> np.ndarray:
        p_in = pressure_pulse(t, params.p_max, params.t_max)
        return -(p_in * self.load_in + params.p_out * self.load_out)

    def inflow_norm_sq(self, t: float, params: PhysicalParams) -> float:
        p_in = pressure_pulse(t, params.p_max, params.t_max)
        return p_in**2 * self.inflow_length + params.p_out**2 * self.outflow_length


def build_thick_operators(params: PhysicalParams, nx: int, ny: int, ny_s: int | None = None,
                          lumped_mass: bool = False) -> ThickOperators:
    """Assemble the thick benchmark on an ``nx x ny`` coarse fluid grid.

    The velocity lives on the once-refined grid (P1-iso-P2), the pressure on
    the coarse one. The structure grid is refined the same way so that its
    bottom row matches the fluid interface node for node.
    """
    coarse = build_rectangle_mesh(params.L, params.R, nx, ny)
    fmesh = uniform_refine(coarse)
    vel = p1_iso_p2_space(fmesh)
    pres = p1_space(coarse)
    if ny_s is None:
        ny_s = max(1, round(params.H_s * nx / params.L))
    smesh = uniform_refine(build_rectangle_mesh(params.L, params.H_s, nx, ny_s, STRUCTURE_TAGS, origin=(0.0, params.R)))
    disp = p1_space(smesh, 2)

    gam_f = extract_interface(fmesh)
    gam_s = extract_interface(smesh)
    if gam_f.n_nodes != gam_s.n_nodes or not np.array_equal(gam_f.nodes, gam_s.nodes):
        raise ValueError("fluid and structure interface nodes do not match")
    space_f = interface_space(gam_f, 2)
    space_s = interface_space(gam_s, 2)
    T_F = trace_matrix(vel, gam_f, space_f)
    T_S = trace_matrix(disp, gam_s, space_s)
    n_g = space_f.n_dofs

    M_f = assemble_mass(fmesh, vel, 1.0)
    M_s = assemble_mass(smesh, disp, 1.0)
    if lumped_mass:
        M_f, M_s = lump(M_f), lump(M_s)

    # fluid: symmetry on the axis, interface corners pinned
    f_cons = boundary_constraints(vel, {BoundaryTag.BOTTOM: (1,)})
    ends = [0, gam_f.n_nodes - 1]
    for k in ends:
        for c in (0, 1):
            f_cons[int(vel.dof(gam_f.parent_vertex[k], c))] = 0.0
    s_cons = boundary_constraints(disp, {BoundaryTag.STRUCTURE_END: (0, 1)})

    # glued space: [all fluid dofs, structure dofs off the interface]
    n_u, n_s = vel.n_dofs, disp.n_dofs
    s_iface = np.asarray(T_S.tocoo().col)[np.argsort(T_S.tocoo().row)]
    is_iface = np.zeros(n_s, bool)
    is_iface[s_iface] = True
    s_int = np.flatnonzero(~is_iface)
    n_w = n_u + len(s_int)
    Z_F = sp.csr_matrix((np.ones(n_u), (np.arange(n_u), np.arange(n_u))), shape=(n_u, n_w))
    E_int = sp.csr_matrix((np.ones(len(s_int)), (s_int, n_u + np.arange(len(s_int)))), shape=(n_s, n_w))
    Z_S = (T_S.T @ T_F @ Z_F + E_int).tocsr()

    g_cons = dict(f_cons)
    pos = {int(d): n_u + i for i, d in enumerate(s_int)}
    for d, val in s_cons.items():
        if d in pos:
            g_cons[pos[d]] = val
        else:
            # a clamped interface dof must already be pinned on the fluid side
            f_dof = int((T_F.T @ T_S)[:, d].nonzero()[0][0])
            if f_dof not in f_cons:
                raise ValueError("clamped structure dof on the interface is free on the fluid side")

    corner = np.zeros(n_g, bool)
    for k in ends:
        corner[2 * k : 2 * k + 2] = True
    f_iface = np.asarray(T_F.tocoo().col)[np.argsort(T_F.tocoo().row)]
    f_int = np.setdiff1d(np.arange(n_u), f_iface)

    return ThickOperators(
        M_f=M_f,
        A_f=assemble_fluid_stiffness(fmesh, vel, params.mu),
        B=assemble_divergence(fmesh, vel, pres),
        M_s=M_s,
        K_s=assemble_thick_elasticity(smesh, disp, params.mu_s, params.lam_s, params.C_as),
        M_g=assemble_mass(gam_f, space_f, 1.0),
        T_F=T_F,
        T_S=T_S,
        Z_F=Z_F,
        Z_S=Z_S,
        load_in=assemble_boundary_load(fmesh, vel, BoundaryTag.INLET, 1.0),
        load_out=assemble_boundary_load(fmesh, vel, BoundaryTag.OUTLET, 1.0),
        glued_constraints=g_cons,
        structure_constraints=s_cons,
        free_interface=np.flatnonzero(~corner),
        interior_fluid=f_int,
        interior_structure=s_int,
        fluid_mesh=fmesh,
        structure_mesh=smesh,
        vel_space=vel,
        pres_space=pres,
        disp_space=disp,
        interface=gam_f,
        inflow_length=params.R,
        outflow_length=params.R,
        lumped_mass=lumped_mass,
    )


class ThickBetaScheme:
    """Kinematically coupled beta-scheme for the thick structure.

    The discrete energy estimate is only established for ``beta = 1``; other
    values run but emit a warning.
    """

    def __init__(self, ops: ThickOperators, params: PhysicalParams, beta: float, dt: float, tol: float = 1e-10,
                 check_invariants: bool = True, lumped_traction_mass: bool = False):
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {beta}")
        if beta != 1.0:
            warnings.warn(f"thick-structure scheme with beta={beta}: no energy estimate for beta != 1", stacklevel=2)
        self.ops, self.params, self.beta, self.dt = ops, params, beta, dt
        self.check_invariants = check_invariants
        o = ops
        self.M_g = lump(o.M_g) if lumped_traction_mass else o.M_g
        self._mf = params.rho_f / dt
        self._ms = params.rho_s / dt
        ZF, ZS = o.Z_F, o.Z_S
        A1 = ZF.T @ (self._mf * o.M_f) @ ZF + ZS.T @ (self._ms * o.M_s + dt * o.K_s) @ ZS
        self._step1 = Factorization(A1.tocsr(), o.glued_constraints, tol=tol)
        A2 = ZF.T @ (self._mf * o.M_f + o.A_f) @ ZF + ZS.T @ (self._ms * o.M_s) @ ZS
        self._step2 = Factorization(_saddle(A2.tocsr(), (o.B @ ZF).tocsr()), o.glued_constraints, tol=tol)

        F = o.free_interface
        self._mg_ff = Factorization(self.M_g[F][:, F].tocsr(), tol=tol)
        # structure mass on the free dofs, for the traction energy norm
        s_free = np.setdiff1d(np.arange(o.n_s), np.fromiter(o.structure_constraints, int))
        self._s_free = s_free
        self._ms_free = Factorization(o.M_s[s_free][:, s_free].tocsr(), tol=tol)
        self._TS_free = o.T_S[:, s_free].tocsr()

    def step_structure(self, state: FsiState):
        """Step 1: returns ``(u_tilde, v_tilde, eta_new)``."""
        o = self.ops
        rhs_s = self._ms * (o.M_s @ state.v) - o.K_s @ state.eta - self.beta * (o.T_S.T @ (self.M_g @ state.lam))
        rhs = o.Z_F.T @ (self._mf * (o.M_f @ state.u)) + o.Z_S.T @ rhs_s
        w = self._step1.solve(rhs)
        v_tilde = o.Z_S @ w
        return o.Z_F @ w, v_tilde, state.eta + self.dt * v_tilde

    def step_fluid(self, state: FsiState, u_tilde, v_tilde, load):
        """Step 2: returns ``(u, p, v)``."""
        o = self.ops
        rhs_f = self._mf * (o.M_f @ u_tilde) + self.beta * (o.T_F.T @ (self.M_g @ state.lam)) + load
        rhs = o.Z_F.T @ rhs_f + o.Z_S.T @ (self._ms * (o.M_s @ v_tilde))
        x = self._step2.solve(np.concatenate([rhs, np.zeros(o.n_p)]))
        w, p = x[: o.n_w], x[o.n_w :]
        return o.Z_F @ w, p, o.Z_S @ w

    def update_traction(self, lam, v, v_tilde):
        """Solve ``(M_g lam^{n+1})_F = beta (M_g lam^n)_F - rho_s/dt (T_S M_s (v - v~))_F``."""
        o, F = self.ops, self.ops.free_interface
        rhs = self.beta * (self.M_g @ lam) - self._ms * (o.T_S @ (o.M_s @ (v - v_tilde)))
        out = np.zeros(o.n_g)
        out[F] = self._mg_ff.solve(rhs[F])
        return out

    def splitting_residual(self, old: FsiState, new: FsiState) -> float:
        o, F = self.ops, self.ops.free_interface
        r = self.M_g @ (new.lam - self.beta * old.lam) + self._ms * (o.T_S @ (o.M_s @ (new.v - new.v_tilde)))
        scale = max(np.max(np.abs(self.M_g @ new.lam)), np.max(np.abs(self.M_g @ old.lam)))
        res = float(np.max(np.abs(r[F]), initial=0.0))
        return res / scale if scale > 0 else res

    def traction_energy(self, lam) -> float:
        """``dt^2 / (2 rho_s) |lam|^2_G`` with ``G = M_g T_S M_s^{-1} T_S^T M_g`` on free dofs."""
        z = self._TS_free.T @ (self.M_g @ lam)
        if not np.any(z):
            return 0.0
        x = self._ms_free.solve(z)
        return self.dt**2 / (2.0 * self.params.rho_s) * float(z @ x)

    def energies(self, state: FsiState) -> dict:
        o, prm = self.ops, self.params
        return {
            "E_f": 0.5 * prm.rho_f * _quad(o.M_f, state.u),
            "E_v": 0.5 * prm.rho_s * _quad(o.M_s, state.v),
            "E_s": 0.5 * _quad(o.K_s, state.eta),
        }

    def advance(self, state: FsiState) -> tuple[FsiState, LedgerRow]:
        o, prm, dt = self.ops, self.params, self.dt
        t_new = state.t + dt
        u_tilde, v_tilde, eta = self.step_structure(state)
        load = o.inflow_load(t_new, prm)
        u, p, v = self.step_fluid(state, u_tilde, v_tilde, load)
        lam = self.update_traction(state.lam, v, v_tilde)
        new = FsiState(u, p, eta, v, v_tilde, lam, t_new, state.n + 1, u_tilde=u_tilde)
        if self.check_invariants:
            self._check_invariants(state, new)
        te_new = self.traction_energy(lam)
        row = LedgerRow(
            step=new.n,
            t=t_new,
            **self.energies(new),
            D_visc=dt * _quad(o.A_f, u),
            K_tilde=0.5 * prm.rho_s * _quad(o.M_s, v_tilde - state.v),
            K_split=0.5 * prm.rho_s * _quad(o.M_s, v - v_tilde),
            T_lambda=te_new - self.beta**2 * self.traction_energy(state.lam),
            W_in=dt * float(load @ u),
            D_du=0.5 * prm.rho_f * (_quad(o.M_f, u_tilde - state.u) + _quad(o.M_f, u - u_tilde)),
            D_deta=0.5 * _quad(o.K_s, eta - state.eta),
            traction_energy=te_new,
            inflow_norm_sq=o.inflow_norm_sq(t_new, prm),
        )
        return new, row

    def _check_invariants(self, old: FsiState, new: FsiState):
        o = self.ops
        div = np.linalg.norm(o.B @ new.u)
        if div > 1e-10 * max(np.linalg.norm(new.u), 1e-300) and div > 1e-14 * max(new.max_abs(), 1e-300):
            raise InvariantError(f"divergence residual {div:.3e} at step {new.n}")
        for a, b, what in ((new.u_tilde, new.v_tilde, "step 1"), (new.u, new.v, "step 2")):
            gap = np.max(np.abs(o.T_F @ a - o.T_S @ b), initial=0.0)
            if gap != 0.0:
                raise InvariantError(f"kinematic condition violated in {what} by {gap:.3e} at step {new.n}")
        disp = np.max(np.abs(new.eta - old.eta - self.dt * new.v_tilde), initial=0.0)
        if disp > 1e-14 * max(np.max(np.abs(new.eta), initial=0.0), 1e-300):
            raise InvariantError(f"displacement update off by {disp:.3e} at step {new.n}")


def interior_changes(ops: ThickOperators, old: FsiState, new: FsiState) -> tuple[float, float]:
    """Max change of interior fluid velocity in step 1 and of interior structure velocity in step 2.

    Both vanish exactly with lumped mass matrices.
    """
    du = np.max(np.abs(new.u_tilde[ops.interior_fluid] - old.u[ops.interior_fluid]), initial=0.0)
    dv = np.max(np.abs(new.v[ops.interior_structure] - new.v_tilde[ops.interior_structure]), initial=0.0)
    return float(du), float(dv)

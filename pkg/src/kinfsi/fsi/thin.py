"""Fluid / thin-structure coupling: the kinematically coupled beta-scheme and a
monolithic backward-Euler reference.

The thin wall carries only a radial displacement, so the interface trace
picks the ``y`` velocity component and the axial velocity is zero on the wall.
The interface traction ``lam`` is the radial fluid normal stress in the P1
interface space, updated algebraically after each fluid solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..fem import (
    assemble_boundary_load,
    assemble_divergence,
    assemble_fluid_stiffness,
    assemble_mass,
    assemble_string_operator,
    boundary_constraints,
    interface_space,
    mini_space,
    p1_iso_p2_space,
    p1_space,
    pressure_pulse,
    trace_matrix,
)
from ..linalg import Factorization
from ..mesh import BoundaryTag, build_rectangle_mesh, extract_interface, uniform_refine
from .energy import LedgerRow
from .params import PhysicalParams
from .state import FsiState, zero_state


@dataclass
class ThinOperators:
    """Assembled, time-independent operators of the thin benchmark.

    ``M_f`` and ``M_g`` are unweighted mass matrices; ``A_f`` includes the
    viscosity; ``load_in``/``load_out`` are boundary loads for unit pressure
    (outward normal convention, see ``assemble_boundary_load``).
    """

    M_f: sp.csr_matrix
    A_f: sp.csr_matrix
    B: sp.csr_matrix
    T: sp.csr_matrix
    M_g: sp.csr_matrix
    K_s: sp.csr_matrix
    load_in: np.ndarray
    load_out: np.ndarray
    fluid_constraints: dict = field(default_factory=dict)
    structure_constraints: dict = field(default_factory=dict)
    mesh: object = None
    vel_space: object = None
    pres_space: object = None
    interface: object = None
    inflow_length: float = 0.0
    outflow_length: float = 0.0

    @property
    def n_u(self) -> int:
        return self.M_f.shape[0]

    @property
    def n_p(self) -> int:
        return self.B.shape[0]

    @property
    def n_s(self) -> int:
        return self.M_g.shape[0]

    def zero_state(self) -> FsiState:
        return zero_state(self.n_u, self.n_p, self.n_s, self.n_s, self.n_s)

    def inflow_load(self, t: float, params: PhysicalParams) -> np.ndarray:
        """Right-hand side of the prescribed normal stress ``-p n`` on inlet/outlet."""
        p_in = pressure_pulse(t, params.p_max, params.t_max)
        return -(p_in * self.load_in + params.p_out * self.load_out)

    def inflow_norm_sq(self, t: float, params: PhysicalParams) -> float:
        p_in = pressure_pulse(t, params.p_max, params.t_max)
        return p_in**2 * self.inflow_length + params.p_out**2 * self.outflow_length


def build_thin_operators(params: PhysicalParams, nx: int, ny: int, element: str = "mini") -> ThinOperators:
    mesh = build_rectangle_mesh(params.L, params.R, nx, ny)
    pres_space = p1_space(mesh)
    if element == "mini":
        vel_mesh = mesh
        vel_space = mini_space(mesh)
    elif element == "p1isop2":
        vel_mesh = uniform_refine(mesh)
        vel_space = p1_iso_p2_space(vel_mesh)
    else:
        raise ValueError(f"unknown velocity element {element!r}")

    interface = extract_interface(vel_mesh)
    gamma = interface_space(interface, 1)
    ends = [0, interface.n_nodes - 1]
    cons = boundary_constraints(
        vel_space, {BoundaryTag.BOTTOM: (1,), BoundaryTag.INTERFACE: (0,)}
    )
    for k in ends:
        cons[int(vel_space.dof(interface.parent_vertex[k], 1))] = 0.0

    return ThinOperators(
        M_f=assemble_mass(vel_mesh, vel_space, 1.0),
        A_f=assemble_fluid_stiffness(vel_mesh, vel_space, params.mu),
        B=assemble_divergence(vel_mesh, vel_space, pres_space),
        T=trace_matrix(vel_space, interface, gamma),
        M_g=assemble_mass(interface, gamma, 1.0),
        K_s=assemble_string_operator(interface, params.C0, params.C1),
        load_in=assemble_boundary_load(vel_mesh, vel_space, BoundaryTag.INLET, 1.0),
        load_out=assemble_boundary_load(vel_mesh, vel_space, BoundaryTag.OUTLET, 1.0),
        fluid_constraints=cons,
        structure_constraints={k: 0.0 for k in ends},
        mesh=vel_mesh,
        vel_space=vel_space,
        pres_space=pres_space,
        interface=interface,
        inflow_length=params.R,
        outflow_length=params.R,
    )


def _saddle(K, B):
    n_p = B.shape[0]
    return sp.bmat([[K, -B.T], [-B, sp.csr_matrix((n_p, n_p))]], format="csr")


def update_traction(lam, v_new, v_tilde, beta: float, dt: float, rho_s_eps: float) -> np.ndarray:
    """``lam^{n+1} = beta lam^n - (rho_s eps / dt)(v^{n+1} - v~^{n+1})`` nodewise."""
    return beta * np.asarray(lam) - (rho_s_eps / dt) * (np.asarray(v_new) - np.asarray(v_tilde))


def _quad(M, x):
    return float(x @ (M @ x))


class BetaScheme:
    """Kinematically coupled beta-scheme; operators are factored once per (beta, dt)."""

    def __init__(self, ops: ThinOperators, params: PhysicalParams, beta: float, dt: float, tol: float = 1e-10,
                 check_invariants: bool = True):
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {beta}")
        self.ops, self.params, self.beta, self.dt = ops, params, beta, dt
        self.check_invariants = check_invariants
        m = params.rho_s_eps / dt
        self._m = m
        self._struct = Factorization(m * ops.M_g + dt * ops.K_s, ops.structure_constraints, tol=tol)
        K = (params.rho_f / dt) * ops.M_f + ops.A_f + m * (ops.T.T @ ops.M_g @ ops.T)
        self._fluid = Factorization(_saddle(K, ops.B), ops.fluid_constraints, tol=tol)

    def step_structure(self, state: FsiState):
        """Structure sub-step: returns ``(v_tilde, eta_new)``; the fluid is untouched."""
        o = self.ops
        rhs = self._m * (o.M_g @ state.v) - o.K_s @ state.eta - self.beta * (o.M_g @ state.lam)
        v_tilde = self._struct.solve(rhs)
        return v_tilde, state.eta + self.dt * v_tilde

    def step_fluid(self, state: FsiState, v_tilde: np.ndarray, load: np.ndarray):
        """Fluid sub-step with the Robin-type interface inertia: returns ``(u, p, v)``."""
        o = self.ops
        rhs_u = (self.params.rho_f / self.dt) * (o.M_f @ state.u) + load
        rhs_u = rhs_u + o.T.T @ (o.M_g @ (self._m * v_tilde + self.beta * state.lam))
        x = self._fluid.solve(np.concatenate([rhs_u, np.zeros(o.n_p)]))
        u, p = x[: o.n_u], x[o.n_u :]
        return u, p, o.T @ u

    def update_traction(self, lam, v_new, v_tilde):
        return update_traction(lam, v_new, v_tilde, self.beta, self.dt, self.params.rho_s_eps)

    def traction_energy(self, lam) -> float:
        return self.dt**2 / (2.0 * self.params.rho_s_eps) * _quad(self.ops.M_g, lam)

    def advance(self, state: FsiState) -> tuple[FsiState, LedgerRow]:
        o, prm, dt = self.ops, self.params, self.dt
        t_new = state.t + dt
        v_tilde, eta = self.step_structure(state)
        load = o.inflow_load(t_new, prm)
        u, p, v = self.step_fluid(state, v_tilde, load)
        lam = self.update_traction(state.lam, v, v_tilde)
        new = FsiState(u, p, eta, v, v_tilde, lam, t_new, state.n + 1)
        if self.check_invariants:
            _check_split_invariants(self, state, new)
        m2 = 0.5 * prm.rho_s_eps
        row = LedgerRow(
            step=new.n,
            t=t_new,
            **thin_energies(o, prm, new),
            D_visc=dt * _quad(o.A_f, u),
            K_tilde=m2 * _quad(o.M_g, v_tilde - state.v),
            K_split=m2 * _quad(o.M_g, v - v_tilde),
            T_lambda=self.traction_energy(lam) - self.beta**2 * self.traction_energy(state.lam),
            W_in=dt * float(load @ u),
            D_du=0.5 * prm.rho_f * _quad(o.M_f, u - state.u),
            D_deta=0.5 * _quad(o.K_s, eta - state.eta),
            traction_energy=self.traction_energy(lam),
            inflow_norm_sq=o.inflow_norm_sq(t_new, prm),
        )
        return new, row


class MonolithicScheme:
    """Backward Euler on the fully coupled problem, structure eliminated by
    ``v = T u`` and ``eta^{n+1} = eta^n + dt v^{n+1}``."""

    def __init__(self, ops: ThinOperators, params: PhysicalParams, dt: float, tol: float = 1e-10,
                 check_invariants: bool = True):
        self.ops, self.params, self.dt = ops, params, dt
        self.beta = None
        self.check_invariants = check_invariants
        self._m = params.rho_s_eps / dt
        S = self._m * ops.M_g + dt * ops.K_s
        K = (params.rho_f / dt) * ops.M_f + ops.A_f + ops.T.T @ S @ ops.T
        self._fluid = Factorization(_saddle(K, ops.B), ops.fluid_constraints, tol=tol)
        self._mass_g = Factorization(ops.M_g, ops.structure_constraints, tol=tol)

    def traction_energy(self, lam) -> float:
        return 0.0

    def advance(self, state: FsiState) -> tuple[FsiState, LedgerRow]:
        o, prm, dt = self.ops, self.params, self.dt
        t_new = state.t + dt
        load = o.inflow_load(t_new, prm)
        rhs_u = (prm.rho_f / dt) * (o.M_f @ state.u) + load
        rhs_u = rhs_u + o.T.T @ (self._m * (o.M_g @ state.v) - o.K_s @ state.eta)
        x = self._fluid.solve(np.concatenate([rhs_u, np.zeros(o.n_p)]))
        u, p = x[: o.n_u], x[o.n_u :]
        v = o.T @ u
        eta = state.eta + dt * v
        # traction from the structure equation: M lam = -(rho eps / dt) M (v - v^n) - K eta
        lam = self._mass_g.solve(-self._m * (o.M_g @ (v - state.v)) - o.K_s @ eta)
        new = FsiState(u, p, eta, v, v.copy(), lam, t_new, state.n + 1)
        row = LedgerRow(
            step=new.n,
            t=t_new,
            **thin_energies(o, prm, new),
            D_visc=dt * _quad(o.A_f, u),
            K_tilde=0.5 * prm.rho_s_eps * _quad(o.M_g, v - state.v),
            K_split=0.0,
            T_lambda=0.0,
            W_in=dt * float(load @ u),
            D_du=0.5 * prm.rho_f * _quad(o.M_f, u - state.u),
            D_deta=0.5 * _quad(o.K_s, eta - state.eta),
            inflow_norm_sq=o.inflow_norm_sq(t_new, prm),
        )
        return new, row


def thin_energies(ops: ThinOperators, params: PhysicalParams, state: FsiState) -> dict:
    """``E_f = rho_f/2 |u|^2``, ``E_v = rho_s eps/2 |v|^2_Gamma``, ``E_s = 1/2 |eta|_S^2``."""
    return {
        "E_f": 0.5 * params.rho_f * _quad(ops.M_f, state.u),
        "E_v": 0.5 * params.rho_s_eps * _quad(ops.M_g, state.v),
        "E_s": 0.5 * _quad(ops.K_s, state.eta),
    }


class InvariantError(AssertionError):
    pass


def _check_split_invariants(scheme: BetaScheme, old: FsiState, new: FsiState):
    o = scheme.ops
    scale = max(new.max_abs(), old.max_abs(), 1e-300)
    div = np.linalg.norm(o.B @ new.u)
    if div > 1e-10 * max(np.linalg.norm(new.u), 1e-300) and div > 1e-14 * scale:
        raise InvariantError(f"divergence residual {div:.3e} at step {new.n}")
    kin = np.max(np.abs(o.T @ new.u - new.v), initial=0.0)
    if kin != 0.0:
        raise InvariantError(f"kinematic condition violated by {kin:.3e} at step {new.n}")
    disp = np.max(np.abs(new.eta - old.eta - scheme.dt * new.v_tilde), initial=0.0)
    if disp > 1e-14 * max(np.max(np.abs(new.eta), initial=0.0), 1e-300):
        raise InvariantError(f"displacement update off by {disp:.3e} at step {new.n}")

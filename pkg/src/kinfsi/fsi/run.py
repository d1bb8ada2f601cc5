"""Time loop driver shared by all schemes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import EnergyLedger, LedgerRow
from .params import PhysicalParams, SchemeConfig, SchemeKind
from .state import FsiState

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    config: SchemeConfig
    params: PhysicalParams
    ops: object
    scheme: object
    state: FsiState
    ledger: EnergyLedger
    snapshots: dict = field(default_factory=dict)
    splitting_residuals: list = field(default_factory=list)


def build_operators(cfg: SchemeConfig, params: PhysicalParams):
    from .thick import build_thick_operators
    from .thin import build_thin_operators

    ny = cfg.resolved_ny(params)
    if cfg.scheme is SchemeKind.SPLIT_THICK:
        return build_thick_operators(params, cfg.nx, ny, lumped_mass=cfg.lumped_mass)
    return build_thin_operators(params, cfg.nx, ny, element=cfg.resolved_element())


def make_scheme(cfg: SchemeConfig, params: PhysicalParams, ops):
    from .thick import ThickBetaScheme
    from .thin import BetaScheme, MonolithicScheme

    kw = dict(tol=cfg.tol, check_invariants=cfg.check_invariants)
    if cfg.scheme is SchemeKind.SPLIT_THIN:
        return BetaScheme(ops, params, cfg.beta, cfg.dt, **kw)
    if cfg.scheme is SchemeKind.MONOLITHIC_THIN:
        return MonolithicScheme(ops, params, cfg.dt, **kw)
    return ThickBetaScheme(ops, params, cfg.beta, cfg.dt, lumped_traction_mass=cfg.lumped_traction_mass, **kw)


def splitting_residual(old: FsiState, new: FsiState, beta: float, dt: float, rho_m: float) -> float:
    """Max nodal ``|lam^{n+1} - beta lam^n + (rho/dt)(v - v~)|`` scaled by the traction size."""
    r = new.lam - beta * old.lam + (rho_m / dt) * (new.v - new.v_tilde)
    scale = max(np.max(np.abs(new.lam), initial=0.0), np.max(np.abs(old.lam), initial=0.0))
    if scale == 0.0:
        return float(np.max(np.abs(r), initial=0.0))
    return float(np.max(np.abs(r)) / scale)


def initial_row(scheme, state: FsiState) -> LedgerRow:
    energies = scheme.energies(state) if hasattr(scheme, "energies") else _thin_energies(scheme, state)
    return LedgerRow(
        step=state.n, t=state.t, **energies, D_visc=0.0, K_tilde=0.0, K_split=0.0, T_lambda=0.0, W_in=0.0,
        traction_energy=scheme.traction_energy(state.lam),
    )


def _thin_energies(scheme, state):
    from .thin import thin_energies

    return thin_energies(scheme.ops, scheme.params, state)


def simulate(
    cfg: SchemeConfig,
    params: PhysicalParams | None = None,
    ops=None,
    initial: FsiState | None = None,
    snapshot_steps=(),
    snapshot_dir=None,
) -> RunResult:
    """Run ``cfg.n_steps`` steps from rest (or from ``initial``).

    States at ``snapshot_steps`` are kept in ``RunResult.snapshots``, or
    written to ``snapshot_dir`` instead when one is given.
    """
    params = params or PhysicalParams()
    ops = ops if ops is not None else build_operators(cfg, params)
    scheme = make_scheme(cfg, params, ops)
    state = initial.copy() if initial is not None else ops.zero_state()
    ledger = EnergyLedger()
    ledger.append(initial_row(scheme, state))
    snapshots = {}
    snapshot_steps = set(snapshot_steps)

    def keep(st):
        if st.n not in snapshot_steps:
            return
        if snapshot_dir is not None:
            write_snapshot(st, snapshot_dir)
        else:
            snapshots[st.n] = st.copy()

    keep(state)
    residuals = []
    rho_m = params.rho_s_eps if cfg.scheme is not SchemeKind.SPLIT_THICK else None
    for _ in range(cfg.n_steps):
        new, row = scheme.advance(state)
        if cfg.scheme is SchemeKind.SPLIT_THIN:
            residuals.append(splitting_residual(state, new, cfg.beta, cfg.dt, rho_m))
        elif cfg.scheme is SchemeKind.SPLIT_THICK:
            residuals.append(scheme.splitting_residual(state, new))
        ledger.append(row)
        state = new
        keep(state)
    log.debug("finished %s: %d steps", cfg.scheme.value, cfg.n_steps)
    return RunResult(cfg, params, ops, scheme, state, ledger, snapshots, residuals)


def write_snapshot(state: FsiState, directory: str | Path) -> None:
    """One plain-text file per field, ``index value`` per line."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in ("u", "p", "eta", "v", "v_tilde", "lam"):
        vec = getattr(state, name)
        lines = ["%d %.17g" % (i, x) for i, x in enumerate(vec)]
        (directory / f"{name}_{state.n:06d}.txt").write_text("\n".join(lines) + "\n")


def _advance(scheme, state: FsiState, ledger: EnergyLedger | None) -> FsiState:
    new, row = scheme.advance(state)
    if ledger is not None:
        ledger.append(row)
    return new


def advance_split(state: FsiState, scheme, ledger: EnergyLedger | None = None) -> FsiState:
    """One step of the thin beta-scheme; the ledger row is appended if a ledger is given."""
    return _advance(scheme, state, ledger)


def advance_monolithic(state: FsiState, scheme, ledger: EnergyLedger | None = None) -> FsiState:
    return _advance(scheme, state, ledger)


def advance_thick(state: FsiState, scheme, ledger: EnergyLedger | None = None) -> FsiState:
    return _advance(scheme, state, ledger)


def compute_energies(state: FsiState, params: PhysicalParams, ops) -> tuple[float, float, float]:
    """``(E_f, E_v, E_s)``; the structure energies follow the operator family."""
    from .thick import ThickOperators
    from .thin import _quad, thin_energies

    if isinstance(ops, ThickOperators):
        e = {
            "E_f": 0.5 * params.rho_f * _quad(ops.M_f, state.u),
            "E_v": 0.5 * params.rho_s * _quad(ops.M_s, state.v),
            "E_s": 0.5 * _quad(ops.K_s, state.eta),
        }
    else:
        e = thin_energies(ops, params, state)
    return e["E_f"], e["E_v"], e["E_s"]

"""Fluid-structure coupling schemes."""
from .energy import LEDGER_COLUMNS, EnergyLedger, LedgerRow, StabilityReport, check_stability_bound
from .params import PhysicalParams, SchemeConfig, SchemeKind
from .run import (
    RunResult,
    advance_monolithic,
    advance_split,
    advance_thick,
    build_operators,
    compute_energies,
    make_scheme,
    simulate,
    write_snapshot,
)
from .state import FsiState, zero_state
from .thick import ThickBetaScheme, ThickOperators, build_thick_operators, interior_changes, lump
from .thin import (
    BetaScheme,
    InvariantError,
    MonolithicScheme,
    ThinOperators,
    build_thin_operators,
    thin_energies,
    update_traction,
)

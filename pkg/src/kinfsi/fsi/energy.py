"""Per-step energy bookkeeping and the discrete stability check.

Each step records the terms of the discrete energy identity

    E(n+1) - E(n) + D_visc + K_tilde + T_lambda + D_du + D_deta = W_in

where ``E = E_f + E_v + E_s``, ``D_du`` and ``D_deta`` are the backward-Euler
increments ``rho_f/2 |u^{n+1} - u^n|^2`` and ``1/2 |eta^{n+1} - eta^n|_S^2``
(the thick scheme sums both fluid sub-steps into ``D_du``). The splitting kick
``K_split`` cancels against part of the traction term and is recorded for
inspection only.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

LEDGER_COLUMNS = (
    "step",
    "t",
    "E_f",
    "E_v",
    "E_s",
    "D_visc",
    "K_tilde",
    "K_split",
    "T_lambda",
    "W_in",
    "balance_residual",
)


@dataclass
class LedgerRow:
    step: int
    t: float
    E_f: float
    E_v: float
    E_s: float
    D_visc: float
    K_tilde: float
    K_split: float
    T_lambda: float
    W_in: float
    balance_residual: float = 0.0
    # terms kept in memory but not written to the CSV
    D_du: float = 0.0
    D_deta: float = 0.0
    traction_energy: float = 0.0
    inflow_norm_sq: float = 0.0

    @property
    def total(self) -> float:
        return self.E_f + self.E_v + self.E_s

    @property
    def total_with_traction(self) -> float:
        return self.total + self.traction_energy


def balance_residual(row: LedgerRow, previous_total: float) -> float:
    terms = np.array(
        [row.total, -previous_total, row.D_visc, row.K_tilde, row.T_lambda, row.D_du, row.D_deta, -row.W_in]
    )
    scale = np.sum(np.abs(terms))
    return float(abs(terms.sum()) / scale) if scale > 0 else 0.0


@dataclass
class EnergyLedger:
    """Energy history; row 0 holds the initial state."""

    rows: list[LedgerRow] = field(default_factory=list)

    def append(self, row: LedgerRow) -> LedgerRow:
        if self.rows:
            row.balance_residual = balance_residual(row, self.rows[-1].total)
        self.rows.append(row)
        return row

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for r in self.rows:
            d = asdict(r)
            w.writerow([d["step"]] + [repr(float(d[c])) for c in LEDGER_COLUMNS[1:]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass
class StabilityReport:
    lhs: float
    rhs: float
    identity_rhs: float
    constant: float
    monotone: bool
    worst_increase: float
    max_balance_residual: float
    nonnegative_dissipation: bool
    steps_checked: int

    def __str__(self):
        return (
            f"LHS={self.lhs:.6e} RHS={self.rhs:.6e} C={self.constant:.4f} "
            f"monotone={self.monotone} worst_increase={self.worst_increase:.3e} "
            f"max_balance_residual={self.max_balance_residual:.3e}"
        )


def check_stability_bound(
    ledger: EnergyLedger, dt, monotone_tol: float = 1e-10, forcing_free=None
) -> StabilityReport:
    """Evaluate both sides of the discrete stability estimate for a finished run.

    LHS: final energies plus traction energy plus every accumulated dissipation
    and kick term. RHS: initial energies plus traction energy plus
    ``dt * sum |p_in/out(t^{n+1})|^2_{L2(Sigma)}``; the reported constant is
    LHS / RHS. ``identity_rhs`` replaces the last sum by the exact inflow work.

    Monotonicity of ``E + traction energy`` is checked on steps where
    ``forcing_free[n]`` is true (default: steps with zero inflow norm).
    ``dt`` may be a float or anything with a ``dt`` attribute (a scheme config).
    """
    dt = float(getattr(dt, "dt", dt))
    rows = ledger.rows
    if not rows:
        raise ValueError("empty ledger")
    first, last = rows[0], rows[-1]
    steps = rows[1:]
    dissipation = sum(r.D_visc + r.K_tilde + r.D_du + r.D_deta for r in steps)
    lhs = last.total_with_traction + dissipation
    rhs = first.total_with_traction + dt * sum(r.inflow_norm_sq for r in steps)
    identity_rhs = first.total_with_traction + sum(r.W_in for r in steps)
    constant = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)

    worst = 0.0
    checked = 0
    monotone = True
    for k in range(1, len(rows)):
        free = rows[k].inflow_norm_sq == 0.0 if forcing_free is None else forcing_free[k]
        if not free:
            continue
        checked += 1
        before, after = rows[k - 1].total_with_traction, rows[k].total_with_traction
        increase = (after - before) / max(abs(before), np.finfo(float).tiny)
        worst = max(worst, increase)
        if increase > monotone_tol:
            monotone = False
    nonneg = all(min(r.D_visc, r.K_tilde, r.K_split, r.D_du, r.D_deta) >= 0 for r in steps)
    return StabilityReport(
        lhs=lhs,
        rhs=rhs,
        identity_rhs=identity_rhs,
        constant=constant,
        monotone=monotone,
        worst_increase=worst,
        max_balance_residual=max((r.balance_residual for r in steps), default=0.0),
        nonnegative_dissipation=nonneg,
        steps_checked=checked,
    )

"""Small self-check of the scheme invariants, used by ``--seed-check``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..fsi import (
    InvariantError,
    PhysicalParams,
    SchemeConfig,
    SchemeKind,
    build_operators,
    check_stability_bound,
    make_scheme,
    simulate,
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def __str__(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _zero_preserved(kind, nx, params):
    quiet = replace(params, p_max=0.0, p_out=0.0)
    cfg = SchemeConfig(scheme=kind, dt=1e-3, T=0.005, nx=nx)
    res = simulate(cfg, quiet)
    m = res.state.max_abs()
    return Check(f"zero data stays zero ({kind.value})", m == 0.0, f"max |x| = {m:.1e}")


def _pulse_run(kind, nx, params, beta=1.0):
    cfg = SchemeConfig(scheme=kind, beta=beta, dt=1e-3, T=0.008, nx=nx)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return simulate(cfg, params)


def run_invariant_suite(nx: int = 20, params: PhysicalParams | None = None) -> list[Check]:
    """Zero preservation, energy balance, splitting identity, monotone decay and
    beta independence on a coarse mesh. Kinematic and displacement-update
    invariants are asserted inside every step of the runs."""
    params = params or PhysicalParams()
    checks = []
    for kind in SchemeKind:
        try:
            checks.append(_zero_preserved(kind, nx, params))
            res = _pulse_run(kind, nx, params)
        except InvariantError as exc:
            checks.append(Check(f"step invariants ({kind.value})", False, str(exc)))
            continue
        checks.append(Check(f"step invariants ({kind.value})", True, "kinematic, divergence, displacement update"))
        rep = check_stability_bound(res.ledger, res.config)
        checks.append(Check(
            f"energy balance ({kind.value})", rep.max_balance_residual <= 1e-8,
            f"max residual {rep.max_balance_residual:.2e}",
        ))
        checks.append(Check(
            f"monotone energy after pulse ({kind.value})", rep.monotone,
            f"worst relative increase {rep.worst_increase:.2e}",
        ))
        if res.splitting_residuals:
            worst = max(res.splitting_residuals)
            checks.append(Check(f"splitting identity ({kind.value})", worst <= 1e-12, f"max residual {worst:.2e}"))

    # one step from rest with the traction forced to zero does not depend on beta
    cfg = SchemeConfig(dt=1e-4, T=1e-4, nx=nx)
    ops = build_operators(cfg, params)
    outs = []
    for beta in (0.0, 0.5, 1.0):
        scheme = make_scheme(replace(cfg, beta=beta), params, ops)
        new, _ = scheme.advance(ops.zero_state())
        outs.append(np.concatenate([new.u, new.p, new.eta]))
    diff = max(float(np.max(np.abs(o - outs[0]))) for o in outs)
    checks.append(Check("beta independence with zero traction", diff == 0.0, f"max difference {diff:.1e}"))
    return checks

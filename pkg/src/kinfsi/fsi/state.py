from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class FsiState:
    """Coefficient vectors at one time level.

    Units: velocities cm/s, pressure and traction dyne/cm^2, displacement cm.
    ``lam`` is the interface traction (fluid normal stress) in the interface
    trace space. ``u_tilde`` is only used by the thick-structure scheme.
    """

    u: np.ndarray
    p: np.ndarray
    eta: np.ndarray
    v: np.ndarray
    v_tilde: np.ndarray
    lam: np.ndarray
    t: float = 0.0
    n: int = 0
    u_tilde: np.ndarray | None = None

    def copy(self) -> "FsiState":
        arrays = {
            k: (None if getattr(self, k) is None else np.array(getattr(self, k)))
            for k in ("u", "p", "eta", "v", "v_tilde", "lam", "u_tilde")
        }
        return replace(self, **arrays)

    def max_abs(self) -> float:
        vals = [np.max(np.abs(a)) for a in (self.u, self.p, self.eta, self.v, self.lam) if a.size]
        return float(max(vals, default=0.0))


def zero_state(n_u: int, n_p: int, n_eta: int, n_v: int, n_lam: int, thick: bool = False) -> FsiState:
    return FsiState(
        u=np.zeros(n_u),
        p=np.zeros(n_p),
        eta=np.zeros(n_eta),
        v=np.zeros(n_v),
        v_tilde=np.zeros(n_v),
        lam=np.zeros(n_lam),
        u_tilde=np.zeros(n_u) if thick else None,
    )

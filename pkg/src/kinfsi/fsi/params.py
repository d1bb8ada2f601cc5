"""Physical constants (CGS units) and scheme configuration."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

from ..fem.assembly import string_coefficients


class SchemeKind(enum.Enum):
    SPLIT_THIN = "SPLIT_THIN"
    MONOLITHIC_THIN = "MONOLITHIC_THIN"
    SPLIT_THICK = "SPLIT_THICK"


@dataclass(frozen=True)
class PhysicalParams:
    """Benchmark constants; ``C0``/``C1`` default to the string-model formulas."""

    rho_f: float = 1.0
    mu: float = 0.035
    rho_s: float = 1.1
    eps: float = 0.1
    E: float = 0.75e6
    poisson: float = 0.5
    R: float = 0.5
    L: float = 5.0
    C0: float | None = None
    C1: float | None = None
    mu_s: float = 2.586e5
    lam_s: float = 2.328e6
    C_as: float = 4.0e6
    H_s: float = 0.1
    p_max: float = 1.3333e4
    t_max: float = 0.003
    p_out: float = 0.0

    def __post_init__(self):
        for name in ("rho_f", "mu", "rho_s", "eps", "R", "L", "H_s", "t_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"physical parameter {name} must be positive, got {getattr(self, name)}")
        c0, c1 = string_coefficients(self.E, self.eps, self.R, self.poisson)
        if self.C0 is None:
            object.__setattr__(self, "C0", c0)
        if self.C1 is None:
            object.__setattr__(self, "C1", c1)

    @property
    def rho_s_eps(self) -> float:
        return self.rho_s * self.eps

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme knobs. ``h`` is the coarse (pressure) mesh size ``L / nx``.

    ``ny`` defaults to ``round(nx * R / L)`` so that cells are square.
    """

    scheme: SchemeKind = SchemeKind.SPLIT_THIN
    beta: float = 1.0
    dt: float = 1e-4
    T: float = 0.008
    nx: int = 80
    ny: int | None = None
    element: str | None = None
    tol: float = 1e-10
    lumped_mass: bool = False
    lumped_traction_mass: bool = False
    check_invariants: bool = True

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= 0:
            raise ValueError(f"T must be non-negative, got {self.T}")
        self.n_steps  # validates T = N dt

    @property
    def n_steps(self) -> int:
        n = round(self.T / self.dt)
        if not math.isclose(n * self.dt, self.T, rel_tol=1e-9, abs_tol=1e-15):
            raise ValueError(f"T={self.T} is not an integer multiple of dt={self.dt}")
        return n

    def resolved_ny(self, params: PhysicalParams) -> int:
        if self.ny is not None:
            return self.ny
        return max(1, round(self.nx * params.R / params.L))

    def resolved_element(self) -> str:
        if self.element is not None:
            return self.element
        return "p1isop2" if self.scheme is SchemeKind.SPLIT_THICK else "mini"

"""Temporal convergence and thick-structure scaling studies."""
from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..fsi import (
    PhysicalParams,
    SchemeConfig,
    SchemeKind,
    build_operators,
    check_stability_bound,
    simulate,
)
from .norms import NormKind, fit_rate_with_residual, state_error
from .svg import write_loglog_svg

log = logging.getLogger(__name__)

SCALINGS = {"h": 1.0, "h^1.5": 1.5}
RATE_COLUMNS = ("case", "norm", "step", "error", "slope")


def _divides(T: float, dt: float) -> bool:
    n = round(T / dt)
    return n >= 1 and math.isclose(n * dt, T, rel_tol=1e-9)


def snap_dt(T: float, dt: float) -> float:
    """Nearest step of the form ``T / N`` (so that it divides ``T`` exactly)."""
    return T / max(1, round(T / dt))


@dataclass(frozen=True)
class StudySpec:
    """Description of a convergence study.

    Time studies sweep ``betas x dts`` on one mesh against a reference run
    with ``reference_beta`` and ``dt_ref`` on the same mesh. Thick scaling
    studies sweep ``nx_list`` with ``dt = dt0 (h / h0)^p`` for each scaling
    ``p`` in ``scalings``, ``h0`` being the coarsest mesh size. The thick
    reference is either ``"per_mesh"`` (same mesh, step ``dt_ref``) or
    ``"finest"`` (mesh ``ref_nx`` and step ``dt_ref``, injected nodewise).
    ``strict=False`` allows ``dt_ref`` equal to the smallest step.
    """

    scheme: SchemeKind = SchemeKind.SPLIT_THIN
    betas: tuple = (1.0, 0.0)
    dts: tuple = (4e-4, 2e-4, 1e-4, 5e-5)
    T: float = 0.008
    dt_ref: float = 6.25e-6
    nx: int = 80
    ny: int | None = None
    norms: tuple = (NormKind.L2, NormKind.S)
    reference_beta: float = 1.0
    nx_list: tuple = (20, 40, 80)
    scalings: tuple = ("h", "h^1.5")
    dt0: float = 5e-4
    reference: str = "per_mesh"
    ref_nx: int | None = None
    lumped_mass: bool = False
    stability_threshold: float = 1.0
    params: PhysicalParams = field(default_factory=PhysicalParams)
    strict: bool = True

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        object.__setattr__(self, "norms", tuple(NormKind(n) for n in self.norms))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "dts", tuple(float(d) for d in self.dts))
        object.__setattr__(self, "nx_list", tuple(int(n) for n in self.nx_list))
        if not self.T > 0 or not self.dt_ref > 0:
            raise ValueError("T and dt_ref must be positive")
        if not _divides(self.T, self.dt_ref):
            raise ValueError(f"dt_ref={self.dt_ref} does not divide T={self.T}")
        for b in self.betas + (self.reference_beta,):
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"beta must lie in [0, 1], got {b}")
        for s in self.scalings:
            if s not in SCALINGS:
                raise ValueError(f"unknown scaling {s!r}; expected one of {sorted(SCALINGS)}")
        if self.reference not in ("per_mesh", "finest"):
            raise ValueError(f"unknown reference mode {self.reference!r}")
        steps = self.dts if self.scheme is not SchemeKind.SPLIT_THICK else tuple(
            d for s in self.scalings for d in self.scaled_dts(s)
        )
        if not steps:
            raise ValueError("study has no time steps")
        for d in steps:
            if not _divides(self.T, d):
                raise ValueError(f"dt={d} does not divide T={self.T}")
        smallest = min(steps)
        if self.dt_ref > smallest or (self.strict and self.dt_ref >= smallest):
            raise ValueError(f"reference dt {self.dt_ref} must be smaller than every study dt (min {smallest})")

    def h_of(self, nx: int) -> float:
        return self.params.L / nx

    def scaled_dts(self, scaling: str) -> list[float]:
        p = SCALINGS[scaling]
        h0 = self.h_of(self.nx_list[0])
        return [snap_dt(self.T, self.dt0 * (self.h_of(n) / h0) ** p) for n in self.nx_list]


@dataclass
class RateReport:
    """Errors per case and the fitted log-log slope per (case, norm).

    ``cases[name]`` is a list of ``(step, {norm: error})`` with ``step`` the
    time step (time studies) or mesh size (scaling studies).
    """

    kind: str
    cases: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)

    def errors(self, case: str, norm) -> list[tuple[float, float]]:
        norm = NormKind(norm).value
        return [(s, e[norm]) for s, e in self.cases[case]]

    def slope(self, case: str, norm) -> float:
        return self.slopes[(case, NormKind(norm).value)][0]

    def fit(self):
        self.slopes = {}
        for case, rows in self.cases.items():
            for norm in sorted({n for _, e in rows for n in e}):
                pts = [(s, e[norm]) for s, e in rows]
                try:
                    self.slopes[(case, norm)] = fit_rate_with_residual(pts)
                except ValueError:
                    self.slopes[(case, norm)] = (float("nan"), float("nan"))
        return self

    def rows(self):
        for case in sorted(self.cases):
            rows = sorted(self.cases[case], key=lambda r: -r[0])
            for norm in sorted({n for _, e in rows for n in e}):
                slope = self.slopes.get((case, norm), (float("nan"),))[0]
                for step, errs in rows:
                    yield case, norm, step, errs[norm], slope

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RATE_COLUMNS)
        for case, norm, step, err, slope in self.rows():
            w.writerow([case, norm, repr(float(step)), repr(float(err)), repr(float(slope))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_figures(self, directory, prefix: str) -> list[Path]:
        directory = Path(directory)
        out = []
        norms = sorted({n for rows in self.cases.values() for _, e in rows for n in e})
        xlabel = "dt [s]" if self.kind == "time" else "h [cm]"
        for norm in norms:
            series = {
                f"{case} ({self.slopes.get((case, norm), (float('nan'),))[0]:.2f})": [
                    (s, e[norm]) for s, e in self.cases[case]
                ]
                for case in sorted(self.cases)
            }
            path = directory / f"figure_{prefix}_{norm}.svg"
            write_loglog_svg(path, series, title=f"relative error, {norm}", xlabel=xlabel, ylabel="error")
            out.append(path)
        return out

    def emit(self, directory, prefix: str) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.to_csv(directory / "rates.csv")
        self.write_figures(directory, prefix)


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _config(spec: StudySpec, beta: float, dt: float, nx: int, ny=None) -> SchemeConfig:
    return SchemeConfig(
        scheme=spec.scheme, beta=beta, dt=dt, T=spec.T, nx=nx, ny=ny,
        lumped_mass=spec.lumped_mass, check_invariants=False,
    )


def _errors(spec, ops, cand, ref) -> dict:
    return {n.value: state_error(ops, n, cand, ref, spec.params) for n in spec.norms}


def run_time_convergence(spec: StudySpec, threads: int = 1, output_dir=None, reference=None) -> RateReport:
    """Run the reference once and each ``(beta, dt)`` case once; errors at ``T``.

    Case names are ``beta=<value>``; ``reference`` may pass a precomputed
    final reference state.
    """
    prm = spec.params
    base = _config(spec, spec.reference_beta, spec.dt_ref, spec.nx, spec.ny)
    ops = build_operators(base, prm)
    if reference is None:
        reference = simulate(base, prm, ops).state
    cases = [(b, d) for b in spec.betas for d in spec.dts]

    def one(case):
        beta, dt = case
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            st = simulate(_config(spec, beta, dt, spec.nx, spec.ny), prm, ops).state
        return _errors(spec, ops, st, reference)

    results = _map(one, cases, threads)
    report = RateReport("time")
    for (beta, dt), errs in zip(cases, results):
        report.cases.setdefault(f"beta={beta:g}", []).append((dt, errs))
        log.info("beta=%g dt=%g %s", beta, dt, errs)
    report.fit()
    if output_dir is not None:
        report.emit(output_dir, "time")
    return report


def _coordinate_index(points: np.ndarray) -> dict:
    return {(round(x, 10), round(y, 10)): i for i, (x, y) in enumerate(points)}


def injection(fine_points: np.ndarray, coarse_points: np.ndarray, ncomp: int) -> np.ndarray:
    """Dof indices of the fine vector at the coarse vertices (interleaved components)."""
    index = _coordinate_index(fine_points)
    try:
        verts = np.array([index[(round(x, 10), round(y, 10))] for x, y in coarse_points])
    except KeyError as exc:
        raise ValueError(f"coarse vertex {exc} is not a vertex of the reference mesh") from None
    return (ncomp * verts[:, None] + np.arange(ncomp)).ravel()


def _restrict(ref_state, ref_ops, ops):
    """Fine thick reference state sampled at the vertices of a coarser thick mesh."""
    iu = injection(ref_ops.fluid_mesh.vertices, ops.fluid_mesh.vertices, 2)
    ie = injection(ref_ops.structure_mesh.vertices, ops.structure_mesh.vertices, 2)
    st = ops.zero_state()
    st.u = ref_state.u[iu]
    st.eta = ref_state.eta[ie]
    st.v = ref_state.v[ie]
    return st


def run_thick_scaling(spec: StudySpec, threads: int = 1, output_dir=None) -> RateReport:
    """Error-vs-h study for each ``dt(h)`` scaling; case names ``dt=c*<scaling>``.

    Each run's energy history is also checked for monotone decay after the
    pulse whenever ``dt^2 <= stability_threshold * h``.
    """
    prm = spec.params
    nx_all = sorted(set(spec.nx_list) | ({spec.ref_nx or max(spec.nx_list)} if spec.reference == "finest" else set()))
    ops = {nx: build_operators(_config(spec, 1.0, spec.dt_ref, nx), prm) for nx in nx_all}

    def ref_run(nx):
        return simulate(_config(spec, spec.reference_beta, spec.dt_ref, nx), prm, ops[nx]).state

    if spec.reference == "per_mesh":
        refs = dict(zip(spec.nx_list, _map(ref_run, list(spec.nx_list), threads)))
    else:
        rnx = spec.ref_nx or max(spec.nx_list)
        fine = ref_run(rnx)
        refs = {nx: _restrict(fine, ops[rnx], ops[nx]) for nx in spec.nx_list}

    cases = [(s, nx, dt) for s in spec.scalings for nx, dt in zip(spec.nx_list, spec.scaled_dts(s))]

    def one(case):
        scaling, nx, dt = case
        beta = spec.betas[0] if spec.betas else 1.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = simulate(_config(spec, beta, dt, nx), prm, ops[nx])
        stab = check_stability_bound(res.ledger, dt)
        return _errors(spec, ops[nx], res.state, refs[nx]), stab

    report = RateReport("thick")
    for (scaling, nx, dt), (errs, stab) in zip(cases, _map(one, cases, threads)):
        h = spec.h_of(nx)
        name = f"dt=c*{scaling}"
        report.cases.setdefault(name, []).append((h, errs))
        report.stability[(name, h)] = {
            "dt": dt,
            "dt2_over_h": dt**2 / h,
            "applies": dt**2 <= spec.stability_threshold * h,
            "monotone": stab.monotone,
            "worst_increase": stab.worst_increase,
            "max_balance_residual": stab.max_balance_residual,
        }
        log.info("%s h=%g dt=%g %s", name, h, dt, errs)
    report.fit()
    if output_dir is not None:
        report.emit(output_dir, "thick")
    return report

"""Acceptance criteria 1-9. Each test prints one ``criterion N: PASS/FAIL`` line."""
import csv
import time
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import record_criterion
from kinfsi.fem import (
    assemble_divergence,
    assemble_fluid_stiffness,
    assemble_mass,
    boundary_constraints,
    interface_space,
    interpolate,
    mini_space,
    p1_space,
)
from kinfsi.fsi import PhysicalParams, SchemeConfig, build_operators, check_stability_bound, simulate
from kinfsi.harness import StudySpec, backward_difference_error, fit_rate, relative_error, run_thick_scaling
from kinfsi.harness.cli import cli_main
from kinfsi.linalg import Factorization
from kinfsi.mesh import BoundaryTag, build_rectangle_mesh, extract_interface

PARAMS = PhysicalParams()


@pytest.fixture(scope="module")
def coarse_run():
    """Thin benchmark, beta = 1, h = L/40, dt = 1 ms, T = 16 ms."""
    t0 = time.perf_counter()
    res = simulate(SchemeConfig(beta=1.0, dt=1e-3, T=0.016, nx=40), PARAMS)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def time_study(tmp_path_factory):
    """Desk-scale temporal study through the CLI with the default spec."""
    out = tmp_path_factory.mktemp("converge_time")
    code = cli_main(["converge-time", "--output", str(out)])
    slopes = {}
    with open(out / "rates.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            slopes[(row["case"], row["norm"])] = float(row["slope"])
    return code, slopes


def test_criterion_1_unconditional_stability(coarse_run):
    res, seconds = coarse_run
    after = [r.t > PARAMS.t_max + 1e-12 for r in res.ledger.rows]
    rep = check_stability_bound(res.ledger, 1e-3, monotone_tol=1e-10, forcing_free=after)
    ok = rep.monotone and rep.steps_checked == 13 and seconds < 60
    record_criterion(1, ok, f"monotone={rep.monotone} over {rep.steps_checked} steps, "
                            f"worst relative increase {rep.worst_increase:.2e}, runtime {seconds:.2f}s")
    assert ok


def test_criterion_2_energy_identity(coarse_run):
    res, _ = coarse_run
    mono = simulate(SchemeConfig(scheme="MONOLITHIC_THIN", dt=1e-3, T=0.016, nx=40), PARAMS)
    split_max = max(res.ledger.column("balance_residual"))
    mono_max = max(mono.ledger.column("balance_residual"))
    ok = split_max <= 1e-8 and mono_max <= 1e-8
    record_criterion(2, ok, f"max balance residual split {split_max:.2e}, monolithic {mono_max:.2e}")
    assert ok


def test_criterion_3_beta1_first_order(time_study):
    code, slopes = time_study
    l2, s = slopes[("beta=1", "L2")], slopes[("beta=1", "S")]
    ok = code == 0 and l2 >= 0.85 and s >= 0.85
    record_criterion(3, ok, f"beta=1 slopes L2 {l2:.3f}, S {s:.3f} (need >= 0.85)")
    assert ok


def test_criterion_4_beta0_suboptimal(time_study):
    code, slopes = time_study
    b0 = slopes[("beta=0", "L2")], slopes[("beta=0", "S")]
    b1 = slopes[("beta=1", "L2")], slopes[("beta=1", "S")]
    ok = code == 0 and min(b0) <= 0.7 and b0[0] < b1[0] and b0[1] < b1[1]
    record_criterion(4, ok, f"beta=0 slopes L2 {b0[0]:.3f}, S {b0[1]:.3f}; beta=1 L2 {b1[0]:.3f}, S {b1[1]:.3f}")
    assert ok


def test_criterion_5_splitting_identity(coarse_run):
    res, _ = coarse_run
    worst = {"beta=1": max(res.splitting_residuals)}
    for beta in (0.0, 0.5):
        r = simulate(SchemeConfig(beta=beta, dt=1e-3, T=0.016, nx=40), PARAMS)
        worst[f"beta={beta:g}"] = max(r.splitting_residuals)
    r = simulate(SchemeConfig(beta=1.0, dt=1e-4, T=0.004, nx=80), PARAMS)
    worst["beta=1 fine"] = max(r.splitting_residuals)
    r = simulate(SchemeConfig(scheme="SPLIT_THICK", dt=5e-4, T=0.008, nx=20), PARAMS)
    worst["thick"] = max(r.splitting_residuals)
    ok = max(worst.values()) <= 1e-12
    record_criterion(5, ok, "max relative residual " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_6_split_to_monolithic():
    cfg0 = SchemeConfig(nx=80, T=0.008, check_invariants=False)
    ops = build_operators(cfg0, PARAMS)
    gaps = []
    for dt in (4e-4, 2e-4, 1e-4):
        split = simulate(SchemeConfig(nx=80, T=0.008, dt=dt, check_invariants=False), PARAMS, ops).state
        mono = simulate(SchemeConfig(scheme="MONOLITHIC_THIN", nx=80, T=0.008, dt=dt), PARAMS, ops).state
        gaps.append((dt, relative_error(split.u, mono.u, ops.M_f)))
    slope = fit_rate(gaps)
    ok = slope >= 0.85
    record_criterion(6, ok, f"gap slope {slope:.3f}, gaps " + ", ".join(f"{g:.3e}" for _, g in gaps))
    assert ok


def test_criterion_7_thick_scaling():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        report = run_thick_scaling(StudySpec(scheme="SPLIT_THICK"))
    diff = {n: report.slope("dt=c*h^1.5", n) - report.slope("dt=c*h", n) for n in ("L2", "S")}
    monotone_err = all(
        all(e1 > e2 for (_, e1), (_, e2) in zip(errs, errs[1:]))
        for case in report.cases
        for n in ("L2", "S")
        for errs in [sorted(report.errors(case, n), reverse=True)]
    )
    energy = [info["monotone"] for info in report.stability.values() if info["applies"]]
    ok = min(diff.values()) >= 0.3 and monotone_err and energy and all(energy)
    slopes = ", ".join(f"{c} {n} {report.slope(c, n):.3f}" for c in sorted(report.cases) for n in ("L2", "S"))
    record_criterion(7, ok, f"slope differences L2 {diff['L2']:.3f}, S {diff['S']:.3f} ({slopes}); "
                            f"errors monotone in h {monotone_err}; energy monotone {sum(energy)}/{len(energy)} runs")
    assert ok


def test_criterion_8_assembly_oracles(coarse_run):
    res, _ = coarse_run
    notes = []
    iface = extract_interface(build_rectangle_mesh(1.0, 1.0, 1, 1))
    M = assemble_mass(iface, interface_space(iface), 1.0).toarray()
    mass_err = np.max(np.abs(M - np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])))
    notes.append(f"1D mass error {mass_err:.1e}")

    mesh = build_rectangle_mesh(5.0, 0.5, 16, 4)
    V = mini_space(mesh)
    A = assemble_fluid_stiffness(mesh, V, PARAMS.mu)
    rigid = 0.0
    for fn in (lambda p: np.c_[np.ones(len(p)), np.zeros(len(p))],
               lambda p: np.c_[np.zeros(len(p)), np.ones(len(p))],
               lambda p: np.c_[-p[:, 1], p[:, 0]]):
        u = interpolate(V, fn)
        rigid = max(rigid, float(np.max(np.abs(A @ u))))
    notes.append(f"rigid-motion residual {rigid:.1e}")

    ops, u = res.ops, res.state.u
    div = np.linalg.norm(ops.B @ u) / np.linalg.norm(u)
    notes.append(f"divergence of solved velocity {div:.1e}")

    sq = build_rectangle_mesh(1.0, 1.0, 4, 4)
    Vs, Qs = mini_space(sq), p1_space(sq)
    K = sp.bmat([[assemble_fluid_stiffness(sq, Vs, 1.0), assemble_divergence(sq, Vs, Qs).T],
                 [assemble_divergence(sq, Vs, Qs), None]], format="csr")
    cons = boundary_constraints(Vs, {t: (0, 1) for t in (BoundaryTag.INLET, BoundaryTag.OUTLET,
                                                         BoundaryTag.BOTTOM, BoundaryTag.INTERFACE)})
    cons[Vs.n_dofs] = 0.0
    dense = Factorization(K, cons).matrix.toarray()
    rank_ok = np.linalg.matrix_rank(dense) == dense.shape[0]
    notes.append(f"MINI 4x4 Stokes full rank {rank_ok}")

    ok = mass_err <= 1e-12 and rigid <= 1e-10 and div <= 1e-10 and rank_ok
    record_criterion(8, ok, "; ".join(notes))
    assert ok


def test_criterion_9_consistency_error():
    T, dt = 1.0, 0.01
    e1 = backward_difference_error(np.sin, np.cos, T, dt)
    e2 = backward_difference_error(np.sin, np.cos, T, dt / 2)
    ratio = e1 / e2
    ok = abs(ratio - 2.0) <= 0.2
    record_criterion(9, ok, f"error ratio {ratio:.4f} for dt {dt:g} -> {dt / 2:g}")
    assert ok

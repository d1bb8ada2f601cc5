import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinfsi.fsi import PhysicalParams, SchemeKind
from kinfsi.harness import (
    ConfigError,
    DegenerateReferenceError,
    NormKind,
    RateReport,
    StudySpec,
    backward_difference_error,
    fit_rate,
    fit_rate_with_residual,
    injection,
    load_config,
    parse_config,
    relative_error,
    run_thick_scaling,
    run_time_convergence,
    snap_dt,
    time_discrete_norm,
)
from kinfsi.harness.svg import loglog_svg

# --- norms -------------------------------------------------------------------


def test_time_discrete_norm_examples():
    assert time_discrete_norm([np.zeros(3)] * 5, 0.1) == 0.0
    c = np.array([3.0, 4.0])
    N, dt = 8, 0.25
    assert time_discrete_norm([c] * N, dt) == pytest.approx(math.sqrt(N * dt) * 5.0, rel=1e-15)
    series = [np.zeros(2)] * 4 + [np.array([0.0, -7.0])] + [np.zeros(2)] * 3
    assert time_discrete_norm(series, 0.1, kind="linf") == 7.0


def test_time_discrete_norm_with_gram():
    G = np.diag([4.0, 1.0])
    assert time_discrete_norm([np.array([1.0, 0.0])], 1.0, gram=G) == pytest.approx(2.0)


def test_time_discrete_norm_errors():
    with pytest.raises(ValueError):
        time_discrete_norm([], 0.1)
    with pytest.raises(ValueError):
        time_discrete_norm([np.ones(2)], 0.1, kind="l3")


def test_relative_error_examples():
    ref = np.array([1.0, -2.0, 2.0])
    assert relative_error(ref, ref) == 0.0
    assert relative_error(2 * ref, ref) == pytest.approx(1.0, rel=1e-15)
    perp = np.array([2.0, 1.0, 0.0])
    assert perp @ ref == 0.0
    assert relative_error(ref + perp * 3 / np.linalg.norm(perp), ref) == pytest.approx(1.0, rel=1e-15)


def test_relative_error_degenerate():
    with pytest.raises(DegenerateReferenceError):
        relative_error(np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        relative_error(np.ones(3), np.ones(2))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    scale=st.floats(1e-6, 1e6),
)
def test_relative_error_joint_scaling(seed, scale):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(6), rng.standard_normal(6)
    assert relative_error(scale * a, scale * b) == pytest.approx(relative_error(a, b), rel=1e-12)


def test_fit_rate_examples():
    halving = [(1e-3 / 2**k, 1.0 / 2**k) for k in range(4)]
    assert fit_rate(halving) == pytest.approx(1.0, abs=1e-12)
    root = [(h, math.sqrt(h)) for h in (1e-2, 5e-3, 2.5e-3)]
    assert fit_rate(root) == pytest.approx(0.5, abs=1e-12)
    pts = [(1e-3, 1e-2), (5e-4, 5e-3), (2.5e-4, 2.5e-3)]
    slope, resid = fit_rate_with_residual(pts)
    assert abs(slope - 1.0) <= 1e-12 and resid <= 1e-12


@pytest.mark.parametrize(
    "pts", [[(1e-3, 1.0)], [(1e-3, 0.0), (5e-4, 1.0)], [(-1e-3, 1.0), (5e-4, 1.0)], [(1e-3, 1.0), (1e-3, 2.0)]]
)
def test_fit_rate_errors(pts):
    with pytest.raises(ValueError):
        fit_rate(pts)


@settings(max_examples=50, deadline=None)
@given(
    errs=st.lists(st.floats(1e-8, 1e3), min_size=2, max_size=6),
    scale=st.floats(1e-6, 1e6),
)
def test_fit_rate_scale_invariant(errs, scale):
    pts = [(2.0**-k, e) for k, e in enumerate(errs)]
    scaled = [(h, scale * e) for h, e in pts]
    assert fit_rate(scaled) == pytest.approx(fit_rate(pts), abs=1e-9)


def test_backward_difference_error_first_order():
    e1 = backward_difference_error(np.sin, np.cos, 1.0, 0.01)
    e2 = backward_difference_error(np.sin, np.cos, 1.0, 0.005)
    assert e1 / e2 == pytest.approx(2.0, rel=0.05)
    # linear data is differentiated exactly
    assert backward_difference_error(lambda t: 3 * t, lambda t: 3 + 0 * t, 1.0, 0.1) <= 1e-13


# --- study specs -------------------------------------------------------------

def test_snap_dt():
    assert snap_dt(0.008, 1.9e-4) == pytest.approx(0.008 / 42)
    assert snap_dt(0.008, 1.0) == 0.008


def test_study_spec_defaults():
    s = StudySpec()
    assert s.norms == (NormKind.L2, NormKind.S)
    assert s.betas == (1.0, 0.0)
    thick = StudySpec(scheme="SPLIT_THICK")
    assert thick.scaled_dts("h") == pytest.approx([5e-4, 2.5e-4, 1.25e-4])
    dts = thick.scaled_dts("h^1.5")
    assert dts[0] == 5e-4 and dts[2] == pytest.approx(6.25e-5)
    assert all(round(0.008 / d) * d == pytest.approx(0.008) for d in dts)


@pytest.mark.parametrize(
    "kw",
    [
        {"dts": (3e-4,)},
        {"dt_ref": 1e-4},
        {"dt_ref": 5e-5},
        {"betas": (1.2,)},
        {"scalings": ("h^2",), "scheme": "SPLIT_THICK"},
        {"reference": "coarsest"},
        {"norms": ("H1",)},
        {"dts": ()},
    ],
)
def test_study_spec_rejects(kw):
    with pytest.raises(ValueError):
        StudySpec(**kw)


def test_study_spec_equal_reference_needs_nonstrict():
    with pytest.raises(ValueError):
        StudySpec(dts=(1e-3,), dt_ref=1e-3)
    StudySpec(dts=(1e-3,), dt_ref=1e-3, strict=False)


def test_time_study_reference_equal_candidate_gives_zero():
    spec = StudySpec(betas=(1.0,), dts=(1e-3,), dt_ref=1e-3, T=0.004, nx=10, strict=False)
    report = run_time_convergence(spec)
    for norm in ("L2", "S"):
        assert report.errors("beta=1", norm) == [(1e-3, 0.0)]
        assert math.isnan(report.slope("beta=1", norm))


def test_thick_study_reference_equal_candidate_gives_zero():
    spec = StudySpec(scheme="SPLIT_THICK", betas=(1.0,), nx_list=(10,), scalings=("h",), dt0=1e-3, dt_ref=1e-3,
                     T=0.003, strict=False)
    report = run_thick_scaling(spec)
    assert report.errors("dt=c*h", "L2") == [(0.5, 0.0)]
    assert report.errors("dt=c*h", "S") == [(0.5, 0.0)]


def _small_time_spec(**kw):
    return StudySpec(**{"betas": (1.0, 0.0), "dts": (1e-3, 5e-4), "dt_ref": 2.5e-4, "T": 0.004, "nx": 10, **kw})


def test_time_study_small(tmp_path):
    report = run_time_convergence(_small_time_spec(), output_dir=tmp_path)
    lines = (tmp_path / "rates.csv").read_text().splitlines()
    assert lines[0] == "case,norm,step,error,slope"
    assert len(lines) == 1 + 2 * 2 * 2
    assert {ln.split(",")[0] for ln in lines[1:]} == {"beta=0", "beta=1"}
    for case in ("beta=0", "beta=1"):
        errs = report.errors(case, "L2")
        assert all(e > 0 for _, e in errs)
        assert math.isfinite(report.slope(case, "L2"))
    for norm in ("L2", "S"):
        svg = (tmp_path / f"figure_time_{norm}.svg").read_text()
        assert svg.startswith("<svg") and "beta=1" in svg


def test_time_study_deterministic_and_threaded():
    a = run_time_convergence(_small_time_spec()).to_csv()
    b = run_time_convergence(_small_time_spec(), threads=3).to_csv()
    assert a == b


def test_thick_finest_reference():
    spec = StudySpec(scheme="SPLIT_THICK", nx_list=(5, 10), scalings=("h",), dt0=1e-3, dt_ref=2.5e-4, T=0.004,
                     reference="finest", ref_nx=20)
    report = run_thick_scaling(spec)
    errs = report.errors("dt=c*h", "L2")
    assert [h for h, _ in errs] == [1.0, 0.5]
    assert all(e > 0 for _, e in errs)
    info = report.stability[("dt=c*h", 0.5)]
    assert info["dt"] == pytest.approx(5e-4) and info["applies"]


def test_injection():
    fine = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])
    coarse = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert injection(fine, coarse, 2).tolist() == [4, 5, 0, 1]
    with pytest.raises(ValueError):
        injection(fine, np.array([[0.25, 0.0]]), 1)


def test_rate_report_csv_sorted():
    r = RateReport("time", cases={"b": [(1e-3, {"L2": 0.2}), (2e-3, {"L2": 0.4})], "a": [(1e-3, {"L2": 1.0})]})
    r.fit()
    rows = r.to_csv().splitlines()[1:]
    assert rows[0].startswith("a,L2,0.001,1.0,nan")
    case, norm, step, err, slope = rows[1].split(",")
    assert (case, norm, step, err) == ("b", "L2", "0.002", "0.4")
    assert float(slope) == pytest.approx(1.0, abs=1e-12)
    assert rows[2].startswith("b,L2,0.001,0.2,")


def test_svg_handles_nan_and_single_points():
    svg = loglog_svg({"x": [(1e-3, 1e-2)], "y": [(1e-3, float("nan")), (1e-4, 1e-3)]}, title="t")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


# --- config ------------------------------------------------------------------

def test_parse_config_flat_and_nested():
    cfg = parse_config({"scheme": "MONOLITHIC_THIN", "dt": 5e-4, "T": 0.002, "nx": 10, "physics": {"p_max": 0}})
    assert cfg.params().p_max == 0.0
    sc = cfg.scheme_config()
    assert sc.scheme is SchemeKind.MONOLITHIC_THIN and sc.n_steps == 4
    assert parse_config({"physics.mu": 0.04}).params().mu == 0.04


def test_parse_config_study_keys():
    cfg = parse_config({"beta_list": [1, 0.5], "dt_list": [4e-4, 2e-4], "dt_ref": 1e-4, "nx": 20, "norms": ["L2", "F"]})
    spec = cfg.study_spec(thick=False)
    assert spec.betas == (1.0, 0.5) and spec.norms == (NormKind.L2, NormKind.F)
    spec = parse_config({"nx_list": [5, 10], "dt0": 1e-3, "dt_ref": 1e-4}).study_spec(thick=True)
    assert spec.scheme is SchemeKind.SPLIT_THICK and spec.nx_list == (5, 10)


@pytest.mark.parametrize(
    "data, key",
    [
        ({"bogus": 1}, "bogus"),
        ({"physics": {"viscosity": 1}}, "physics.viscosity"),
        ({"dt": "fast"}, "dt"),
        ({"nx": 0}, "nx"),
        ({"nx": 2.5}, "nx"),
        ({"scheme": "EXPLICIT"}, "scheme"),
        ({"beta_list": []}, "beta_list"),
        ({"lumped_mass": 1}, "lumped_mass"),
        ({"norms": ["H1"]}, "norms"),
    ],
)
def test_parse_config_names_bad_key(data, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_config(data)


def test_config_semantic_errors():
    with pytest.raises(ConfigError):
        parse_config({"dt": 3e-4, "T": 1e-3}).scheme_config()
    with pytest.raises(ConfigError):
        parse_config({"physics.mu": -1.0}).params()
    with pytest.raises(ConfigError):
        parse_config({"dt_ref": 1.0}).study_spec(thick=False)
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_load_config(tmp_path):
    assert load_config(None).values == {}
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"beta": 0.5}))
    assert load_config(p).get("beta") == 0.5
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_config_defaults_physics():
    assert parse_config({}).params() == PhysicalParams()

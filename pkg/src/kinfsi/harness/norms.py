"""Time-discrete norms, relative errors and rate fitting."""
from __future__ import annotations

import enum
from typing import Sequence

import numpy as np


class NormKind(enum.Enum):
    """Spatial norms: fluid velocity L2 and F, displacement S, interface L2."""

    L2 = "L2"
    F = "F"
    S = "S"
    L2_GAMMA = "L2_Gamma"


class DegenerateReferenceError(ValueError):
    """The reference field has zero norm, so a relative error is undefined."""


def spatial_norm(x: np.ndarray, gram=None) -> float:
    x = np.asarray(x, float)
    if gram is None:
        return float(np.linalg.norm(x))
    return float(np.sqrt(max(x @ (gram @ x), 0.0)))


def time_discrete_norm(series: Sequence[np.ndarray], dt: float, kind: str = "l2", gram=None) -> float:
    """``(dt sum_n |phi^n|_X^2)^(1/2)`` for ``kind="l2"``, ``max_n |phi^n|_X`` for ``"linf"``.

    ``series`` holds the values at ``t^1, ..., t^N``; ``gram`` is the Gram
    matrix of the spatial norm (Euclidean when omitted).
    """
    if len(series) == 0:
        raise ValueError("time_discrete_norm needs a nonempty series")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    vals = np.array([spatial_norm(x, gram) for x in series])
    if kind == "l2":
        return float(np.sqrt(dt * np.sum(vals**2)))
    if kind == "linf":
        return float(vals.max())
    raise ValueError(f"unknown time norm {kind!r}")


def backward_difference_error(phi, dphi, T: float, dt: float) -> float:
    """``l2(0,T)`` norm of ``(phi(t^n) - phi(t^{n-1})) / dt - phi'(t^n)``, ``n = 1..T/dt``.

    First order in ``dt`` for smooth ``phi``.
    """
    n = round(T / dt)
    if n < 1:
        raise ValueError(f"dt={dt} exceeds T={T}")
    t = dt * np.arange(n + 1)
    d = (phi(t[1:]) - phi(t[:-1])) / dt - dphi(t[1:])
    return time_discrete_norm(list(np.atleast_1d(d)[:, None]), dt)


def relative_error(candidate: np.ndarray, reference: np.ndarray, gram=None) -> float:
    """``|candidate - reference| / |reference|`` in the norm of ``gram``."""
    candidate = np.asarray(candidate, float)
    reference = np.asarray(reference, float)
    if candidate.shape != reference.shape:
        raise ValueError(f"shape mismatch {candidate.shape} vs {reference.shape}")
    ref = spatial_norm(reference, gram)
    if ref == 0.0:
        raise DegenerateReferenceError("reference solution has zero norm")
    return spatial_norm(candidate - reference, gram) / ref


def fit_rate_with_residual(points) -> tuple[float, float]:
    """Least-squares slope of ``log(error)`` against ``log(step)`` and the RMS fit residual."""
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("fit_rate needs at least two (step, error) pairs")
    if np.any(~np.isfinite(pts)) or np.any(pts <= 0):
        raise ValueError("fit_rate needs positive, finite steps and errors")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise ValueError("fit_rate needs at least two distinct step sizes")
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return float(slope), resid


def fit_rate(points) -> float:
    return fit_rate_with_residual(points)[0]


def norm_gram(ops, kind: NormKind, params=None):
    """Gram matrix and the state field a norm applies to: ``(matrix, field_name, map)``.

    ``map`` is an optional matrix applied to the field first (interface trace
    of a thick displacement).
    """
    kind = NormKind(kind)
    thick = hasattr(ops, "T_S")
    if kind is NormKind.L2:
        return ops.M_f, "u", None
    if kind is NormKind.F:
        mu = params.mu if params is not None else 1.0
        return ops.A_f / (2.0 * mu), "u", None
    if kind is NormKind.S:
        return ops.K_s, "eta", None
    return ops.M_g, "eta", (ops.T_S if thick else None)


def state_error(ops, kind: NormKind, candidate, reference, params=None) -> float:
    gram, name, mapping = norm_gram(ops, kind, params)
    a, b = getattr(candidate, name), getattr(reference, name)
    if mapping is not None:
        a, b = mapping @ a, mapping @ b
    return relative_error(a, b, gram)

from math import factorial

import numpy as np
import pytest

from kinfsi.fem import edge_rule, triangle_rule


def _monomial_exact(a, b):
    # integral of x^a y^b over the reference triangle
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 4, 5, 6, 8])
def test_triangle_rule_exact(degree):
    rule = triangle_rule(degree)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(rule.points.sum(axis=1), 1.0)
    x, y = rule.points[:, 1], rule.points[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = rule.weights @ (x**a * y**b)
            assert got == pytest.approx(_monomial_exact(a, b), rel=1e-13, abs=1e-16)


def _bubble_sq(rule):
    lam = rule.points
    return rule.weights @ (27 * lam[:, 0] * lam[:, 1] * lam[:, 2]) ** 2


def test_bubble_mass_needs_degree_six():
    # 729 * 2! 2! 2! / 8! = 81/560
    assert _bubble_sq(triangle_rule(6)) == pytest.approx(81 / 560, rel=1e-13)
    assert abs(_bubble_sq(triangle_rule(4)) - 81 / 560) > 1e-6


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 5])
def test_edge_rule_exact(degree):
    rule = edge_rule(degree)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    s = rule.points[:, 1]
    for k in range(degree + 1):
        assert rule.weights @ s**k == pytest.approx(1.0 / (k + 1), rel=1e-14)


def test_negative_degree():
    with pytest.raises(ValueError):
        triangle_rule(-1)

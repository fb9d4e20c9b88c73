from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from timotherm import DIRICHLET, FREE, NEUMANN, ContractError, Grid


def test_trapezoid_integral_of_sin_squared_is_exact():
    # cos(2 pi x) sums to zero over whole periods, so the trapezoid rule is exact
    g = Grid(64)
    assert g.integrate(np.sin(np.pi * g.x) ** 2) == pytest.approx(0.5, abs=1e-15)


def test_discrete_sines_are_orthogonal():
    g = Grid(32)
    s1, s2 = np.sin(np.pi * g.x), np.sin(2 * np.pi * g.x)
    assert abs(g.inner(s1, s2)) < 1e-15


def test_laplacian_eigenvalue_of_sine():
    g = Grid(20)
    u = np.sin(np.pi * g.x)
    lam = -4.0 / g.dx**2 * np.sin(np.pi * g.dx / 2) ** 2
    np.testing.assert_allclose(g.laplacian(u, DIRICHLET)[1:-1], lam * u[1:-1], atol=1e-12)


def test_neumann_laplacian_eigenvalue_of_cosine_including_ends():
    g = Grid(20)
    u = np.cos(np.pi * g.x)
    lam = -4.0 / g.dx**2 * np.sin(np.pi * g.dx / 2) ** 2
    np.testing.assert_allclose(g.laplacian(u, NEUMANN), lam * u, atol=1e-11)


def test_centred_difference_of_sine():
    g = Grid(16)
    u = np.sin(np.pi * g.x)
    expected = np.cos(np.pi * g.x) * np.sin(np.pi * g.dx) / g.dx
    np.testing.assert_allclose(g.ddx(u, DIRICHLET)[1:-1], expected[1:-1], atol=1e-12)


def test_free_one_sided_ends_are_exact_for_quadratics():
    g = Grid(8, L=2.0)
    u = 3 * g.x**2 - g.x + 1
    np.testing.assert_allclose(g.ddx(u, FREE), 6 * g.x - 1, atol=1e-12)


def test_neumann_ddx_vanishes_at_ends():
    g = Grid(8)
    d = g.ddx(np.cos(np.pi * g.x) + g.x, NEUMANN)
    assert d[0] == 0.0 and d[-1] == 0.0


def test_zero_field_and_small_grid_errors():
    g = Grid(4)
    assert np.all(g.laplacian(np.zeros(5), DIRICHLET) == 0)
    with pytest.raises(ContractError):
        Grid(3)
    with pytest.raises(ContractError):
        g.laplacian(np.zeros(6), DIRICHLET)
    with pytest.raises(ContractError):
        g.laplacian(np.zeros(5), FREE)
    with pytest.raises(ContractError):
        g.ddx(np.zeros(5), "periodic")


def _dirichlet(v):
    v = v.copy()
    v[0] = v[-1] = 0.0
    return v


fields = arrays(np.float64, 13, elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(fields, fields)
def test_summation_by_parts_dirichlet(a, b):
    g = Grid(12, L=1.5)
    u, w = _dirichlet(a), _dirichlet(b)
    lhs = g.inner(g.laplacian(u, DIRICHLET), w)
    rhs = -g.cell_inner(g.dxforward(u), g.dxforward(w))
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))


@settings(max_examples=60, deadline=None)
@given(fields, fields)
def test_summation_by_parts_neumann(u, w):
    g = Grid(12)
    lhs = g.inner(g.laplacian(u, NEUMANN), w)
    rhs = -g.cell_inner(g.dxforward(u), g.dxforward(w))
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))


@settings(max_examples=60, deadline=None)
@given(fields, fields, st.sampled_from([DIRICHLET, NEUMANN]))
def test_centred_difference_is_skew(a, b, other_bc):
    g = Grid(12)
    u = _dirichlet(a)
    w = _dirichlet(b) if other_bc == DIRICHLET else b
    lhs = g.inner(g.ddx(u, DIRICHLET), w)
    rhs = -g.inner(u, g.ddx(w, other_bc))
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


@settings(max_examples=40, deadline=None)
@given(fields, fields, st.floats(-3, 3))
def test_operators_are_linear(a, b, c):
    g = Grid(12)
    for op in (lambda u: g.laplacian(u, NEUMANN), lambda u: g.ddx(u, FREE)):
        np.testing.assert_allclose(op(a + c * b), op(a) + c * op(b), atol=1e-8 * (1 + np.abs(op(a)).max()))

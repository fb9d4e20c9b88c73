from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from timotherm import ContractError, Grid, MemoryKernel
from timotherm.memory import (HistoryBuffer, HistoryMemory, RecursiveConvolution, RecursiveMemory,
                              convolve, g_circ, g_prime_circ, recursive_update, trapezoid_weights,
                              truncation_horizon)
from timotherm.verification import convolution_oracle_errors

KERNEL = MemoryKernel.exponential(0.5, 1.0)


def test_trapezoid_weights():
    np.testing.assert_allclose(trapezoid_weights(np.array([0.0, 1.0, 3.0])), [0.5, 1.5, 1.0])
    assert trapezoid_weights(np.array([2.0]))[0] == 0.0


def test_empty_history_gives_zero_at_t0():
    buf = HistoryBuffer(5)
    assert np.all(convolve(buf, KERNEL, 0.0) == 0)
    with pytest.raises(ContractError):
        convolve(buf, KERNEL, 1.0)


def test_single_level_history_convolution_is_zero():
    buf = HistoryBuffer(3).push(0.0, np.ones(3))
    assert np.all(convolve(buf, KERNEL, 0.0) == 0)


def test_history_contracts():
    buf = HistoryBuffer(3).push(0.0, np.zeros(3)).push(1.0, np.zeros(3))
    with pytest.raises(ContractError):
        buf.push(1.0, np.zeros(3))
    with pytest.raises(ContractError):
        buf.push(2.0, np.zeros(4))
    with pytest.raises(ContractError):
        convolve(buf, KERNEL, 0.5)


def test_buffer_grows_and_truncates():
    buf = HistoryBuffer(2, horizon=1.0)
    for k in range(100):
        buf.push(0.1 * k, np.full(2, k))
    assert buf.times[0] >= 9.9 - 1.0 - 1e-12
    assert buf.last_time == pytest.approx(9.9)
    assert buf.snapshots[-1][0] == 99


def test_truncation_horizon_for_exponential():
    assert truncation_horizon(KERNEL, 0.0) == math.inf
    assert truncation_horizon(KERNEL, 1e-3) == pytest.approx(math.log(1e3))


def test_convolution_matches_closed_form_with_second_order():
    e1, r1, _ = convolution_oracle_errors(0.02)
    e2, r2, gap = convolution_oracle_errors(0.01)
    assert math.log2(e1 / e2) == pytest.approx(2.0, abs=0.05)
    assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.05)
    assert gap < 1e-12


def test_recursive_update_equals_direct_trapezoid_sum():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((30, 4))
    buf = HistoryBuffer(4).push(0.0, f[0])
    rec = RecursiveConvolution.start(KERNEL, f[0])
    for k in range(1, 30):
        buf.push(0.05 * k, f[k])
        rec = recursive_update(rec, f[k], 0.05)
    np.testing.assert_allclose(rec.w, convolve(buf, KERNEL, 0.05 * 29), atol=1e-13)


def test_recursive_needs_exponential_kernel():
    with pytest.raises(ContractError):
        RecursiveConvolution.start(MemoryKernel.tabulated([0, 1], [0.1, 0.0]), np.zeros(2))
    with pytest.raises(ContractError):
        recursive_update(RecursiveConvolution.start(KERNEL, np.zeros(2)), np.zeros(2), 0.0)


def test_g_circ_closed_form():
    # psi(x, s) = s sin(pi x): (psi_x(t) - psi_x(s))^2 = (t - s)^2 (G sin)^2 on cells, with
    # int (G sin)^2 = 2 sin^2(pi dx / 2) / dx^2 and int_0^t 0.5 e^{-r} r^2 dr = 0.5 (2 - e^{-t}(t^2 + 2t + 2))
    n, dt, T = 32, 1e-3, 2.0
    grid = Grid(n)
    shape = np.sin(np.pi * grid.x)
    spatial = 2 * math.sin(math.pi * grid.dx / 2) ** 2 / grid.dx**2
    hist = HistoryMemory(KERNEL, 0 * shape, 0.0, grid.dx)
    rec = RecursiveMemory(KERNEL, 0 * shape, 0.0, grid.dx)
    for k in range(1, int(round(T / dt)) + 1):
        hist.advance(k * dt, k * dt * shape)
        rec.advance(k * dt, k * dt * shape)
    psi = T * shape
    exact = spatial * 0.5 * (2 - math.exp(-T) * (T * T + 2 * T + 2))
    assert hist.g_circ(psi) == pytest.approx(exact, rel=1e-5)
    assert rec.g_circ(psi) == pytest.approx(hist.g_circ(psi), rel=1e-10)
    assert rec.g_prime_circ(psi) == pytest.approx(hist.g_prime_circ(psi), rel=1e-10)
    assert hist.g_prime_circ(psi) == pytest.approx(-hist.g_circ(psi), rel=1e-12)


def test_g_circ_of_constant_history_is_zero():
    grid = Grid(8)
    buf = HistoryBuffer(9)
    psi = np.sin(np.pi * grid.x)
    for k in range(5):
        buf.push(0.1 * k, psi)
    assert g_circ(buf, KERNEL, 0.4, psi, grid.dx) == 0.0
    assert g_prime_circ(buf, KERNEL, 0.4, psi, grid.dx) == 0.0


histories = arrays(np.float64, (6, 5), elements=st.floats(-5, 5, allow_nan=False))


@settings(max_examples=50, deadline=None)
@given(histories, histories, st.floats(-2, 2))
def test_convolve_is_linear(f, h, c):
    def conv(data):
        buf = HistoryBuffer(5)
        for k, row in enumerate(data):
            buf.push(0.1 * k, row)
        return convolve(buf, KERNEL, 0.5)

    np.testing.assert_allclose(conv(f + c * h), conv(f) + c * conv(h), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(histories, st.floats(0.01, 3.0), st.floats(0.05, 4.0))
def test_g_circ_nonnegative_and_recursive_agrees(f, a, b):
    kernel = MemoryKernel.exponential(a, b)
    dx = 0.25
    hist = HistoryMemory(kernel, f[0], 0.0, dx)
    rec = RecursiveMemory(kernel, f[0], 0.0, dx)
    for k in range(1, 6):
        hist.advance(0.1 * k, f[k])
        rec.advance(0.1 * k, f[k])
    now = f[-1]
    assert hist.g_circ(now) >= 0
    assert hist.g_prime_circ(now) <= 0
    scale = 1 + hist.g_circ(now) + np.sum(f**2) / dx
    assert abs(rec.g_circ(now) - hist.g_circ(now)) <= 1e-10 * scale
    np.testing.assert_allclose(rec.conv(), hist.conv(), atol=1e-12 * (1 + np.abs(f).max()))

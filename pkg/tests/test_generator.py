from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from timotherm import Coefficients, ContractError, FrictionLaw, MemoryKernel, SimConfig
from timotherm import generator as gen
from timotherm.integrator import State, rhs


def _random_state(n, rng):
    s = State(0.0, *(rng.standard_normal(n + 1) for _ in range(6)))
    for f in (s.phi, s.u, s.psi, s.v):
        f[0] = f[-1] = 0.0
    return s


def test_rhs_hand_computed_on_four_cells():
    cfg = SimConfig(n=4)
    s = State(0.0,
              phi=np.array([0, 1, 0, -1, 0.0]), u=np.zeros(5),
              psi=np.array([0, 1, 2, 1, 0.0]), v=np.array([0, 1, 1, 1, 0.0]),
              theta=np.array([1, 2, 3, 2, 1.0]), z=np.array([1, 2, 3, 2, 1.0]))
    d = rhs(s, np.zeros(5), cfg)
    # dx = 1/4: lap phi(x1) = -32, ddx psi(x1) = 4
    assert d.u[1] == pytest.approx(-28.0)
    # k2 lap psi = -32, shear = -4 + 2, h(v) = 1, ddx z = 0
    assert d.v[2] == pytest.approx(-31.0)
    # -(v1 - v0)/dx + 2 (theta1 - theta0)/dx^2 + 2 (z1 - z0)/dx^2
    assert d.z[0] == pytest.approx(60.0)
    np.testing.assert_array_equal(d.phi, s.u)
    assert d.u[0] == d.u[-1] == 0.0


def test_rhs_matches_assembled_generator():
    rng = np.random.default_rng(7)
    cfg = SimConfig(n=12, coefficients=Coefficients(rho1=1.3, rho2=0.7, rho3=2.0, k1=1.1, k2=0.9,
                                                    mu=0.4, beta=0.6, delta=1.7, gamma=0.8))
    A = gen.assemble(cfg).matrix
    s = _random_state(cfg.n, rng)
    y = gen.stack(s.fields(), cfg.n)
    d = rhs(s, np.zeros(cfg.n + 1), cfg)
    expected = gen.stack(d._asdict(), cfg.n)
    np.testing.assert_allclose(A @ y, expected, atol=1e-12 * np.abs(expected).max())


def test_augmented_generator_memory_row():
    rng = np.random.default_rng(3)
    cfg = SimConfig(n=10)
    A = gen.assemble(cfg, mode=gen.EXP_AUGMENTED).matrix
    s = _random_state(cfg.n, rng)
    w = np.zeros(cfg.n + 1)
    w[1:-1] = rng.standard_normal(cfg.n - 1)
    fields = {**s.fields(), "w": w}
    y = gen.stack(fields, cfg.n, augmented=True)
    out = gen.unstack(A @ y, cfg.n, augmented=True)
    d = rhs(s, w, cfg)
    np.testing.assert_allclose(out["v"], d.v, atol=1e-10)
    np.testing.assert_allclose(out["w"][1:-1], 0.5 * s.psi[1:-1] - w[1:-1], atol=1e-14)


def test_stack_roundtrip():
    rng = np.random.default_rng(0)
    s = _random_state(6, rng)
    back = gen.unstack(gen.stack(s.fields(), 6), 6)
    for k, v in s.fields().items():
        np.testing.assert_array_equal(back[k], v)


def test_thermal_dispersion_relation_without_coupling():
    # with gamma = 0 the thermal block decouples; the Neumann cosine modes give
    # rho3 lam^2 + beta K lam + delta K = 0 with K = 4/dx^2 sin^2(k pi dx / 2)
    n = 10
    c = Coefficients(gamma=0.0, rho3=2.0, beta=0.3, delta=1.5)
    cfg = SimConfig(n=n, coefficients=c)
    ev = gen.spectrum(gen.assemble(cfg).reduced()).eigenvalues
    dx = 1.0 / n
    for k in range(1, n + 1):
        K = 4 / dx**2 * np.sin(k * np.pi * dx / 2) ** 2
        for lam in np.roots([c.rho3, c.beta * K, c.delta * K]):
            assert np.min(np.abs(ev - lam)) < 1e-8 * max(1.0, abs(lam))


def test_reduction_removes_constant_thermal_modes():
    cfg = SimConfig(n=8)
    full = gen.spectrum(gen.assemble(cfg))
    red = gen.spectrum(gen.assemble(cfg).reduced())
    # the zero eigenvalue is defective, so it is only resolved to about sqrt(eps)
    assert full.abscissa == pytest.approx(0.0, abs=1e-6)
    assert red.abscissa < 0
    assert red.eigenvalues.size == full.eigenvalues.size - 2


def test_default_augmented_abscissa_negative():
    A = gen.assemble(SimConfig(n=32), mode=gen.EXP_AUGMENTED).reduced()
    rep = gen.spectrum(A)
    assert rep.abscissa < 0
    assert np.all(np.diff(rep.eigenvalues.real) <= 1e-12)


def test_generator_contracts():
    with pytest.raises(ContractError):
        gen.assemble(SimConfig(friction=FrictionLaw.rational_cubic(1.0), n=8))
    with pytest.raises(ContractError):
        gen.assemble(SimConfig(kernel=MemoryKernel.tabulated([0, 1], [0.1, 0]), n=8),
                     mode=gen.EXP_AUGMENTED)
    with pytest.raises(ContractError):
        gen.spectrum(np.eye(5), cap=4)
    with pytest.raises(ContractError):
        gen.spectrum(np.ones((2, 3)))


def test_resolvent_zero_and_random_right_sides():
    cfg = SimConfig()
    G = gen.assemble(cfg, 16)
    zero = gen.solve_resolvent(cfg, 16, np.zeros(G.matrix.shape[0]), generator=G)
    assert zero.residual == 0.0 and not np.any(zero.U)
    rng = np.random.default_rng(11)
    B = rng.standard_normal(G.matrix.shape[0])
    assert gen.solve_resolvent(cfg, 16, B, generator=G).residual <= 1e-10
    with pytest.raises(ContractError):
        gen.solve_resolvent(cfg, 16, np.zeros(3))


@pytest.mark.parametrize("coef", [Coefficients(),
                                  Coefficients(rho1=1.3, rho2=0.7, rho3=2.0, k1=1.1, k2=0.9,
                                               mu=0.4, beta=0.6, delta=1.7, gamma=0.8)])
def test_variational_solve_matches_direct_resolvent(coef):
    n = 12
    cfg = SimConfig(n=n, coefficients=coef, friction=FrictionLaw.linear(0.7))
    rng = np.random.default_rng(5)
    B = rng.standard_normal(gen.assemble(cfg, n).matrix.shape[0])
    U = gen.unstack(gen.solve_resolvent(cfg, n, B).U, n)
    form = gen.resolvent_form(cfg, n)
    x = np.linalg.solve(form.stiffness, gen.load_functional(cfg, n, B))
    m = n - 1
    np.testing.assert_allclose(x[:m], U["phi"][1:-1], atol=1e-10)
    np.testing.assert_allclose(x[m:2 * m], U["psi"][1:-1], atol=1e-10)
    np.testing.assert_allclose(x[2 * m:], U["theta"], atol=1e-10)


def test_coercivity_positive_and_bounded():
    for n in (8, 16, 32):
        rep = gen.coercivity(SimConfig(), n)
        assert 0 < rep.alpha0 <= rep.c_bound
        assert 0 < rep.alpha0_full <= rep.c_bound_full


def test_coupling_is_skew_in_the_form():
    cfg = SimConfig(n=8)
    plain = gen.resolvent_form(dataclasses.replace(cfg, coefficients=Coefficients(gamma=0.0)), 8)
    coupled = gen.resolvent_form(cfg, 8)
    diff = coupled.stiffness - plain.stiffness
    assert np.abs(diff).max() > 0.1
    np.testing.assert_allclose(diff, -diff.T, atol=1e-12)
    np.testing.assert_allclose(coupled.symmetric, plain.symmetric, atol=1e-12)

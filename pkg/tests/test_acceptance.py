"""Acceptance gate: the ten desk-scale criteria at their stated tolerances.

Each test records one pass/fail line (printed in the terminal summary)
before asserting.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
import scipy.linalg

from conftest import ACCEPTANCE
from timotherm import FrictionLaw, MemoryKernel, SimConfig, check_friction, check_kernel, run
from timotherm import diagnostics as diag
from timotherm import generator as gen
from timotherm.integrator import initial_state
from timotherm.verification import convolution_oracle_errors


def _record(key, passed, detail):
    ACCEPTANCE[key] = (bool(passed), detail)
    assert passed, detail


def test_criterion_01_energy_identity(default_run, default_run_half, memoryless_cfg):
    r1, r2 = default_run.max_residual, default_run_half.max_residual
    g0_a = run(memoryless_cfg).max_residual
    g0_b = run(dataclasses.replace(memoryless_cfg, dt=5e-4)).max_residual
    ratio, ratio_g0 = r1 / r2, g0_a / g0_b
    ok = r1 <= 1e-3 and ratio >= 1.8 and ratio_g0 >= 3.5 and default_run.elapsed <= 30
    _record(1, ok, f"residual {r1:.3e} <= 1e-3, halving ratio {ratio:.3f} >= 1.8, "
                   f"g=0 ratio {ratio_g0:.3f} >= 3.5, runtime {default_run.elapsed:.1f}s <= 30s")


def test_criterion_02_monotone_positive(default_run):
    E = default_run.column("E")
    worst = float(np.max(np.diff(E)))
    ok = bool(np.all(E >= 0)) and worst <= 1e-10 * E[0]
    _record(2, ok, f"min E {E.min():.3e} >= 0, largest increase {worst:.3e} <= {1e-10 * E[0]:.3e}")


def test_criterion_03_exponential_decay(default_run):
    fit = diag.fit_decay(default_run, (2.0, 5.0))
    E = default_run.column("E")
    drop = E[-1] / E[0]
    ok = fit.delta0 > 0 and fit.r_squared >= 0.995 and drop <= 0.5
    _record(3, ok, f"delta0 {fit.delta0:.4f} > 0, r^2 {fit.r_squared:.5f} >= 0.995, "
                   f"E(5)/E(0) {drop:.3e} <= 0.5")


def test_criterion_04_spectrum_vs_trajectory(default_cfg):
    cfg = dataclasses.replace(default_cfg, n=32, T=40.0, stride=10)
    A = gen.assemble(cfg, mode=gen.EXP_AUGMENTED).reduced()
    s_star = gen.spectrum(A).abscissa
    fit = diag.fit_decay(run(cfg), (20.0, 40.0))
    target = 2 * abs(s_star)
    err = abs(fit.delta0 - target)
    ok = s_star < 0 and err <= 0.1 * target
    _record(4, ok, f"s* {s_star:.5f} < 0, delta0 {fit.delta0:.5f} vs 2|s*| {target:.5f} "
                   f"(rel. gap {err / target:.2e} <= 0.1)")


def test_criterion_05_mean_conservation(default_run):
    mz = default_run.column("mean_z")
    drift = float(np.max(np.abs(mz - mz[0])))
    _record(5, drift <= 1e-8, f"mean_z drift {drift:.3e} <= 1e-8")


def test_criterion_06_convolution_oracle():
    d1, r1, _ = convolution_oracle_errors(0.02)
    d2, r2, gap = convolution_oracle_errors(0.01)
    order_d, order_r = math.log2(d1 / d2), math.log2(r1 / r2)
    ok = order_d >= 1.9 and order_r >= 1.9 and gap <= d2 + r2
    _record(6, ok, f"orders {order_d:.3f} (direct), {order_r:.3f} (recursive) >= 1.9; "
                   f"mutual gap {gap:.2e} <= {d2 + r2:.2e}")


def test_criterion_07_matrix_exponential():
    cfg = SimConfig(kernel=MemoryKernel.exponential(0.0, 1.0), override_hypotheses=True,
                    n=16, dt=1e-4, T=1.0, stride=10_000)
    traj = run(cfg)
    A = gen.assemble(cfg).matrix
    y0 = gen.stack(initial_state(cfg).fields(), cfg.n)
    exact = scipy.linalg.expm(A) @ y0
    got = gen.stack(traj.final_state.fields(), cfg.n)
    rel = float(np.linalg.norm(got - exact) / np.linalg.norm(exact))
    _record(7, rel <= 1e-4, f"relative endpoint error {rel:.3e} <= 1e-4")


def test_criterion_08_lax_milgram(default_cfg):
    rng = np.random.default_rng(2024)
    worst, alphas = 0.0, []
    for n in (8, 16, 32):
        G = gen.assemble(default_cfg, n)
        for _ in range(20):
            B = rng.standard_normal(G.matrix.shape[0])
            worst = max(worst, gen.solve_resolvent(default_cfg, n, B, generator=G).residual)
        alphas.append(gen.coercivity(default_cfg, n).alpha0)
    ok = worst <= 1e-10 and min(alphas) > 0
    _record(8, ok, f"max resolvent residual {worst:.2e} <= 1e-10, alpha0 "
                   + ", ".join(f"{a:.4f}" for a in alphas) + " > 0")


def test_criterion_09_lyapunov(default_cfg, default_run, feasible_weights):
    times = default_run.column("t")
    flags = np.array([diag.check_weights(feasible_weights, default_cfg.kernel, default_cfg.friction, t)
                      for t in times])
    eq = diag.equivalence_ratios(default_run)
    ok = bool(flags.all()) and 0 < eq.c1 <= eq.c2
    _record(9, ok, f"weight conditions hold at {int(flags.all(axis=1).sum())}/{times.size} records, "
                   f"c1 {eq.c1:.4f}, c2 {eq.c2:.4f}")


def test_criterion_10_hypothesis_gates():
    kr = check_kernel(MemoryKernel.exponential(2.0, 1.0))
    fr = check_friction(FrictionLaw.rational_cubic(1.0), 1.0, 100.0)
    ok = not kr.ok and kr.l <= 0 and abs(fr.c_lower - 0.5) <= 1e-3 and fr.ok
    _record(10, ok, f"Exponential(2,1) rejected (l = {kr.l:g}); "
                    f"RationalCubic(1) certified with c_lower = {fr.c_lower:.6f}")

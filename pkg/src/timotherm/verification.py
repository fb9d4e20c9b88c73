"""Self-checks bundled for the ``verify`` subcommand.

Each check returns a :class:`Check` row; :func:`verify_suite` runs them all
for one configuration.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from . import generator as gen
from .grid import Grid
from .integrator import Trajectory, run
from .memory import HistoryBuffer, RecursiveConvolution, convolve, recursive_update
from .model import FrictionLaw, MemoryKernel, SimConfig

RESIDUAL_MAX = 1e-3
RESIDUAL_RATIO_MIN = 1.8
MEAN_DRIFT_MAX = 1e-8
ORACLE_ORDER_MIN = 1.9
RESOLVENT_MAX = 1e-10


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def check_energy_identity(cfg: SimConfig, coarse: Trajectory = None) -> List[Check]:
    """Identity residual at ``cfg.dt`` and its reduction when ``dt`` is halved."""
    coarse = coarse or run(cfg)
    fine = run(dataclasses.replace(cfg, dt=0.5 * cfg.dt, stride=2 * cfg.stride))
    r1, r2 = coarse.max_residual, fine.max_residual
    ratio = r1 / r2 if r2 > 0 else math.inf
    E = coarse.column("E")
    E0 = E[0] if E.size else 0.0
    increase = float(np.max(np.diff(E))) if E.size > 1 else 0.0
    return [
        Check("energy identity residual", r1 <= RESIDUAL_MAX, f"max residual {r1:.3e} (limit {RESIDUAL_MAX:g})"),
        Check("energy identity convergence", r1 == 0.0 or ratio >= RESIDUAL_RATIO_MIN,
              f"residual ratio on halving dt {ratio:.3f} (limit {RESIDUAL_RATIO_MIN})"),
        Check("energy nonincreasing", bool(np.all(E >= 0)) and increase <= 1e-10 * E0,
              f"largest record-to-record increase {increase:.3e}"),
    ]


def check_mean_conservation(traj: Trajectory) -> Check:
    mz = traj.column("mean_z")
    drift = float(np.max(np.abs(mz - mz[0]))) if mz.size else 0.0
    return Check("thermal mean conservation", drift <= MEAN_DRIFT_MAX,
                 f"max |mean_z(t) - mean_z(0)| {drift:.3e}")


def convolution_oracle_errors(dt: float, T: float = 2.0, n: int = 16) -> tuple:
    """Max errors of the direct and recursive quadratures on a manufactured history.

    ``psi(x, s) = sin(pi x) sin(s)`` with ``g(s) = 0.5 e^{-s}`` has
    convolution ``0.25 (sin t - cos t + e^{-t}) sin(pi x)``.
    """
    kernel = MemoryKernel.exponential(0.5, 1.0)
    x = Grid(n).x
    shape = np.sin(np.pi * x)
    steps = int(round(T / dt))
    buf = HistoryBuffer(n + 1).push(0.0, 0.0 * shape)
    rec = RecursiveConvolution.start(kernel, 0.0 * shape)
    err_direct = err_rec = 0.0
    for k in range(1, steps + 1):
        t = k * dt
        psi = math.sin(t) * shape
        buf.push(t, psi)
        rec = recursive_update(rec, psi, dt)
        exact = 0.25 * (math.sin(t) - math.cos(t) + math.exp(-t)) * shape
        err_direct = max(err_direct, float(np.max(np.abs(convolve(buf, kernel, t) - exact))))
        err_rec = max(err_rec, float(np.max(np.abs(rec.w - exact))))
    return err_direct, err_rec, float(np.max(np.abs(convolve(buf, kernel, T) - rec.w)))


def check_convolution_oracle(dt: float = 0.02) -> Check:
    d1, r1, _ = convolution_oracle_errors(dt)
    d2, r2, gap = convolution_oracle_errors(0.5 * dt)
    order_d, order_r = math.log2(d1 / d2), math.log2(r1 / r2)
    ok = min(order_d, order_r) >= ORACLE_ORDER_MIN and gap <= d2 + r2
    return Check("convolution oracle", ok,
                 f"orders {order_d:.3f} (direct), {order_r:.3f} (recursive); gap {gap:.2e}")


def linear_surrogate(cfg: SimConfig) -> SimConfig:
    """Same model with the friction law replaced by its linear counterpart."""
    if cfg.friction.is_linear:
        return cfg
    return dataclasses.replace(cfg, friction=FrictionLaw.linear(cfg.friction.alpha))


def check_resolvent(cfg: SimConfig, sizes=(8, 16, 32), samples: int = 20, seed: int = 0) -> Check:
    cfg = linear_surrogate(cfg)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in sizes:
        G = gen.assemble(cfg, n)
        for _ in range(samples):
            B = rng.standard_normal(G.matrix.shape[0])
            worst = max(worst, gen.solve_resolvent(cfg, n, B, generator=G).residual)
    return Check("resolvent solvability", worst <= RESOLVENT_MAX, f"max relative residual {worst:.2e}")


def check_coercivity(cfg: SimConfig, sizes=(8, 16, 32)) -> Check:
    cfg = linear_surrogate(cfg)
    values = [gen.coercivity(cfg, n).alpha0 for n in sizes]
    return Check("form coercivity", min(values) > 0,
                 "alpha0 " + ", ".join(f"{v:.4g}" for v in values) + f" at n = {tuple(sizes)}")


def verify_suite(cfg: SimConfig) -> List[Check]:
    traj = run(cfg)
    rows = check_energy_identity(cfg, traj)
    rows.append(check_mean_conservation(traj))
    rows.append(check_convolution_oracle())
    rows.append(check_resolvent(cfg))
    rows.append(check_coercivity(cfg))
    return rows

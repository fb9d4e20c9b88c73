"""Time stepping of the first-order system ``(phi, u, psi, v, theta, z)``.

Scheme
------
* Crank-Nicolson on the linear operator (a sparse LU of ``I - dt/2 A`` is
  computed once per run).
* The memory convolution is lagged: the value at the current level enters
  explicitly.
* Linear friction is part of ``A``. Any other friction law is split off
  symmetrically (half step, linear step, half step); each half step solves
  ``v_new = v_old - tau/rho2 h((v_old + v_new)/2)`` node by node with
  Newton's method, which keeps the discrete friction work sign-correct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import diagnostics as diag
from .errors import BlowUpError, HypothesisViolation, StepFailure
from .generator import NO_MEMORY, Stencils, block_slices, linear_operator, stack, unstack
from .grid import DIRICHLET, NEUMANN, Grid
from .memory import HistoryBuffer, HistoryMemory, RecursiveMemory, convolve, truncation_horizon
from .model import SimConfig, check_friction, check_kernel

BLOWUP_THRESHOLD = 1e12
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50

FIELDS = ("phi", "u", "psi", "v", "theta", "z")


@dataclass
class State:
    t: float
    phi: np.ndarray
    u: np.ndarray
    psi: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    z: np.ndarray

    def fields(self) -> dict:
        return {name: getattr(self, name) for name in FIELDS}

    def copy(self) -> "State":
        return State(self.t, *(getattr(self, f).copy() for f in FIELDS))

    @classmethod
    def zeros(cls, n: int, t: float = 0.0) -> "State":
        return cls(t, *(np.zeros(n + 1) for _ in FIELDS))


class Derivative(NamedTuple):
    phi: np.ndarray
    u: np.ndarray
    psi: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class StepReport:
    newton_iterations: int
    max_magnitude: float
    accepted: bool = True


def _check_finite(fields: dict, step=None, t=None):
    for name, f in fields.items():
        if not np.all(np.isfinite(f)):
            raise BlowUpError(f"field {name} became non-finite", field=name, step=step, t=t)
        if np.max(np.abs(f)) > BLOWUP_THRESHOLD:
            raise BlowUpError(f"field {name} exceeded {BLOWUP_THRESHOLD:g}", field=name, step=step, t=t)


def rhs(state: State, conv_psi, cfg: SimConfig) -> Derivative:
    """Time derivative of ``state`` given the memory convolution of psi at ``state.t``."""
    _check_finite({**state.fields(), "conv_psi": np.asarray(conv_psi)}, t=state.t)
    c = cfg.coefficients
    grid = Grid(cfg.n, c.L)
    lap, ddx = grid.laplacian, grid.ddx
    shear = grid.ddx(state.phi, DIRICHLET) + state.psi
    u_dot = (c.k1 * (lap(state.phi, DIRICHLET) + ddx(state.psi, DIRICHLET)) - c.mu * state.u) / c.rho1
    v_dot = (c.k2 * lap(state.psi, DIRICHLET) - lap(conv_psi, DIRICHLET) - c.k1 * shear
             - cfg.friction(state.v) - c.gamma * ddx(state.z, NEUMANN)) / c.rho2
    z_dot = (-c.gamma * ddx(state.v, DIRICHLET) + c.delta * lap(state.theta, NEUMANN)
             + c.beta * lap(state.z, NEUMANN)) / c.rho3
    for f in (u_dot, v_dot):
        f[0] = f[-1] = 0.0
    return Derivative(state.u.copy(), u_dot, state.v.copy(), v_dot, state.z.copy(), z_dot)


class Stepper:
    """Factorized Crank-Nicolson step for one configuration and step size."""

    def __init__(self, cfg: SimConfig, dt: float):
        self.cfg = cfg
        self.dt = dt
        c = cfg.coefficients
        self.n = cfg.n
        self.grid = Grid(cfg.n, c.L)
        self.split_friction = not cfg.friction.is_linear
        alpha = 0.0 if self.split_friction else cfg.friction.alpha
        A = linear_operator(c, cfg.kernel, cfg.n, NO_MEMORY, friction_alpha=alpha)
        eye = sp.identity(A.shape[0], format="csc")
        self.explicit = (eye + 0.5 * dt * A).tocsr()
        self.lu = spla.splu((eye - 0.5 * dt * A).tocsc())
        self.lap_d = Stencils(self.grid).lap_d
        self.slices = block_slices(cfg.n)

    def friction_substep(self, v: np.ndarray, tau: float) -> tuple:
        """Implicit-midpoint friction update, solved pointwise by Newton."""
        law = self.cfg.friction
        k = tau / self.cfg.coefficients.rho2
        target = 2.0 * v
        m = v.copy()
        tol = NEWTON_TOL * max(1.0, float(np.max(np.abs(target))))
        for it in range(NEWTON_MAXITER + 1):
            res = 2.0 * m + k * law(m) - target
            if np.max(np.abs(res)) <= tol:
                return 2.0 * m - v, it
            if it == NEWTON_MAXITER:
                break
            m = m - res / (2.0 + k * law.derivative(m))
        raise StepFailure(f"friction Newton solve did not converge in {NEWTON_MAXITER} iterations")

    def advance(self, state: State, conv_psi) -> tuple:
        dt = self.dt
        y = stack(state.fields(), self.n)
        sv = self.slices["v"]
        iters = 0
        if self.split_friction:
            y[sv], it = self.friction_substep(y[sv], 0.5 * dt)
            iters += it
        b = self.explicit @ y
        conv = np.asarray(conv_psi, dtype=float)
        if np.any(conv):
            b[sv] -= dt / self.cfg.coefficients.rho2 * (self.lap_d @ conv[1:-1])
        y = self.lu.solve(b)
        if self.split_friction:
            y[sv], it = self.friction_substep(y[sv], 0.5 * dt)
            iters += it
        fields = unstack(y, self.n)
        _check_finite(fields, t=state.t + dt)
        new = State(state.t + dt, **fields)
        return new, StepReport(iters, float(np.max(np.abs(y))) if y.size else 0.0)


def _conv_from(memory, cfg: SimConfig, state: State):
    if memory is None:
        return np.zeros(cfg.n + 1)
    if isinstance(memory, HistoryBuffer):
        return convolve(memory, cfg.kernel, state.t)
    return memory.conv()


def step(state: State, memory, cfg: SimConfig, dt: float, stepper: Optional[Stepper] = None):
    """One accepted step of size ``dt``; returns ``(new_state, StepReport)``.

    ``memory`` is a :class:`~timotherm.memory.HistoryBuffer` or memory tracker
    whose latest level is ``state.t`` (or ``None`` for no memory). The caller
    records the new psi level afterwards.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if stepper is None or stepper.dt != dt or stepper.cfg is not cfg:
        stepper = Stepper(cfg, dt)
    return stepper.advance(state, _conv_from(memory, cfg, state))


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    cfg: SimConfig
    records: list
    max_residual: float
    max_energy_increase: float
    final_state: State
    n_steps: int
    states: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    @property
    def energies(self) -> np.ndarray:
        return self.column("E")


def initial_state(cfg: SimConfig) -> State:
    grid = Grid(cfg.n, cfg.coefficients.L)
    f = cfg.initial.on_grid(grid.x, grid.L)
    return State(0.0, f["phi0"], f["phi1"], f["psi0"], f["psi1"], f["theta0"], f["theta1"])


def check_hypotheses(cfg: SimConfig) -> None:
    """Raise :class:`HypothesisViolation` when the kernel or friction law fails its check."""
    kr = check_kernel(cfg.kernel)
    if not kr.ok:
        raise HypothesisViolation("kernel hypotheses fail: " + "; ".join(kr.reasons), kr)
    law = cfg.friction
    fr = check_friction(law, law.eps_prime, max(100.0, 10 * law.eps_prime), samples=20_001)
    if not fr.ok:
        raise HypothesisViolation("friction hypotheses fail", fr)


def make_memory(cfg: SimConfig, psi0, t0: float = 0.0):
    grid = Grid(cfg.n, cfg.coefficients.L)
    method = cfg.memory_method
    if method == "auto":
        method = "recursive" if cfg.kernel.is_exponential and cfg.eps_trunc == 0 else "history"
    if method == "recursive":
        return RecursiveMemory(cfg.kernel, psi0, t0, grid.dx)
    return HistoryMemory(cfg.kernel, psi0, t0, grid.dx, truncation_horizon(cfg.kernel, cfg.eps_trunc))


def run(cfg: SimConfig, keep_states: bool = False) -> Trajectory:
    """Integrate from the configured initial data to ``cfg.T``.

    Energy and dissipation are evaluated every step (for the identity
    residual and monotonicity summary); full records are kept every
    ``cfg.stride`` steps and at the final step.
    """
    if not cfg.override_hypotheses:
        check_hypotheses(cfg)
    c = cfg.coefficients
    grid = Grid(cfg.n, c.L)
    state = initial_state(cfg)
    memory = make_memory(cfg, state.psi)
    stepper = Stepper(cfg, cfg.dt)
    n_steps = cfg.n_steps

    def evaluate(s):
        E = diag.energy(s, grid, c, cfg.kernel, memory)
        D = diag.dissipation(s, grid, c, cfg.kernel, cfg.friction, memory)
        return E, D

    def record(s, E, D, residual):
        I = diag.lyapunov_terms(s, grid, cfg.kernel, memory)
        L = diag.lyapunov_L(cfg.weights, E, **I)
        return diag.EnergyRecord(s.t, E, D, residual, I["I1"], I["I2"], I["I3"], I["I4"], L,
                                 grid.integrate(s.z))

    E_prev, D_prev = evaluate(state)
    E0 = E_prev
    records = [record(state, E_prev, D_prev, 0.0)]
    states = [state.copy()] if keep_states else []
    max_residual = 0.0
    max_increase = -math.inf
    for k in range(1, n_steps + 1):
        try:
            state, _ = stepper.advance(state, memory.conv())
        except (BlowUpError, StepFailure) as exc:
            exc.step, exc.t = k, k * cfg.dt
            exc.args = (f"step {k} (t = {k * cfg.dt:g}): {exc.args[0]}",)
            raise
        state.t = k * cfg.dt
        memory.advance(state.t, state.psi)
        E, D = evaluate(state)
        d_mid = 0.5 * (D + D_prev)
        scale = E0 + abs(d_mid)
        residual = abs((E - E_prev) / cfg.dt - d_mid) / scale if scale > 0 else 0.0
        max_residual = max(max_residual, residual)
        max_increase = max(max_increase, E - E_prev)
        if k % cfg.stride == 0 or k == n_steps:
            records.append(record(state, E, D, residual))
            if keep_states:
                states.append(state.copy())
        E_prev, D_prev = E, D
    if n_steps == 0:
        max_increase = 0.0
    return Trajectory(cfg, records, max_residual, max_increase, state, n_steps, states)

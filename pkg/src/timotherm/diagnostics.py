"""Energy, dissipation rate, Lyapunov functionals and decay fitting.

Quadratic gradient terms use forward differences on cells, which makes the
discrete energy the exact conserved/dissipated quantity of the semi-discrete
system (see :mod:`timotherm.grid`). With general coefficients the energy is

    E = 1/2 [ rho1 |u|^2 + rho2 |v|^2 + rho3 |z|^2 + k1 S(phi, psi)
              + delta |theta_x|^2 + (k2 - int_0^t g) |psi_x|^2 + g o psi_x ]

where ``S = |phi_x + avg(psi)|^2 + |psi|^2 - |avg(psi)|^2`` is the discrete
shear term, and its rate is

    D = -mu |u|^2 - <h(v), v> - beta |z_x|^2 - g(t)/2 |psi_x|^2 + 1/2 g' o psi_x.

With unit coefficients these are the textbook functionals up to O(dx^2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ContractError
from .grid import DIRICHLET, Grid
from .memory import HistoryBuffer, convolve, g_circ, g_prime_circ
from .model import Coefficients, FrictionLaw, LyapunovWeights, MemoryKernel

__all__ = [
    "EnergyRecord", "LyapunovWeights", "DecayFit", "EquivalenceReport",
    "energy", "dissipation", "identity_residual", "lyapunov_terms", "lyapunov_L",
    "weight_margins", "check_weights", "find_feasible_weights",
    "equivalence_ratios", "fit_decay",
]


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    E: float
    D: float
    residual: float
    I1: float
    I2: float
    I3: float
    I4: float
    L: float
    mean_z: float

    FIELDS = ("t", "E", "D", "residual", "I1", "I2", "I3", "I4", "L", "mean_z")

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


class _BufferMemory:
    """Adapter giving a bare :class:`HistoryBuffer` the memory-tracker interface."""

    def __init__(self, history, kernel, t, dx):
        self.history, self.kernel, self.t, self.dx = history, kernel, t, dx

    def conv(self):
        return convolve(self.history, self.kernel, self.t)

    def g_circ(self, psi):
        return g_circ(self.history, self.kernel, self.t, psi, self.dx)

    def g_prime_circ(self, psi):
        return g_prime_circ(self.history, self.kernel, self.t, psi, self.dx)


class _NoMemory:
    def __init__(self, size):
        self.size = size

    def conv(self):
        return np.zeros(self.size)

    def g_circ(self, psi):
        return 0.0

    def g_prime_circ(self, psi):
        return 0.0


def _tracker(memory, kernel, state, grid):
    if memory is None:
        return _NoMemory(grid.n + 1)
    if isinstance(memory, HistoryBuffer):
        return _BufferMemory(memory, kernel, state.t, grid.dx)
    return memory


def energy(state, grid: Grid, coef: Coefficients, kernel: MemoryKernel, memory=None) -> float:
    """Total energy of ``state``; ``memory`` holds the psi history (or ``None`` at t = 0)."""
    c = coef
    mem = _tracker(memory, kernel, state, grid)
    gphi = grid.dxforward(state.phi)
    gpsi = grid.dxforward(state.psi)
    apsi = grid.midpoint(state.psi)
    shear = (grid.cell_inner(gphi + apsi, gphi + apsi) + grid.inner(state.psi, state.psi)
             - grid.cell_inner(apsi, apsi))
    gth = grid.dxforward(state.theta)
    total = (c.rho1 * grid.inner(state.u, state.u)
             + c.rho2 * grid.inner(state.v, state.v)
             + c.rho3 * grid.inner(state.z, state.z)
             + c.k1 * shear
             + c.delta * grid.cell_inner(gth, gth)
             + (c.k2 - kernel.mass(state.t)) * grid.cell_inner(gpsi, gpsi)
             + mem.g_circ(state.psi))
    return 0.5 * total


def dissipation(state, grid: Grid, coef: Coefficients, kernel: MemoryKernel,
                friction: FrictionLaw, memory=None) -> float:
    """Right side of the energy identity at ``state`` (nonpositive under the hypotheses)."""
    c = coef
    mem = _tracker(memory, kernel, state, grid)
    gpsi = grid.dxforward(state.psi)
    gz = grid.dxforward(state.z)
    return (-c.mu * grid.inner(state.u, state.u)
            - grid.inner(friction(state.v), state.v)
            - c.beta * grid.cell_inner(gz, gz)
            - 0.5 * kernel(state.t) * grid.cell_inner(gpsi, gpsi)
            + 0.5 * mem.g_prime_circ(state.psi))


def identity_residual(rec0: EnergyRecord, rec1: EnergyRecord, E0: float) -> float:
    """Normalized mismatch between the energy difference quotient and the mean rate."""
    dt = rec1.t - rec0.t
    if not dt > 0:
        raise ContractError("records must be consecutive with increasing time")
    d_mid = 0.5 * (rec0.D + rec1.D)
    scale = E0 + abs(d_mid)
    if scale == 0:
        return 0.0
    return abs((rec1.E - rec0.E) / dt - d_mid) / scale


def lyapunov_terms(state, grid: Grid, kernel: MemoryKernel, memory=None) -> dict:
    """The four auxiliary functionals I1..I4 at ``state``."""
    mem = _tracker(memory, kernel, state, grid)
    conv = mem.conv()
    inner = grid.inner
    I1 = -inner(state.v, kernel.mass(state.t) * state.psi - conv)
    I2 = (inner(state.v, grid.ddx(state.phi, DIRICHLET) + state.psi)
          + inner(grid.ddx(state.psi, DIRICHLET), state.u)
          - inner(state.u, grid.ddx(conv, DIRICHLET)))
    I3 = -inner(state.theta, state.z)
    I4 = -inner(state.psi, state.v) - inner(state.phi, state.u)
    return {"I1": I1, "I2": I2, "I3": I3, "I4": I4}


def lyapunov_L(weights: LyapunovWeights, E: float, I1: float, I2: float, I3: float, I4: float) -> float:
    w = weights
    return w.N * E + w.N1 * I1 + w.N2 * I2 + w.N3 * I3 + w.N4 * I4


# ---------------------------------------------------------------------------
# Weight conditions of the combined functional
# ---------------------------------------------------------------------------


def _margins(w: LyapunovWeights, c_prime, mass, g, xi) -> np.ndarray:
    eps, e7, e8, e9 = w.epsilon, w.epsilon7, w.epsilon8, w.epsilon9
    mass, g, xi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mass, g, xi)))
    const = np.ones_like(mass)
    return np.array([
        (w.N - w.N2 * w.c7 * (eps + 1 / eps) + w.N4 * (1 - e8)) * const,
        (w.N - w.N1 * eps - w.N2 * e7 / e7 - w.N3 * (e8 + w.c8 / e8)) * const,
        w.N * c_prime + w.N1 * (mass - eps) - w.N2 * w.c7 / e7 - w.N3 * e8 + w.N4,
        w.N * g / 2 + w.N1 * eps - w.N2 * w.c7 * (e7 + 1 / e7) - w.N3 * w.c9,
        xi * (w.N / 2 + w.N1 * w.c / eps + w.N2 * w.c7 / e7) - (w.N1 * w.c * (eps + 1 / eps) + w.N4 * e9),
        (-w.N1 * eps + w.N2 * (1 - e7) - w.N4) * const,
    ])


def _kernel_samples(kernel: MemoryKernel, times):
    t = np.atleast_1d(np.asarray(times, dtype=float))
    return (np.array([kernel.mass(s) for s in t]), np.asarray(kernel(t), dtype=float),
            np.array([kernel.xi(s) for s in t]))


def weight_margins(weights: LyapunovWeights, kernel: MemoryKernel,
                   friction: Optional[FrictionLaw], t: float) -> np.ndarray:
    """Left sides of the six sign conditions on the Lyapunov weights at time ``t``.

    ``c'`` is the friction law's lower bound when a law is given and
    ``weights.c_prime`` otherwise; ``xi`` is the kernel decay rate at ``t``.
    """
    c_prime = friction.c_lower if friction is not None else weights.c_prime
    return _margins(weights, c_prime, kernel.mass(t), kernel(t), kernel.xi(t))


def check_weights(weights: LyapunovWeights, kernel: MemoryKernel,
                  friction: Optional[FrictionLaw], t: float) -> list:
    """Six booleans, one per weight condition; all true means the tuple is admissible at ``t``."""
    return [bool(m > 0) for m in weight_margins(weights, kernel, friction, t)]


def find_feasible_weights(kernel: MemoryKernel, friction: Optional[FrictionLaw],
                          times: Iterable[float], base: Optional[LyapunovWeights] = None,
                          N_values: Sequence[float] = (1, 2, 5, 10, 20, 50, 100, 200),
                          Ni_values: Sequence[float] = (0.1, 0.5, 1, 2, 5, 10)) -> Optional[LyapunovWeights]:
    """Coarse grid search over ``(N, N1, N2, N3, N4)`` with the proof constants of ``base`` fixed.

    Returns the tuple with the smallest ``N`` whose worst margin over
    ``times`` is positive, breaking ties by the largest worst margin
    relative to ``N``; ``None`` when nothing on the grid is feasible.
    """
    base = base or LyapunovWeights()
    c_prime = friction.c_lower if friction is not None else base.c_prime
    samples = _kernel_samples(kernel, list(times))
    best, best_key = None, None
    for N, N1, N2, N3, N4 in itertools.product(N_values, Ni_values, Ni_values, Ni_values, Ni_values):
        cand = LyapunovWeights(**{**base.__dict__, "N": float(N), "N1": float(N1),
                                  "N2": float(N2), "N3": float(N3), "N4": float(N4)})
        worst = float(_margins(cand, c_prime, *samples).min())
        if worst <= 0:
            continue
        key = (N, -worst / N)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best


# ---------------------------------------------------------------------------
# Equivalence and decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    c1: float
    c2: float
    holds: bool
    defined: bool = True


def _columns(data, *names):
    if hasattr(data, "records"):
        data = data.records
    if isinstance(data, tuple) and len(data) == len(names):
        return [np.asarray(col, dtype=float) for col in data]
    return [np.array([getattr(r, name) for r in data], dtype=float) for name in names]


def equivalence_ratios(data, floor: float = 1e-300) -> EquivalenceReport:
    """Range of ``L / E`` over records with ``E > floor``.

    ``data`` is a trajectory, a list of records or a pair ``(E, L)``.
    """
    E, L = _columns(data, "E", "L")
    mask = E > floor
    if not np.any(mask):
        return EquivalenceReport(math.nan, math.nan, False, defined=False)
    ratio = L[mask] / E[mask]
    c1, c2 = float(ratio.min()), float(ratio.max())
    return EquivalenceReport(c1, c2, bool(c1 > 0))


@dataclass(frozen=True)
class DecayFit:
    C0: float
    delta0: float
    r_squared: float
    window: tuple


def fit_decay(data, window: Optional[tuple] = None) -> DecayFit:
    """Least-squares line through ``(t, ln E)`` over ``window``.

    ``data`` is a trajectory, a list of records or a pair ``(t, E)``. The
    default window is the last 60% of the time span.
    """
    t, E = _columns(data, "t", "E")
    if t.size == 0:
        raise ContractError("no records to fit")
    if window is None:
        span = t[-1] - t[0]
        window = (t[0] + 0.4 * span, t[-1])
    lo, hi = window
    if lo < t[0] - 1e-12 or hi > t[-1] + 1e-12 or not lo < hi:
        raise ContractError(f"fit window {window} is not inside [{t[0]}, {t[-1]}]")
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if np.count_nonzero(sel) < 2:
        raise ContractError("fit window holds fewer than two records")
    bad = np.nonzero(sel & ~(E > 0))[0]
    if bad.size:
        k = int(bad[0])
        raise ContractError(f"record {k} at t = {t[k]} has nonpositive energy {E[k]}")
    ts, y = t[sel], np.log(E[sel])
    slope, intercept = np.polyfit(ts, y, 1)
    resid = y - (slope * ts + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    return DecayFit(float(np.exp(intercept)), float(-slope), r2, (float(lo), float(hi)))

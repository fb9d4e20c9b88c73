"""History storage and quadrature of the viscoelastic memory terms.

The buffer stores nodal ``psi`` snapshots. The PDE needs
``int_0^t g(t-s) psi_xx(s) ds``; :func:`convolve` returns the convolution of
``psi`` itself and callers apply the Laplacian afterwards (the operators
commute on the fixed stencil). All time integrals are composite trapezoid
rules over the stored levels.

For exponential kernels :class:`RecursiveConvolution` reproduces the same
trapezoid sum in O(1) work per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ContractError
from .model import MemoryKernel


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    """Quadrature weights of the composite trapezoid rule on ``times``."""
    w = np.zeros_like(times)
    if times.size > 1:
        h = np.diff(times)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
    return w


def truncation_horizon(kernel: MemoryKernel, eps_trunc: float) -> float:
    """Smallest lag beyond which ``g < eps_trunc * g(0)``; ``inf`` when disabled."""
    if eps_trunc <= 0:
        return math.inf
    if eps_trunc >= 1:
        return 0.0
    if kernel.is_exponential:
        return math.log(1.0 / eps_trunc) / kernel.b
    t = kernel._t
    below = np.nonzero(kernel._g < eps_trunc * kernel.g0)[0]
    return float(t[below[0]]) if below.size else float(t[-1])


class HistoryBuffer:
    """Append-only record of ``(time, psi)`` pairs on one grid.

    Parameters
    ----------
    size : int
        Number of nodes of each snapshot.
    horizon : float
        Snapshots older than ``t - horizon`` are dropped on :meth:`push`.
    """

    def __init__(self, size: int, horizon: float = math.inf):
        self.size = int(size)
        self.horizon = float(horizon)
        self._times = np.empty(16)
        self._data = np.empty((16, self.size))
        self._start = 0
        self._stop = 0

    def __len__(self) -> int:
        return self._stop - self._start

    @property
    def times(self) -> np.ndarray:
        return self._times[self._start:self._stop]

    @property
    def snapshots(self) -> np.ndarray:
        return self._data[self._start:self._stop]

    @property
    def last_time(self) -> Optional[float]:
        return float(self._times[self._stop - 1]) if len(self) else None

    def push(self, t: float, psi) -> "HistoryBuffer":
        psi = np.asarray(psi, dtype=float)
        if psi.shape != (self.size,):
            raise ContractError(f"snapshot has shape {psi.shape}, buffer holds ({self.size},)")
        if len(self) and not t > self._times[self._stop - 1]:
            raise ContractError(f"history times must increase: {t} after {self.last_time}")
        if self._stop == self._times.size:
            self._grow()
        self._times[self._stop] = t
        self._data[self._stop] = psi
        self._stop += 1
        if math.isfinite(self.horizon):
            cutoff = t - self.horizon
            keep = np.searchsorted(self.times, cutoff, side="left")
            self._start += int(keep)
        return self

    def _grow(self):
        live = len(self)
        cap = max(16, 2 * live)
        times = np.empty(cap)
        data = np.empty((cap, self.size))
        times[:live] = self.times
        data[:live] = self.snapshots
        self._times, self._data = times, data
        self._start, self._stop = 0, live


def _levels(history: HistoryBuffer, t: float):
    if not len(history):
        if t != 0:
            raise ContractError("empty history is only valid at t = 0")
        return None
    last = history.last_time
    if t < last - 1e-12 * max(1.0, abs(last)):
        raise ContractError(f"t = {t} precedes the last stored level {last}")
    times = history.times
    return times, trapezoid_weights(times), np.maximum(t - times, 0.0)


def convolve(history: HistoryBuffer, kernel: MemoryKernel, t: float) -> np.ndarray:
    """Nodal ``int g(t - s) psi(s) ds`` over the stored levels."""
    levels = _levels(history, t)
    if levels is None:
        return np.zeros(history.size)
    _, w, lag = levels
    return (w * kernel(lag)) @ history.snapshots


def _gradient_history_terms(history, kernel, t, psi_now, dx, weight_fn):
    levels = _levels(history, t)
    if levels is None:
        return 0.0
    _, w, lag = levels
    grad = np.diff(history.snapshots, axis=1) / dx
    grad_now = np.diff(np.asarray(psi_now, dtype=float)) / dx
    sq = np.sum((grad_now - grad) ** 2, axis=1) * dx
    return float((w * weight_fn(lag)) @ sq)


def g_circ(history: HistoryBuffer, kernel: MemoryKernel, t: float, psi_now, dx: float) -> float:
    """``int_0^1 int_0^t g(t-s) (psi_x(t) - psi_x(s))^2 ds dx`` (always >= 0)."""
    return _gradient_history_terms(history, kernel, t, psi_now, dx, kernel)


def g_prime_circ(history: HistoryBuffer, kernel: MemoryKernel, t: float, psi_now, dx: float) -> float:
    """Same as :func:`g_circ` with ``g'`` in place of ``g`` (nonpositive under decay)."""
    return _gradient_history_terms(history, kernel, t, psi_now, dx, kernel.derivative)


@dataclass(frozen=True)
class RecursiveConvolution:
    """Running trapezoid convolution with an exponential kernel ``a e^{-b s}``.

    ``w`` holds ``int_0^t g(t-s) f(s) ds`` for whatever sequence ``f`` was
    fed in; ``last`` is the most recent sample of ``f``.
    """

    w: np.ndarray
    t: float
    a: float
    b: float
    last: np.ndarray

    @classmethod
    def start(cls, kernel: MemoryKernel, f0, t0: float = 0.0) -> "RecursiveConvolution":
        if not kernel.is_exponential:
            raise ContractError("recursive convolution needs an exponential kernel")
        f0 = np.asarray(f0, dtype=float)
        return cls(np.zeros_like(f0), float(t0), kernel.a, kernel.b, f0.copy())


def recursive_update(conv: RecursiveConvolution, f_new, dt: float) -> RecursiveConvolution:
    """Advance by ``dt``: ``w <- e^{-b dt} w + dt/2 (a f_new + a e^{-b dt} f_old)``."""
    if not dt > 0:
        raise ContractError("dt must be positive")
    f_new = np.asarray(f_new, dtype=float)
    decay = math.exp(-conv.b * dt)
    w = decay * conv.w + 0.5 * dt * conv.a * (f_new + decay * conv.last)
    return replace(conv, w=w, t=conv.t + dt, last=f_new.copy())


class HistoryMemory:
    """Memory terms evaluated from the full stored history (any kernel)."""

    def __init__(self, kernel: MemoryKernel, psi0, t0: float, dx: float, horizon: float = math.inf):
        psi0 = np.asarray(psi0, dtype=float)
        self.kernel = kernel
        self.dx = dx
        self.history = HistoryBuffer(psi0.size, horizon).push(t0, psi0)
        self.t = t0

    def advance(self, t: float, psi) -> None:
        self.history.push(t, psi)
        self.t = t

    def conv(self) -> np.ndarray:
        return convolve(self.history, self.kernel, self.t)

    def g_circ(self, psi_now) -> float:
        return g_circ(self.history, self.kernel, self.t, psi_now, self.dx)

    def g_prime_circ(self, psi_now) -> float:
        return g_prime_circ(self.history, self.kernel, self.t, psi_now, self.dx)


class RecursiveMemory:
    """Exponential-kernel memory terms from three running convolutions.

    ``g o psi_x`` is expanded cell by cell as
    ``m q^2 - 2 q (conv of q) + (conv of q^2)`` with ``q = psi_x(t)`` and
    ``m`` the trapezoid mass, which equals the direct trapezoid sum.
    """

    def __init__(self, kernel: MemoryKernel, psi0, t0: float, dx: float):
        psi0 = np.asarray(psi0, dtype=float)
        self.kernel = kernel
        self.dx = dx
        q = np.diff(psi0) / dx
        self._psi = RecursiveConvolution.start(kernel, psi0, t0)
        self._sq = RecursiveConvolution.start(kernel, q * q, t0)
        self._mass = RecursiveConvolution.start(kernel, np.ones(1), t0)
        self.t = t0

    def advance(self, t: float, psi) -> None:
        dt = t - self.t
        psi = np.asarray(psi, dtype=float)
        q = np.diff(psi) / self.dx
        self._psi = recursive_update(self._psi, psi, dt)
        self._sq = recursive_update(self._sq, q * q, dt)
        self._mass = recursive_update(self._mass, np.ones(1), dt)
        self.t = t

    def conv(self) -> np.ndarray:
        return self._psi.w

    def g_circ(self, psi_now) -> float:
        q = np.diff(np.asarray(psi_now, dtype=float)) / self.dx
        cq = np.diff(self._psi.w) / self.dx
        value = float(np.sum(self._mass.w[0] * q * q - 2 * q * cq + self._sq.w)) * self.dx
        return max(value, 0.0)

    def g_prime_circ(self, psi_now) -> float:
        return -self.kernel.b * self.g_circ(psi_now)

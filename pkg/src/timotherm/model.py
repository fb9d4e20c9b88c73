"""Physical parameters, kernel and friction families, initial data and run configuration.

Everything here is an immutable value object. The hypothesis checkers
(:func:`check_kernel`, :func:`check_friction`) sample the analytic
conditions on documented grids and return reports instead of raising.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ContractError

HYPOTHESIS_TOL = 1e-9

EXPONENTIAL = "exponential"
TABULATED = "tabulated"
LINEAR = "linear"
RATIONAL_CUBIC = "rational_cubic"


@dataclass(frozen=True)
class Coefficients:
    """Material constants of the beam / thermal system.

    Densities, stiffnesses and the domain length must be strictly positive.
    The damping and coupling constants ``mu``, ``beta``, ``delta`` and
    ``gamma`` may be zero so that subsystems can be switched off in tests.
    """

    rho1: float = 1.0
    rho2: float = 1.0
    rho3: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    mu: float = 1.0
    beta: float = 1.0
    delta: float = 1.0
    gamma: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho3", "k1", "k2", "L"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ContractError(f"coefficient {name} must be positive, got {value!r}")
        for name in ("mu", "beta", "delta", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ContractError(f"coefficient {name} must be nonnegative, got {value!r}")

    @property
    def equal_wave_speeds(self) -> bool:
        return abs(self.k1 / self.rho1 - self.k2 / self.rho2) <= 1e-12


# ---------------------------------------------------------------------------
# Relaxation kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MemoryKernel:
    """Relaxation kernel ``g`` of the viscoelastic memory term.

    Use :meth:`exponential` or :meth:`tabulated` rather than the raw
    constructor. A tabulated kernel is the piecewise-linear interpolant of
    its samples and is zero beyond the last sample time.
    """

    family: str
    a: float = 0.0
    b: float = 0.0
    times: tuple = ()
    values: tuple = ()
    xi_bound: Optional[float] = None
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.family == EXPONENTIAL:
            if not (math.isfinite(self.a) and self.a >= 0):
                raise ContractError(f"exponential kernel needs a >= 0, got {self.a!r}")
            if not (math.isfinite(self.b) and self.b > 0):
                raise ContractError(f"exponential kernel needs b > 0, got {self.b!r}")
        elif self.family == TABULATED:
            t = np.asarray(self.times, dtype=float)
            g = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.shape != g.shape or t.size < 2:
                raise ContractError("tabulated kernel needs >= 2 matching samples")
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise ContractError("tabulated sample times must start at 0 and increase")
            if not np.all(np.isfinite(g)) or np.any(g < 0):
                raise ContractError("tabulated kernel values must be finite and nonnegative")
        else:
            raise ContractError(f"unknown kernel family {self.family!r}")

    @classmethod
    def exponential(cls, a: float = 0.5, b: float = 1.0) -> "MemoryKernel":
        return cls(EXPONENTIAL, a=float(a), b=float(b))

    @classmethod
    def tabulated(cls, times: Sequence[float], values: Sequence[float],
                  xi_bound: Optional[float] = None, source: Optional[str] = None) -> "MemoryKernel":
        return cls(TABULATED, times=tuple(float(s) for s in times),
                   values=tuple(float(v) for v in values),
                   xi_bound=None if xi_bound is None else float(xi_bound), source=source)

    @property
    def is_exponential(self) -> bool:
        return self.family == EXPONENTIAL

    @cached_property
    def _t(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @cached_property
    def _g(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @cached_property
    def _slopes(self) -> np.ndarray:
        return np.diff(self._g) / np.diff(self._t)

    @cached_property
    def _cumulative(self) -> np.ndarray:
        seg = 0.5 * (self._g[1:] + self._g[:-1]) * np.diff(self._t)
        return np.concatenate(([0.0], np.cumsum(seg)))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ContractError("kernel argument must be nonnegative")
        if self.family == EXPONENTIAL:
            out = self.a * np.exp(-self.b * s)
        else:
            out = np.interp(s, self._t, self._g, right=0.0)
        return out if out.ndim else float(out)

    def derivative(self, s):
        """g'(s); right derivative at tabulation nodes, zero past the table."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ContractError("kernel argument must be nonnegative")
        if self.family == EXPONENTIAL:
            out = -self.b * self.a * np.exp(-self.b * s)
        else:
            k = np.searchsorted(self._t, s, side="right") - 1
            inside = k < self._slopes.size
            out = np.where(inside, self._slopes[np.minimum(k, self._slopes.size - 1)], 0.0)
        return out if out.ndim else float(out)

    def mass(self, t):
        """int_0^t g(s) ds."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ContractError("kernel_mass needs t >= 0")
        if self.family == EXPONENTIAL:
            out = (self.a / self.b) * -np.expm1(-self.b * t)
        else:
            tt = np.minimum(t, self._t[-1])
            k = np.minimum(np.searchsorted(self._t, tt, side="right") - 1, self._slopes.size - 1)
            h = tt - self._t[k]
            out = self._cumulative[k] + self._g[k] * h + 0.5 * self._slopes[k] * h * h
        return out if out.ndim else float(out)

    @property
    def total_mass(self) -> float:
        if self.family == EXPONENTIAL:
            return self.a / self.b
        return float(self._cumulative[-1])

    @property
    def l(self) -> float:
        return 1.0 - self.total_mass

    @property
    def g0(self) -> float:
        return self.a if self.family == EXPONENTIAL else float(self._g[0])

    @cached_property
    def xi_table(self) -> Optional[np.ndarray]:
        """Largest admissible nonincreasing decay-rate function on the sample segments.

        On a segment where the interpolant has slope ``m`` and left value
        ``g_k`` the condition ``g' <= -xi g`` holds iff ``xi <= -m / g_k``;
        a running minimum makes the result nonincreasing. Segments that are
        identically zero impose nothing.
        """
        if self.family == EXPONENTIAL:
            return None
        g_left = self._g[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(g_left > 0, -self._slopes / g_left, np.inf)
        ratio = np.where((g_left == 0) & (self._slopes == 0), np.inf, ratio)
        return np.minimum.accumulate(ratio)

    def xi(self, t: float) -> float:
        """Decay rate usable in ``g' <= -xi g`` at time ``t``."""
        if self.family == EXPONENTIAL:
            return self.b
        table = self.xi_table
        k = int(np.clip(np.searchsorted(self._t, t, side="right") - 1, 0, table.size - 1))
        finite = table[np.isfinite(table)]
        value = table[k]
        if not np.isfinite(value):
            value = finite[-1] if finite.size else 0.0
        return float(value)


def kernel_eval(kernel: MemoryKernel, s):
    """g(s) for s >= 0."""
    return kernel(s)


def kernel_mass(kernel: MemoryKernel, t):
    """int_0^t g(s) ds for t >= 0."""
    return kernel.mass(t)


@dataclass(frozen=True)
class KernelReport:
    g0_positive: bool
    l: float
    xi_estimate: float
    ok: bool
    reasons: tuple = ()
    xi_table: Optional[np.ndarray] = field(default=None, compare=False)


def check_kernel(kernel: MemoryKernel, tol: float = HYPOTHESIS_TOL) -> KernelReport:
    """Check g(0) > 0, l > 0 and the exponential-type decay condition.

    For exponential kernels ``g'/g = -b`` exactly. For tabulated kernels the
    ratio ``-g'/g`` is taken segment by segment (see
    :attr:`MemoryKernel.xi_table`) and ``xi_estimate`` is the largest
    constant admissible on the whole table.
    """
    reasons = []
    g0 = kernel.g0
    g0_positive = g0 > 0
    if not g0_positive:
        reasons.append(f"g(0) = {g0:g} <= 0")
    l = kernel.l
    if not l > 0:
        reasons.append(f"l = {l:g} <= 0")
    table = None
    if kernel.is_exponential:
        xi_estimate = kernel.b
    else:
        table = kernel.xi_table
        finite = table[np.isfinite(table)]
        xi_estimate = float(finite.min()) if finite.size else 0.0
        if np.any(kernel._slopes > tol * max(g0, 1.0)):
            reasons.append("kernel samples increase somewhere")
        if not xi_estimate > 0:
            reasons.append("no positive decay rate xi")
        if kernel.xi_bound is not None and xi_estimate < kernel.xi_bound * (1 - tol):
            reasons.append(f"decay rate {xi_estimate:g} below claimed xi = {kernel.xi_bound:g}")
    if not xi_estimate > 0 and kernel.is_exponential:
        reasons.append("no positive decay rate xi")
    ok = not reasons
    return KernelReport(bool(g0_positive), float(l), float(xi_estimate), ok, tuple(reasons), table)


# ---------------------------------------------------------------------------
# Frictional damping law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrictionLaw:
    """Nonlinear damping ``h`` acting on the rotation velocity.

    ``linear``: ``h(s) = alpha s``. ``rational_cubic``:
    ``h(s) = alpha s^3 / (1 + s^2)``. ``c_lower``, ``c_upper`` and
    ``eps_prime`` are the claimed linear bounds valid for ``|s| >= eps_prime``.
    ``comparison`` names the convex comparison function and is never evaluated.
    """

    family: str
    alpha: float
    c_lower: float
    c_upper: float
    eps_prime: float = 1.0
    comparison: Optional[str] = None

    def __post_init__(self):
        if self.family not in (LINEAR, RATIONAL_CUBIC):
            raise ContractError(f"unknown friction family {self.family!r}")
        if not math.isfinite(self.alpha):
            raise ContractError("friction alpha must be finite")

    @classmethod
    def linear(cls, alpha: float = 1.0, eps_prime: float = 1.0) -> "FrictionLaw":
        return cls(LINEAR, float(alpha), float(alpha), float(alpha), float(eps_prime))

    @classmethod
    def rational_cubic(cls, alpha: float = 1.0) -> "FrictionLaw":
        return cls(RATIONAL_CUBIC, float(alpha), 0.5 * alpha, float(alpha), 1.0)

    @property
    def is_linear(self) -> bool:
        return self.family == LINEAR

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == LINEAR:
            out = self.alpha * s
        else:
            s2 = s * s
            out = self.alpha * s * s2 / (1.0 + s2)
        return out if out.ndim else float(out)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == LINEAR:
            out = np.full_like(s, self.alpha)
        else:
            s2 = s * s
            out = self.alpha * s2 * (s2 + 3.0) / (1.0 + s2) ** 2
        return out if out.ndim else float(out)


def friction_eval(law: FrictionLaw, s):
    return law(s)


@dataclass(frozen=True)
class FrictionReport:
    c_lower: float
    c_upper: float
    monotone: bool
    ok: bool


def check_friction(law: FrictionLaw, eps_prime: Optional[float] = None,
                   sample_max: float = 100.0, samples: int = 200_001,
                   tol: float = HYPOTHESIS_TOL) -> FrictionReport:
    """Estimate the linear bounds of ``h`` on ``eps_prime <= |s| <= sample_max``.

    The ratio ``|h(s)|/|s|`` is sampled on a uniform grid of both signs;
    monotonicity is checked on a symmetric grid through the origin.
    """
    eps_prime = law.eps_prime if eps_prime is None else eps_prime
    if not 0 < eps_prime < sample_max:
        raise ContractError("need 0 < eps_prime < sample_max")
    s = np.linspace(eps_prime, sample_max, samples)
    s = np.concatenate((-s[::-1], s))
    ratio = np.abs(law(s)) / np.abs(s)
    dense = np.linspace(-sample_max, sample_max, 2 * samples + 1)
    h = law(dense)
    scale = max(1.0, float(np.max(np.abs(h))))
    monotone = bool(np.all(np.diff(h) >= -tol * scale))
    c_lower = float(ratio.min())
    c_upper = float(ratio.max())
    return FrictionReport(c_lower, c_upper, monotone, bool(c_lower > 0 and monotone))


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def _psi_default_raw(x):
    return np.sin(2 * np.pi * x) * x * (1 - x)


_PSI_SCALE = 1.0 / float(np.max(np.abs(_psi_default_raw(np.linspace(0.0, 1.0, 200_001)))))

# Profiles are written on the unit interval; they are evaluated at x / L.
PRESETS: dict = {
    "zero": lambda x: np.zeros_like(x),
    "sin_pi": lambda x: np.sin(np.pi * x),
    "sin_2pi": lambda x: np.sin(2 * np.pi * x),
    "cos_pi": lambda x: np.cos(np.pi * x),
    "cos_2pi": lambda x: np.cos(2 * np.pi * x),
    "psi_default": lambda x: _PSI_SCALE * _psi_default_raw(x),
}

FieldSpec = Union[str, Callable, np.ndarray, Sequence[float]]

_DIRICHLET_FIELDS = ("phi0", "phi1", "psi0", "psi1")
_NEUMANN_FIELDS = ("theta0", "theta1")


def load_nodal_file(path: str) -> np.ndarray:
    with open(path) as fh:
        text = fh.read().replace(",", " ")
    values = np.array([float(tok) for tok in text.split()])
    return values


def resolve_field(spec: FieldSpec, x: np.ndarray, L: float) -> np.ndarray:
    """Nodal values of one initial field on the node positions ``x``."""
    if isinstance(spec, str):
        if spec in PRESETS:
            return np.asarray(PRESETS[spec](x / L), dtype=float)
        if os.path.exists(spec):
            values = load_nodal_file(spec)
        else:
            raise ContractError(f"unknown preset or missing file {spec!r}")
    elif callable(spec):
        values = np.asarray(spec(x), dtype=float)
        if values.ndim == 0:
            values = np.full_like(x, float(values))
    else:
        values = np.asarray(spec, dtype=float)
    if values.shape != x.shape:
        raise ContractError(f"nodal data has {values.size} values, grid has {x.size} nodes")
    return values.copy()


@dataclass(frozen=True)
class InitialData:
    """Initial displacement, rotation and thermal fields with their velocities.

    Each entry is a preset name from :data:`PRESETS`, a path to a nodal file,
    a callable of ``x`` or an array of nodal values.
    """

    phi0: FieldSpec = "sin_pi"
    phi1: FieldSpec = "zero"
    psi0: FieldSpec = "psi_default"
    psi1: FieldSpec = "zero"
    theta0: FieldSpec = "cos_pi"
    theta1: FieldSpec = "zero"

    def on_grid(self, x: np.ndarray, L: float, check: bool = True) -> dict:
        """Evaluate all six fields; Dirichlet ends are set to exactly zero.

        With ``check`` the Dirichlet fields must already vanish at the ends
        (to 1e-10 relative) and the thermal fields must have a small
        one-sided second-order end slope.
        """
        out = {}
        dx = x[1] - x[0]
        for name in _DIRICHLET_FIELDS + _NEUMANN_FIELDS:
            u = resolve_field(getattr(self, name), x, L)
            if not np.all(np.isfinite(u)):
                raise ContractError(f"initial field {name} is not finite")
            scale = max(1.0, float(np.max(np.abs(u))))
            if name in _DIRICHLET_FIELDS:
                if check and max(abs(u[0]), abs(u[-1])) > 1e-10 * scale:
                    raise ContractError(f"initial field {name} must vanish at both ends")
                u[0] = u[-1] = 0.0
            elif check:
                left = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dx)
                right = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dx)
                if max(abs(left), abs(right)) > 10.0 * dx * scale / L:
                    raise ContractError(f"initial field {name} must have zero slope at both ends")
            out[name] = u
        return out


# ---------------------------------------------------------------------------
# Lyapunov weights and run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovWeights:
    """Combination weights and proof constants of the Lyapunov functional.

    The defaults are a tuple found by :func:`timotherm.diagnostics.find_feasible_weights`
    for the default model; see ``tests/fixtures/feasible_weights.json``.
    """

    N: float = 1.0
    N1: float = 1.0
    N2: float = 0.5
    N3: float = 0.1
    N4: float = 0.1
    epsilon: float = 0.1
    epsilon7: float = 0.5
    epsilon8: float = 0.5
    epsilon9: float = 0.5
    c: float = 0.1
    c7: float = 0.01
    c8: float = 1.0
    c9: float = 0.01
    c_prime: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise ContractError(f"weight {name} must be positive, got {value!r}")


@dataclass(frozen=True)
class SimConfig:
    coefficients: Coefficients = field(default_factory=Coefficients)
    kernel: MemoryKernel = field(default_factory=MemoryKernel.exponential)
    friction: FrictionLaw = field(default_factory=FrictionLaw.linear)
    initial: InitialData = field(default_factory=InitialData)
    n: int = 64
    dt: float = 1e-3
    T: float = 5.0
    stride: int = 1
    eps_trunc: float = 0.0
    weights: LyapunovWeights = field(default_factory=LyapunovWeights)
    override_hypotheses: bool = False
    memory_method: str = "auto"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ContractError(f"grid needs n >= 4 cells, got {self.n!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ContractError(f"dt must be positive, got {self.dt!r}")
        if not (math.isfinite(self.T) and self.T >= 0):
            raise ContractError(f"T must be nonnegative, got {self.T!r}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ContractError(f"output stride must be a positive integer, got {self.stride!r}")
        if not (math.isfinite(self.eps_trunc) and self.eps_trunc >= 0):
            raise ContractError(f"eps_trunc must be nonnegative, got {self.eps_trunc!r}")
        if self.memory_method not in ("auto", "history", "recursive"):
            raise ContractError(f"unknown memory method {self.memory_method!r}")
        if self.memory_method == "recursive" and not self.kernel.is_exponential:
            raise ContractError("recursive memory needs an exponential kernel")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

"""Plain-text ``key = value`` run configuration.

Recognised keys (all optional; missing keys take the defaults of
:class:`~timotherm.model.SimConfig`)::

    coefficients.rho1 rho2 rho3 k1 k2 mu beta delta gamma L
    kernel.family        exponential | tabulated
    kernel.a, kernel.b   exponential parameters
    kernel.file          two-column text file "s g(s)" for a tabulated kernel
    kernel.times, kernel.values   inline comma lists (alternative to kernel.file)
    kernel.xi_bound      claimed decay rate of a tabulated kernel
    friction.family      linear | rational_cubic
    friction.alpha, friction.c_lower, friction.c_upper, friction.eps_prime
    friction.H           name of the comparison function (stored only)
    grid.n  time.dt  time.T  output.stride
    init.phi0 phi1 psi0 psi1 theta0 theta1   preset name or nodal file path
    weights.N N1 N2 N3 N4 epsilon epsilon7 epsilon8 epsilon9 c c7 c8 c9 c_prime
    memory.eps_trunc     history truncation threshold (0 disables)
    memory.method        auto | history | recursive
    override.hypotheses  true | false

``#`` starts a comment. Relative file paths are resolved against the
directory of the configuration file.
"""

from __future__ import annotations

import dataclasses
import io
import os
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractError, HypothesisViolation
from .model import (EXPONENTIAL, LINEAR, RATIONAL_CUBIC, TABULATED, Coefficients, FrictionLaw,
                    InitialData, LyapunovWeights, MemoryKernel, PRESETS, SimConfig, check_kernel)

_COEF_KEYS = tuple(f.name for f in dataclasses.fields(Coefficients))
_WEIGHT_KEYS = tuple(f.name for f in dataclasses.fields(LyapunovWeights))
_INIT_KEYS = tuple(f.name for f in dataclasses.fields(InitialData))

KNOWN_KEYS = frozenset(
    [f"coefficients.{k}" for k in _COEF_KEYS]
    + [f"weights.{k}" for k in _WEIGHT_KEYS]
    + [f"init.{k}" for k in _INIT_KEYS]
    + ["kernel.family", "kernel.a", "kernel.b", "kernel.file", "kernel.times", "kernel.values",
       "kernel.xi_bound", "friction.family", "friction.alpha", "friction.c_lower",
       "friction.c_upper", "friction.eps_prime", "friction.H", "grid.n", "time.dt", "time.T",
       "output.stride", "memory.eps_trunc", "memory.method", "override.hypotheses"]
)


def _tokenize(text: str) -> dict:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first on line {entries[key][1]})", lineno)
        entries[key] = (value, lineno)
    return entries


class _Reader:
    def __init__(self, entries: dict, base_dir: str):
        self.entries = entries
        self.base_dir = base_dir

    def line(self, prefix: str) -> Optional[int]:
        lines = [ln for key, (_, ln) in self.entries.items() if key.startswith(prefix)]
        return min(lines) if lines else None

    def raw(self, key: str):
        return self.entries.get(key, (None, None))

    def float(self, key: str, default=None):
        value, ln = self.raw(key)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key} needs a number, got {value!r}", ln) from None

    def int(self, key: str, default=None):
        value, ln = self.raw(key)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key} needs an integer, got {value!r}", ln) from None

    def bool(self, key: str, default=False):
        value, ln = self.raw(key)
        if value is None:
            return default
        low = value.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key} needs true or false, got {value!r}", ln)

    def floats(self, key: str):
        value, ln = self.raw(key)
        if value is None:
            return None
        try:
            return [float(tok) for tok in value.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"{key} needs a list of numbers", ln) from None

    def path(self, value: str) -> str:
        return value if os.path.isabs(value) else os.path.normpath(os.path.join(self.base_dir, value))


def _build(make, line, *args, **kwargs):
    try:
        return make(*args, **kwargs)
    except (ContractError, TypeError) as exc:
        raise ConfigError(str(exc), line) from None


def _kernel(r: _Reader) -> MemoryKernel:
    family, ln = r.raw("kernel.family")
    family = family or EXPONENTIAL
    if family == EXPONENTIAL:
        return _build(MemoryKernel.exponential, r.line("kernel."),
                      r.float("kernel.a", 0.5), r.float("kernel.b", 1.0))
    if family != TABULATED:
        raise ConfigError(f"unknown kernel family {family!r}", ln)
    file_value, file_ln = r.raw("kernel.file")
    source = None
    if file_value is not None:
        source = r.path(file_value)
        try:
            with open(source) as fh:
                table = np.loadtxt(io.StringIO(fh.read().replace(",", " ")), ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read kernel table: {exc}", file_ln) from None
        if table.shape[1] != 2:
            raise ConfigError("kernel table needs two columns (s, g)", file_ln)
        times, values = table[:, 0], table[:, 1]
    else:
        times, values = r.floats("kernel.times"), r.floats("kernel.values")
        if times is None or values is None:
            raise ConfigError("tabulated kernel needs kernel.file or kernel.times/kernel.values", ln)
    return _build(MemoryKernel.tabulated, r.line("kernel."), times, values,
                  r.float("kernel.xi_bound"), source)


def _friction(r: _Reader) -> FrictionLaw:
    family, ln = r.raw("friction.family")
    family = family or LINEAR
    alpha = r.float("friction.alpha", 1.0)
    if family == LINEAR:
        base = FrictionLaw.linear(alpha)
    elif family == RATIONAL_CUBIC:
        base = FrictionLaw.rational_cubic(alpha)
    else:
        raise ConfigError(f"unknown friction family {family!r}", ln)
    H, _ = r.raw("friction.H")
    return _build(FrictionLaw, r.line("friction."), family, alpha,
                  r.float("friction.c_lower", base.c_lower),
                  r.float("friction.c_upper", base.c_upper),
                  r.float("friction.eps_prime", base.eps_prime), H)


def parse_config_text(text: str, base_dir: str = ".", override: bool = False,
                      check: bool = True) -> SimConfig:
    """Parse configuration text; see the module docstring for the keys.

    ``override`` forces ``override_hypotheses`` on. With ``check`` (and no
    override) a kernel failing its hypotheses raises
    :class:`~timotherm.errors.HypothesisViolation`.
    """
    r = _Reader(_tokenize(text), base_dir)
    coef = _build(Coefficients, r.line("coefficients."),
                  **{k: r.float(f"coefficients.{k}") for k in _COEF_KEYS
                     if f"coefficients.{k}" in r.entries})
    kernel = _kernel(r)
    friction = _friction(r)
    init = {}
    for k in _INIT_KEYS:
        value, _ = r.raw(f"init.{k}")
        if value is not None:
            init[k] = value if value in PRESETS else r.path(value)
    initial = InitialData(**init)
    weights = _build(LyapunovWeights, r.line("weights."),
                     **{k: r.float(f"weights.{k}") for k in _WEIGHT_KEYS
                        if f"weights.{k}" in r.entries})
    override = r.bool("override.hypotheses") or override
    method, _ = r.raw("memory.method")
    defaults = SimConfig()
    cfg = _build(SimConfig, r.line("grid.") or r.line("time.") or r.line("output.") or r.line("memory."),
                 coef, kernel, friction, initial,
                 n=r.int("grid.n", defaults.n), dt=r.float("time.dt", defaults.dt),
                 T=r.float("time.T", defaults.T), stride=r.int("output.stride", defaults.stride),
                 eps_trunc=r.float("memory.eps_trunc", defaults.eps_trunc), weights=weights,
                 override_hypotheses=override, memory_method=method or "auto")
    if check and not override:
        report = check_kernel(kernel)
        if not report.ok:
            ln = r.line("kernel.")
            where = f"line {ln}: " if ln else ""
            raise HypothesisViolation(where + "kernel rejected: " + "; ".join(report.reasons), report)
    return cfg


def parse_config(path, override: bool = False, check: bool = True) -> SimConfig:
    """Read and parse a configuration file."""
    path = os.fspath(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config_text(text, os.path.dirname(os.path.abspath(path)), override, check)


def format_config(cfg: SimConfig) -> str:
    """Serialize ``cfg`` so that :func:`parse_config_text` gives it back unchanged."""
    lines = []

    def put(key, value):
        lines.append(f"{key} = {value}")

    for k in _COEF_KEYS:
        put(f"coefficients.{k}", repr(float(getattr(cfg.coefficients, k))))
    kern = cfg.kernel
    put("kernel.family", kern.family)
    if kern.is_exponential:
        put("kernel.a", repr(kern.a))
        put("kernel.b", repr(kern.b))
    else:
        if kern.source is not None:
            put("kernel.file", kern.source)
        else:
            put("kernel.times", ", ".join(repr(v) for v in kern.times))
            put("kernel.values", ", ".join(repr(v) for v in kern.values))
        if kern.xi_bound is not None:
            put("kernel.xi_bound", repr(kern.xi_bound))
    fr = cfg.friction
    put("friction.family", fr.family)
    for k in ("alpha", "c_lower", "c_upper", "eps_prime"):
        put(f"friction.{k}", repr(float(getattr(fr, k))))
    if fr.comparison is not None:
        put("friction.H", fr.comparison)
    for k in _INIT_KEYS:
        value = getattr(cfg.initial, k)
        if not isinstance(value, str):
            raise ContractError(f"initial field {k} is not a preset name or file path")
        put(f"init.{k}", value)
    for k in _WEIGHT_KEYS:
        put(f"weights.{k}", repr(float(getattr(cfg.weights, k))))
    put("grid.n", str(cfg.n))
    put("time.dt", repr(float(cfg.dt)))
    put("time.T", repr(float(cfg.T)))
    put("output.stride", str(cfg.stride))
    put("memory.eps_trunc", repr(float(cfg.eps_trunc)))
    put("memory.method", cfg.memory_method)
    put("override.hypotheses", "true" if cfg.override_hypotheses else "false")
    return "\n".join(lines) + "\n"

"""Uniform node-centred grid with second-order difference operators.

Fields are plain numpy arrays of the ``n + 1`` nodal values. Boundary
behaviour is selected with a tag:

``"dirichlet"``
    zero end values; ghost values are odd reflections (``u[-1] = -u[1]``).
``"neumann"``
    zero end slope; ghost values are even reflections (``u[-1] = u[1]``).
``"free"``
    no boundary information; one-sided stencils where needed.

Gradient terms in quadratic forms use the forward difference
:meth:`Grid.dxforward` with the midpoint rule on cells. Together with the
trapezoid rule on nodes this gives exact discrete summation by parts::

    inner(laplacian(u), w) == -cell_inner(dxforward(u), dxforward(w))

for Dirichlet ``w`` (or Neumann ``u``), and
``inner(ddx(a, 'dirichlet'), b) == -inner(a, ddx(b, ...))`` whenever one of
the two fields is Dirichlet and the other Dirichlet or Neumann.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
FREE = "free"
_TAGS = (DIRICHLET, NEUMANN, FREE)


@dataclass(frozen=True)
class Grid:
    n: int
    L: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ContractError(f"grid needs n >= 4 cells, got {self.n!r}")
        if not self.L > 0:
            raise ContractError("domain length must be positive")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.n + 1) * self.dx
        x[-1] = self.L
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights on the nodes."""
        w = np.full(self.n + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n + 1,):
            raise ContractError(f"field has shape {u.shape}, grid expects ({self.n + 1},)")
        return u

    # -- differential operators ------------------------------------------

    def laplacian(self, u, bc: str) -> np.ndarray:
        """Three-point second difference; the result carries no boundary tag."""
        u = self._check(u)
        if bc not in (DIRICHLET, NEUMANN):
            raise ContractError(f"laplacian needs a dirichlet or neumann field, got {bc!r}")
        out = np.empty_like(u)
        out[1:-1] = u[:-2] - 2 * u[1:-1] + u[2:]
        if bc == DIRICHLET:
            out[0] = out[-1] = 0.0
        else:
            out[0] = 2 * (u[1] - u[0])
            out[-1] = 2 * (u[-2] - u[-1])
        return out / self.dx**2

    def ddx(self, u, bc: str = FREE) -> np.ndarray:
        """Centred first difference with ghost reflection at the ends."""
        u = self._check(u)
        if bc not in _TAGS:
            raise ContractError(f"unknown boundary tag {bc!r}")
        out = np.empty_like(u)
        out[1:-1] = (u[2:] - u[:-2]) / (2 * self.dx)
        if bc == NEUMANN:
            out[0] = out[-1] = 0.0
        elif bc == DIRICHLET:
            out[0] = (u[1] - u[0]) / self.dx
            out[-1] = (u[-1] - u[-2]) / self.dx
        else:
            out[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * self.dx)
            out[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * self.dx)
        return out

    def dxforward(self, u) -> np.ndarray:
        """Forward differences ``(u[j+1] - u[j]) / dx`` on the ``n`` cells."""
        u = np.asarray(u, dtype=float)
        return np.diff(u, axis=-1) / self.dx

    @staticmethod
    def midpoint(u) -> np.ndarray:
        """Cell averages ``(u[j] + u[j+1]) / 2``."""
        u = np.asarray(u, dtype=float)
        return 0.5 * (u[..., 1:] + u[..., :-1])

    # -- quadrature --------------------------------------------------------

    def integrate(self, u) -> float:
        """Composite trapezoid rule over all nodes."""
        return float(self._check(u) @ self.weights)

    def inner(self, a, b) -> float:
        a = self._check(a)
        b = self._check(b)
        return float((a * b) @ self.weights)

    def cell_inner(self, a, b) -> float:
        """Midpoint rule for cell-valued fields."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != (self.n,) or b.shape != (self.n,):
            raise ContractError("cell fields must have n values")
        return float(a @ b) * self.dx


def laplacian(grid: Grid, u, bc: str) -> np.ndarray:
    return grid.laplacian(u, bc)


def ddx(grid: Grid, u, bc: str = FREE) -> np.ndarray:
    return grid.ddx(u, bc)


def integrate(grid: Grid, u) -> float:
    return grid.integrate(u)


def inner(grid: Grid, a, b) -> float:
    return grid.inner(a, b)

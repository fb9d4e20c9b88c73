"""Discrete semigroup generator, its spectrum, and the resolvent / coercivity checks.

State vectors are stacked in the block order ``[phi | u | psi | v | theta | z]``
followed, in ``exp_augmented`` mode, by the memory accumulator ``[w]``.
Dirichlet fields (``phi, u, psi, v, w``) keep only their ``n - 1`` interior
nodes; the Neumann fields ``theta`` and ``z`` keep all ``n + 1`` nodes.

The stencil matrices here are built directly from ``scipy.sparse.diags``
so that the assembled operator can be checked against the array-based
:func:`timotherm.integrator.rhs`.

Two autonomous surrogates of the time-dependent operator are provided:

``no_memory``
    the convolution term is dropped.
``exp_augmented``
    for ``g(s) = a e^{-b s}`` the nodal convolution ``w = int g(t-s) psi(s) ds``
    satisfies ``w_t = a psi - b w`` exactly; ``w`` becomes an extra block and
    the rotation equation receives ``-laplacian(w) / rho2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ContractError, NumericalFailure
from .grid import Grid
from .model import Coefficients, FrictionLaw, MemoryKernel, SimConfig

NO_MEMORY = "no_memory"
EXP_AUGMENTED = "exp_augmented"
EIGEN_CAP = 2000

BLOCKS = ("phi", "u", "psi", "v", "theta", "z")


def block_slices(n: int, augmented: bool = False) -> dict:
    """Slices of each field inside a stacked state vector."""
    sizes = [n - 1] * 4 + [n + 1] * 2
    names = list(BLOCKS)
    if augmented:
        sizes.append(n - 1)
        names.append("w")
    out, start = {}, 0
    for name, size in zip(names, sizes):
        out[name] = slice(start, start + size)
        start += size
    return out


def stack(fields: dict, n: int, augmented: bool = False) -> np.ndarray:
    """Pack nodal fields into a state vector (Dirichlet ends dropped)."""
    slices = block_slices(n, augmented)
    out = np.empty(sum(s.stop - s.start for s in slices.values()))
    for name, sl in slices.items():
        f = np.asarray(fields[name], dtype=float)
        out[sl] = f if name in ("theta", "z") else f[1:-1]
    return out


def unstack(vec: np.ndarray, n: int, augmented: bool = False) -> dict:
    """Inverse of :func:`stack`; Dirichlet fields get explicit zero ends."""
    out = {}
    for name, sl in block_slices(n, augmented).items():
        if name in ("theta", "z"):
            out[name] = np.array(vec[sl])
        else:
            f = np.zeros(n + 1)
            f[1:-1] = vec[sl]
            out[name] = f
    return out


# ---------------------------------------------------------------------------
# Stencil matrices
# ---------------------------------------------------------------------------


class Stencils:
    """Sparse difference and quadrature matrices for one grid."""

    def __init__(self, grid: Grid):
        n, dx = grid.n, grid.dx
        self.grid = grid
        self.n, self.dx = n, dx
        m = n - 1
        self.lap_d = sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / dx**2
        self.ddx_d = sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1]) / (2 * dx)
        # Dirichlet interior -> all nodes, odd ghost reflection at the ends
        rows = sp.lil_matrix((n + 1, m))
        rows[1:n, :] = self.ddx_d
        rows[0, 0] = 1.0 / dx
        rows[n, m - 1] = -1.0 / dx
        self.ddx_d_full = rows.tocsr()
        # Neumann full -> interior nodes
        self.ddx_n_int = sp.diags([-np.ones(m), np.ones(m)], [0, 2], shape=(m, n + 1)) / (2 * dx)
        lap_n = sp.diags([np.ones(n), -2 * np.ones(n + 1), np.ones(n)], [-1, 0, 1]).tolil()
        lap_n[0, 1] = 2.0
        lap_n[n, n - 1] = 2.0
        self.lap_n = lap_n.tocsr() / dx**2
        # forward differences / cell averages: interior Dirichlet -> cells, full Neumann -> cells
        self.grad_d = sp.diags([-np.ones(m), np.ones(m)], [-1, 0], shape=(n, m)) / dx
        self.avg_d = sp.diags([0.5 * np.ones(m), 0.5 * np.ones(m)], [-1, 0], shape=(n, m))
        self.grad_n = sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1)) / dx
        self.mass_d = dx * sp.identity(m)
        self.mass_n = sp.diags(grid.weights)
        self.mass_c = dx * sp.identity(n)


def _linear_friction(friction: FrictionLaw) -> float:
    if not friction.is_linear:
        raise ContractError("the generator is linear: friction must be of the linear family")
    return friction.alpha


def linear_operator(coef: Coefficients, kernel: MemoryKernel, n: int, mode: str = NO_MEMORY,
                    friction_alpha: float = 0.0) -> sp.csr_matrix:
    """Sparse generator for the given coefficients.

    ``friction_alpha`` is the slope of a linear friction law folded into the
    operator (0 leaves friction out).
    """
    if mode not in (NO_MEMORY, EXP_AUGMENTED):
        raise ContractError(f"unknown generator mode {mode!r}")
    if mode == EXP_AUGMENTED and not kernel.is_exponential:
        raise ContractError("exp_augmented mode needs an exponential kernel")
    c = coef
    st = Stencils(Grid(n, c.L))
    m = n - 1
    I_m = sp.identity(m)
    I_n = sp.identity(n + 1)
    Z = None
    rows = [
        [Z, I_m, Z, Z, Z, Z],
        [c.k1 / c.rho1 * st.lap_d, -c.mu / c.rho1 * I_m, c.k1 / c.rho1 * st.ddx_d, Z, Z, Z],
        [Z, Z, Z, I_m, Z, Z],
        [-c.k1 / c.rho2 * st.ddx_d, Z, (c.k2 * st.lap_d - c.k1 * I_m) / c.rho2,
         -friction_alpha / c.rho2 * I_m, Z, -c.gamma / c.rho2 * st.ddx_n_int],
        [Z, Z, Z, Z, Z, I_n],
        [Z, Z, Z, -c.gamma / c.rho3 * st.ddx_d_full, c.delta / c.rho3 * st.lap_n, c.beta / c.rho3 * st.lap_n],
    ]
    # keep every block column populated so bmat can infer shapes
    rows[0][0] = sp.csr_matrix((m, m))
    rows[4][4] = sp.csr_matrix((n + 1, n + 1))
    if mode == EXP_AUGMENTED:
        for r in rows:
            r.append(Z)
        rows[3][6] = -st.lap_d / c.rho2
        rows.append([Z, Z, kernel.a * I_m, Z, Z, Z, -kernel.b * I_m])
    return sp.bmat(rows, format="csr")


@dataclass
class GeneratorMatrix:
    """Dense generator with its block layout.

    ``mean_zero`` marks a matrix restricted to thermal fields with zero
    trapezoid mean (see :meth:`reduced`).
    """

    matrix: np.ndarray
    mode: str
    n: int
    mean_zero: bool = False

    @property
    def augmented(self) -> bool:
        return self.mode == EXP_AUGMENTED

    @property
    def slices(self) -> dict:
        return block_slices(self.n, self.augmented)

    def reduced(self) -> "GeneratorMatrix":
        """Restriction to the invariant subspace of mean-zero ``theta`` and ``z``.

        The thermal blocks drop their first node, which is recovered from
        the zero-mean constraint; this removes the double zero eigenvalue
        carried by spatially constant temperature modes.
        """
        if self.mean_zero:
            return self
        Q, P = mean_zero_basis(self.n, self.augmented)
        return GeneratorMatrix(P @ self.matrix @ Q, self.mode, self.n, mean_zero=True)


def mean_zero_basis(n: int, augmented: bool = False):
    """Basis ``Q`` of the mean-zero thermal subspace and a left inverse ``P``."""
    slices = block_slices(n, augmented)
    dim = slices["w" if augmented else "z"].stop
    w = Grid(n).weights
    keep = np.ones(dim, dtype=bool)
    Q = np.eye(dim)
    for name in ("theta", "z"):
        sl = slices[name]
        first = sl.start
        for j in range(1, n + 1):
            Q[first, first + j] = -w[j] / w[0]
        keep[first] = False
    Q = Q[:, keep]
    P = np.eye(dim)[keep, :]
    return Q, P


def assemble(cfg: SimConfig, n: Optional[int] = None, mode: str = NO_MEMORY) -> GeneratorMatrix:
    """Dense generator of the configured model on ``n`` cells.

    Friction must be linear; its slope enters the operator directly.
    """
    n = cfg.n if n is None else n
    alpha = _linear_friction(cfg.friction)
    A = linear_operator(cfg.coefficients, cfg.kernel, n, mode, friction_alpha=alpha)
    return GeneratorMatrix(A.toarray(), mode, n)


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    abscissa: float
    dominant: complex


def spectrum(A, cap: int = EIGEN_CAP) -> SpectrumReport:
    """All eigenvalues of a dense real matrix, sorted by real part (descending).

    LAPACK ``geev`` does the work: balancing, Hessenberg reduction and
    shifted QR sweeps.
    """
    M = A.matrix if isinstance(A, GeneratorMatrix) else np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError("spectrum needs a square matrix")
    if M.shape[0] > cap:
        raise ContractError(f"dimension {M.shape[0]} exceeds the dense eigensolver cap {cap}")
    if not np.all(np.isfinite(M)):
        raise ContractError("matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}") from exc
    order = np.lexsort((-ev.imag, -ev.real))
    ev = ev[order]
    return SpectrumReport(ev, float(ev.real[0]), complex(ev[0]))


# ---------------------------------------------------------------------------
# Resolvent and the variational form
# ---------------------------------------------------------------------------


@dataclass
class ResolventResult:
    U: np.ndarray
    residual: float


def solve_resolvent(cfg: SimConfig, n: Optional[int], B, mode: str = NO_MEMORY,
                    generator: Optional[GeneratorMatrix] = None) -> ResolventResult:
    """Solve ``(I - A) U = B`` by dense LU and report the relative residual."""
    gen = generator if generator is not None else assemble(cfg, n, mode)
    A = gen.matrix
    B = np.asarray(B, dtype=float)
    if B.shape != (A.shape[0],):
        raise ContractError(f"right side has shape {B.shape}, generator is {A.shape}")
    K = np.eye(A.shape[0]) - A
    try:
        lu = scipy.linalg.lu_factor(K, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"I - A could not be factored: {exc}") from exc
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise NumericalFailure("I - A is singular")
    U = scipy.linalg.lu_solve(lu, B)
    norm_b = np.linalg.norm(B)
    residual = 0.0 if norm_b == 0 else float(np.linalg.norm(K @ U - B) / norm_b)
    return ResolventResult(U, residual)


@dataclass
class FormMatrix:
    """Stationary bilinear form over ``(phi, psi, theta)`` and its norm Gram matrices.

    ``F(x, y) = y @ stiffness @ x`` with ``x = [phi_int | psi_int | theta]``.
    ``gram`` is the V-norm ``|phi_x + psi|^2 + |phi|^2 + |phi_x|^2 + |theta_x|^2``
    and ``gram_full`` adds ``|psi_x|^2``.
    """

    stiffness: np.ndarray
    gram: np.ndarray
    gram_full: np.ndarray
    n: int

    @property
    def symmetric(self) -> np.ndarray:
        return 0.5 * (self.stiffness + self.stiffness.T)


def _form_slices(n: int):
    m = n - 1
    return slice(0, m), slice(m, 2 * m), slice(2 * m, 2 * m + n + 1)


def resolvent_form(cfg: SimConfig, n: Optional[int] = None) -> FormMatrix:
    """Weak form obtained from ``(I - A) U = B`` after eliminating the velocities.

    Memory terms are left out (the ``no_memory`` surrogate); linear friction
    adds ``alpha`` to the zeroth-order rotation term.
    """
    n = cfg.n if n is None else n
    c = cfg.coefficients
    alpha = _linear_friction(cfg.friction)
    st = Stencils(Grid(n, c.L))
    M_d, M_n, M_c = st.mass_d, st.mass_n, st.mass_c
    shear = sp.hstack([st.grad_d, st.avg_d, sp.csr_matrix((n, n + 1))])
    phi_sel = sp.hstack([sp.identity(n - 1), sp.csr_matrix((n - 1, n - 1)), sp.csr_matrix((n - 1, n + 1))])
    psi_sel = sp.hstack([sp.csr_matrix((n - 1, n - 1)), sp.identity(n - 1), sp.csr_matrix((n - 1, n + 1))])
    th_sel = sp.hstack([sp.csr_matrix((n + 1, 2 * (n - 1))), sp.identity(n + 1)])
    avg_psi = st.avg_d @ psi_sel
    grad_phi = st.grad_d @ phi_sel
    grad_psi = st.grad_d @ psi_sel
    grad_th = st.grad_n @ th_sel

    K = ((c.rho1 + c.mu) * phi_sel.T @ M_d @ phi_sel
         + c.k1 * (shear.T @ M_c @ shear - avg_psi.T @ M_c @ avg_psi + psi_sel.T @ M_d @ psi_sel)
         + (c.rho2 + alpha) * psi_sel.T @ M_d @ psi_sel
         + c.k2 * grad_psi.T @ M_c @ grad_psi
         + c.gamma * psi_sel.T @ M_d @ st.ddx_n_int @ th_sel
         + c.gamma * th_sel.T @ M_n @ st.ddx_d_full @ psi_sel
         + c.rho3 * th_sel.T @ M_n @ th_sel
         + (c.delta + c.beta) * grad_th.T @ M_c @ grad_th)
    gram = (shear.T @ M_c @ shear + phi_sel.T @ M_d @ phi_sel
            + grad_phi.T @ M_c @ grad_phi + grad_th.T @ M_c @ grad_th)
    gram_full = gram + grad_psi.T @ M_c @ grad_psi
    return FormMatrix(K.toarray(), gram.toarray(), gram_full.toarray(), n)


def load_functional(cfg: SimConfig, n: Optional[int], B) -> np.ndarray:
    """Right side ``G`` of the weak form for resolvent data ``B`` (NoMemory layout)."""
    n = cfg.n if n is None else n
    c = cfg.coefficients
    alpha = _linear_friction(cfg.friction)
    st = Stencils(Grid(n, c.L))
    s = block_slices(n)
    B = np.asarray(B, dtype=float)
    b1, b2, b3, b4, b5, b6 = (B[s[k]] for k in BLOCKS)
    g_phi = st.mass_d @ (c.rho1 * b2 + (c.rho1 + c.mu) * b1)
    g_psi = st.mass_d @ (c.rho2 * b4 + (c.rho2 + alpha) * b3 + c.gamma * (st.ddx_n_int @ b5))
    g_th = st.mass_n @ (c.rho3 * (b6 + b5) + c.gamma * (st.ddx_d_full @ b3) - c.beta * (st.lap_n @ b5))
    return np.concatenate([g_phi, g_psi, g_th])


@dataclass
class CoercivityReport:
    alpha0: float
    c_bound: float
    alpha0_full: float
    c_bound_full: float


def coercivity(cfg: SimConfig, n: Optional[int] = None) -> CoercivityReport:
    """Extreme generalized eigenvalues of the symmetrized form against the V-norm.

    The thermal component is restricted to mean-zero fields, on which the
    V-norm Gram matrix is definite.
    """
    n = cfg.n if n is None else n
    form = resolvent_form(cfg, n)
    dim = form.gram.shape[0]
    w = Grid(n).weights
    first = 2 * (n - 1)
    Q = np.eye(dim)
    Q[first, first + 1:] = -w[1:] / w[0]
    Q = np.delete(Q, first, axis=1)
    F = Q.T @ form.symmetric @ Q
    out = []
    for gram in (form.gram, form.gram_full):
        G = Q.T @ gram @ Q
        lo = np.linalg.eigvalsh(0.5 * (G + G.T))[0]
        if lo <= 1e-14 * np.abs(G).max():
            raise ContractError(f"V-norm Gram matrix is not positive definite (min eigenvalue {lo:g})")
        ev = scipy.linalg.eigh(F, G, eigvals_only=True)
        out.append((float(ev[0]), float(ev[-1])))
    return CoercivityReport(out[0][0], out[0][1], out[1][0], out[1][1])

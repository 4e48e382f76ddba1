"""Discretized frequency-domain machinery and the dual objective.

All torus integrals are Riemann sums over a regular N1 x N2 grid,
``integral f dm ~= mean of f over the grid nodes``.  On that grid this module
evaluates trigonometric polynomials, extracts Fourier coefficients with a
2-D FFT, and provides the pieces of the dual problem

    J(Q) = <Q, Sigma> - integral log(1/Psi + Q) dm,

namely the objective, its complex (Wirtinger) gradient, the generators of
its Toeplitz-block-Toeplitz Hessian, recovery of the primal spectrum
``Phi = 1/(1/Psi + Q)``, and the Itakura-Saito divergence used as a
diagnostic.

Complex-derivative conventions
------------------------------
The gradient component at lag k is ``sigma(-k) - c(-k)`` where c are the
Fourier coefficients of ``(1/Psi + Q)^(-1)``.  Along a symmetric direction d
the derivative of J is ``sum_k g_k d_k`` (no conjugation), and the derivative
of the gradient field is ``H @ conj(vec(d))`` where H is the assembled
Hessian.  The factor-of-two bookkeeping against real perturbations is pinned
by finite-difference tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lagset import SymmetricMultisequence, real_inner_product

#: Relative tolerance for "this grid function should be real" assertions.
IMAG_RESIDUE_TOL = 1e-10

#: Tolerance for imaginary residue of sums that are real by symmetry.
SYMMETRY_SUM_TOL = 1e-12


class FeasibilityError(ValueError):
    """Raised when ``1/Psi + Q`` is not strictly positive on the grid."""

    def __init__(self, min_value: float):
        self.min_value = float(min_value)
        super().__init__(
            f"infeasible point: min(1/Psi + Q) over the grid is {min_value:.6e}"
        )


@dataclass(frozen=True)
class FrequencyGrid:
    """Regular grid theta = (2*pi*l1/N1, 2*pi*l2/N2) on the torus."""

    N1: int
    N2: int

    def __post_init__(self):
        if self.N1 < 1 or self.N2 < 1:
            raise ValueError("grid sizes must be positive")

    @property
    def shape(self):
        return (self.N1, self.N2)

    def theta1(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N1) / self.N1

    def theta2(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N2) / self.N2


class GridFunction:
    """Values of a function on a :class:`FrequencyGrid` (one value per node)."""

    def __init__(self, grid: FrequencyGrid, values):
        v = np.asarray(values)
        if v.shape != grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {grid.shape}")
        v = v.copy()
        v.flags.writeable = False
        self.grid = grid
        self.values = v

    @classmethod
    def constant(cls, grid: FrequencyGrid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def min(self) -> float:
        return float(np.min(self.values.real))

    def reciprocal(self) -> "GridFunction":
        """Pointwise 1/f; requires strict positivity."""
        if not self.is_real() or self.min() <= 0.0:
            raise ValueError("reciprocal requires a strictly positive real function")
        return GridFunction(self.grid, 1.0 / self.values)


class TbtGenerators:
    """First block row ``h[j, l]`` of the Hermitian TBT Hessian.

    ``h`` has shape (2*n1+1, 4*n2+1) with lag l stored at column l + 2*n2.
    Block j of the Hessian is the Toeplitz matrix with entry (r, c) equal to
    ``h[j, c - r]``; negative block lags follow from ``h(-j, -l) = conj(h(j, l))``.
    """

    def __init__(self, n1: int, n2: int, h, *, tol: float = 1e-10):
        h = np.asarray(h, dtype=complex)
        if n1 < 1 or n2 < 1:
            raise ValueError("n1 and n2 must be positive")
        if h.shape != (2 * n1 + 1, 4 * n2 + 1):
            raise ValueError(
                f"generator table shape {h.shape} != {(2*n1+1, 4*n2+1)}"
            )
        scale = max(1.0, float(np.max(np.abs(h))))
        # Row 0 must make R_0 Hermitian: h(0, -l) = conj(h(0, l)), h(0,0) real > 0.
        asym = np.max(np.abs(h[0] - np.conj(h[0][::-1])))
        if asym > tol * scale:
            raise ValueError(f"row j=0 violates Hermitian symmetry by {asym:.3e}")
        h00 = h[0, 2 * n2]
        if abs(h00.imag) > tol * scale or h00.real <= 0.0:
            raise ValueError(f"h[0,0] must be real positive, got {h00}")
        h = h.copy()
        h[0] = 0.5 * (h[0] + np.conj(h[0][::-1]))
        h[0, 2 * n2] = h[0, 2 * n2].real
        h.flags.writeable = False
        self.n1 = n1
        self.n2 = n2
        self.h = h

    @property
    def block_size(self) -> int:
        return 2 * self.n2 + 1

    @property
    def block_count(self) -> int:
        return 2 * self.n1 + 1

    def block(self, j: int) -> np.ndarray:
        """Toeplitz block R_j of size (2*n2+1) for 0 <= j <= 2*n1."""
        if not 0 <= j <= 2 * self.n1:
            raise ValueError(f"block index {j} out of range 0..{2*self.n1}")
        row = self.h[j]
        p = self.block_size
        # first column walks lags 0, -1, ..., -(p-1); first row walks 0, 1, ...
        return scipy.linalg.toeplitz(row[2 * self.n2::-1][:p], row[2 * self.n2:])

    def truncate(self, n1_new: int) -> "TbtGenerators":
        """Generators of the leading principal TBT submatrix with 2*n1_new+1 blocks."""
        if not 1 <= n1_new <= self.n1:
            raise ValueError("n1_new out of range")
        return TbtGenerators(n1_new, self.n2, self.h[: 2 * n1_new + 1])


def _check_real(values: np.ndarray, what: str) -> np.ndarray:
    if np.iscomplexobj(values):
        scale = max(np.max(np.abs(values)), 1e-300)
        resid = np.max(np.abs(values.imag))
        if resid > IMAG_RESIDUE_TOL * scale:
            raise ValueError(f"{what} has imaginary residue {resid:.3e} (scale {scale:.3e})")
        return values.real.copy()
    return values


def eval_trig_poly(q: SymmetricMultisequence, g: FrequencyGrid) -> GridFunction:
    """Evaluate ``Q(theta) = sum_k q_k exp(-i<k, theta>)`` at every grid node.

    Coefficients are scattered modulo the grid size and transformed with one
    2-D FFT, which is exact on the grid even when lags alias.  The result is
    real for symmetric q; the imaginary residue is checked and dropped.
    """
    s = q.index_set
    c = np.zeros(g.shape, dtype=complex)
    idx1 = np.arange(-s.n1, s.n1 + 1) % g.N1
    idx2 = np.arange(-s.n2, s.n2 + 1) % g.N2
    np.add.at(c, (idx1[:, None], idx2[None, :]), q.values)
    vals = np.fft.fft2(c)
    return GridFunction(g, _check_real(vals, "trigonometric polynomial"))


def quadrature(f: GridFunction) -> float:
    """Riemann-sum integral against the normalized measure: the grid mean."""
    if not f.is_real():
        raise ValueError("quadrature requires a real-valued grid function")
    return float(np.mean(f.values))


def fourier_coefficients(f: GridFunction, maxlag1: int, maxlag2: int) -> np.ndarray:
    """Discretized Fourier coefficients ``c_k = mean(exp(+i<k, theta>) * f)``.

    Parameters
    ----------
    f : GridFunction
        Function sampled on the N1 x N2 grid (real or complex).
    maxlag1, maxlag2 : int
        Coefficients are returned for all |k_j| <= maxlag_j.  The grid must
        satisfy ``maxlag_j < N_j / 2`` so that wrapped lags do not alias.

    Returns
    -------
    ndarray of shape (2*maxlag1+1, 2*maxlag2+1)
        Coefficient for lag (k1, k2) at index [k1 + maxlag1, k2 + maxlag2].
    """
    g = f.grid
    if not (2 * maxlag1 < g.N1 and 2 * maxlag2 < g.N2):
        raise ValueError(
            f"aliasing: maxlags ({maxlag1}, {maxlag2}) need grid > "
            f"({2*maxlag1}, {2*maxlag2}), got ({g.N1}, {g.N2})"
        )
    spec = np.fft.ifft2(f.values)
    idx1 = np.arange(-maxlag1, maxlag1 + 1) % g.N1
    idx2 = np.arange(-maxlag2, maxlag2 + 1) % g.N2
    return spec[np.ix_(idx1, idx2)]


def _density_grid(q: SymmetricMultisequence, psi_inv: GridFunction) -> np.ndarray:
    """Values of ``1/Psi + Q`` on the grid; raises if not strictly positive."""
    vals = psi_inv.values + eval_trig_poly(q, psi_inv.grid).values
    m = float(np.min(vals))
    if m <= 0.0:
        raise FeasibilityError(m)
    return vals


def dual_objective(q: SymmetricMultisequence, sigma: SymmetricMultisequence,
                   psi_inv: GridFunction) -> float:
    """Dual objective ``<Q, Sigma> - integral log(1/Psi + Q) dm``."""
    vals = _density_grid(q, psi_inv)
    return real_inner_product(q, sigma) - float(np.mean(np.log(vals)))


def dual_gradient(q: SymmetricMultisequence, sigma: SymmetricMultisequence,
                  psi_inv: GridFunction) -> SymmetricMultisequence:
    """Wirtinger gradient: component ``sigma(-k) - c(-k)`` with c the Fourier
    coefficients of ``(1/Psi + Q)^(-1)``.

    Conjugate-symmetric because Sigma and the coefficients of a real function
    both are.
    """
    s = q.index_set
    if sigma.index_set != s:
        raise ValueError("q and Sigma live on different index sets")
    vals = _density_grid(q, psi_inv)
    c = fourier_coefficients(GridFunction(psi_inv.grid, 1.0 / vals), s.n1, s.n2)
    # sigma(-k) = conj(sigma(k)); reversing both axes of c gives c(-k).
    grad = np.conj(sigma.values) - c[::-1, ::-1]
    return SymmetricMultisequence(s, grad)


def directional_derivative(g: SymmetricMultisequence,
                           d: SymmetricMultisequence) -> float:
    """Derivative of the objective along a symmetric direction: ``sum_k g_k d_k``.

    Unconjugated on purpose; with both arguments symmetric the sum is real.
    """
    if g.index_set != d.index_set:
        raise ValueError("index sets differ")
    total = np.sum(g.values * d.values)
    scale = max(1.0, float(np.sum(np.abs(g.values) * np.abs(d.values))))
    if abs(total.imag) > SYMMETRY_SUM_TOL * scale:
        raise ValueError(f"directional derivative has imaginary part {total.imag:.3e}")
    return float(total.real)


def hessian_generators(q: SymmetricMultisequence,
                       psi_inv: GridFunction) -> TbtGenerators:
    """Hessian generators ``h(j, l) = mean(exp(+i<(j,l), theta>) / (1/Psi + Q)^2)``.

    One FFT of ``(1/Psi + Q)^(-2)`` yields the whole first block row,
    j in 0..2*n1 and |l| <= 2*n2.  Requires N_j > 4*n_j to avoid aliasing.
    """
    s = q.index_set
    vals = _density_grid(q, psi_inv)
    w = GridFunction(psi_inv.grid, 1.0 / vals**2)
    table = fourier_coefficients(w, 2 * s.n1, 2 * s.n2)
    return TbtGenerators(s.n1, s.n2, table[2 * s.n1:, :])


def assemble_dense_hessian(gen: TbtGenerators) -> np.ndarray:
    """Dense Hermitian TBT matrix with entry ``h(l - k)`` at (row k, col l).

    Block row a, block column b holds R_{b-a} for b >= a and R_{a-b}^* below
    the block diagonal.
    """
    p, m = gen.block_size, gen.block_count
    blocks = [gen.block(j) for j in range(m)]
    H = np.empty((m * p, m * p), dtype=complex)
    for a in range(m):
        for b in range(m):
            blk = blocks[b - a] if b >= a else blocks[a - b].conj().T
            H[a * p:(a + 1) * p, b * p:(b + 1) * p] = blk
    return H


def primal_recover(q: SymmetricMultisequence, psi_inv: GridFunction,
                   g: FrequencyGrid | None = None) -> GridFunction:
    """Recovered spectrum ``Phi = 1 / (1/Psi + Q)`` on the grid."""
    if g is not None and g != psi_inv.grid:
        raise ValueError("recovery grid differs from the prior's grid")
    vals = _density_grid(q, psi_inv)
    return GridFunction(psi_inv.grid, 1.0 / vals)


def is_divergence(phi: GridFunction, psi: GridFunction) -> float:
    """Itakura-Saito divergence ``mean(log(psi/phi) + (phi - psi)/psi)``.

    Diagnostic only; nonnegative, zero iff the spectra coincide on the grid.
    """
    if phi.grid != psi.grid:
        raise ValueError("grids differ")
    if not phi.is_real() or phi.min() <= 0.0:
        raise ValueError("phi must be strictly positive")
    if not psi.is_real() or psi.min() <= 0.0:
        raise ValueError("psi must be strictly positive")
    a, b = phi.values, psi.values
    return float(np.mean(np.log(b / a) + (a - b) / b))

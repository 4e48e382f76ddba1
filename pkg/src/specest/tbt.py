"""Fast inversion and linear solves for Hermitian PD Toeplitz-block-Toeplitz
matrices given by their first block row.

A TBT matrix with m = 2*n1+1 Toeplitz blocks of size p = 2*n2+1 is both
Hermitian and persymmetric (symmetric about the antidiagonal,
``J M^T J = M`` with J the exchange/reversal permutation).  The nested
sequence of leading principal TBT submatrices G_0, G_1, ... admits a
block Schur-complement recursion in the quantities

    W_k      = -G_{k-1}^{-1} [R_k; ...; R_1]          (k*p x p)
    alpha_k  = R_0 + W_k^* [R_k; ...; R_1]            (Schur complement, p x p)
    What_k   = J W_k                                  (exchange-reversed W)

which costs O(m^2 p^3) in total.  From the final stage the full inverse is
assembled by filling the first block row, propagating one block quarter with
a rank-style update, and completing the rest by persymmetry and Hermitian
symmetry; linear systems with any number of right-hand columns are solved by
carrying the partial solutions through the same recursion.  For m ~ p this
is O(p^5), one power of p below dense inversion of the p^2 x p^2 matrix.

Dense Cholesky-based reference routines are included as test oracles and as
the baseline arm of the timing benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import cho_factor, cho_solve

from .spectral import TbtGenerators


@dataclass(frozen=True)
class ExchangeOperator:
    """Block reversal permutation: k x k block antidiagonal of p x p reversals.

    Reversing block order and reversing within each block is one full reversal
    of all p*k rows, so applying the operator is a single flipped slice.
    """

    p: int
    k: int

    @property
    def size(self) -> int:
        return self.p * self.k

    def dense(self) -> np.ndarray:
        return np.eye(self.size)[::-1]


def reverse_apply(J: ExchangeOperator, M: np.ndarray) -> np.ndarray:
    """Left-multiply by the exchange operator: full row reversal."""
    M = np.asarray(M)
    if M.shape[0] != J.size:
        raise ValueError(f"matrix has {M.shape[0]} rows, operator expects {J.size}")
    return M[::-1].copy()


def _factor(a: np.ndarray, what: str):
    try:
        return cho_factor(a, lower=True)
    except LinAlgError as exc:
        raise LinAlgError(f"{what} is not positive definite: {exc}") from exc


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class SchurState:
    """Carry of the recursion at stage k >= 1.

    ``alpha`` is the Schur complement G_k / G_{k-1} (Hermitian PD as long as
    the full matrix is), ``what`` the exchange-reversed coupling block column.
    ``beta`` records the coupling used to advance into this stage (None at
    stage 1).  The plain W is never stored; it is a row reversal away.
    """

    k: int
    alpha: np.ndarray        # p x p
    what: np.ndarray         # k*p x p
    beta: np.ndarray | None  # p x p
    alpha_cho: tuple         # cached Cholesky factorization of alpha
    rhat: np.ndarray         # k*p x p stack of row-reversed blocks R_1..R_k

    @property
    def w(self) -> np.ndarray:
        """W_k, recovered from What_k by row reversal.

        Returned contiguous: BLAS-backed products degrade badly on
        negative-stride views, and the O(k p^2) copy is immaterial next to
        the O(k p^3) products it feeds.
        """
        return np.ascontiguousarray(self.what[::-1])


def schur_init(gen: TbtGenerators) -> SchurState:
    """Stage 1: W_1 = -R_0^{-1} R_1 and alpha_1 = R_0 + W_1^* R_1."""
    r0, r1 = gen.block(0), gen.block(1)
    c0 = _factor(r0, "R_0")
    w1 = -cho_solve(c0, r1)
    alpha = _hermitize(r0 + w1.conj().T @ r1)
    state_arrays = (alpha, w1[::-1].copy(), r1[::-1].copy())
    for a in state_arrays:
        a.flags.writeable = False
    return SchurState(1, state_arrays[0], state_arrays[1], None,
                      _factor(alpha, "alpha_1"), state_arrays[2])


def schur_advance(state: SchurState, gen: TbtGenerators) -> SchurState:
    """Advance the recursion one stage using the next generator block.

    beta_k couples the old coefficients to the new block; alpha shrinks by a
    PSD term (so the Schur complements are non-increasing in Loewner order)
    and What grows by one block:

        beta_k    = W_k^T Rhat_k + Rhat_{k+1}
        alpha_k+1 = alpha_k - beta_k^* alpha_k^{-T} beta_k
        What_k+1  = [What_k; 0] - [conj(W_k); I] alpha_k^{-T} beta_k

    For Hermitian alpha the transposed inverse is the elementwise conjugate
    of the inverse, so one factorization serves both applications.
    """
    k, p = state.k, gen.block_size
    if k + 1 >= gen.block_count:
        raise ValueError(
            f"stage {k + 1} needs block R_{k + 1}; generators stop at "
            f"R_{gen.block_count - 1}"
        )
    rhat_next = gen.block(k + 1)[::-1]
    wk = state.w
    beta = wk.T @ state.rhat + rhat_next
    atb = np.conj(cho_solve(state.alpha_cho, np.conj(beta)))  # alpha^{-T} beta
    alpha = _hermitize(state.alpha - beta.conj().T @ atb)
    what = np.vstack([state.what - np.conj(wk) @ atb, -atb])
    rhat = np.vstack([state.rhat, rhat_next])
    for a in (alpha, what, beta, rhat):
        a.flags.writeable = False
    return SchurState(k + 1, alpha, what, beta,
                      _factor(alpha, f"alpha_{k + 1}"), rhat)


def tbt_invert(gen: TbtGenerators) -> np.ndarray:
    """Invert a Hermitian PD TBT matrix from its generators.

    Runs the Schur recursion to the last stage, fills the first block row
    from the persymmetric representation of the inverse, propagates the upper
    quarter of blocks along diagonals with the coupling correction, halves
    the overlap blocks (the center block is quartered), and completes the
    matrix by persymmetry followed by Hermitian symmetry.

    Returns the dense (m*p) x (m*p) inverse.  Raises
    :class:`numpy.linalg.LinAlgError` if any Schur complement fails to be
    positive definite, which indicates a non-PD input.
    """
    p, m = gen.block_size, gen.block_count
    nh = gen.n1  # m = 2*nh + 1

    state = schur_init(gen)
    for _ in range(m - 2):
        state = schur_advance(state, gen)

    G = np.zeros((m * p, m * p), dtype=complex)
    ainv_t = np.conj(cho_solve(state.alpha_cho, np.eye(p)))  # alpha^{-T}
    G[:p, :p] = ainv_t[::-1, ::-1]
    G[:p, p:] = (ainv_t @ state.what.T)[::-1]

    # Coupling correction for interior blocks, rows 1..nh only (the rest of
    # the matrix comes from the symmetry completions below):
    #   curly_W = conj(What) alpha^{-T} What^T - W alpha^{-1} W^*
    w_last = state.w
    top = ainv_t @ state.what.T                                 # p x (m-1)p
    ww = np.conj(state.what[:nh * p]) @ top
    ww -= w_last[:nh * p] @ cho_solve(state.alpha_cho, w_last.conj().T)

    # Propagate (i+1, j+1) = (i, j) + curly_W(i, j) over the upper quarter.
    for i in range(1, nh + 1):
        src = (i - 1) * p
        dst = i * p
        for j in range(i, m - i):
            G[dst:dst + p, j * p:(j + 1) * p] = (
                G[src:src + p, (j - 1) * p:j * p] + ww[src:src + p, (j - 1) * p:j * p]
            )
    del ww, top

    # The quarter overlaps its own symmetry images on the block diagonal and
    # antidiagonal; pre-halve them (the center block sits on both: quartered).
    for i in range(nh + 1):
        G[i * p:(i + 1) * p, i * p:(i + 1) * p] *= 0.5
        ai = (m - 1) - i
        G[i * p:(i + 1) * p, ai * p:(ai + 1) * p] *= 0.5

    flipped = G[::-1, ::-1].T.copy()  # persymmetric image (copy: overlapping view)
    G += flipped
    del flipped
    G += G.conj().T
    return G


def tbt_solve(gen: TbtGenerators, B: np.ndarray) -> np.ndarray:
    """Solve ``H X = B`` for a Hermitian PD TBT matrix H given by generators.

    Parameters
    ----------
    B : ndarray
        Right-hand side of shape (m*p, q) viewed as m blocks of size p x q,
        for any q >= 1; a 1-D array of length m*p is treated as one column.

    Returns
    -------
    ndarray
        Solution with the same shape as ``B``, computed without materializing
        H or its inverse.  The partial solutions X_t of the leading t+1 block
        systems are extended one block per stage:

            delta_t = W_t^* [B_0; ...; B_{t-1}] + B_t
            X_t     = [X_{t-1}; 0] + [W_t; I] alpha_t^{-1} delta_t
    """
    p, m = gen.block_size, gen.block_count
    B = np.asarray(B, dtype=complex)
    squeeze = B.ndim == 1
    if squeeze:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != m * p:
        raise ValueError(f"right-hand side must have {m * p} rows, got {B.shape}")
    q = B.shape[1]

    X = cho_solve(_factor(gen.block(0), "R_0"), B[:p])
    state = schur_init(gen)
    for t in range(1, m):
        wt = state.w  # state is at stage t
        delta = wt.conj().T @ B[:t * p] + B[t * p:(t + 1) * p]
        correction = cho_solve(state.alpha_cho, delta)
        X = np.vstack([X + wt @ correction, correction])
        if t < m - 1:
            state = schur_advance(state, gen)
    return X[:, 0] if squeeze else X


def dense_oracle_invert(M: np.ndarray) -> np.ndarray:
    """Reference inverse of a Hermitian PD matrix via Cholesky."""
    M = np.asarray(M)
    return cho_solve(_factor(M, "matrix"), np.eye(M.shape[0], dtype=M.dtype))


def dense_oracle_solve(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Reference solve of a Hermitian PD system via Cholesky."""
    return cho_solve(_factor(np.asarray(M), "matrix"), np.asarray(B))


def random_pd_generators(n1: int, n2: int, rng: np.random.Generator,
                         scale: float = 1.0) -> TbtGenerators:
    """Random Hermitian positive definite TBT generators.

    Draws a complex Gaussian generator table, symmetrizes the zero-lag block
    row, and shifts the diagonal by the total generator magnitude plus one.
    The shift makes every Gershgorin row bound strict, so the assembled
    matrix is PD with margin >= 1.
    """
    h = scale * (rng.standard_normal((2 * n1 + 1, 4 * n2 + 1))
                 + 1j * rng.standard_normal((2 * n1 + 1, 4 * n2 + 1)))
    h[0] = 0.5 * (h[0] + np.conj(h[0][::-1]))
    h[0, 2 * n2] = h[0, 2 * n2].real
    shift = float(np.abs(h).sum() + np.abs(h[1:]).sum()) + 1.0
    h[0, 2 * n2] += shift
    return TbtGenerators(n1, n2, h)

"""Damped Newton iteration for the dual spectral estimation problem.

The solver minimizes ``J(Q) = <Q, Sigma> - integral log(1/Psi + Q)`` over the
open feasible set ``1/Psi + Q > 0`` (checked on the grid).  Two direction
rules are offered:

``full``
    True Newton step from the complete TBT Hessian, computed by the fast
    block solver.  Because the derivative of the gradient field along a
    symmetric direction d is ``H conj(vec(d))``, the step is the lag
    reversal (elementwise conjugate) of the solution of
    ``H y = -vec(grad)``.

``quarter``
    Quasi-Newton baseline that inverts only the trailing principal
    submatrix of the Hessian, of size n2 + 1 + n1*(2*n2 + 1) (the lags with
    k1 > 0 plus (0, k2 >= 0)), and mirrors the step onto the dependent lags
    by conjugate symmetry.  The reduced direction is only locally
    convergent; far from the optimum it can fail the descent test, in which
    case the iteration falls back to the conjugate-gradient-field descent
    direction ``-conj(grad)`` for that step.  Converges linearly, used for
    comparison runs.

Globalization is feasibility-first backtracking with an Armijo decrease
test; the unit step is accepted near the optimum, preserving the quadratic
tail of the full Newton method.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .lagset import IndexSet, SymmetricMultisequence, vectorize
from .spectral import (FeasibilityError, GridFunction, assemble_dense_hessian,
                       directional_derivative, dual_gradient, dual_objective,
                       eval_trig_poly, hessian_generators)
from .tbt import dense_oracle_solve, tbt_solve

#: Line search gives up once the step length underflows this value.
MIN_STEP = 1e-14

#: Direction asymmetry beyond this (relative) triggers a warning.
DIRECTION_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Stopping and line-search parameters."""

    grad_tol: float = 1e-10
    max_iters: int = 100
    backtrack_shrink: float = 0.5
    armijo_c: float = 1e-4
    initial_q: SymmetricMultisequence | None = None

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0.0 < self.backtrack_shrink < 1.0:
            raise ValueError("backtrack_shrink must lie in (0, 1)")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")


@dataclass(frozen=True)
class IterationTrace:
    """Per-iterate history of a solver run.

    Row k describes iterate k: the objective and gradient norm there, the
    step length that produced it (0 for the initial point), and the
    Euclidean distance of its coefficient vector to the final iterate of the
    same run.
    """

    iteration: np.ndarray
    objective: np.ndarray
    grad_norm: np.ndarray
    step: np.ndarray
    dist_to_final: np.ndarray

    def __len__(self) -> int:
        return len(self.iteration)

    def iterations_to_distance(self, tol: float) -> int | None:
        """First iteration index whose distance to the final iterate is < tol."""
        hit = np.nonzero(self.dist_to_final < tol)[0]
        return int(self.iteration[hit[0]]) if hit.size else None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "objective", "grad_norm", "step", "dist_to_final"])
            for i in range(len(self)):
                w.writerow([
                    int(self.iteration[i]),
                    f"{self.objective[i]:.17g}",
                    f"{self.grad_norm[i]:.17g}",
                    f"{self.step[i]:.17g}",
                    f"{self.dist_to_final[i]:.17g}",
                ])


class ConvergenceError(RuntimeError):
    """Gradient tolerance not reached within the iteration budget."""

    def __init__(self, message: str, trace: IterationTrace):
        super().__init__(message)
        self.trace = trace


class StagnationError(RuntimeError):
    """Line search underflow or a non-descent direction."""

    def __init__(self, message: str, trace: IterationTrace):
        super().__init__(message)
        self.trace = trace


def check_feasible(q: SymmetricMultisequence,
                   psi_inv: GridFunction) -> tuple[bool, float]:
    """Whether ``1/Psi + Q`` is strictly positive on the grid, and its minimum."""
    m = float(np.min(psi_inv.values + eval_trig_poly(q, psi_inv.grid).values))
    return m > 0.0, m


def quarter_size(s: IndexSet) -> int:
    """Order of the reduced Hessian: n2 + 1 + n1*(2*n2 + 1)."""
    return s.n2 + 1 + s.n1 * (2 * s.n2 + 1)


def _direction_from_solve(y_vec: np.ndarray, s: IndexSet) -> SymmetricMultisequence:
    """Turn a solve result into the symmetric step via lag reversal.

    The Newton system determines ``conj(vec(d))``; for a numerically
    symmetric solution the reversal equals the elementwise conjugate.  Any
    asymmetry beyond tolerance is reported and projected out.
    """
    d_vec = y_vec[::-1]
    scale = max(1.0, float(np.max(np.abs(y_vec))))
    asym = float(np.max(np.abs(d_vec - np.conj(d_vec[::-1]))))
    if asym > DIRECTION_SYMMETRY_TOL * scale:
        warnings.warn(
            f"direction asymmetry {asym:.3e} exceeds tolerance; re-symmetrizing",
            RuntimeWarning,
        )
    return SymmetricMultisequence(s, d_vec.reshape(s.shape), validate=False)


def _full_direction(g: SymmetricMultisequence, q: SymmetricMultisequence,
                    psi_inv: GridFunction) -> SymmetricMultisequence:
    gen = hessian_generators(q, psi_inv)
    y = tbt_solve(gen, -vectorize(g))
    return _direction_from_solve(y, q.index_set)


def _quarter_direction(g: SymmetricMultisequence, q: SymmetricMultisequence,
                       psi_inv: GridFunction) -> SymmetricMultisequence:
    s = q.index_set
    start = s.size - quarter_size(s)
    H = assemble_dense_hessian(hessian_generators(q, psi_inv))
    gvec = vectorize(g)
    z = dense_oracle_solve(H[start:, start:], -gvec[start:])
    # z approximates the trailing half of -H^{-1} grad; apply the same lag
    # reversal as the full step and mirror onto the leading (dependent) lags.
    v = np.empty(s.size, dtype=complex)
    v[start:] = np.conj(z)
    v[:start] = np.conj(v[::-1][:start])
    return SymmetricMultisequence(s, v.reshape(s.shape), validate=False)


def newton_direction(q: SymmetricMultisequence, sigma: SymmetricMultisequence,
                     psi_inv: GridFunction) -> SymmetricMultisequence:
    """Full-Hessian Newton step at a feasible point."""
    return _full_direction(dual_gradient(q, sigma, psi_inv), q, psi_inv)


def quasi_newton_direction(q: SymmetricMultisequence,
                           sigma: SymmetricMultisequence,
                           psi_inv: GridFunction) -> SymmetricMultisequence:
    """Reduced-Hessian step used by the quarter-Hessian baseline."""
    return _quarter_direction(dual_gradient(q, sigma, psi_inv), q, psi_inv)


def solve_dual(sigma: SymmetricMultisequence, psi_inv: GridFunction,
               cfg: SolverConfig | None = None,
               method: str = "full") -> tuple[SymmetricMultisequence, IterationTrace]:
    """Minimize the dual objective by damped Newton iteration.

    Parameters
    ----------
    sigma : SymmetricMultisequence
        Covariance data with ``sigma_0 > 0``.
    psi_inv : GridFunction
        Reciprocal of the prior spectrum, strictly positive on the grid (so
        the all-zero start is feasible).
    cfg : SolverConfig, optional
        Stopping and line-search parameters.
    method : {"full", "quarter"}
        Direction rule; see the module docstring.

    Returns
    -------
    (q_opt, trace)
        The final iterate and the full iteration trace.

    Raises
    ------
    ConvergenceError
        If the gradient norm does not drop below ``grad_tol`` within
        ``max_iters`` steps.  The partial trace rides on the exception.
    StagnationError
        If the backtracking step underflows or a direction fails to descend.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    if method not in ("full", "quarter"):
        raise ValueError(f"unknown method {method!r}")
    direction = _full_direction if method == "full" else _quarter_direction
    s = sigma.index_set
    if sigma.value((0, 0)).real <= 0.0:
        raise ValueError("sigma_0 must be positive")
    if psi_inv.min() <= 0.0:
        raise ValueError("1/Psi must be strictly positive on the grid")

    q = cfg.initial_q if cfg.initial_q is not None else SymmetricMultisequence.zeros(s)
    if q.index_set != s:
        raise ValueError("initial_q index set does not match Sigma")
    ok, minval = check_feasible(q, psi_inv)
    if not ok:
        raise FeasibilityError(minval)

    rows: list[tuple[int, float, float, float]] = []
    qvecs: list[np.ndarray] = []
    step_taken = 0.0
    for it in range(cfg.max_iters + 1):
        obj = dual_objective(q, sigma, psi_inv)
        g = dual_gradient(q, sigma, psi_inv)
        gnorm = float(np.linalg.norm(vectorize(g)))
        rows.append((it, obj, gnorm, step_taken))
        qvecs.append(vectorize(q))
        if gnorm < cfg.grad_tol:
            return q, _build_trace(rows, qvecs)

        d = direction(g, q, psi_inv)
        slope = directional_derivative(g, d)
        if slope >= 0.0 and method == "quarter":
            # Reduced-Hessian steps are not globally descent directions;
            # take a plain descent step and resume the quasi-Newton updates.
            d = SymmetricMultisequence(s, -np.conj(g.values), validate=False)
            slope = directional_derivative(g, d)  # equals -|grad|^2
        if slope >= 0.0:
            raise StagnationError(
                f"direction is not a descent direction (slope {slope:.3e})",
                _build_trace(rows, qvecs),
            )
        t = 1.0
        while True:
            q_try = q.add_scaled(d, t)
            feasible, _ = check_feasible(q_try, psi_inv)
            if feasible:
                if dual_objective(q_try, sigma, psi_inv) <= obj + cfg.armijo_c * t * slope:
                    break
            t *= cfg.backtrack_shrink
            if t < MIN_STEP:
                raise StagnationError(
                    f"line search underflow at iteration {it}",
                    _build_trace(rows, qvecs),
                )
        q = q_try
        step_taken = t

    raise ConvergenceError(
        f"no convergence within {cfg.max_iters} iterations "
        f"(last gradient norm {rows[-1][2]:.3e})",
        _build_trace(rows, qvecs),
    )


def _build_trace(rows, qvecs) -> IterationTrace:
    final = qvecs[-1]
    dist = np.array([float(np.linalg.norm(v - final)) for v in qvecs])
    arr = np.array(rows, dtype=float)
    return IterationTrace(
        iteration=arr[:, 0].astype(int),
        objective=arr[:, 1],
        grad_norm=arr[:, 2],
        step=arr[:, 3],
        dist_to_final=dist,
    )

"""Shared helpers for the test suite."""

import numpy as np

from specest.lagset import IndexSet, SymmetricMultisequence
from specest.spectral import FrequencyGrid, GridFunction, eval_trig_poly


def random_symmetric(s: IndexSet, rng, scale=1.0) -> SymmetricMultisequence:
    """Random conjugate-symmetric multisequence with entries O(scale)."""
    v = scale * (rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape))
    v = 0.5 * (v + np.conj(v[::-1, ::-1]))
    return SymmetricMultisequence(s, v, validate=False)


def random_feasible_q(s: IndexSet, psi_inv: GridFunction, rng,
                      margin=0.2) -> SymmetricMultisequence:
    """Random symmetric q scaled so that min(1/Psi + Q) >= margin."""
    q = random_symmetric(s, rng)
    qmin = float(np.min(eval_trig_poly(q, psi_inv.grid).values))
    floor = psi_inv.min()
    if qmin < -(floor - margin):
        q = SymmetricMultisequence(
            s, q.values * (floor - margin) / (-qmin), validate=False
        )
    return q


def grid_nodes(g: FrequencyGrid):
    """Meshgrid of the grid angles, shape (N1, N2) each."""
    return np.meshgrid(g.theta1(), g.theta2(), indexing="ij")

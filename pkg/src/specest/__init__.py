"""2-D spectral estimation via a fast Newton solver on the dual problem.

The package solves the covariance extension problem for 2-D stationary
random fields: given lag covariances on a rectangle and a prior spectrum, it
recovers the spectral density closest to the prior in Itakura-Saito
divergence subject to the moment constraints.  The dual problem is smooth
and strictly convex; its Hessian is Toeplitz-block-Toeplitz, which admits
fast structured inversion and linear solves.
"""

from .lagset import (IndexSet, SymmetricMultisequence, devectorize,
                     read_coefficients_csv, real_inner_product, vec_position,
                     vectorize, write_coefficients_csv)
from .spectral import (FeasibilityError, FrequencyGrid, GridFunction,
                       TbtGenerators, assemble_dense_hessian,
                       directional_derivative, dual_gradient, dual_objective,
                       eval_trig_poly, fourier_coefficients,
                       hessian_generators, is_divergence, primal_recover,
                       quadrature)
from .tbt import (ExchangeOperator, SchurState, dense_oracle_invert,
                  dense_oracle_solve, random_pd_generators, reverse_apply,
                  schur_advance, schur_init, tbt_invert, tbt_solve)
from .newton import (ConvergenceError, IterationTrace, SolverConfig,
                     StagnationError, check_feasible, newton_direction,
                     quasi_newton_direction, quarter_size, solve_dual)
from .fieldsim import (FieldModel, FieldSamples, biased_covariances,
                       constant_prior, read_samples_csv, synth_field,
                       write_samples_csv)

__version__ = "0.1.0"

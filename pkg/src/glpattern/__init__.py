"""Deformed roll patterns of the 2-D Ginzburg-Landau equation with a localized
inhomogeneity: grids and weighted norms, amplitude-phase residuals and far-field
log correctors, symbol diagnostics, a bordered Newton solver, IMEX evolution,
and far-field fitting."""

__version__ = "0.1.0"

from .correctors import FarField, eval_farfield
from .farfit import FitResult, default_annulus, fit_far_field, selection_scan, unwrap_phase
from .grid import (AnnulusMask, Grid2D, WeightSpec, decay_ratio, derivatives,
                   integrate, weighted_norm)
from .model import (ECKHAUS_K, GLParams, Inhomogeneity, StateAP, c1_flux_balance,
                    c1_of_phi, g_hat, make_params, phase_from_gradient,
                    reconstruct_A, residual_ap, residual_complex, selected_phase,
                    zero_state)
from .solvers import (EvolveConfig, NewtonConfig, SolveReport, continuation_in_eps,
                      default_solver_farfield, evolve, jacobian_check,
                      solve_stationary)
from .symbols import (L_symbol_eigs, M_symbol_report, ModeGrid, TestFieldSextuple,
                      bordering_integral, cokernel_pairing, eckhaus_report,
                      random_bump_pair)

__all__ = [name for name in dir() if not name.startswith("_")]

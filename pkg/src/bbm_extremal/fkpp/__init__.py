"""F-KPP numerics: solver, traveling waves, Bramson approximation and tail constants."""

from .bramson import (DISCRETE_MONITORING_SHIFT, bridge_below_line_mc, bridge_below_line_prob, fit_sandwich,
                      front_tail_asymptotics, in_validity_window, psi_approx)
from .constants import LaplaceConstant, laplace_constant, laplace_functional_pde
from .solver import (BoundaryLayerError, Grid, InitialCondition, InstabilityError, SolutionField,
                     solve)
from .tables import MaxTail, max_tail
from .waves import (WaveProfile, centering_m, front_position, gumbel_mixture_cdf, optimal_shift_difference,
                    tail_constant, wave_ode_residual, wave_profile)

__all__ = ["DISCRETE_MONITORING_SHIFT", "BoundaryLayerError", "Grid", "InitialCondition", "InstabilityError",
           "LaplaceConstant", "bridge_below_line_mc",
           "MaxTail", "SolutionField", "WaveProfile", "bridge_below_line_prob", "centering_m",
           "fit_sandwich", "front_position", "front_tail_asymptotics", "gumbel_mixture_cdf",
           "in_validity_window", "laplace_constant", "laplace_functional_pde", "max_tail",
           "optimal_shift_difference", "psi_approx", "solve", "tail_constant", "wave_ode_residual",
           "wave_profile"]

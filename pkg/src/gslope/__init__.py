"""Graph-Slope: sorted-l1 total-variation denoising of signals on graphs."""

__version__ = "0.1.0"

from .graph import (ComponentLabeling, ConvergenceError, Graph, GraphError,
                    LaplacianSolveConfig, build_graph, connected_components, gen_caveman,
                    gen_complete, gen_path, incidence_apply, incidence_t_apply, laplacian_apply,
                    laplacian_pinv_solve, project_kernel, rho, spectral_norm_sq)
from .ordered_l1 import (OrderedWeights, SortPermutation, WeightsError, capital_lambda,
                         isotonic_nonneg, project_dual_ball, prox_slope, slope_dual_norm,
                         slope_dual_norm_bound, slope_norm)
from .solver import (DenoiseProblem, SolverConfig, SolverResult, duality_gap,
                     effective_weights, primal_objective, solve, solve_graph_lasso)
from .weights import (NoiseModel, WeightScheme, alpha_grid, compute_weights, event_frequency,
                      weights_alpha, weights_corollary, weights_monte_carlo,
                      weights_practical_gl, weights_practical_gs)

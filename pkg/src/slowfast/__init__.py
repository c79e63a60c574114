"""Numerical laboratory for singularly perturbed slow-fast coupled
diffusions with simultaneous small noise.

Simulate the coupled system, compute frozen-x invariant measures and
their small-noise atomic limits, solve the averaged limit dynamics with
differential-inclusion checks, filter the hidden fast component from the
slow path, and estimate relaxation-time / landscape-constant diagnostics.
"""

from .errors import (BudgetExceeded, ConfigError, Degenerate, DimensionError,
                     DomainError, EmptySearch, Explosion, GridTooCoarse,
                     NoConvergence, NonFiniteState, SingularHessian,
                     SlowFastError, TailMassTooLarge, TooManyMinima)
from .fastproc import (AtomicMeasure, GridMeasure, QuasipotentialReport,
                       action_functional, estimate_lambda,
                       estimate_relaxation_time, invariant_density_grid,
                       invariant_expectation, laplace_limit_measure,
                       laplace_vs_quadrature, quasipotential_1d,
                       w_graph_constants)
from .filtering import (FilterConfig, FilterResult, ParticleCloud,
                        filter_vs_invariant, run_fkk_particle_filter)
from .limit import (AveragedField, FilippovProbe, FilippovSet, averaged_drift,
                    check_filippov, convergence_study, filippov_enlargement,
                    solve_limit_ode)
from .potential import (AssumptionConstants, DriftSpec, MinimaSet,
                        PotentialSpec, SamplingPlan, SearchBox,
                        check_assumptions, find_global_minima, make_drift,
                        make_example_u1, make_example_u2, make_example_u3,
                        make_asymmetric_two_well, make_model,
                        make_quadratic_bowl)
from .sde import (NoiseSchedule, SimConfig, TrajectoryPair, s_of_epsilon,
                  simulate_coupled, simulate_coupled_ensemble,
                  simulate_coupled_given_noise, simulate_frozen)
from .utils import smoothed_sign

__version__ = "0.1.0"

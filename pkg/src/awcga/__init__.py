"""Approximate Weak Chebyshev Greedy Algorithm in finite-dimensional ell_r."""
from .dictionaries import (Dictionary, NonsmoothConstruction, Selection, build_nonsmooth_dictionary,
                           convex_hull_element, weak_argmax)
from .engine import IterationRecord, RealizationPolicy, Trace, residual, run, validate_step
from .errors import AWCGAError, BoundViolation, ConfigError, ContractViolation, ProjectionError
from .projection import (Approximation, ProjectionProblem, best_approximation,
                         perturbed_approximation)
from .scenarios import (PRESETS, BoundContext, NecessityInstance, RateReport, ScenarioResult,
                        bound_E_next, necessity_scenario, nonsmooth_scenario, rate_scenario,
                        run_preset, unbounded_eta_scenario)
from .schedules import (Adaptive, Constant, Power, ScheduleSet, Scripted, Subsequence,
                        check_divergent_sum, check_little_o, extract_halving_subsequence,
                        extract_l1_subsequence, make_schedule)
from .space import (SpaceSpec, apply, dual_norm, empirical_modulus, inf_phi, inf_psi, norm,
                    norming_functional, smoothness_bound)

__version__ = "0.1.0"

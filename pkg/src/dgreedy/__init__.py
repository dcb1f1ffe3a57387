"""Degree-greedy independent sets on configuration-model random graphs."""
from .errors import *  # noqa: F401,F403
from .exact import ExactResult, brute_alpha, exact_alpha
from .explore import ExplorationResult, SelectionSequence, degree_greedy, uniform_greedy, verify_selection_sequence
from .fluid import fluid_curves, ode_oracle, simulate_phase1, simulate_phase2, untouched_fractions, urn_simulate
from .graphgen import MultiGraph, DegreeSequence, component_stats, condition_simple, sample_cm, sample_degrees
from .spectra import (
    DegreeDistribution,
    apply_m1,
    criticality,
    degree_cap_upper_bound,
    iterate_m1,
    poisson_distribution,
    poisson_lambda0,
    poisson_m1_step,
    powerlaw_distribution,
    powerlaw_threshold,
)

__version__ = "0.1.0"

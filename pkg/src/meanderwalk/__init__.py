"""meanderwalk: conditioned one-dimensional random walks among random conductances.

Exact survival recursions and harmonic solves, Doob-transform
conditioned sampling, collapsed electrical networks, a reversible
injection/absorption particle system with its queueing identity, and
continuum reference processes (Brownian meander, Bessel-3), plus the
verification suites comparing the two worlds.
"""

from .environment import (
    Environment,
    EnvironmentParams,
    GeneratorKind,
    InfeasibleParamsError,
    TransitionRow,
    ValidationReport,
    WindowError,
    generate,
    srw_params,
    validate,
)
from .walk import (
    HarmonicTable,
    RescaledPath,
    SurvivalTable,
    WalkPath,
    conditioned_sample_crossing,
    conditioned_sample_meander,
    crossing_functionals,
    estimate_sigma,
    harmonic_hit,
    rescale,
    simulate,
    stopping_time,
    survival_probability,
)
from .network import (
    NetworkReduction,
    ReductionKind,
    crossing_probability_exact,
    effective_conductance,
    expected_exit_time_exact,
    little_bound,
    reduce,
)
from .particles import (
    ParticleConfig,
    ParticleSystemSpec,
    build_particle_system,
    build_queue,
    check_reversibility,
    particle_rates,
    simulate_queue,
)
from .empirical import EmpiricalDistribution, ks_distance, ks_two_sample

__version__ = "0.1.0"

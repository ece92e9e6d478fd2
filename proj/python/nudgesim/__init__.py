"""Synthetic mobile-health engagement simulator.

Markov-process users whose transition matrices react to nudges through a
three-function decay model, with bandit policies closing the loop.
"""

from nudgesim._core import (
    ConfigError,
    DecayParams,
    Decision,
    Environment,
    ExperimentResult,
    MetricRow,
    RunOutputs,
    TransitionMatrix,
    UserModel,
    activity_response,
    decay_f,
    decay_g,
    decay_h,
    engagement_multiplier,
    load_environment,
    modulate_matrix,
    run,
    sample_population,
    serialize_environment,
    validate_matrix,
    walk_session,
)

__all__ = [
    "ConfigError",
    "DecayParams",
    "Decision",
    "Environment",
    "ExperimentResult",
    "MetricRow",
    "RunOutputs",
    "TransitionMatrix",
    "UserModel",
    "activity_response",
    "decay_f",
    "decay_g",
    "decay_h",
    "engagement_multiplier",
    "load_environment",
    "modulate_matrix",
    "run",
    "sample_population",
    "serialize_environment",
    "validate_matrix",
    "walk_session",
]

__version__ = "0.1.0"

"""Uncoupled no-swap-regret learning dynamics for normal-form games.

The package combines three ingredients: per-action external-regret
sub-learners driving a stationary-distribution master, optimistic
follow-the-regularized-leader updates, and log-barrier regularization
solved by damped Newton in reduced simplex coordinates.  Alongside the
learners it ships the feedback oracle for normal-form games, trace-level
checkers for every inequality the dynamics guarantee, an adversarially
robust wrapper, bandit-feedback variants, and a reproducible experiment
harness with a CLI.
"""

from .bandit import BanditBmLearner, BanditObservation, OmdLearner
from .barrier import ReducedPoint, SolverSettings, Strategy
from .bm import BmLearner, StochasticMatrix, mctt_stationary, stationary_distribution
from .errors import (
    ConvergenceError,
    DomainError,
    InputError,
    NumericalError,
    PreconditionError,
)
from .games import (
    InteractionGraph,
    NormalFormGame,
    expected_utility_vector,
    load_game,
    nash_gap,
    random_bimatrix,
    ring_game,
    sample_profile,
    save_game,
    shapley_variant,
)
from .harness import (
    ExperimentConfig,
    large_game_rate_aggregate,
    large_game_rate_individual,
    run_experiment,
    save_run,
    theory_rate,
    verify,
    write_csv,
)
from .learners import MwuLearner, OftrlLearner
from .metrics import (
    CheckReport,
    PlayerTrace,
    RegretReport,
    Trace,
    ce_gap,
    external_regret,
    path_length_sq,
    summarize,
    swap_regret,
)
from .robust import RobustLearner, fallback_rate, variation_threshold

__version__ = "0.1.0"

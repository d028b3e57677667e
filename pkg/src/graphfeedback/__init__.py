"""Online learning with graph-structured feedback.

Exponential-weights policies (Exp3-SET, Exp3-DOM, ELP.P and the Hedge/Exp3
baselines), feedback-graph combinatorics, environments, an experiment harness
and randomised checks of the supporting graph inequalities.
"""

from .environments import make_env
from .errors import (
    CapacityExceeded,
    ConfigurationError,
    GraphFeedbackError,
    InvalidConfiguration,
    InvalidParameter,
    ProtocolViolation,
    SolverFailure,
)
from .estimators import exposure, iw_estimate, observation_probs
from .graphs import (
    FeedbackGraph,
    GraphKind,
    domination_number,
    generate,
    greedy_dominating_set,
    independence_number,
    mas_size,
    observation_set,
)
from .harness import ExperimentConfig, run_many, run_one
from .lp import solve_maxmin_coverage
from .policies import ElpP, Exp3, Exp3Dom, Exp3Set, Hedge, RoundFeedback

__version__ = "0.1.0"

"""Query-budgeted planning over STRIPS domains.

Planners spend world-model queries (WMQs) against a metered oracle; policies
(LLM-backed, oracle, scripted or random) supply their decisions.
"""

from .pddl import (
    Atom,
    GroundAction,
    Inapplicable,
    ParseError,
    ProblemInstance,
    State,
    UnknownAction,
    UnsupportedFeature,
    apply_action,
    ground_problem,
    load_problem,
    parse_action_string,
    parse_pddl,
    satisfies_goal,
)
from .planners import (
    PLANNERS,
    FailureReason,
    PlannerOutcome,
    run_boomerang,
    run_io,
    run_react,
    run_react_select,
    run_reflexion,
    run_toi_bfs,
    run_toi_dfs,
    update_beam,
)
from .policy import (
    CERTAIN,
    IMPOSSIBLE,
    MAYBE,
    InteractionHistory,
    OraclePolicy,
    PolicyFailure,
    RandomPolicy,
    Rating,
    ScriptedPolicy,
    WorldContext,
)
from .world import BudgetExhausted, ErrorFeedback, ErrorKind, QueryLedger, WorldModel

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "GroundAction",
    "Inapplicable",
    "ParseError",
    "ProblemInstance",
    "State",
    "UnknownAction",
    "UnsupportedFeature",
    "apply_action",
    "ground_problem",
    "load_problem",
    "parse_action_string",
    "parse_pddl",
    "satisfies_goal",
    "PLANNERS",
    "FailureReason",
    "PlannerOutcome",
    "run_boomerang",
    "run_io",
    "run_react",
    "run_react_select",
    "run_reflexion",
    "run_toi_bfs",
    "run_toi_dfs",
    "update_beam",
    "CERTAIN",
    "IMPOSSIBLE",
    "MAYBE",
    "InteractionHistory",
    "OraclePolicy",
    "PolicyFailure",
    "RandomPolicy",
    "Rating",
    "ScriptedPolicy",
    "WorldContext",
    "BudgetExhausted",
    "ErrorFeedback",
    "ErrorKind",
    "QueryLedger",
    "WorldModel",
]

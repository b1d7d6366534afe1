"""matchlab: a laboratory for online stochastic bipartite matching.

Stochastic bipartite instances (each edge exists independently with a known
probability) are matched online under adversarial edge arrivals by pruned
greedy policies.  The package provides the instance model and generators,
the subset-constraint LP benchmark with a separation oracle, probability
pruning, deterministic Monte Carlo simulation of greedy, offline optimum
benchmarks, and numerical verification of the bound functions behind the
competitive guarantees.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    DeltaBound,
    WorstCaseInstance,
    brute_force_opt_problem,
    build_worst_case,
    h1,
    h2,
    h2_min,
    h3,
    h3_grid_check,
    h4,
    h4_range_check,
    solve_delta_bound,
)
from .errors import (
    CapabilityError,
    DomainError,
    InfeasibleBoundError,
    MatchlabError,
    NonConvergenceError,
    ParseError,
    UndefinedRatioError,
    UnsplittableEdgeError,
    ValidationError,
)
from .graphs import (
    EdgeSpec,
    Realization,
    RegularityReport,
    StochasticGraph,
    complete_graph,
    gen_complete_uniform,
    gen_fig1_regular,
    gen_fig2_hardness,
    gen_random,
    log_weight,
    prob_from_weight,
    read_instance,
    regularity_check,
    split_edge,
    write_instance,
)
from .lp import (
    FeasibilityReport,
    LpSolution,
    SeparationResult,
    brute_force_separate,
    constraint_rhs,
    exact_match_probabilities,
    separate,
    solve_lp,
    solve_lp_bruteforce,
    verify_feasible,
)
from .offline import (
    PairedRatioResult,
    RatioReport,
    competitive_report,
    exact_expected_opt,
    max_matching,
    max_matching_bruteforce,
    mc_opt,
    mc_ratio_paired,
)
from .pruning import PrunedGraph, batch_order, prune, regular_xy, unpruned
from .simulate import (
    ArrivalOrder,
    EventEstimates,
    GreedyMcResult,
    MatchingResult,
    McEstimate,
    estimate_event_terms,
    first_edge_lower_bound,
    mc_greedy,
    order_as_listed,
    order_random,
    order_red_first,
    order_type1_first,
    q_values,
    reference_trial,
    run_greedy,
)

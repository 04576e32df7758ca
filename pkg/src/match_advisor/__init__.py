"""Budget-constrained matching advice for agents in bipartite allocation.

Given a compatibility graph, one agent's removable restrictions, and a
budget, compute or estimate the agent's probability of being matched under a
randomly chosen maximum matching and find a feasible restriction set whose
removal maximizes that probability.
"""

from .advice import (
    AdviceInstance,
    IncompatibilitySet,
    IncompatibilityType,
    InvalidInstanceError,
    Restriction,
    ValidationReport,
    activation_blocks,
    active_block_indices,
    apply_relaxation,
    classify,
    normalize,
    relaxation_cost,
    validate_instance,
)
from .bigraph import (
    BipartiteGraph,
    DmLabels,
    Label,
    Matching,
    add_agent_edges,
    dm_decompose,
    dm_labels,
    max_matching,
)
from .data import (
    ChoiceMode,
    CostScheme,
    cost_scheme_eval,
    gen_er_instance,
    gen_maxcov_instance,
    gen_threshold_standin,
    load_instance,
    load_threshold_csv,
    save_instance,
)
from .matchenum import (
    EnumerationBudgetExceeded,
    brute_force_max_matchings,
    count_max_matchings_containing,
    enumerate_max_matchings,
)
from .prob import (
    BlockProbabilities,
    Method,
    ProbEstimate,
    block_probability,
    estimate_probability,
    exact_probability,
    hkuno_estimate,
    mix_seed,
    precompute_block_probabilities,
    sample_max_matching,
)
from .scenario import ScenarioResult, detect_scenario
from .solvers import (
    AdviseConfig,
    BlockFormulaOracle,
    ExactOracle,
    HkUnoOracle,
    NoSolverAvailable,
    ProbOracle,
    SamplingOracle,
    Solution,
    advise,
    budget_partitions,
    exhaustive_relax,
    greedy_relax,
    threshold_relax,
)

__version__ = "0.1.0"

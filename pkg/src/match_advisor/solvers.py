"""Relaxation optimizers and the end-to-end advise pipeline.

Every solver maximizes the probability that the special agent is matched in
the relaxed graph, under a budget on total relaxation cost.  The probability
is always obtained through an oracle object so that exact enumeration,
permuted-HK sampling, or the precomputed block formula can be swapped freely;
oracles count their calls, which the threshold solver's call bound relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .advice import (
    AdviceInstance,
    IncompatibilityType,
    InvalidInstanceError,
    apply_relaxation,
    classify,
    relaxation_cost,
    validate_instance,
)
from .bigraph import BipartiteGraph
from .matchenum import DEFAULT_ENUMERATION_BUDGET
from .prob import (
    BlockProbabilities,
    Method,
    ProbEstimate,
    block_probability,
    estimate_probability,
    exact_probability,
    hkuno_estimate,
)

EXHAUSTIVE_RESTRICTION_LIMIT = 25


class NoSolverAvailable(RuntimeError):
    pass


class ProbOracle:
    """Callable (graph, agent) -> ProbEstimate with a call counter.

    Oracles are deterministic: identical inputs always produce identical
    estimates, which keeps argmax comparisons meaningful under sampling
    (common random numbers across the candidates of a greedy sweep).
    """

    method: Method

    def __init__(self) -> None:
        self.calls = 0

    def __call__(self, g: BipartiteGraph, agent: int) -> ProbEstimate:
        self.calls += 1
        return self._evaluate(g, agent)

    def _evaluate(self, g: BipartiteGraph, agent: int) -> ProbEstimate:
        raise NotImplementedError


class ExactOracle(ProbOracle):
    method = Method.EXACT_ENUMERATION

    def __init__(self, budget: int = DEFAULT_ENUMERATION_BUDGET):
        super().__init__()
        self.budget = budget

    def _evaluate(self, g, agent):
        return exact_probability(g, agent, budget=self.budget)


class SamplingOracle(ProbOracle):
    method = Method.PERMUTATION_SAMPLING

    def __init__(self, n_samples: int, seed: int):
        super().__init__()
        self.n_samples = n_samples
        self.seed = seed

    def _evaluate(self, g, agent):
        return estimate_probability(g, agent, self.n_samples, self.seed)


class HkUnoOracle(ProbOracle):
    method = Method.HK_UNO

    def __init__(self, theta_hk: int, theta_u: int, seed: int):
        super().__init__()
        self.theta_hk = theta_hk
        self.theta_u = theta_u
        self.seed = seed

    def _evaluate(self, g, agent):
        return hkuno_estimate(g, agent, self.theta_hk, self.theta_u, self.seed)


class BlockFormulaOracle(ProbOracle):
    """Evaluate candidates from precomputed block probabilities.

    A block counts as active when the graph under evaluation already carries
    edges from the agent to all of its resources, so the oracle plugs into
    the same (graph, agent) interface as the others.  Only meaningful in the
    regime the decomposition covers: scenario 2 with the agent's probability
    mass confined to the blocks.
    """

    method = Method.BLOCK_FORMULA

    def __init__(self, precomputed: BlockProbabilities):
        super().__init__()
        self.precomputed = precomputed

    def _evaluate(self, g, agent):
        neighbors = set(g.adjacency[agent])
        active = {
            i
            for i, block in enumerate(self.precomputed.blocks)
            if block <= neighbors
        }
        try:
            value = block_probability(self.precomputed, active)
        except ValueError:
            value = 0.0
        exact = value if isinstance(value, Fraction) else None
        return ProbEstimate(float(value), 1, Method.BLOCK_FORMULA, exact=exact)


@dataclass(frozen=True)
class Solution:
    """A chosen restriction set with its cost and achieved probability."""

    chosen: frozenset[int]
    cost: Fraction
    probability: ProbEstimate
    baseline: ProbEstimate
    scenario1: bool
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def gain(self) -> float:
        return self.probability.value - self.baseline.value

    def to_dict(self) -> dict:
        return {
            "chosen": sorted(self.chosen),
            "cost": str(self.cost) if self.cost.denominator != 1 else self.cost.numerator,
            "probability": self.probability.to_dict(),
            "baseline": self.baseline.to_dict(),
            "gain": self.gain,
            "scenario1": self.scenario1,
            "metadata": self.metadata,
        }


def _key(est: ProbEstimate) -> Fraction | float:
    return est.exact if est.exact is not None else est.value


def greedy_relax(
    inst: AdviceInstance,
    budget: int,
    oracle: ProbOracle,
    baseline: ProbEstimate | None = None,
) -> Solution:
    """Budget iterations of pick-the-best-single-restriction.

    Requires unit costs, so the budget is a count.  The argmax is
    unconditional: when every remaining candidate is zero-gain one still gets
    selected (lowest id first); the first zero-gain iteration is recorded in
    the solution metadata since it marks wasted budget.
    """
    if not inst.restrictions:
        raise ValueError("empty restriction set")
    if any(r.cost != 1 for r in inst.restrictions):
        raise ValueError(
            "greedy requires uniform unit costs; use the threshold or "
            "exhaustive solver for weighted restrictions"
        )
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if baseline is None:
        baseline = oracle(inst.graph, inst.special_agent)

    chosen: set[int] = set()
    current = baseline
    remaining = inst.restriction_ids()
    first_zero_gain = None
    for iteration in range(1, budget + 1):
        if not remaining:
            break
        best_id = None
        best_est = None
        for rid in remaining:
            est = oracle(
                apply_relaxation(inst, chosen | {rid}), inst.special_agent
            )
            if best_est is None or _key(est) > _key(best_est):
                best_id, best_est = rid, est
        if first_zero_gain is None and _key(best_est) <= _key(current):
            first_zero_gain = iteration
        chosen.add(best_id)
        remaining.remove(best_id)
        current = best_est

    return Solution(
        chosen=frozenset(chosen),
        cost=relaxation_cost(inst, chosen),
        probability=current,
        baseline=baseline,
        scenario1=False,
        metadata={
            "solver": "greedy",
            "first_zero_gain_iteration": first_zero_gain,
            "oracle_calls": oracle.calls,
        },
    )


def budget_partitions(budget: int, n_blocks: int) -> list[tuple[int, ...]]:
    """All ordered splits of an integer budget across blocks, lexicographic.

    There are C(budget + n_blocks - 1, n_blocks - 1) of them.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if n_blocks == 1:
        return [(budget,)]
    out = []
    for head in range(budget + 1):
        for tail in budget_partitions(budget - head, n_blocks - 1):
            out.append((head,) + tail)
    return out


def threshold_relax(
    inst: AdviceInstance,
    budget: int,
    oracle: ProbOracle,
    baseline: ProbEstimate | None = None,
) -> Solution:
    """Optimal solver for threshold-like instances with integer costs.

    Every split of the budget across the blocks is tried; within a block the
    cheapest-first structure means the best affordable relaxation is the
    longest affordable rank suffix, found by binary search on precomputed
    suffix costs.  Any feasible set can be shrunk to such a suffix shape
    without losing opened resources, so the sweep covers an optimal solution.
    Oracle calls: one per partition, plus one for the baseline.
    """
    if classify(inst) is not IncompatibilityType.THRESHOLD_LIKE:
        raise ValueError("instance is not threshold-like")
    if any(r.cost.denominator != 1 for r in inst.restrictions):
        raise ValueError("threshold solver requires integer costs")
    if not isinstance(budget, int) or budget < 0:
        raise ValueError("budget must be a non-negative integer")
    if baseline is None:
        baseline = oracle(inst.graph, inst.special_agent)

    blocks = inst.blocks()
    order = sorted(blocks)
    if not order:
        return Solution(
            frozenset(), Fraction(0), baseline, baseline, False,
            metadata={"solver": "threshold", "oracle_calls": oracle.calls},
        )

    # suffix_costs[b][s-1] = total cost of ranks s..t in block b
    suffix_costs: dict[int, list[int]] = {}
    for b in order:
        members = blocks[b]
        acc = 0
        costs = [0] * len(members)
        for idx in range(len(members) - 1, -1, -1):
            acc += int(members[idx].cost)
            costs[idx] = acc
        suffix_costs[b] = costs

    def best_suffix(b: int, allowance: int) -> list[int]:
        """Ids of the longest rank suffix of block b costing at most allowance."""
        costs = suffix_costs[b]
        lo, hi = 0, len(costs)  # least index with costs[idx] <= allowance
        while lo < hi:
            mid = (lo + hi) // 2
            if costs[mid] <= allowance:
                hi = mid
            else:
                lo = mid + 1
        return [r.id for r in blocks[b][lo:]]

    best_set: frozenset[int] = frozenset()
    best_est = baseline
    for split in budget_partitions(budget, len(order)):
        candidate: set[int] = set()
        for b, allowance in zip(order, split):
            candidate.update(best_suffix(b, allowance))
        est = oracle(apply_relaxation(inst, candidate), inst.special_agent)
        if _key(est) > _key(best_est):
            best_set, best_est = frozenset(candidate), est

    return Solution(
        chosen=best_set,
        cost=relaxation_cost(inst, best_set),
        probability=best_est,
        baseline=baseline,
        scenario1=False,
        metadata={
            "solver": "threshold",
            "partitions": len(budget_partitions(budget, len(order))),
            "oracle_calls": oracle.calls,
        },
    )


def exhaustive_relax(
    inst: AdviceInstance,
    budget,
    oracle: ProbOracle,
    baseline: ProbEstimate | None = None,
) -> Solution:
    """Evaluate every budget-feasible restriction subset (guarded).

    Ties go to the smallest set, then lexicographically smallest ids; the
    empty set is always feasible, so the result never pays for zero gain.
    """
    ids = inst.restriction_ids()
    if len(ids) > EXHAUSTIVE_RESTRICTION_LIMIT:
        raise ValueError(
            f"{len(ids)} restrictions exceed the exhaustive-search limit "
            f"({EXHAUSTIVE_RESTRICTION_LIMIT})"
        )
    feasible: list[tuple[int, ...]] = []

    def expand(idx: int, current: list[int], cost: Fraction) -> None:
        feasible.append(tuple(current))
        for j in range(idx, len(ids)):
            c = cost + inst.restriction(ids[j]).cost
            if c <= budget:
                current.append(ids[j])
                expand(j + 1, current, c)
                current.pop()

    expand(0, [], Fraction(0))

    best = None  # (est, cardinality, ids, set)
    baseline_out = baseline
    for subset in feasible:
        g = apply_relaxation(inst, subset)
        est = oracle(g, inst.special_agent)
        if subset == ():
            baseline_out = baseline_out or est
        entry = (est, len(subset), subset)
        if (
            best is None
            or _key(est) > _key(best[0])
            or (
                _key(est) == _key(best[0])
                and (len(subset), subset) < (best[1], best[2])
            )
        ):
            best = entry

    est, _, subset = best
    return Solution(
        chosen=frozenset(subset),
        cost=relaxation_cost(inst, subset),
        probability=est,
        baseline=baseline_out,
        scenario1=False,
        metadata={"solver": "exhaustive", "evaluated": len(feasible),
                  "oracle_calls": oracle.calls},
    )


@dataclass(frozen=True)
class AdviseConfig:
    oracle: str = "exact"  # exact | sample | hkuno
    n_samples: int = 1000
    theta_hk: int = 32
    theta_u: int = 0
    seed: int = 0
    solver: str = "auto"  # auto | greedy | threshold | exhaustive
    min_cost_witness: bool = False
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET

    def build_oracle(self) -> ProbOracle:
        if self.oracle == "exact":
            return ExactOracle(budget=self.enumeration_budget)
        if self.oracle == "sample":
            return SamplingOracle(self.n_samples, self.seed)
        if self.oracle == "hkuno":
            return HkUnoOracle(self.theta_hk, self.theta_u, self.seed)
        raise ValueError(f"unknown oracle {self.oracle!r}")


def advise(
    inst: AdviceInstance, budget, config: AdviseConfig | None = None
) -> Solution:
    """Full pipeline: validate, baseline, scenario split, then dispatch.

    A scenario-1 witness ends the search immediately (probability 1 by
    construction).  Scenario 2 re-threads the budget-filtered pairs into the
    instance and dispatches on the incompatibility type: greedy for the
    single-restriction and single-choice families (unit costs required),
    the partition sweep for threshold-like, exhaustive search for small
    multi-choice-multi-restriction instances.
    """
    config = config or AdviseConfig()
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report.violations)
    oracle = config.build_oracle()
    baseline = oracle(inst.graph, inst.special_agent)
    if budget == 0 or not inst.restrictions:
        return Solution(
            frozenset(), Fraction(0), baseline, baseline, False,
            metadata={"solver": "none", "oracle_calls": oracle.calls},
        )

    from .scenario import detect_scenario

    result = detect_scenario(inst, budget, min_cost_witness=config.min_cost_witness)
    if result.scenario1:
        y, requires = result.witness
        probability = oracle(apply_relaxation(inst, requires), inst.special_agent)
        return Solution(
            chosen=requires,
            cost=relaxation_cost(inst, requires),
            probability=probability,
            baseline=baseline,
            scenario1=True,
            metadata={
                "solver": "scenario1",
                "witness_resource": y,
                "oracle_calls": oracle.calls,
            },
        )

    filtered = replace(inst, incompatibility=result.gamma_prime)
    ctype = classify(inst)
    solver = config.solver
    if solver == "auto":
        if ctype is IncompatibilityType.THRESHOLD_LIKE:
            solver = "threshold"
        elif ctype is IncompatibilityType.MULTI_CHOICE_MULTI_RESTRICTION:
            solver = "exhaustive"
        elif all(r.cost == 1 for r in inst.restrictions):
            solver = "greedy"
        else:
            solver = "exhaustive"  # weighted costs: greedy's guarantee is gone

    if solver == "greedy":
        solution = greedy_relax(filtered, int(budget), oracle, baseline=baseline)
    elif solver == "threshold":
        solution = threshold_relax(filtered, int(budget), oracle, baseline=baseline)
    elif solver == "exhaustive":
        if len(inst.restrictions) > EXHAUSTIVE_RESTRICTION_LIMIT:
            raise NoSolverAvailable(
                "no solver available: instance is multi-choice-multi-restriction "
                f"with {len(inst.restrictions)} restrictions (exhaustive limit "
                f"{EXHAUSTIVE_RESTRICTION_LIMIT})"
            )
        solution = exhaustive_relax(filtered, budget, oracle, baseline=baseline)
    else:
        raise ValueError(f"unknown solver {config.solver!r}")

    metadata = dict(solution.metadata)
    metadata["incompatibility_type"] = ctype.value
    if ctype is IncompatibilityType.SINGLE_CHOICE_MULTI_RESTRICTION and solver == "greedy":
        metadata["guarantee"] = (
            "submodularity-ratio approximation only; the (1-1/e) bound does "
            "not apply to single-choice-multi-restriction instances"
        )
    elif solver == "greedy":
        metadata["guarantee"] = "greedy is (1-1/e)-approximate (optimal for single-choice-single-restriction)"
    return replace(solution, metadata=metadata)


def approximation_floor() -> float:
    """The greedy guarantee constant 1 - 1/e."""
    return 1.0 - 1.0 / math.e

"""Detect whether a budget-feasible relaxation can grow the maximum matching.

One maximum matching and one even/odd/unreachable decomposition suffice for
the whole incompatibility set: a new edge from the special agent augments the
matching iff both endpoints are even.  When such a budget-feasible pair
exists the agent can reach probability 1 (scenario 1); otherwise the
budget-feasible pairs are returned for the scenario-2 optimizers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .advice import (
    AdviceInstance,
    IncompatibilitySet,
    InvalidInstanceError,
    relaxation_cost,
    validate_instance,
)
from .bigraph import Label, dm_decompose, max_matching


@dataclass(frozen=True)
class ScenarioResult:
    """Either a scenario-1 witness or the budget-filtered incompatibility set."""

    scenario1: bool
    witness: tuple[int, frozenset[int]] | None = None
    gamma_prime: IncompatibilitySet | None = None


def detect_scenario(
    inst: AdviceInstance, budget, min_cost_witness: bool = False
) -> ScenarioResult:
    """Scan the incompatibility set once against the node decomposition.

    Returns scenario 1 with the first stored pair whose cost fits the budget
    and whose resource is even; with `min_cost_witness`, the scan completes
    and the cheapest such pair wins (ties by storage order).  All witnesses
    give probability 1, so the first is as good as any.  Otherwise returns
    scenario 2 with exactly the budget-feasible pairs on non-even resources.

    New edges all touch the special agent, so no pair can augment the
    matching unless the agent itself is even (equivalently: some maximum
    matching leaves it unmatched).  Exactly one matching computation is
    performed.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report.violations)
    if budget < 0:
        raise ValueError("budget must be non-negative")

    labels = dm_decompose(inst.graph, max_matching(inst.graph))
    agent_even = labels.agent_labels[inst.special_agent] is Label.EVEN

    kept: list[tuple[int, frozenset[int]]] = []
    best: tuple[int, frozenset[int]] | None = None
    best_cost = None
    for y, requires in inst.incompatibility:
        cost = relaxation_cost(inst, requires)
        if cost > budget:
            continue
        if agent_even and labels.resource_labels[y] is Label.EVEN:
            if not min_cost_witness:
                return ScenarioResult(scenario1=True, witness=(y, requires))
            if best is None or cost < best_cost:
                best, best_cost = (y, requires), cost
        else:
            kept.append((y, requires))
    if best is not None:
        return ScenarioResult(scenario1=True, witness=best)
    return ScenarioResult(
        scenario1=False, gamma_prime=IncompatibilitySet(tuple(kept))
    )

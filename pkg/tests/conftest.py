"""Shared generators and slow reference oracles for the test suite.

The oracles here deliberately re-derive everything from first principles
(exhaustive path search, per-candidate re-matching) so they share no code
path with the implementations they check.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from match_advisor import (
    AdviceInstance,
    BipartiteGraph,
    ChoiceMode,
    IncompatibilitySet,
    IncompatibilityType,
    Label,
    Matching,
    Restriction,
    detect_scenario,
    gen_er_instance,
    max_matching,
    mix_seed,
)

FIXTURES = Path(__file__).parent / "fixtures"


def random_graph(rng: random.Random, max_agents=8, max_resources=8,
                 probs=(0.1, 0.2, 0.3, 0.4, 0.5)) -> BipartiteGraph:
    n_a = rng.randint(1, max_agents)
    n_r = rng.randint(1, max_resources)
    p = rng.choice(probs)
    edges = [(a, r) for a in range(n_a) for r in range(n_r) if rng.random() < p]
    return BipartiteGraph.from_edges(n_a, n_r, edges)


def scenario2_instance(
    seed: int,
    budget,
    mode: ChoiceMode = ChoiceMode.MULTI_CHOICE_SINGLE_RESTRICTION,
    n_agents: int = 6,
    n_resources: int = 4,
    edge_prob: float = 0.45,
    n_restrictions: int = 4,
    max_restr: int = 2,
    min_restr: int = 0,
    require_pairs: bool = True,
) -> AdviceInstance:
    """Walk derived seeds until one lands in scenario 2 (non-trivially)."""
    for attempt in range(400):
        inst = gen_er_instance(
            n_agents,
            n_resources,
            edge_prob,
            n_restrictions,
            max_restr,
            choice_mode=mode,
            seed=mix_seed(seed, attempt),
            min_restr_per_resource=min_restr,
        )
        result = detect_scenario(inst, budget)
        if result.scenario1:
            continue
        if require_pairs and not result.gamma_prime.pairs:
            continue
        return inst
    raise RuntimeError("could not find a scenario-2 instance")


def random_threshold_instance(rng: random.Random, max_blocks=3) -> AdviceInstance:
    """Random threshold-like instance: suffix-shaped pairs, integer costs."""
    n_blocks = rng.randint(1, max_blocks)
    sizes = [rng.randint(1, 3) for _ in range(n_blocks)]
    restrictions = []
    rid = 0
    per_block_ids: list[list[int]] = []
    for b, size in enumerate(sizes):
        ids = []
        for rank in range(1, size + 1):
            cost = 1 if rng.random() < 0.5 else size - rank + 1
            restrictions.append(Restriction(rid, cost, block=b, rank=rank))
            ids.append(rid)
            rid += 1
        per_block_ids.append(ids)
    n_agents, n_resources = rng.randint(2, 5), rng.randint(2, 5)
    special = n_agents
    edges = [
        (a, r)
        for a in range(n_agents)
        for r in range(n_resources)
        if rng.random() < 0.5
    ]
    g = BipartiteGraph.from_edges(n_agents + 1, n_resources, edges)
    pairs = []
    for y in range(n_resources):
        if rng.random() < 0.3:
            continue
        req: set[int] = set()
        for b in range(n_blocks):
            depth = rng.randint(0, sizes[b])
            req.update(per_block_ids[b][sizes[b] - depth:])
        if req:
            pairs.append((y, frozenset(req)))
    return AdviceInstance(
        graph=g,
        special_agent=special,
        restrictions=tuple(restrictions),
        incompatibility=IncompatibilitySet(tuple(pairs)),
        type_hint=IncompatibilityType.THRESHOLD_LIKE,
    )


def alternating_reachability(g: BipartiteGraph, m: Matching):
    """Exhaustive simple-alternating-path search from every free node.

    Returns (even_agents, odd_agents, even_resources, odd_resources) as sets.
    Exponential; for tiny graphs only.
    """
    pairs = set(m.pairs)
    match_a = dict(pairs)
    match_r = {r: a for a, r in pairs}
    r_adj = g.resource_adjacency()
    even_a, odd_a, even_r, odd_r = set(), set(), set(), set()

    def explore(side, node, parity_even, visited):
        if side == "a":
            (even_a if parity_even else odd_a).add(node)
        else:
            (even_r if parity_even else odd_r).add(node)
        if side == "a":
            if parity_even:
                steps = [("r", r) for r in g.adjacency[node] if match_a.get(node) != r]
            else:
                steps = [("r", match_a[node])] if node in match_a else []
        else:
            if parity_even:
                steps = [("a", a) for a in r_adj[node] if match_r.get(node) != a]
            else:
                steps = [("a", match_r[node])] if node in match_r else []
        for nxt in steps:
            if nxt not in visited:
                explore(nxt[0], nxt[1], not parity_even, visited | {nxt})

    for a in range(g.n_agents):
        if a not in match_a:
            explore("a", a, True, {("a", a)})
    for r in range(g.n_resources):
        if r not in match_r:
            explore("r", r, True, {("r", r)})
    return even_a, odd_a, even_r, odd_r


def slow_labels(g: BipartiteGraph, m: Matching):
    """Label assignment per the definition, via the exhaustive path search."""
    even_a, odd_a, even_r, odd_r = alternating_reachability(g, m)

    def lab(i, even, odd):
        if i in even:
            return Label.EVEN
        if i in odd:
            return Label.ODD
        return Label.UNREACHABLE

    return (
        tuple(lab(a, even_a, odd_a) for a in range(g.n_agents)),
        tuple(lab(r, even_r, odd_r) for r in range(g.n_resources)),
    )


def slow_scenario1_check(inst: AdviceInstance, budget) -> bool:
    """Per-candidate re-matching: does any feasible pair grow the matching?"""
    from match_advisor import add_agent_edges, relaxation_cost

    base = max_matching(inst.graph).size
    for y, requires in inst.incompatibility:
        if relaxation_cost(inst, requires) > budget:
            continue
        grown = add_agent_edges(inst.graph, inst.special_agent, {y})
        if max_matching(grown).size > base:
            return True
    return False


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES

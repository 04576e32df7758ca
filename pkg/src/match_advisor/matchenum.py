"""Exact enumeration of all maximum matchings, plus an independent
brute-force oracle used to cross-check it.

The enumerator is the plain exchange-search scheme: starting from one seed
maximum matching, every further maximum matching is produced by exchanging
along a single alternating cycle or even-length alternating path.  The search
branches on whether a matched edge from the exchange component stays in the
matching, so each maximum matching is visited exactly once.  None of the
published speed-ups (component trimming, amortized path search) are applied;
at advice-problem sizes the plain variant is plenty fast and far easier to
audit against the brute-force oracle.
"""

from __future__ import annotations

from typing import Iterator, Sequence

from .bigraph import BipartiteGraph, Matching, max_matching

BRUTE_FORCE_NODE_LIMIT = 20
DEFAULT_ENUMERATION_BUDGET = 10**6


class EnumerationBudgetExceeded(RuntimeError):
    """Raised when a graph has more maximum matchings than the caller allows."""


def _find_exchange(
    adjacency: dict[int, tuple[int, ...]],
    match_agent: dict[int, int],
    match_resource: dict[int, int],
) -> list[tuple[int, int]] | None:
    """Find one alternating cycle or even alternating path, or None.

    Works on the alternation digraph: a non-matching edge (a, r) is an arc
    a->r, a matching edge an arc r->a.  Directed cycles are alternating
    cycles; directed paths from a free agent to any agent, or from any
    resource to a free resource, are even alternating paths.  Returns the
    component as a list of (agent, resource) edges.  If none exists the
    current matching is the unique maximum matching of the graph.
    """
    agents = sorted(adjacency)
    resource_arcs: dict[int, list[int]] = {}  # resource -> agents via unmatched edges
    for a in agents:
        for r in adjacency[a]:
            if match_agent.get(a) != r:
                resource_arcs.setdefault(r, []).append(a)

    # Cycle search: iterative DFS with a gray stack over the digraph.
    state: dict[tuple[str, int], int] = {}  # 0 absent, 1 on stack, 2 done
    for root in agents:
        if state.get(("a", root)):
            continue
        stack: list[tuple[str, int, Iterator[int]]] = []

        def arcs_from(side: str, node: int) -> Iterator[int]:
            if side == "a":
                return iter(
                    r for r in adjacency[node] if match_agent.get(node) != r
                )
            matched = match_resource.get(node)
            return iter(() if matched is None else (matched,))

        state[("a", root)] = 1
        stack.append(("a", root, arcs_from("a", root)))
        while stack:
            side, node, it = stack[-1]
            nxt_side = "r" if side == "a" else "a"
            advanced = False
            for nxt in it:
                key = (nxt_side, nxt)
                if state.get(key) == 1:
                    # back edge: pop the cycle off the gray stack
                    cycle_nodes = []
                    for s, n, _ in reversed(stack):
                        cycle_nodes.append((s, n))
                        if (s, n) == key:
                            break
                    cycle_nodes.reverse()
                    edges = []
                    for i, (s, n) in enumerate(cycle_nodes):
                        s2, n2 = cycle_nodes[(i + 1) % len(cycle_nodes)]
                        edges.append((n, n2) if s == "a" else (n2, n))
                    return edges
                if not state.get(key):
                    state[key] = 1
                    stack.append((nxt_side, nxt, arcs_from(nxt_side, nxt)))
                    advanced = True
                    break
            if not advanced:
                state[(side, node)] = 2
                stack.pop()

    # Even path from a free agent: BFS forward until any other agent node.
    for start in agents:
        if start in match_agent or not adjacency[start]:
            continue
        parent: dict[tuple[str, int], tuple[str, int]] = {}
        seen = {("a", start)}
        queue: list[tuple[str, int]] = [("a", start)]
        while queue:
            side, node = queue.pop(0)
            if side == "a" and node != start:
                edges = []
                cur: tuple[str, int] = (side, node)
                while cur != ("a", start):
                    prev = parent[cur]
                    a, r = (
                        (cur[1], prev[1]) if cur[0] == "a" else (prev[1], cur[1])
                    )
                    edges.append((a, r))
                    cur = prev
                return edges
            if side == "a":
                nxts = [
                    ("r", r)
                    for r in adjacency[node]
                    if match_agent.get(node) != r
                ]
            else:
                matched = match_resource.get(node)
                nxts = [] if matched is None else [("a", matched)]
            for nxt in nxts:
                if nxt not in seen:
                    seen.add(nxt)
                    parent[nxt] = (side, node)
                    queue.append(nxt)

    # Even path ending at a free resource: BFS over reversed arcs.
    free_resources = sorted(
        r for r in resource_arcs if r not in match_resource
    )
    for start in free_resources:
        parent = {}
        seen = {("r", start)}
        queue = [("r", start)]
        while queue:
            side, node = queue.pop(0)
            if side == "r" and node != start:
                edges = []
                cur = (side, node)
                while cur != ("r", start):
                    prev = parent[cur]
                    a, r = (
                        (cur[1], prev[1]) if cur[0] == "a" else (prev[1], cur[1])
                    )
                    edges.append((a, r))
                    cur = prev
                return edges
            if side == "r":
                nxts = [("a", a) for a in resource_arcs.get(node, ())]
            else:
                matched = match_agent.get(node)
                nxts = [] if matched is None else [("r", matched)]
            for nxt in nxts:
                if nxt not in seen:
                    seen.add(nxt)
                    parent[nxt] = (side, node)
                    queue.append(nxt)

    return None


def enumerate_max_matchings(
    g: BipartiteGraph,
    cap: int | None = None,
    start: Matching | None = None,
) -> Iterator[Matching]:
    """Yield every maximum matching of `g` exactly once.

    The first matching yielded is the seed (`start` if given, else the
    deterministic Hopcroft-Karp matching).  With `cap`, at most `cap`
    matchings are yielded.  The empty graph yields the single empty matching.
    """
    if cap is not None and cap < 1:
        raise ValueError("cap must be >= 1")
    seed = start if start is not None else max_matching(g)
    target = max_matching(g).size
    if seed.size != target or any(not g.has_edge(a, r) for a, r in seed.pairs):
        raise ValueError("start is not a maximum matching of the graph")

    # Work stack of (adjacency, matching, forced) sub-problems; forced edges
    # are re-attached on output.  Sibling order keeps the seed matching first.
    adjacency = {a: g.adjacency[a] for a in range(g.n_agents)}
    stack = [(adjacency, seed.agent_to_resource(), ())]
    yielded = 0
    emitted: set[tuple[tuple[int, int], ...]] = set()
    while stack:
        adj, match_agent, forced = stack.pop()
        match_resource = {r: a for a, r in match_agent.items()}
        component = _find_exchange(adj, match_agent, match_resource)
        if component is None:
            m = Matching(tuple(forced) + tuple(match_agent.items()))
            if m.pairs in emitted:  # the split precludes this; belt and braces
                continue
            emitted.add(m.pairs)
            yield m
            yielded += 1
            if cap is not None and yielded >= cap:
                return
            continue

        current_pairs = set(match_agent.items())
        swapped = dict(current_pairs ^ set(component))
        pivot_a, pivot_r = min(set(component) & current_pairs)

        # Branch B: maximum matchings avoiding the pivot edge.
        adj_without = dict(adj)
        adj_without[pivot_a] = tuple(
            r for r in adj[pivot_a] if r != pivot_r
        )
        stack.append((adj_without, swapped, forced))

        # Branch A: maximum matchings containing the pivot edge (pushed last
        # so it is explored first and the seed matching comes out first).
        adj_with = {
            a: tuple(r for r in row if r != pivot_r)
            for a, row in adj.items()
            if a != pivot_a
        }
        kept = {a: r for a, r in match_agent.items() if a != pivot_a}
        stack.append((adj_with, kept, forced + ((pivot_a, pivot_r),)))


def count_max_matchings_containing(
    g: BipartiteGraph, agent: int, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> tuple[int, int]:
    """Exact (total, containing-`agent`) maximum matching counts.

    Exponential-time by nature; refuses to enumerate past `budget` matchings.
    """
    if not 0 <= agent < g.n_agents:
        raise ValueError(f"agent index {agent} out of range")
    total = 0
    containing = 0
    for m in enumerate_max_matchings(g):
        total += 1
        if total > budget:
            raise EnumerationBudgetExceeded(
                f"enumeration budget exceeded: more than {budget} maximum matchings"
            )
        if m.covers_agent(agent):
            containing += 1
    return total, containing


def brute_force_max_matchings(g: BipartiteGraph) -> list[Matching]:
    """All maximum matchings by exhaustive backtracking, in sorted order.

    Independent of the exchange enumerator and of Hopcroft-Karp: the maximum
    size is itself established by the recursion.  Guarded to small graphs.
    """
    if g.n_agents + g.n_resources > BRUTE_FORCE_NODE_LIMIT:
        raise ValueError(
            f"graph too large for brute force ({g.n_agents + g.n_resources} nodes, "
            f"limit {BRUTE_FORCE_NODE_LIMIT})"
        )

    best_size = 0

    def search_size(agent: int, used: set[int], size: int) -> None:
        nonlocal best_size
        if agent == g.n_agents:
            best_size = max(best_size, size)
            return
        if size + (g.n_agents - agent) <= best_size:
            return  # cannot beat the best found so far
        for r in g.adjacency[agent]:
            if r not in used:
                used.add(r)
                search_size(agent + 1, used, size + 1)
                used.remove(r)
        search_size(agent + 1, used, size)

    search_size(0, set(), 0)

    found: list[Matching] = []

    def collect(agent: int, used: set[int], chosen: list[tuple[int, int]]) -> None:
        if len(chosen) + (g.n_agents - agent) < best_size:
            return
        if agent == g.n_agents:
            if len(chosen) == best_size:
                found.append(Matching(tuple(chosen)))
            return
        for r in g.adjacency[agent]:
            if r not in used:
                used.add(r)
                chosen.append((agent, r))
                collect(agent + 1, used, chosen)
                chosen.pop()
                used.remove(r)
        collect(agent + 1, used, chosen)

    collect(0, set(), [])
    return sorted(found, key=lambda m: m.pairs)

"""Bipartite compatibility graphs, maximum matching, and the
even/odd/unreachable node classification.

Agents and resources are dense 0-based indices.  Graphs are immutable:
relaxations produce derived graphs that share all untouched adjacency rows,
so building many one-row variants of a large graph stays cheap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence


class Label(str, Enum):
    """Node class under alternating-path reachability from free nodes."""

    EVEN = "even"
    ODD = "odd"
    UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class BipartiteGraph:
    """Agent/resource graph stored as sorted per-agent adjacency rows.

    The agent-side adjacency is the single source of truth; the resource-side
    view is derived on demand.
    """

    n_agents: int
    n_resources: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n_agents < 0 or self.n_resources < 0:
            raise ValueError("node counts must be non-negative")
        if len(self.adjacency) != self.n_agents:
            raise ValueError(
                f"adjacency has {len(self.adjacency)} rows for {self.n_agents} agents"
            )
        rows = []
        for agent, row in enumerate(self.adjacency):
            # keep already-normalized tuples intact so derived graphs share rows
            if isinstance(row, tuple) and all(
                row[i] < row[i + 1] for i in range(len(row) - 1)
            ):
                unique = row
            else:
                unique = tuple(sorted(set(row)))
                if len(unique) != len(tuple(row)):
                    raise ValueError(
                        f"duplicate resource in adjacency of agent {agent}"
                    )
            if unique and (unique[0] < 0 or unique[-1] >= self.n_resources):
                raise ValueError(f"resource index out of range for agent {agent}")
            rows.append(unique)
        object.__setattr__(self, "adjacency", tuple(rows))

    @classmethod
    def from_edges(
        cls, n_agents: int, n_resources: int, edges: Iterable[tuple[int, int]]
    ) -> "BipartiteGraph":
        rows: list[list[int]] = [[] for _ in range(n_agents)]
        for agent, resource in edges:
            if not 0 <= agent < n_agents:
                raise ValueError(f"agent index {agent} out of range")
            rows[agent].append(resource)
        return cls(n_agents, n_resources, tuple(tuple(sorted(set(r))) for r in rows))

    def has_edge(self, agent: int, resource: int) -> bool:
        return resource in self.adjacency[agent]

    def edges(self) -> Iterator[tuple[int, int]]:
        for agent, row in enumerate(self.adjacency):
            for resource in row:
                yield agent, resource

    @property
    def n_edges(self) -> int:
        return sum(len(row) for row in self.adjacency)

    def resource_adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Derived resource -> agents view (agents sorted ascending)."""
        rows: list[list[int]] = [[] for _ in range(self.n_resources)]
        for agent, resource in self.edges():
            rows[resource].append(agent)
        return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class Matching:
    """A set of disjoint agent-resource pairs, kept sorted by agent index.

    The sorted tuple is the canonical form: two matchings are equal (and hash
    equal) iff they contain the same pairs.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        ordered = tuple(sorted(tuple(p) for p in self.pairs))
        agents = [a for a, _ in ordered]
        resources = [r for _, r in ordered]
        if len(set(agents)) != len(agents):
            raise ValueError("an agent appears twice in the matching")
        if len(set(resources)) != len(resources):
            raise ValueError("a resource appears twice in the matching")
        object.__setattr__(self, "pairs", ordered)

    @property
    def size(self) -> int:
        return len(self.pairs)

    def agent_to_resource(self) -> dict[int, int]:
        return dict(self.pairs)

    def covers_agent(self, agent: int) -> bool:
        return any(a == agent for a, _ in self.pairs)

    def resource_of(self, agent: int) -> int | None:
        for a, r in self.pairs:
            if a == agent:
                return r
        return None


@dataclass(frozen=True)
class DmLabels:
    """Even/odd/unreachable classification of every node.

    The partition is a property of the graph alone: any maximum matching
    yields the same labels.
    """

    agent_labels: tuple[Label, ...]
    resource_labels: tuple[Label, ...]

    def count(self, label: Label) -> int:
        return sum(1 for l in self.agent_labels if l is label) + sum(
            1 for l in self.resource_labels if l is label
        )


def max_matching(g: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching via Hopcroft-Karp.

    Deterministic for a fixed input: free agents are processed in ascending
    index and adjacency rows are sorted, so ties in the BFS/DFS layering are
    always broken the same way.
    """
    INF = float("inf")
    match_agent = [-1] * g.n_agents
    match_resource = [-1] * g.n_resources
    dist: list[float] = [0.0] * g.n_agents

    def bfs() -> float:
        queue: deque[int] = deque()
        for a in range(g.n_agents):
            if match_agent[a] < 0:
                dist[a] = 0
                queue.append(a)
            else:
                dist[a] = INF
        dist_nil = INF
        while queue:
            a = queue.popleft()
            if dist[a] >= dist_nil:
                continue
            for r in g.adjacency[a]:
                b = match_resource[r]
                if b < 0:
                    if dist_nil == INF:
                        dist_nil = dist[a] + 1
                elif dist[b] == INF:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        return dist_nil

    def dfs(a: int, dist_nil: float) -> bool:
        for r in g.adjacency[a]:
            b = match_resource[r]
            if b < 0:
                if dist[a] + 1 != dist_nil:
                    continue
            elif dist[b] != dist[a] + 1 or not dfs(b, dist_nil):
                continue
            match_agent[a] = r
            match_resource[r] = a
            return True
        dist[a] = INF
        return False

    while True:
        dist_nil = bfs()
        if dist_nil == INF:
            break
        for a in range(g.n_agents):
            if match_agent[a] < 0:
                dfs(a, dist_nil)

    return Matching(tuple((a, r) for a, r in enumerate(match_agent) if r >= 0))


def _check_matching(g: BipartiteGraph, m: Matching) -> None:
    for a, r in m.pairs:
        if not 0 <= a < g.n_agents:
            raise ValueError(f"agent {a} out of range")
        if not g.has_edge(a, r):
            raise ValueError(f"pair ({a}, {r}) is not an edge of the graph")


def dm_decompose(g: BipartiteGraph, m: Matching) -> DmLabels:
    """Classify nodes by alternating-path reachability from free nodes.

    A node is even (odd) when some alternating path of even (odd) length from
    an unmatched node reaches it; unmatched nodes are even via the length-0
    path.  Rejects a non-maximum matching: an augmenting path would leave an
    edge between two even nodes, which cannot happen for a maximum matching.
    """
    _check_matching(g, m)
    match_agent: dict[int, int] = m.agent_to_resource()
    match_resource = {r: a for a, r in m.pairs}
    r_adj = g.resource_adjacency()

    # even_*/odd_* record parity-tagged reachability; a node may carry both
    # tags only when the matching is not maximum.
    even_a = [False] * g.n_agents
    odd_a = [False] * g.n_agents
    even_r = [False] * g.n_resources
    odd_r = [False] * g.n_resources

    queue: deque[tuple[str, int, bool]] = deque()
    for a in range(g.n_agents):
        if a not in match_agent:
            even_a[a] = True
            queue.append(("a", a, True))
    for r in range(g.n_resources):
        if r not in match_resource:
            even_r[r] = True
            queue.append(("r", r, True))

    while queue:
        side, node, even = queue.popleft()
        if even:
            # extend along non-matching edges
            if side == "a":
                for r in g.adjacency[node]:
                    if match_agent.get(node) != r and not odd_r[r]:
                        odd_r[r] = True
                        queue.append(("r", r, False))
            else:
                for a in r_adj[node]:
                    if match_resource.get(node) != a and not odd_a[a]:
                        odd_a[a] = True
                        queue.append(("a", a, False))
        else:
            # extend along the unique matching edge
            if side == "a":
                r = match_agent.get(node)
                if r is not None and not even_r[r]:
                    even_r[r] = True
                    queue.append(("r", r, True))
            else:
                a = match_resource.get(node)
                if a is not None and not even_a[a]:
                    even_a[a] = True
                    queue.append(("a", a, True))

    for a, r in g.edges():
        if even_a[a] and even_r[r]:
            raise ValueError(
                "matching is not maximum: an augmenting path exists "
                f"(even-even edge between agent {a} and resource {r})"
            )

    def label(even: bool, odd: bool) -> Label:
        if even:
            return Label.EVEN
        if odd:
            return Label.ODD
        return Label.UNREACHABLE

    return DmLabels(
        tuple(label(even_a[a], odd_a[a]) for a in range(g.n_agents)),
        tuple(label(even_r[r], odd_r[r]) for r in range(g.n_resources)),
    )


def dm_labels(g: BipartiteGraph) -> DmLabels:
    """Convenience wrapper: compute a maximum matching, then decompose."""
    return dm_decompose(g, max_matching(g))


def add_agent_edges(
    g: BipartiteGraph, agent: int, resources: Iterable[int] | Sequence[int]
) -> BipartiteGraph:
    """Return a new graph with edges from `agent` to `resources` added.

    Adding an existing edge is a no-op; the input graph is never mutated and
    all other adjacency rows are shared with it.
    """
    if not 0 <= agent < g.n_agents:
        raise ValueError(f"agent index {agent} out of range")
    extra = set(resources)
    for r in extra:
        if not 0 <= r < g.n_resources:
            raise ValueError(f"resource index {r} out of range")
    if extra.issubset(g.adjacency[agent]):
        return g
    row = tuple(sorted(extra.union(g.adjacency[agent])))
    adjacency = g.adjacency[:agent] + (row,) + g.adjacency[agent + 1 :]
    return BipartiteGraph(g.n_agents, g.n_resources, adjacency)

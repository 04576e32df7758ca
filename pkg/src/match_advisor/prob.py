"""Probability that a given agent is matched in a random maximum matching.

Three routes are provided: exact enumeration (a rational number), sampling by
randomly permuting the agents before running Hopcroft-Karp, and the sampled
route extended with exchange-enumeration steps.  The permuted-HK sampler is
the production estimator but it is NOT uniform over maximum matchings; any
result that depends on the uniform distribution (optimality guarantees, the
block-decomposition identity below) holds for the exact route only.  Solvers
therefore take the probability oracle as a parameter.

All sampling is reproducible: sample `i` of a run seeded with `s` uses the
64-bit seed `mix_seed(s, i)` (SplitMix64 finalizer over `s + (i+1) * golden
gamma`), so results do not depend on how samples are distributed across
workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import islice
from typing import Iterable, Sequence

from .bigraph import BipartiteGraph, Matching, add_agent_edges, max_matching
from .matchenum import (
    DEFAULT_ENUMERATION_BUDGET,
    count_max_matchings_containing,
    enumerate_max_matchings,
)

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix_seed(seed: int, index: int) -> int:
    """Derive the per-sample seed: SplitMix64(seed + (index+1) * 0x9E3779B97F4A7C15)."""
    z = (seed + (index + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class SplitMix64:
    """Tiny deterministic 64-bit generator; enough for shuffles and draws."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def randrange(self, n: int) -> int:
        # rejection sampling keeps the draw exactly uniform
        span = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < span:
                return v % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]


class Method(str, Enum):
    EXACT_ENUMERATION = "exact"
    PERMUTATION_SAMPLING = "sample"
    HK_UNO = "hkuno"
    BLOCK_FORMULA = "block"


@dataclass(frozen=True)
class ProbEstimate:
    """A probability value plus how it was obtained.

    For exact enumeration, `exact` carries the rational value and `value` is
    its float view; `samples` is then the number of matchings enumerated.
    """

    value: float
    samples: int
    method: Method
    exact: Fraction | None = None

    def __post_init__(self) -> None:
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"probability {self.value} outside [0, 1]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    @property
    def exact_or_value(self) -> Fraction | float:
        return self.exact if self.exact is not None else self.value

    def to_dict(self) -> dict:
        out: dict = {
            "value": self.value,
            "samples": self.samples,
            "method": self.method.value,
        }
        if self.exact is not None:
            out["numerator"] = self.exact.numerator
            out["denominator"] = self.exact.denominator
        return out


def sample_max_matching(g: BipartiteGraph, seed: int) -> Matching:
    """One maximum matching from a uniformly random agent permutation.

    The agents are shuffled, Hopcroft-Karp runs on the relabelled graph, and
    the permutation is inverted on the result.  Same seed, same matching.
    """
    perm = list(range(g.n_agents))
    SplitMix64(seed).shuffle(perm)
    permuted = BipartiteGraph(
        g.n_agents, g.n_resources, tuple(g.adjacency[perm[i]] for i in range(g.n_agents))
    )
    m = max_matching(permuted)
    return Matching(tuple((perm[a], r) for a, r in m.pairs))


def estimate_probability(
    g: BipartiteGraph, agent: int, n_samples: int, seed: int
) -> ProbEstimate:
    """Fraction of sampled maximum matchings that cover `agent`."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    hits = 0
    for i in range(n_samples):
        if sample_max_matching(g, mix_seed(seed, i)).covers_agent(agent):
            hits += 1
    return ProbEstimate(hits / n_samples, n_samples, Method.PERMUTATION_SAMPLING)


def hkuno_estimate(
    g: BipartiteGraph,
    agent: int,
    theta_hk: int,
    theta_u: int,
    seed: int,
) -> ProbEstimate:
    """Estimate from theta_hk permuted-HK draws, each extended by theta_u
    exchange-enumeration steps, for theta_hk * (theta_u + 1) matchings total.

    When a draw's exchange search exhausts the distinct maximum matchings
    early, the enumerated ones are recycled round-robin so every draw still
    contributes exactly theta_u + 1 samples.
    """
    if theta_hk < 1:
        raise ValueError("theta_hk must be >= 1")
    if theta_u < 0:
        raise ValueError("theta_u must be >= 0")
    per_draw = theta_u + 1
    hits = 0
    for i in range(theta_hk):
        seeded = sample_max_matching(g, mix_seed(seed, i))
        if theta_u == 0:
            matchings = [seeded]
        else:
            matchings = list(
                islice(enumerate_max_matchings(g, cap=per_draw, start=seeded), per_draw)
            )
        for j in range(per_draw):
            if matchings[j % len(matchings)].covers_agent(agent):
                hits += 1
    n = theta_hk * per_draw
    return ProbEstimate(hits / n, n, Method.HK_UNO)


def exact_probability(
    g: BipartiteGraph, agent: int, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> ProbEstimate:
    """Exact share of maximum matchings covering `agent`, as a rational."""
    total, containing = count_max_matchings_containing(g, agent, budget=budget)
    frac = Fraction(containing, total)
    return ProbEstimate(float(frac), total, Method.EXACT_ENUMERATION, exact=frac)


@dataclass(frozen=True)
class BlockProbabilities:
    """Per-block matching probabilities of one agent in the fully relaxed graph.

    `blocks` are disjoint sets of resources that always become compatible
    together.  `unmatched_prob` is the probability the agent is matched to no
    resource at all; `block_probs[i]` the probability it is matched into
    `blocks[i]`.  Mass on resources outside every block (already-compatible
    ones) is implicit: the entries may sum to less than 1.
    """

    blocks: tuple[frozenset[int], ...]
    unmatched_prob: Fraction | float
    block_probs: tuple[Fraction | float, ...]
    method: Method

    def __post_init__(self) -> None:
        if len(self.block_probs) != len(self.blocks):
            raise ValueError("one probability per block required")
        seen: set[int] = set()
        for block in self.blocks:
            if seen & block:
                raise ValueError("blocks must be pairwise disjoint")
            seen |= block
        total = self.unmatched_prob + sum(self.block_probs)
        if not -1e-9 <= float(total) <= 1 + 1e-9:
            raise ValueError("block probabilities must sum to at most 1")


def block_probability(
    bp: BlockProbabilities, active: Iterable[int]
) -> Fraction | float:
    """Probability of being matched once exactly the `active` blocks are open.

    Computes restricted-mass / (unmatched-mass + restricted-mass); the events
    of matching into distinct blocks are disjoint because a matched agent has
    exactly one resource.  Exact inputs give an exact rational back.
    """
    active = set(active)
    for idx in active:
        if not 0 <= idx < len(bp.blocks):
            raise ValueError(f"block index {idx} out of range")
    numerator = sum(bp.block_probs[i] for i in sorted(active))
    denominator = bp.unmatched_prob + numerator
    if numerator == 0:
        if bp.unmatched_prob > 0:
            return Fraction(0) if isinstance(bp.unmatched_prob, Fraction) else 0.0
        raise ValueError(
            "block probability undefined: no unmatched mass and no active block mass"
        )
    return numerator / denominator


def precompute_block_probabilities(
    g: BipartiteGraph,
    agent: int,
    blocks: Sequence[Iterable[int]],
    method: Method = Method.EXACT_ENUMERATION,
    seed: int = 0,
    n_samples: int = 1000,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> BlockProbabilities:
    """Open every block at once and measure where `agent` lands.

    Blocks must be disjoint sets of resources currently incompatible with
    `agent`, and opening all of them must keep the maximum matching size
    unchanged; a block that would grow the matching makes the agent certain
    to be matched and the decomposition pointless, so it is rejected.
    """
    frozen = tuple(frozenset(b) for b in blocks)
    seen: set[int] = set()
    for block in frozen:
        if not block:
            raise ValueError("empty block")
        if seen & block:
            raise ValueError("overlapping blocks")
        seen |= block
        for r in block:
            if g.has_edge(agent, r):
                raise ValueError(f"resource {r} is already compatible with the agent")
    relaxed = add_agent_edges(g, agent, seen)
    if max_matching(relaxed).size != max_matching(g).size:
        raise ValueError(
            "opening the blocks increases the maximum matching size; "
            "the agent is then always matched and the decomposition does not apply"
        )

    def block_of(resource: int) -> int | None:
        for i, block in enumerate(frozen):
            if resource in block:
                return i
        return None

    if method is Method.EXACT_ENUMERATION:
        total = 0
        unmatched = 0
        counts = [0] * len(frozen)
        for m in enumerate_max_matchings(relaxed):
            total += 1
            if total > budget:
                raise ValueError("enumeration budget exceeded")
            r = m.resource_of(agent)
            if r is None:
                unmatched += 1
            else:
                idx = block_of(r)
                if idx is not None:
                    counts[idx] += 1
        return BlockProbabilities(
            frozen,
            Fraction(unmatched, total),
            tuple(Fraction(c, total) for c in counts),
            Method.EXACT_ENUMERATION,
        )
    if method is Method.PERMUTATION_SAMPLING:
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        unmatched = 0
        counts = [0] * len(frozen)
        for i in range(n_samples):
            m = sample_max_matching(relaxed, mix_seed(seed, i))
            r = m.resource_of(agent)
            if r is None:
                unmatched += 1
            else:
                idx = block_of(r)
                if idx is not None:
                    counts[idx] += 1
        return BlockProbabilities(
            frozen,
            unmatched / n_samples,
            tuple(c / n_samples for c in counts),
            Method.PERMUTATION_SAMPLING,
        )
    raise ValueError(f"unsupported method for block precomputation: {method}")

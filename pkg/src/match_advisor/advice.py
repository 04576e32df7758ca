"""The restriction/relaxation data model.

An advice instance couples a compatibility graph with one special agent, its
removable restrictions (each with a positive cost), and the incompatibility
set: for every resource that could be made compatible, the minimal restriction
sets whose removal achieves that.  Removing a set A of restrictions makes a
resource compatible iff some listed requirement set is contained in A.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .bigraph import BipartiteGraph, add_agent_edges


class InvalidInstanceError(ValueError):
    """An advice instance violates its structural invariants."""

    def __init__(self, violations: Iterable[str]):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


class IncompatibilityType(str, Enum):
    SINGLE_CHOICE_SINGLE_RESTRICTION = "sc-sr"
    MULTI_CHOICE_SINGLE_RESTRICTION = "mc-sr"
    SINGLE_CHOICE_MULTI_RESTRICTION = "sc-mr"
    MULTI_CHOICE_MULTI_RESTRICTION = "mc-mr"
    THRESHOLD_LIKE = "threshold"


def as_cost(value) -> Fraction:
    """Costs are exact: ints, decimal strings, or fractions; never floats read raw."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)  # accepts "3", "1.5", and "3/2"
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"non-integral float cost {value}; pass a string instead")
        return Fraction(int(value))
    raise TypeError(f"unsupported cost type {type(value)!r}")


@dataclass(frozen=True)
class Restriction:
    """A removable restriction; threshold-like ones also carry (block, rank).

    Within a block, ranks run 1..t with rank t the cheapest first relaxation
    step; a feasible removal is always a suffix of the rank order.
    """

    id: int
    cost: Fraction
    block: int | None = None
    rank: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cost", as_cost(self.cost))
        if self.cost <= 0:
            raise ValueError(f"restriction {self.id}: cost must be positive")
        if (self.block is None) != (self.rank is None):
            raise ValueError(
                f"restriction {self.id}: block and rank must be given together"
            )


@dataclass(frozen=True)
class IncompatibilitySet:
    """Ordered (resource, required restriction ids) pairs.

    Storage order is significant: scenario detection scans pairs in this
    order and returns the first qualifying witness.
    """

    pairs: tuple[tuple[int, frozenset[int]], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "pairs",
            tuple((int(y), frozenset(req)) for y, req in self.pairs),
        )

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def resources(self) -> set[int]:
        return {y for y, _ in self.pairs}

    def pairs_for(self, resource: int) -> list[frozenset[int]]:
        return [req for y, req in self.pairs if y == resource]


@dataclass(frozen=True)
class AdviceInstance:
    graph: BipartiteGraph
    special_agent: int
    restrictions: tuple[Restriction, ...]
    incompatibility: IncompatibilitySet
    type_hint: IncompatibilityType | None = None
    _by_id: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "restrictions", tuple(self.restrictions))
        object.__setattr__(self, "_by_id", {r.id: r for r in self.restrictions})
        if len(self._by_id) != len(self.restrictions):
            raise ValueError("duplicate restriction ids")

    def restriction(self, rid: int) -> Restriction:
        try:
            return self._by_id[rid]
        except KeyError:
            raise KeyError(f"unknown restriction id {rid}") from None

    def restriction_ids(self) -> list[int]:
        return sorted(self._by_id)

    def blocks(self) -> dict[int, list[Restriction]]:
        """Block index -> restrictions sorted by rank (threshold-like only)."""
        out: dict[int, list[Restriction]] = {}
        for r in self.restrictions:
            if r.block is not None:
                out.setdefault(r.block, []).append(r)
        for members in out.values():
            members.sort(key=lambda r: r.rank)
        return out


def apply_relaxation(inst: AdviceInstance, removed: Iterable[int]) -> BipartiteGraph:
    """Graph after removing the given restrictions.

    A resource gains the edge to the special agent iff one of its listed
    requirement sets is fully contained in `removed`.
    """
    removed = frozenset(removed)
    for rid in removed:
        inst.restriction(rid)
    opened = {y for y, req in inst.incompatibility if req <= removed}
    return add_agent_edges(inst.graph, inst.special_agent, opened)


def relaxation_cost(inst: AdviceInstance, removed: Iterable[int]) -> Fraction:
    return sum((inst.restriction(rid).cost for rid in removed), Fraction(0))


def _suffix_ok(inst: AdviceInstance, requires: frozenset[int]) -> bool:
    """Per block, a requirement set must contain every rank above its lowest."""
    by_block: dict[int, set[int]] = {}
    for rid in requires:
        r = inst.restriction(rid)
        if r.block is None:
            return False
        by_block.setdefault(r.block, set()).add(r.rank)
    blocks = inst.blocks()
    for block, ranks in by_block.items():
        top = max(r.rank for r in blocks[block])
        if ranks != set(range(min(ranks), top + 1)):
            return False
    return True


def _minimality_violations(inst: AdviceInstance) -> list[str]:
    out = []
    by_resource: dict[int, list[frozenset[int]]] = {}
    for y, req in inst.incompatibility:
        by_resource.setdefault(y, []).append(req)
    for y, reqs in sorted(by_resource.items()):
        for i, a in enumerate(reqs):
            for b in reqs[i + 1 :]:
                if a < b or b < a or a == b:
                    out.append(
                        f"resource {y}: requirement sets {sorted(a)} and {sorted(b)} "
                        "violate minimality"
                    )
    return out


def classify(inst: AdviceInstance) -> IncompatibilityType:
    """Classification order: threshold-like first (it is a special case of
    multi-choice-multi-restriction), then by choice and requirement counts.

    A malformed incompatibility set (minimality violation) is an error, not a
    silent classification.
    """
    bad = _minimality_violations(inst)
    if bad:
        raise InvalidInstanceError(bad)
    pairs = inst.incompatibility.pairs
    if all(r.block is not None for r in inst.restrictions) and all(
        _suffix_ok(inst, req) for _, req in pairs
    ):
        return IncompatibilityType.THRESHOLD_LIKE
    per_resource: dict[int, int] = {}
    for y, _ in pairs:
        per_resource[y] = per_resource.get(y, 0) + 1
    single_choice = all(n == 1 for n in per_resource.values())
    single_restriction = all(len(req) == 1 for _, req in pairs)
    if single_restriction:
        return (
            IncompatibilityType.SINGLE_CHOICE_SINGLE_RESTRICTION
            if single_choice
            else IncompatibilityType.MULTI_CHOICE_SINGLE_RESTRICTION
        )
    if single_choice:
        return IncompatibilityType.SINGLE_CHOICE_MULTI_RESTRICTION
    return IncompatibilityType.MULTI_CHOICE_MULTI_RESTRICTION


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_instance(inst: AdviceInstance) -> ValidationReport:
    """Collect every structural violation; an empty report means valid."""
    out: list[str] = []
    g = inst.graph
    if not 0 <= inst.special_agent < g.n_agents:
        out.append(f"special agent index {inst.special_agent} out of range")
        return ValidationReport(tuple(out))
    for r in inst.restrictions:
        if r.cost <= 0:
            out.append(f"restriction {r.id}: cost must be positive")
    known = set(inst.restriction_ids())
    for y, req in inst.incompatibility:
        if not 0 <= y < g.n_resources:
            out.append(f"incompatibility pair: resource {y} out of range")
            continue
        if not req:
            out.append(
                f"resource {y}: empty requirement set (the resource should "
                "simply be compatible)"
            )
        unknown = sorted(set(req) - known)
        if unknown:
            out.append(f"resource {y}: unknown restriction ids {unknown}")
        if g.has_edge(inst.special_agent, y):
            out.append(f"resource {y} is already compatible with the special agent")
    out.extend(_minimality_violations(inst))

    with_block = [r for r in inst.restrictions if r.block is not None]
    if with_block and len(with_block) != len(inst.restrictions):
        out.append(
            "mixed restriction styles: threshold blocks and free-standing "
            "restrictions cannot coexist in one instance"
        )
    if with_block:
        for block, members in sorted(inst.blocks().items()):
            ranks = [r.rank for r in members]
            if ranks != list(range(1, len(ranks) + 1)):
                out.append(
                    f"block {block}: ranks {ranks} are not a contiguous 1..t ordering"
                )
        if inst.type_hint is IncompatibilityType.THRESHOLD_LIKE:
            for y, req in inst.incompatibility:
                if set(req) <= known and req and not _suffix_ok(inst, req):
                    out.append(
                        f"resource {y}: requirement set {sorted(req)} breaks the "
                        "per-block suffix property"
                    )
    return ValidationReport(tuple(out))


def normalize(inst: AdviceInstance) -> AdviceInstance:
    """Drop duplicate and dominated incompatibility pairs (minimality repair).

    Validation never repairs silently; call this explicitly when a dataset is
    known to carry redundant pairs.
    """
    kept: list[tuple[int, frozenset[int]]] = []
    by_resource: dict[int, list[frozenset[int]]] = {}
    for y, req in inst.incompatibility:
        by_resource.setdefault(y, []).append(req)
    seen: set[tuple[int, frozenset[int]]] = set()
    for y, req in inst.incompatibility:
        if (y, req) in seen:
            continue
        if any(other < req for other in by_resource[y]):
            continue
        seen.add((y, req))
        kept.append((y, req))
    return replace(inst, incompatibility=IncompatibilitySet(tuple(kept)))


def activation_blocks(inst: AdviceInstance) -> list[frozenset[int]]:
    """Group the listed resources by identical activation condition.

    Two resources whose requirement-set collections are equal become
    compatible under exactly the same removals, so any relaxation opens all
    of such a group or none of it -- the block property the probability
    decomposition needs.  Blocks are ordered by smallest member resource.
    """
    by_resource: dict[int, set[frozenset[int]]] = {}
    for y, req in inst.incompatibility:
        by_resource.setdefault(y, set()).add(req)
    groups: dict[frozenset[frozenset[int]], set[int]] = {}
    for y, reqs in by_resource.items():
        groups.setdefault(frozenset(reqs), set()).add(y)
    return sorted((frozenset(v) for v in groups.values()), key=min)


def active_block_indices(
    inst: AdviceInstance, blocks: Iterable[frozenset[int]], removed: Iterable[int]
) -> set[int]:
    """Indices of blocks whose resources become compatible after `removed`."""
    removed = frozenset(removed)
    opened = {y for y, req in inst.incompatibility if req <= removed}
    out = set()
    for i, block in enumerate(blocks):
        if block <= opened:
            out.add(i)
        elif block & opened:
            raise ValueError(f"block {i} split by the relaxation; not a valid block")
    return out

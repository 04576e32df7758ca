"""Instance generation, dataset ingestion, and the instance file format.

Two synthetic families are provided: Erdos-Renyi compatibility graphs with
randomly drawn restriction sets (the evaluation workhorse), and the
max-coverage reduction instances whose optimum probability is known in closed
form.  Threshold-like instances are ingested from a pair of CSV files
describing resources and agents; schema-compatible synthetic stand-ins of the
real course-classroom and vacation-activity datasets can be generated at
matching dimensions, since the originals are not redistributable.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .advice import (
    AdviceInstance,
    IncompatibilitySet,
    IncompatibilityType,
    InvalidInstanceError,
    Restriction,
    as_cost,
    validate_instance,
)
from .bigraph import BipartiteGraph


class ChoiceMode(str, Enum):
    MULTI_CHOICE_SINGLE_RESTRICTION = "mcsr"
    SINGLE_CHOICE_MULTI_RESTRICTION = "scmr"


class CostScheme(str, Enum):
    COST_I = "cost1"  # uniform: every rank costs 1
    COST_II = "cost2"  # linear: s-th removed rank costs s


def cost_scheme_eval(scheme: CostScheme, depth: int) -> int:
    """Cost of removing the top `depth` ranks of one block under a scheme."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if scheme is CostScheme.COST_I:
        return depth
    if scheme is CostScheme.COST_II:
        return depth * (depth + 1) // 2
    raise ValueError(f"unknown cost scheme {scheme}")


def gen_er_instance(
    n_agents: int,
    n_resources: int,
    edge_prob: float,
    n_restrictions: int,
    max_restr_per_resource: int,
    choice_mode: ChoiceMode = ChoiceMode.MULTI_CHOICE_SINGLE_RESTRICTION,
    seed: int = 0,
    min_restr_per_resource: int = 0,
) -> AdviceInstance:
    """Random bipartite graph plus an appended advice-seeking agent.

    Base agents get independent edges with probability `edge_prob`.  The
    special agent starts with no edges; each resource draws a random
    restriction subset which becomes its route(s) to compatibility -- one
    singleton pair per drawn restriction in multi-choice mode, one combined
    pair in single-choice mode.  An empty draw makes the resource directly
    compatible instead.  All costs are 1.
    """
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge_prob must be in [0, 1]")
    if n_restrictions < 1 or n_agents < 1 or n_resources < 1:
        raise ValueError("counts must be >= 1")
    if not 0 <= min_restr_per_resource <= max_restr_per_resource:
        raise ValueError("need 0 <= min_restr_per_resource <= max_restr_per_resource")
    rng = random.Random(seed)
    edges = [
        (a, r)
        for a in range(n_agents)
        for r in range(n_resources)
        if rng.random() < edge_prob
    ]
    special = n_agents
    pairs: list[tuple[int, frozenset[int]]] = []
    cap = min(max_restr_per_resource, n_restrictions)
    low = min(min_restr_per_resource, cap)
    for y in range(n_resources):
        k = rng.randint(low, cap)
        drawn = sorted(rng.sample(range(n_restrictions), k))
        if not drawn:
            edges.append((special, y))
        elif choice_mode is ChoiceMode.MULTI_CHOICE_SINGLE_RESTRICTION:
            pairs.extend((y, frozenset({rid})) for rid in drawn)
        else:
            pairs.append((y, frozenset(drawn)))
    graph = BipartiteGraph.from_edges(n_agents + 1, n_resources, edges)
    hint = (
        IncompatibilityType.MULTI_CHOICE_SINGLE_RESTRICTION
        if choice_mode is ChoiceMode.MULTI_CHOICE_SINGLE_RESTRICTION
        else IncompatibilityType.SINGLE_CHOICE_MULTI_RESTRICTION
    )
    return AdviceInstance(
        graph=graph,
        special_agent=special,
        restrictions=tuple(Restriction(i, Fraction(1)) for i in range(n_restrictions)),
        incompatibility=IncompatibilitySet(tuple(pairs)),
        type_hint=hint,
    )


def gen_maxcov_instance(
    universe_size: int,
    family: Sequence[Iterable[int]],
    q: int,
    t: int,
) -> tuple[AdviceInstance, int, Fraction]:
    """The max-coverage reduction: agents x_0..x_{r-1} plus the advice seeker.

    Identity edges pin a unique maximum matching of size r.  Removing the
    restriction for family set i opens edges to the resources indexed by its
    elements; covering c elements yields c+1 maximum matchings with c
    containing the seeker, i.e. probability c/(c+1).  Returns the instance,
    the budget q, and the target probability t/(t+1).
    """
    if not family:
        raise ValueError("family must be non-empty")
    if universe_size < 1:
        raise ValueError("universe_size must be >= 1")
    sets = []
    for i, f in enumerate(family):
        fs = frozenset(int(u) for u in f)
        if any(not 0 <= u < universe_size for u in fs):
            raise ValueError(f"family set {i} has elements outside the universe")
        sets.append(fs)
    special = universe_size
    edges = [(i, i) for i in range(universe_size)]
    pairs = [
        (u, frozenset({i})) for i, f in enumerate(sets) for u in sorted(f)
    ]
    inst = AdviceInstance(
        graph=BipartiteGraph.from_edges(universe_size + 1, universe_size, edges),
        special_agent=special,
        restrictions=tuple(Restriction(i, Fraction(1)) for i in range(len(sets))),
        incompatibility=IncompatibilitySet(tuple(pairs)),
        type_hint=IncompatibilityType.MULTI_CHOICE_SINGLE_RESTRICTION,
    )
    return inst, q, Fraction(t, t + 1)


# --------------------------------------------------------------------------
# Threshold CSV ingestion
# --------------------------------------------------------------------------

RESOURCE_COLUMNS = ["id", "capacity", "region", "physical_access", "hearing_access"]
RESOURCE_OPTIONAL = ["zoom", "extra_chairs"]
AGENT_COLUMNS = ["id", "min_capacity", "region_prefs", "needs_physical", "needs_hearing"]
AGENT_OPTIONAL = ["needs_zoom"]


class SchemaError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _parse_bool(raw: str, path, line) -> bool:
    lowered = raw.strip().lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise SchemaError(path, line, f"expected true/false, got {raw!r}")


def _parse_int(raw: str, what: str, path, line) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise SchemaError(path, line, f"non-numeric {what}: {raw!r}") from None


@dataclass
class _ResourceRow:
    id: str
    capacity: int
    region: int
    physical: bool
    hearing: bool
    zoom: bool | None
    extra_chairs: int


@dataclass
class _AgentRow:
    id: str
    min_capacity: int
    region_prefs: list[int]
    needs_physical: bool
    needs_hearing: bool
    needs_zoom: bool


def _read_rows(path, required, optional):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(path, 1, f"missing columns: {missing}")
        has_optional = all(c in header for c in optional)
        rows = list(reader)
    return rows, has_optional


def _load_resources(path) -> tuple[list[_ResourceRow], bool]:
    rows, extended = _read_rows(path, RESOURCE_COLUMNS, RESOURCE_OPTIONAL)
    out = []
    for i, row in enumerate(rows):
        line = i + 2  # header is line 1
        out.append(
            _ResourceRow(
                id=row["id"].strip(),
                capacity=_parse_int(row["capacity"], "capacity", path, line),
                region=_parse_int(row["region"], "region", path, line),
                physical=_parse_bool(row["physical_access"], path, line),
                hearing=_parse_bool(row["hearing_access"], path, line),
                zoom=_parse_bool(row["zoom"], path, line) if extended else None,
                extra_chairs=(
                    _parse_int(row["extra_chairs"], "extra_chairs", path, line)
                    if extended
                    else 0
                ),
            )
        )
    return out, extended


def _load_agents(path) -> tuple[list[_AgentRow], bool]:
    rows, extended = _read_rows(path, AGENT_COLUMNS, AGENT_OPTIONAL)
    out = []
    for i, row in enumerate(rows):
        line = i + 2
        prefs_raw = row["region_prefs"].strip()
        prefs: list[int] = []
        if prefs_raw:
            for token in prefs_raw.split(";"):
                prefs.append(_parse_int(token, "region preference", path, line))
        if len(set(prefs)) != len(prefs):
            raise SchemaError(path, line, f"duplicate region preference in {prefs}")
        out.append(
            _AgentRow(
                id=row["id"].strip(),
                min_capacity=_parse_int(row["min_capacity"], "min_capacity", path, line),
                region_prefs=prefs,
                needs_physical=_parse_bool(row["needs_physical"], path, line),
                needs_hearing=_parse_bool(row["needs_hearing"], path, line),
                needs_zoom=_parse_bool(row["needs_zoom"], path, line) if extended else False,
            )
        )
    return out, extended


def _base_compatible(agent: _AgentRow, res: _ResourceRow, zoom_mode: bool) -> bool:
    if res.capacity < agent.min_capacity:
        return False
    if agent.region_prefs and res.region != agent.region_prefs[0]:
        return False
    if agent.needs_physical and not res.physical:
        return False
    if agent.needs_hearing and not res.hearing:
        return False
    if zoom_mode and agent.needs_zoom and not res.zoom:
        return False
    return True


def load_threshold_csv(
    resources_path,
    agents_path,
    cost_scheme: CostScheme,
    agent_id: str,
    capacity_step: int = 10,
) -> AdviceInstance:
    """Build a threshold-like instance for one agent from the CSV pair.

    Every attribute the chosen agent restricts becomes an ordered block whose
    ranks are relaxation steps (rank t = the mildest step).  A resource
    incompatible with the agent gets one requirement set per way of fixing it:
    without the optional zoom/chairs columns that is the single union of the
    per-attribute rank suffixes; with them, chair additions trade off against
    capacity steps and portable equipment against the zoom requirement, which
    multiplies the choices.  Compatibility edges for all other agents are
    taken at their own stated restrictions.
    """
    if capacity_step < 1:
        raise ValueError("capacity_step must be >= 1")
    resources, res_extended = _load_resources(resources_path)
    agents, ag_extended = _load_agents(agents_path)
    if not resources:
        raise SchemaError(resources_path, 2, "no resource rows")
    if not agents:
        raise SchemaError(agents_path, 2, "no agent rows")
    zoom_mode = res_extended and ag_extended
    try:
        special = next(i for i, a in enumerate(agents) if a.id == agent_id)
    except StopIteration:
        raise ValueError(f"agent id {agent_id!r} not found in {agents_path}") from None
    me = agents[special]

    edges = [
        (i, j)
        for i, agent in enumerate(agents)
        for j, res in enumerate(resources)
        if _base_compatible(agent, res, zoom_mode)
    ]
    graph = BipartiteGraph.from_edges(len(agents), len(resources), edges)

    def capacity_deficit(res: _ResourceRow) -> int:
        if res.capacity >= me.min_capacity:
            return 0
        gap = me.min_capacity - res.capacity
        return -(-gap // capacity_step)  # ceil

    max_cap_deficit = max((capacity_deficit(r) for r in resources), default=0)
    max_chairs = (
        min(max((r.extra_chairs for r in resources), default=0), max_cap_deficit)
        if zoom_mode
        else 0
    )

    # blocks in a fixed attribute order; sizes of zero are omitted
    block_sizes: list[tuple[str, int]] = []
    if max_cap_deficit > 0:
        block_sizes.append(("capacity", max_cap_deficit))
    if len(me.region_prefs) > 1:
        block_sizes.append(("region", len(me.region_prefs) - 1))
    if me.needs_physical and any(not r.physical for r in resources):
        block_sizes.append(("physical", 1))
    if me.needs_hearing and any(not r.hearing for r in resources):
        block_sizes.append(("hearing", 1))
    if zoom_mode and me.needs_zoom and any(not r.zoom for r in resources):
        block_sizes.append(("zoom_need", 1))
        block_sizes.append(("portable_zoom", 1))
    if max_chairs > 0:
        block_sizes.append(("chairs", max_chairs))

    restrictions: list[Restriction] = []
    suffix_ids: dict[str, list[list[int]]] = {}
    next_id = 0
    for block_index, (name, size) in enumerate(block_sizes):
        ids = []
        for rank in range(1, size + 1):
            cost = 1 if cost_scheme is CostScheme.COST_I else size - rank + 1
            restrictions.append(
                Restriction(next_id, Fraction(cost), block=block_index, rank=rank)
            )
            ids.append(next_id)
            next_id += 1
        # suffix n = ids of the top n ranks (depth-n relaxation)
        suffix_ids[name] = [ids[size - n :] for n in range(size + 1)]
    block_names = [name for name, _ in block_sizes]

    def suffix(name: str, depth: int) -> list[int]:
        return suffix_ids[name][depth]

    pairs: list[tuple[int, frozenset[int]]] = []
    for j, res in enumerate(resources):
        if _base_compatible(me, res, zoom_mode):
            continue
        # per-attribute lists of alternative fixes; None marks an unfixable one
        alternatives: list[list[list[int]]] = []
        unfixable = False

        d_cap = capacity_deficit(res)
        if d_cap > 0:
            options = []
            chair_cap = min(res.extra_chairs, max_chairs) if zoom_mode else 0
            for chairs in range(0, min(d_cap, chair_cap) + 1):
                options.append(suffix("capacity", d_cap - chairs) + suffix("chairs", chairs)
                               if chairs else suffix("capacity", d_cap))
            alternatives.append(options)
        if me.region_prefs and res.region != me.region_prefs[0]:
            if res.region not in me.region_prefs:
                unfixable = True
            else:
                depth = me.region_prefs.index(res.region)
                alternatives.append([suffix("region", depth)])
        if me.needs_physical and not res.physical:
            if "physical" not in block_names:
                unfixable = True
            else:
                alternatives.append([suffix("physical", 1)])
        if me.needs_hearing and not res.hearing:
            if "hearing" not in block_names:
                unfixable = True
            else:
                alternatives.append([suffix("hearing", 1)])
        if zoom_mode and me.needs_zoom and not res.zoom:
            if "zoom_need" not in block_names:
                unfixable = True
            else:
                alternatives.append([suffix("zoom_need", 1), suffix("portable_zoom", 1)])
        if unfixable or not alternatives:
            continue  # no relaxation opens this resource

        combos: list[frozenset[int]] = [frozenset()]
        for options in alternatives:
            combos = [
                combo | frozenset(opt) for combo in combos for opt in options
            ]
        seen: set[frozenset[int]] = set()
        for combo in combos:
            if combo not in seen:
                seen.add(combo)
                pairs.append((j, combo))

    inst = AdviceInstance(
        graph=graph,
        special_agent=special,
        restrictions=tuple(restrictions),
        incompatibility=IncompatibilitySet(tuple(pairs)),
        type_hint=IncompatibilityType.THRESHOLD_LIKE,
    )
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report.violations)
    return inst


STANDIN_PRESETS = {
    # dimensions mirror the real datasets this loader was built for
    "cocl": {"n_agents": 154, "n_resources": 144, "zoom_chairs": False},
    "cocl-zc": {"n_agents": 154, "n_resources": 144, "zoom_chairs": True},
    "passvac": {"n_agents": 603, "n_resources": 249, "zoom_chairs": False},
}


def gen_threshold_standin(
    resources_path,
    agents_path,
    n_agents: int,
    n_resources: int,
    seed: int = 0,
    zoom_chairs: bool = False,
) -> None:
    """Write a synthetic stand-in dataset in the threshold CSV schema.

    These files are NOT the original datasets; they only match their
    dimensions and attribute ranges so that the loading and solving pipeline
    can be exercised end to end.
    """
    rng = random.Random(seed)
    regions = list(range(1, 9))
    with open(resources_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        header = list(RESOURCE_COLUMNS)
        if zoom_chairs:
            header += RESOURCE_OPTIONAL
        writer.writerow(header)
        for j in range(n_resources):
            row = [
                f"room{j}",
                rng.randrange(16, 271),
                rng.choice(regions),
                str(rng.random() < 0.7).lower(),
                str(rng.random() < 0.7).lower(),
            ]
            if zoom_chairs:
                row += [str(rng.random() < 0.5).lower(), rng.randrange(0, 4)]
            writer.writerow(row)
    with open(agents_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        header = list(AGENT_COLUMNS)
        if zoom_chairs:
            header += AGENT_OPTIONAL
        writer.writerow(header)
        for i in range(n_agents):
            n_prefs = rng.randint(1, 3)
            prefs = rng.sample(regions, n_prefs)
            row = [
                f"course{i}",
                rng.randrange(2, 13) * 10,
                ";".join(str(p) for p in prefs),
                str(rng.random() < 0.1).lower(),
                str(rng.random() < 0.1).lower(),
            ]
            if zoom_chairs:
                row.append(str(rng.random() < 0.3).lower())
            writer.writerow(row)


# --------------------------------------------------------------------------
# Instance JSON round trip
# --------------------------------------------------------------------------


def _cost_to_json(cost: Fraction):
    if cost.denominator == 1:
        return cost.numerator
    scaled = cost * Fraction(10) ** 12
    if scaled.denominator == 1:  # terminating decimal
        text = f"{float(cost):.12f}".rstrip("0").rstrip(".")
        if Fraction(text) == cost:
            return text
    return f"{cost.numerator}/{cost.denominator}"


def instance_to_dict(inst: AdviceInstance) -> dict:
    out = {
        "agents": inst.graph.n_agents,
        "resources": inst.graph.n_resources,
        "edges": [[a, r] for a, r in inst.graph.edges()],
        "special_agent": inst.special_agent,
        "restrictions": [
            {
                "id": r.id,
                "cost": _cost_to_json(r.cost),
                **({"block": r.block, "rank": r.rank} if r.block is not None else {}),
            }
            for r in inst.restrictions
        ],
        "incompatibility": [
            {"resource": y, "requires": sorted(req)}
            for y, req in inst.incompatibility
        ],
    }
    if inst.type_hint is not None:
        out["type_hint"] = inst.type_hint.value
    return out


def instance_from_dict(payload: dict) -> AdviceInstance:
    def require(key, kind, what):
        if key not in payload:
            raise ValueError(f"instance JSON: missing key {key!r}")
        value = payload[key]
        if not isinstance(value, kind):
            raise ValueError(f"instance JSON: {key} must be {what}")
        return value

    n_agents = require("agents", int, "an integer")
    n_resources = require("resources", int, "an integer")
    edges_raw = require("edges", list, "a list")
    edges = []
    for i, e in enumerate(edges_raw):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(v, int) for v in e)
        ):
            raise ValueError(f"instance JSON: edges[{i}] must be an [agent, resource] pair")
        edges.append((e[0], e[1]))
    special = require("special_agent", int, "an integer")
    restrictions = []
    for i, r in enumerate(require("restrictions", list, "a list")):
        if not isinstance(r, dict) or "id" not in r or "cost" not in r:
            raise ValueError(f"instance JSON: restrictions[{i}] needs id and cost")
        try:
            restrictions.append(
                Restriction(
                    int(r["id"]),
                    as_cost(r["cost"]),
                    block=r.get("block"),
                    rank=r.get("rank"),
                )
            )
        except (ValueError, TypeError) as exc:
            raise ValueError(f"instance JSON: restrictions[{i}]: {exc}") from None
    pairs = []
    for i, p in enumerate(require("incompatibility", list, "a list")):
        if not isinstance(p, dict) or "resource" not in p or "requires" not in p:
            raise ValueError(
                f"instance JSON: incompatibility[{i}] needs resource and requires"
            )
        pairs.append((int(p["resource"]), frozenset(int(v) for v in p["requires"])))
    hint = payload.get("type_hint")
    return AdviceInstance(
        graph=BipartiteGraph.from_edges(n_agents, n_resources, edges),
        special_agent=special,
        restrictions=tuple(restrictions),
        incompatibility=IncompatibilitySet(tuple(pairs)),
        type_hint=IncompatibilityType(hint) if hint is not None else None,
    )


def save_instance(inst: AdviceInstance, path) -> None:
    Path(path).write_text(
        json.dumps(instance_to_dict(inst), indent=2) + "\n", encoding="utf-8"
    )


def load_instance(path) -> AdviceInstance:
    """Parse, construct, and validate; any failure reports its location."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{path}: JSON parse error at byte {exc.pos}: {exc.msg}"
        ) from None
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: instance JSON must be an object")
    try:
        inst = instance_from_dict(payload)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError([f"{path}: {v}" for v in report.violations])
    return inst

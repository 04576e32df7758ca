import json
import random
from fractions import Fraction
from itertools import combinations

import pytest

from match_advisor import (
    ExactOracle,
    IncompatibilityType,
    InvalidInstanceError,
    apply_relaxation,
    classify,
    cost_scheme_eval,
    exact_probability,
    exhaustive_relax,
    gen_er_instance,
    gen_maxcov_instance,
    gen_threshold_standin,
    load_instance,
    load_threshold_csv,
    save_instance,
    validate_instance,
)
from match_advisor.data import CostScheme, SchemaError, instance_to_dict


class TestCostScheme:
    def test_uniform(self):
        assert cost_scheme_eval(CostScheme.COST_I, 3) == 3

    def test_linear(self):
        assert cost_scheme_eval(CostScheme.COST_II, 3) == 6

    def test_zero_depth(self):
        assert cost_scheme_eval(CostScheme.COST_I, 0) == 0
        assert cost_scheme_eval(CostScheme.COST_II, 0) == 0


class TestMaxCovReduction:
    def test_two_sets_example(self):
        inst, budget, target = gen_maxcov_instance(3, [[0, 1], [1, 2]], 1, 2)
        assert budget == 1 and target == Fraction(2, 3)
        relaxed = apply_relaxation(inst, {0})
        assert exact_probability(relaxed, inst.special_agent).exact == Fraction(2, 3)

    def test_full_cover_reaches_r_over_r_plus_one(self):
        r = 4
        inst, budget, target = gen_maxcov_instance(r, [list(range(r))], 1, r)
        sol = exhaustive_relax(inst, budget, ExactOracle())
        assert sol.probability.exact == Fraction(r, r + 1) == target

    def test_zero_budget_keeps_probability_zero(self):
        inst, _, _ = gen_maxcov_instance(3, [[0, 1]], 0, 1)
        sol = exhaustive_relax(inst, 0, ExactOracle())
        assert sol.probability.exact == 0

    def test_reduction_equivalence_on_random_instances(self):
        rng = random.Random(19)
        for _ in range(12):
            r = rng.randint(2, 5)
            family = [
                sorted(rng.sample(range(r), rng.randint(1, r)))
                for _ in range(rng.randint(1, 4))
            ]
            q = rng.randint(0, len(family))
            t = rng.randint(1, r)
            inst, budget, target = gen_maxcov_instance(r, family, q, t)
            best_cover = max(
                (
                    len(set().union(*chosen)) if chosen else 0
                    for k in range(q + 1)
                    for chosen in combinations(family, k)
                ),
                default=0,
            )
            sol = exhaustive_relax(inst, budget, ExactOracle())
            assert (best_cover >= t) == (sol.probability.exact >= target)

    def test_rejects_empty_family(self):
        with pytest.raises(ValueError):
            gen_maxcov_instance(3, [], 1, 1)

    def test_rejects_out_of_universe_elements(self):
        with pytest.raises(ValueError):
            gen_maxcov_instance(2, [[3]], 1, 1)


class TestRoundTrip:
    def test_generated_instances_round_trip(self, tmp_path):
        for seed in range(5):
            inst = gen_er_instance(5, 4, 0.3, 4, 2, seed=seed)
            path = tmp_path / f"inst{seed}.json"
            save_instance(inst, path)
            loaded = load_instance(path)
            assert loaded.graph == inst.graph
            assert loaded.special_agent == inst.special_agent
            assert loaded.restrictions == inst.restrictions
            assert loaded.incompatibility == inst.incompatibility

    def test_threshold_instance_round_trips_with_blocks(self, tmp_path):
        from match_advisor import AdviceInstance, BipartiteGraph, IncompatibilitySet, Restriction

        inst = AdviceInstance(
            graph=BipartiteGraph.from_edges(3, 2, [(0, 0), (1, 1)]),
            special_agent=2,
            restrictions=(
                Restriction(0, 2, block=0, rank=1),
                Restriction(1, 1, block=0, rank=2),
            ),
            incompatibility=IncompatibilitySet(((0, frozenset({0, 1})),)),
            type_hint=IncompatibilityType.THRESHOLD_LIKE,
        )
        path = tmp_path / "th.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        assert loaded.restrictions == inst.restrictions
        assert loaded.type_hint is IncompatibilityType.THRESHOLD_LIKE

    def test_fractional_costs_serialize_as_decimal_strings(self, tmp_path):
        from match_advisor import AdviceInstance, BipartiteGraph, IncompatibilitySet, Restriction

        inst = AdviceInstance(
            graph=BipartiteGraph.from_edges(2, 1, [(1, 0)]),
            special_agent=0,
            restrictions=(Restriction(0, "1.5"),),
            incompatibility=IncompatibilitySet(((0, frozenset({0})),)),
        )
        payload = instance_to_dict(inst)
        assert payload["restrictions"][0]["cost"] == "1.5"
        path = tmp_path / "frac.json"
        save_instance(inst, path)
        assert load_instance(path).restrictions[0].cost == Fraction(3, 2)

    def test_malformed_json_reports_offset(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"agents": 2, ', encoding="utf-8")
        with pytest.raises(ValueError, match="byte"):
            load_instance(path)

    def test_schema_violation_reports_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"agents": 2}), encoding="utf-8")
        with pytest.raises(ValueError, match="resources"):
            load_instance(path)

    def test_suffix_violation_fails_validation(self, tmp_path):
        payload = {
            "agents": 2,
            "resources": 2,
            "edges": [[1, 0]],
            "special_agent": 0,
            "restrictions": [
                {"id": 0, "cost": 1, "block": 0, "rank": 1},
                {"id": 1, "cost": 1, "block": 0, "rank": 2},
            ],
            "incompatibility": [{"resource": 1, "requires": [0]}],
            "type_hint": "threshold",
        }
        path = tmp_path / "suffix.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(InvalidInstanceError, match="suffix"):
            load_instance(path)


RESOURCES_CSV = """id,capacity,region,physical_access,hearing_access
roomA,40,1,true,true
roomB,20,1,true,true
roomC,50,2,true,false
roomD,50,3,true,true
"""

AGENTS_CSV = """id,min_capacity,region_prefs,needs_physical,needs_hearing
c0,40,1;2,false,true
c1,30,1,false,false
"""


class TestThresholdLoader:
    def write(self, tmp_path, resources=RESOURCES_CSV, agents=AGENTS_CSV):
        rp = tmp_path / "resources.csv"
        ap = tmp_path / "agents.csv"
        rp.write_text(resources, encoding="utf-8")
        ap.write_text(agents, encoding="utf-8")
        return rp, ap

    def test_exact_capacity_match_is_compatible(self, tmp_path):
        rp, ap = self.write(tmp_path)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")
        # roomA: capacity 40 >= 40, region 1, hearing ok -> compatible
        assert inst.graph.has_edge(0, 0)
        assert 0 not in inst.incompatibility.resources()

    def test_capacity_shortfall_needs_two_rank_suffix(self, tmp_path):
        rp, ap = self.write(tmp_path)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")
        # roomB: capacity 20 against threshold 40 -> two relaxation steps
        reqs = inst.incompatibility.pairs_for(1)
        assert len(reqs) == 1
        blocks = inst.blocks()
        cap_block = blocks[0]
        ranks = sorted(inst.restriction(rid).rank for rid in reqs[0])
        top = max(r.rank for r in cap_block)
        assert ranks == [top - 1, top]
        assert validate_instance(inst).ok
        assert classify(inst) is IncompatibilityType.THRESHOLD_LIKE

    def test_two_violated_attributes_union_into_one_pair(self, tmp_path):
        rp, ap = self.write(tmp_path)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")
        # roomC: region 2 (one step down the preference order) and no hearing
        reqs = inst.incompatibility.pairs_for(2)
        assert len(reqs) == 1
        touched_blocks = {inst.restriction(rid).block for rid in reqs[0]}
        assert len(touched_blocks) == 2

    def test_region_outside_preferences_is_unreachable(self, tmp_path):
        rp, ap = self.write(tmp_path)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")
        # roomD: region 3 is not in c0's preference list at all
        assert inst.incompatibility.pairs_for(3) == []

    def test_cost2_scheme_prices_deeper_ranks_higher(self, tmp_path):
        rp, ap = self.write(tmp_path)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_II, "c0")
        reqs = inst.incompatibility.pairs_for(1)[0]
        from match_advisor import relaxation_cost

        assert relaxation_cost(inst, reqs) == 3  # 1 + 2 for two steps

    def test_unknown_agent_id(self, tmp_path):
        rp, ap = self.write(tmp_path)
        with pytest.raises(ValueError, match="not found"):
            load_threshold_csv(rp, ap, CostScheme.COST_I, "nope")

    def test_missing_column_reports_location(self, tmp_path):
        rp, ap = self.write(tmp_path, resources="id,capacity\nroomA,40\n")
        with pytest.raises(SchemaError, match="missing columns"):
            load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")

    def test_non_numeric_capacity_reports_line(self, tmp_path):
        bad = RESOURCES_CSV.replace("roomB,20", "roomB,wide")
        rp, ap = self.write(tmp_path, resources=bad)
        with pytest.raises(SchemaError, match=":3:"):
            load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")

    def test_bad_boolean_reports_line(self, tmp_path):
        bad = AGENTS_CSV.replace("c1,30,1,false,false", "c1,30,1,false,maybe")
        rp, ap = self.write(tmp_path, agents=bad)
        with pytest.raises(SchemaError, match="true/false"):
            load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")

    def test_zoom_and_chairs_create_alternatives(self, tmp_path):
        resources = (
            "id,capacity,region,physical_access,hearing_access,zoom,extra_chairs\n"
            "roomA,30,1,true,true,false,2\n"
            "roomB,40,1,true,true,true,0\n"
        )
        agents = (
            "id,min_capacity,region_prefs,needs_physical,needs_hearing,needs_zoom\n"
            "c0,40,1,false,false,true\n"
        )
        rp, ap = self.write(tmp_path, resources=resources, agents=agents)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_I, "c0")
        # roomA misses capacity by one step and lacks zoom: the fixes multiply
        # (capacity step or a chair) x (drop the need or bring equipment)
        reqs = inst.incompatibility.pairs_for(0)
        assert len(reqs) == 4
        assert validate_instance(inst).ok
        assert classify(inst) is IncompatibilityType.THRESHOLD_LIKE

    def test_standin_generator_loads_and_validates(self, tmp_path):
        rp = tmp_path / "resources.csv"
        ap = tmp_path / "agents.csv"
        gen_threshold_standin(rp, ap, n_agents=20, n_resources=15, seed=3)
        inst = load_threshold_csv(rp, ap, CostScheme.COST_I, "course0")
        assert validate_instance(inst).ok
        assert inst.graph.n_agents == 20 and inst.graph.n_resources == 15

    def test_standin_deterministic(self, tmp_path):
        first = tmp_path / "a.csv", tmp_path / "b.csv"
        second = tmp_path / "c.csv", tmp_path / "d.csv"
        for rp, ap in (first, second):
            gen_threshold_standin(rp, ap, n_agents=12, n_resources=9, seed=7)
        assert first[0].read_bytes() == second[0].read_bytes()
        assert first[1].read_bytes() == second[1].read_bytes()

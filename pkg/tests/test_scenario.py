import random
from fractions import Fraction

import pytest

import match_advisor.scenario as scenario_mod
from match_advisor import (
    AdviceInstance,
    BipartiteGraph,
    IncompatibilitySet,
    InvalidInstanceError,
    Restriction,
    apply_relaxation,
    detect_scenario,
    exact_probability,
    gen_er_instance,
    max_matching,
)

from conftest import slow_scenario1_check


def graph(n_a, n_r, edges):
    return BipartiteGraph.from_edges(n_a, n_r, edges)


def make(edges, pairs, costs, n_agents, n_resources):
    return AdviceInstance(
        graph=graph(n_agents, n_resources, edges),
        special_agent=0,
        restrictions=tuple(Restriction(rid, c) for rid, c in costs.items()),
        incompatibility=IncompatibilitySet(
            tuple((y, frozenset(req)) for y, req in pairs)
        ),
    )


class TestExamples:
    def test_free_even_resource_is_a_witness(self):
        inst = make([(1, 0)], [(1, [0])], {0: 1}, n_agents=2, n_resources=2)
        result = detect_scenario(inst, 1)
        assert result.scenario1
        assert result.witness == (1, frozenset({0}))

    def test_unreachable_resource_stays_scenario2(self):
        inst = make([(1, 0), (2, 1)], [(0, [0])], {0: 1}, n_agents=3, n_resources=2)
        result = detect_scenario(inst, 1)
        assert not result.scenario1
        assert result.gamma_prime.pairs == ((0, frozenset({0})),)

    def test_budget_filter_empties_gamma_prime(self):
        inst = make([(1, 0), (2, 1)], [(0, [0])], {0: 5}, n_agents=3, n_resources=2)
        result = detect_scenario(inst, 1)
        assert not result.scenario1
        assert result.gamma_prime.pairs == ()

    def test_zero_budget_is_legal(self):
        inst = make([(1, 0)], [(1, [0])], {0: 1}, n_agents=2, n_resources=2)
        result = detect_scenario(inst, 0)
        assert not result.scenario1 and result.gamma_prime.pairs == ()

    def test_negative_budget_rejected(self):
        inst = make([(1, 0)], [(1, [0])], {0: 1}, n_agents=2, n_resources=2)
        with pytest.raises(ValueError):
            detect_scenario(inst, -1)

    def test_invalid_instance_rejected(self):
        inst = make([(1, 0)], [(1, [0]), (1, [0, 1])], {0: 1, 1: 1},
                    n_agents=2, n_resources=2)
        with pytest.raises(InvalidInstanceError):
            detect_scenario(inst, 1)


class TestWitnessSelection:
    def make_two_witness_instance(self):
        # two isolated (free, hence even) resources reachable at costs 3 and 1
        return make(
            [(1, 0)],
            [(1, [0]), (2, [1])],
            {0: 3, 1: 1},
            n_agents=2,
            n_resources=3,
        )

    def test_first_in_storage_order_wins_by_default(self):
        result = detect_scenario(self.make_two_witness_instance(), 5)
        assert result.witness == (1, frozenset({0}))

    def test_min_cost_witness_scans_all(self):
        result = detect_scenario(
            self.make_two_witness_instance(), 5, min_cost_witness=True
        )
        assert result.witness == (2, frozenset({1}))


class TestAgainstSlowOracle:
    def test_agreement_on_random_instances(self):
        rng = random.Random(99)
        for _ in range(80):
            inst = gen_er_instance(
                rng.randint(2, 7),
                rng.randint(1, 6),
                rng.choice([0.2, 0.35, 0.5]),
                rng.randint(1, 5),
                2,
                seed=rng.randrange(2**32),
            )
            budget = rng.randint(0, 3)
            fast = detect_scenario(inst, budget)
            assert fast.scenario1 == slow_scenario1_check(inst, budget)

    def test_witness_reaches_probability_one(self):
        rng = random.Random(7)
        found = 0
        while found < 20:
            inst = gen_er_instance(
                rng.randint(2, 6),
                rng.randint(2, 6),
                rng.choice([0.15, 0.3]),
                rng.randint(1, 4),
                2,
                seed=rng.randrange(2**32),
            )
            result = detect_scenario(inst, 2)
            if not result.scenario1:
                continue
            found += 1
            _, requires = result.witness
            relaxed = apply_relaxation(inst, requires)
            assert exact_probability(relaxed, inst.special_agent).exact == 1

    def test_scenario2_pairs_never_grow_the_matching(self):
        rng = random.Random(31)
        for _ in range(40):
            inst = gen_er_instance(
                rng.randint(2, 6), rng.randint(1, 5), 0.4, 3, 2,
                seed=rng.randrange(2**32),
            )
            result = detect_scenario(inst, 2)
            if result.scenario1:
                continue
            base = max_matching(inst.graph).size
            for y, _ in result.gamma_prime:
                from match_advisor import add_agent_edges

                grown = add_agent_edges(inst.graph, inst.special_agent, {y})
                assert max_matching(grown).size == base


class TestInstrumentation:
    def test_exactly_one_matching_computation(self, monkeypatch):
        calls = {"n": 0}
        real = scenario_mod.max_matching

        def counting(g):
            calls["n"] += 1
            return real(g)

        monkeypatch.setattr(scenario_mod, "max_matching", counting)
        inst = make(
            [(1, 0), (2, 1)],
            [(0, [0]), (1, [1])],
            {0: 1, 1: 1},
            n_agents=3,
            n_resources=3,
        )
        detect_scenario(inst, 2)
        assert calls["n"] == 1

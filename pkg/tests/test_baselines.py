"""First-fit packing and the tour-style resequencer."""

import random
from itertools import permutations

from satplan.baselines import cm_tsp, first_fit_pack, tsp_sequence
from satplan.instance import Instance, ThermalConstraint
from satplan.plan import count_switches, verify

from conftest import rand_dominated


def tour_cost(activities, order):
    masks = [set(a) for a in activities]
    cost = len(masks[order[0]])
    for a, b in zip(order, order[1:]):
        cost += len(masks[a] ^ masks[b])
    return cost


def brute_tour(activities):
    best = None
    for perm in permutations(range(len(activities))):
        c = tour_cost(activities, perm)
        if best is None or c < best:
            best = c
    return best


class TestFirstFit:
    def test_fig1_packs_into_three(self, fig1):
        plan = first_fit_pack(fig1)
        assert plan.allocation == (0, 0, 1, 1, 1, 2, 2, 2)
        assert plan.n_configs == 3
        assert verify(fig1, plan) == []
        assert count_switches(fig1, plan) == 2
        assert plan.activity[0] == frozenset({0, 1, 3, 5})

    def test_opens_new_configuration_only_when_forced(self):
        inst = Instance(
            "tight",
            3,
            (frozenset({0}), frozenset({1}), frozenset({2})),
            (ThermalConstraint(frozenset({0, 1, 2}), 1),),
        )
        plan = first_fit_pack(inst)
        assert plan.allocation == (0, 1, 2)

    def test_reuses_earliest_fit(self):
        inst = Instance(
            "reuse",
            4,
            (frozenset({0}), frozenset({1}), frozenset({0, 1})),
            (ThermalConstraint(frozenset({0, 1}), 2), ThermalConstraint(frozenset({2, 3}), 1)),
        )
        plan = first_fit_pack(inst)
        assert plan.allocation == (0, 0, 0)

    def test_random_family_always_verifies(self):
        rng = random.Random(314)
        for _ in range(80):
            inst = rand_dominated(rng)
            plan = first_fit_pack(inst)
            assert verify(inst, plan) == []


class TestTspSequence:
    def test_empty(self):
        assert tsp_sequence([]) == ((), 0, True)

    def test_single_costs_its_size(self):
        assert tsp_sequence([frozenset({3, 5})]) == ((0,), 2, True)

    def test_fig1_first_fit_tour(self, fig1):
        order, cost, exact = tsp_sequence(first_fit_pack(fig1).activity)
        assert exact
        assert cost == 12
        assert sorted(order) == [0, 1, 2]

    def test_dp_matches_brute_force(self):
        rng = random.Random(77)
        for _ in range(60):
            c = rng.randint(2, 6)
            acts = [
                frozenset(u for u in range(5) if rng.random() < 0.5) for _ in range(c)
            ]
            order, cost, exact = tsp_sequence(acts)
            assert exact
            assert len(set(order)) == c
            assert tour_cost(acts, order) == cost
            assert cost == brute_tour(acts)

    def test_local_search_beyond_limit(self):
        rng = random.Random(401)
        acts = [frozenset(u for u in range(6) if rng.random() < 0.5) for _ in range(5)]
        order, cost, exact = tsp_sequence(acts, exact_limit=3)
        assert not exact
        assert len(set(order)) == 5
        assert tour_cost(acts, order) == cost
        # the heuristic may not be optimal but must not beat the optimum
        assert cost >= brute_tour(acts)


class TestCmTsp:
    def test_fig1_reordering(self, fig1):
        plan, exact = cm_tsp(fig1)
        assert exact
        assert plan.allocation == (2, 2, 1, 1, 1, 0, 0, 0)
        assert verify(fig1, plan) == []
        assert count_switches(fig1, plan) == 2

    def test_keeps_first_fit_configuration_count(self):
        rng = random.Random(653)
        for _ in range(60):
            inst = rand_dominated(rng)
            packed = first_fit_pack(inst)
            plan, _ = cm_tsp(inst)
            assert plan.n_configs == packed.n_configs
            assert verify(inst, plan) == []

    def test_never_reorders_single_configuration(self):
        inst = Instance(
            "one",
            2,
            (frozenset({0}), frozenset({1})),
            (ThermalConstraint(frozenset({0, 1}), 2),),
        )
        plan, exact = cm_tsp(inst)
        assert exact
        assert plan.allocation == (0, 0)

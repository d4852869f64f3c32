import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import best_objective_bruteforce, random_closed_legs
from tnfpga.circuit import build_test_circuit, ghz_circuit
from tnfpga.network import circuit_to_network
from tnfpga.paths import (
    ContractionPath,
    CostReport,
    PathError,
    SearchBudget,
    anneal_temperature,
    enumerate_paths,
    greedy_search,
    leg_map,
    objective,
    path_cost,
    select_path,
    sequential_path,
    stochastic_search,
    validate_path,
)


def chain(*dims):
    """Closed chain: node i holds bonds i-1 and i; ends carry a single bond."""
    n = len(dims) + 1
    legs = {}
    for i in range(n):
        l = []
        if i > 0:
            l.append((f"b{i - 1}", dims[i - 1]))
        if i < n - 1:
            l.append((f"b{i}", dims[i]))
        legs[i] = l
    return legs


def three_matrices():
    return {0: [("i", 2), ("j", 2)], 1: [("j", 2), ("k", 2)], 2: [("k", 2), ("l", 2)]}


class TestPathCost:
    def test_two_matrices(self):
        legs = {0: [("i", 2), ("k", 2)], 1: [("k", 2), ("j", 2)]}
        cost = path_cost(legs, ContractionPath(((0, 1),)))
        assert cost.total_flops == 8
        assert cost.peak_elems == 4
        assert cost.peak_order == 2
        assert cost.steps == 1

    def test_three_matrix_chain(self):
        cost = path_cost(three_matrices(), ContractionPath(((0, 1), (3, 2))))
        assert cost.total_flops == 16

    def test_ghz_recount(self):
        tn = circuit_to_network(ghz_circuit(3), "000")
        path = greedy_search(tn)
        # independent recount on plain id sets
        live = {nid: {leg.id: leg.dim for leg in t.legs} for nid, t in tn.nodes.items()}
        nxt = max(live) + 1
        flops, peak_e, peak_o, total = 0, 0, 0, 0
        for a, b in path.steps:
            la, lb = live.pop(a), live.pop(b)
            union = {**la, **lb}
            flops += int(np.prod(list(union.values())))
            out = {i: d for i, d in union.items() if (i in la) != (i in lb)}
            e = int(np.prod(list(out.values()))) if out else 1
            peak_e, peak_o, total = max(peak_e, e), max(peak_o, len(out)), total + e
            live[nxt] = out
            nxt += 1
        cost = path_cost(tn, path)
        assert (cost.total_flops, cost.peak_elems, cost.peak_order, cost.total_elems) == (flops, peak_e, peak_o, total)


class TestValidity:
    def test_reused_node(self):
        with pytest.raises(PathError) as e:
            validate_path(three_matrices(), ContractionPath(((0, 1), (0, 2))))
        assert e.value.step == 1

    def test_unknown_node(self):
        with pytest.raises(PathError) as e:
            validate_path(three_matrices(), ContractionPath(((0, 9),)))
        assert e.value.step == 0

    def test_incomplete(self):
        with pytest.raises(PathError):
            validate_path(three_matrices(), ContractionPath(((0, 1),)))

    def test_self_pair(self):
        with pytest.raises(PathError):
            validate_path(three_matrices(), ContractionPath(((1, 1), (0, 2))))

    def test_json(self):
        p = ContractionPath(((0, 1), (3, 2)))
        assert json.loads(p.dumps()) == {"steps": [[0, 1], [3, 2]]}
        assert ContractionPath.loads(p.dumps()) == p
        with pytest.raises(PathError):
            ContractionPath.from_dict({"steps": [[0, 1, 2]]})


class TestGreedy:
    def test_two_nodes(self):
        legs = {0: [("a", 2)], 1: [("a", 2)]}
        assert greedy_search(legs).steps == ((0, 1),)

    def test_prefers_smaller_intermediate(self):
        legs = {0: [("a", 2)], 1: [("a", 2), ("b", 4)], 2: [("b", 4)]}
        path = greedy_search(legs)
        assert path.steps[0] == (1, 2)
        scored = [(path_cost(legs, p).objective(), p.steps[0]) for p in enumerate_paths(legs)]
        best = min(scored)[0]
        assert path_cost(legs, path).objective() == best
        # the other first move is strictly worse
        assert all(obj > best for obj, first in scored if set(first) == {0, 1})

    def test_test_circuit_beats_sequential(self):
        tn = circuit_to_network(build_test_circuit(4, 1, seed=0), "0000")
        g = greedy_search(tn)
        validate_path(tn, g)
        gc, sc = path_cost(tn, g), path_cost(tn, sequential_path(tn))
        assert gc.objective() <= sc.objective()
        assert gc.total_flops <= sc.total_flops

    def test_deterministic(self):
        tn = circuit_to_network(build_test_circuit(6, 2, seed=1), "0" * 6)
        assert greedy_search(tn) == greedy_search(tn)

    def test_disconnected_fallback(self):
        legs = {0: [("a", 2)], 1: [("a", 2)], 2: [("b", 3)], 3: [("b", 3)]}
        path = greedy_search(legs)
        validate_path(legs, path)
        assert path.steps[:2] == ((0, 1), (2, 3))


class TestStochastic:
    def test_single_sample_is_greedy(self):
        tn = circuit_to_network(build_test_circuit(4, 2, seed=3), "0101")
        res = stochastic_search(tn, SearchBudget(None, 1, 0))
        assert res.path == greedy_search(tn)
        assert res.samples_evaluated == 1

    def test_zero_budget_returns_greedy(self):
        tn = circuit_to_network(build_test_circuit(4, 1, seed=3), "0000")
        assert stochastic_search(tn, SearchBudget(None, 0, 0)).path == greedy_search(tn)

    def test_deterministic(self):
        tn = circuit_to_network(build_test_circuit(6, 2, seed=5), "0" * 6)
        a = stochastic_search(tn, SearchBudget(None, 80, 17))
        b = stochastic_search(tn, SearchBudget(None, 80, 17))
        assert a.path == b.path and a.history == b.history

    def test_monotone_history(self):
        tn = circuit_to_network(build_test_circuit(6, 2, seed=5), "0" * 6)
        res = stochastic_search(tn, SearchBudget(None, 120, 2))
        assert len(res.history) == res.samples_evaluated == 120
        assert all(x >= y for x, y in zip(res.history, res.history[1:]))
        assert res.history[-1] == res.cost.objective()

    def test_wall_clock_budget(self):
        tn = circuit_to_network(build_test_circuit(4, 1, seed=0), "0000")
        ticks = iter(range(10**6))
        res = stochastic_search(tn, SearchBudget(5.0, None, 0), clock=lambda: next(ticks))
        validate_path(tn, res.path)
        assert res.samples_evaluated >= 1

    def test_weighted_mode_runs(self):
        tn = circuit_to_network(build_test_circuit(4, 1, seed=0), "0000")
        res = stochastic_search(tn, SearchBudget(None, 20, 0), mode="weighted")
        validate_path(tn, res.path)

    def test_exhaustive_small(self):
        legs = chain(2, 3, 2, 4, 2)
        res = stochastic_search(legs, SearchBudget(None, 1, 0), exhaustive=True)
        assert res.cost.objective() == best_objective_bruteforce(legs)

    def test_temperature_schedule(self):
        assert anneal_temperature(0, 10) == 0
        temps = [anneal_temperature(s, 10) for s in range(1, 11)]
        assert temps[0] == 1.0 and temps[-1] == pytest.approx(0.05)
        assert all(a > b for a, b in zip(temps, temps[1:]))


@settings(max_examples=40, deadline=None)
@given(n_nodes=st.integers(2, 8), n_edges=st.integers(1, 12), seed=st.integers(0, 2**31))
def test_search_paths_always_valid(n_nodes, n_edges, seed):
    legs = random_closed_legs(np.random.default_rng(seed), n_nodes, n_edges)
    for path in (greedy_search(legs), stochastic_search(legs, SearchBudget(None, 5, seed)).path):
        validate_path(legs, path)
        assert len(path) == n_nodes - 1


@settings(max_examples=25, deadline=None)
@given(n_nodes=st.integers(2, 6), n_edges=st.integers(1, 8), seed=st.integers(0, 2**31))
def test_exhaustive_finds_optimum(n_nodes, n_edges, seed):
    legs = random_closed_legs(np.random.default_rng(seed), n_nodes, n_edges)
    res = stochastic_search(legs, SearchBudget(None, 1, 0), exhaustive=True)
    assert res.cost.objective() == best_objective_bruteforce(legs)


class TestSelect:
    def test_single(self):
        p = ContractionPath(((0, 1),))
        assert select_path([(p, CostReport(8, 4, 2, 1))]) is p

    def test_order_dominates_flops(self):
        a, b = ContractionPath(((0, 1),)), ContractionPath(((1, 0),))
        cands = [(a, CostReport(10, 64, 8, 5)), (b, CostReport(10_000, 64, 6, 5))]
        assert select_path(cands) is b

    def test_tie_breaks_by_index(self):
        a, b = ContractionPath(((0, 1),)), ContractionPath(((1, 0),))
        c = CostReport(1, 1, 1, 1)
        assert select_path([(a, c), (b, c)]) is a

    def test_empty(self):
        with pytest.raises(ValueError):
            select_path([])

    def test_weighted_objective(self):
        c = CostReport(16, 4, 2, 3)
        assert objective(c, "weighted")[0] == pytest.approx(4 * 2 + 2 + 4)
        with pytest.raises(ValueError):
            objective(c, "nope")


def test_leg_map_from_network():
    tn = circuit_to_network(ghz_circuit(2), "00")
    m = leg_map(tn)
    assert m[0] == (("q0.0", 2),)
    assert set(m) == set(tn.nodes)

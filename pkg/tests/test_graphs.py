"""Graph primitives: construction rules, membership algebra, connectivity."""

import numpy as np
import pytest

from openavg.graphs import (
    DigraphInstance,
    directed_cycle,
    generate_instance_family,
    is_strongly_connected,
    membership_sets,
    out_neighbors,
    random_out_degree_instance,
    remaining_out_neighbors,
    strongly_connected_components,
    union_digraph,
)


def g(nodes, edges):
    return DigraphInstance(nodes=frozenset(nodes), edges=frozenset(edges))


class TestDigraphInstance:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            g({0, 1}, {(0, 0)})

    def test_rejects_dangling_edge(self):
        with pytest.raises(ValueError):
            g({0, 1}, {(0, 2)})

    def test_restriction_drops_outside_edges(self):
        full = g({0, 1, 2}, {(0, 1), (1, 2), (2, 0)})
        sub = full.restricted_to(frozenset({0, 1}))
        assert sub.nodes == {0, 1}
        assert sub.edges == {(0, 1)}

    def test_restriction_to_disjoint_set_is_empty(self):
        full = g({0, 1}, {(0, 1)})
        sub = full.restricted_to(frozenset({5}))
        assert sub.nodes == set()
        assert sub.edges == set()


class TestMembership:
    def test_partition(self):
        m = membership_sets(frozenset({1, 2, 3}), frozenset({2, 3, 4}))
        assert m.remaining == {2, 3}
        assert m.arriving == {4}
        assert m.departing == {1}

    def test_no_change(self):
        m = membership_sets(frozenset({1, 2}), frozenset({1, 2}))
        assert m.remaining == {1, 2}
        assert not m.arriving and not m.departing

    def test_full_turnover(self):
        m = membership_sets(frozenset({1}), frozenset({2}))
        assert not m.remaining
        assert m.arriving == {2}
        assert m.departing == {1}


class TestNeighbors:
    def test_out_neighbors(self):
        inst = g({0, 1, 2}, {(0, 1), (0, 2), (1, 0)})
        assert out_neighbors(inst, 0) == {1, 2}
        assert out_neighbors(inst, 1) == {0}
        assert out_neighbors(inst, 2) == set()

    def test_unknown_node(self):
        with pytest.raises(KeyError):
            out_neighbors(g({0}, set()), 3)

    def test_remaining_filter(self):
        inst = g({0, 1, 2, 3}, {(0, 1), (0, 2), (0, 3)})
        m = membership_sets(frozenset({0, 1, 2, 3}), frozenset({0, 1}))
        assert remaining_out_neighbors(inst, 0, m) == {1}


class TestUnion:
    def test_merges_edges(self):
        a = g({0, 1, 2}, {(0, 1)})
        b = g({0, 1, 2}, {(1, 2)})
        assert union_digraph([a, b]).edges == {(0, 1), (1, 2)}

    def test_rejects_mixed_node_sets(self):
        with pytest.raises(ValueError):
            union_digraph([g({0, 1}, set()), g({0, 2}, set())])

    def test_rejects_empty_family(self):
        with pytest.raises(ValueError):
            union_digraph([])


def _reachable_from(inst: DigraphInstance, start: int) -> set[int]:
    """Plain BFS, the reference for connectivity checks."""
    seen = {start}
    frontier = [start]
    while frontier:
        v = frontier.pop()
        for a, b in inst.edges:
            if a == v and b not in seen:
                seen.add(b)
                frontier.append(b)
    return seen


def brute_force_strongly_connected(inst: DigraphInstance) -> bool:
    return all(_reachable_from(inst, v) == inst.nodes for v in inst.nodes)


class TestConnectivity:
    def test_single_node(self):
        assert is_strongly_connected(g({7}, set()))

    def test_empty_graph_undefined(self):
        with pytest.raises(ValueError):
            is_strongly_connected(g(set(), set()))

    def test_two_cycle(self):
        assert is_strongly_connected(g({0, 1}, {(0, 1), (1, 0)}))

    def test_one_way_pair(self):
        assert not is_strongly_connected(g({0, 1}, {(0, 1)}))

    def test_chain_components(self):
        inst = g({0, 1, 2}, {(0, 1), (1, 2)})
        comps = strongly_connected_components(inst)
        assert sorted(map(sorted, comps)) == [[0], [1], [2]]

    def test_ring_is_one_component(self):
        ring = directed_cycle(range(5))
        comps = strongly_connected_components(ring)
        assert comps == [frozenset(range(5))]

    def test_two_rings_bridged_one_way(self):
        edges = {(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)}
        comps = strongly_connected_components(g({0, 1, 2, 3}, edges))
        assert sorted(map(sorted, comps)) == [[0, 1], [2, 3]]

    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(20240817)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            density = float(rng.random())
            nodes = frozenset(range(n))
            edges = frozenset(
                (a, b)
                for a in range(n)
                for b in range(n)
                if a != b and rng.random() < density
            )
            inst = DigraphInstance(nodes=nodes, edges=edges)
            assert is_strongly_connected(inst) == brute_force_strongly_connected(inst)

    def test_deep_path_does_not_recurse(self):
        n = 3000
        edges = {(i, i + 1) for i in range(n - 1)} | {(n - 1, 0)}
        assert is_strongly_connected(g(range(n), edges))


class TestGenerators:
    def test_out_degree_floor(self):
        rng = np.random.default_rng(5)
        inst = random_out_degree_instance(range(10), 3, rng)
        for v in range(10):
            assert len(out_neighbors(inst, v)) >= 3

    def test_degree_capped_at_n_minus_one(self):
        rng = np.random.default_rng(5)
        inst = random_out_degree_instance(range(3), 10, rng)
        for v in range(3):
            assert out_neighbors(inst, v) == frozenset(range(3)) - {v}

    def test_single_node_instance(self):
        inst = random_out_degree_instance([4], 2, np.random.default_rng(0))
        assert inst.nodes == {4} and not inst.edges

    def test_same_seed_same_instance(self):
        a = random_out_degree_instance(range(8), 2, np.random.default_rng(123))
        b = random_out_degree_instance(range(8), 2, np.random.default_rng(123))
        assert a == b

    def test_directed_cycle_shape(self):
        ring = directed_cycle([3, 1, 2])
        assert ring.edges == {(1, 2), (2, 3), (3, 1)}
        assert directed_cycle([9]).edges == frozenset()

    def test_family_union_strongly_connected(self):
        for seed in range(12):
            rng = np.random.default_rng(seed)
            fam = generate_instance_family(range(12), count=4, min_out_degree=1, rng=rng)
            assert len(fam) == 4
            assert is_strongly_connected(union_digraph(fam))

    def test_family_ring_fallback(self):
        # One attempt with out-degree 1 on 40 nodes almost never yields a
        # strongly connected union; the fallback must still deliver one.
        rng = np.random.default_rng(2)
        fam = generate_instance_family(
            range(40), count=1, min_out_degree=1, rng=rng, max_attempts=1
        )
        assert is_strongly_connected(union_digraph(fam))

    def test_family_rejects_empty(self):
        with pytest.raises(ValueError):
            generate_instance_family(range(3), count=0, min_out_degree=1,
                                     rng=np.random.default_rng(0))

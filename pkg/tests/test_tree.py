"""Tests for the metric-tree module.

The component search in MetricTree.components is checked against a
brute-force union-find oracle; the subtree decomposition against hand
counts on the six-edge reference tree.
"""

import numpy as np
import pytest

from qtree.tree import (MetricTree, TreeError, validate_tree, load_tree,
                        split_at_vertex, decompose_at_parent,
                        two_tier_tree, star_tree, interval_tree)


def brute_components(tree, edges, removed_vertex=None):
    """Union-find oracle for edge-connected components."""
    edges = sorted(edges)
    parent = {j: j for j in edges}

    def find(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    for a in edges:
        for b in edges:
            if a < b:
                va = set(tree.edge_vertices(a)) - {removed_vertex}
                vb = set(tree.edge_vertices(b)) - {removed_vertex}
                if va & vb:
                    parent[find(a)] = find(b)
    groups = {}
    for j in edges:
        groups.setdefault(find(j), set()).add(j)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def random_tree(rng, m):
    parents = [int(rng.integers(j + 1, m + 2)) for j in range(1, m)] + [m + 1]
    # root may touch only e_m: re-point any other edge aimed at the root
    for i in range(m - 1):
        if parents[i] == m + 1:
            parents[i] = m
    lengths = rng.uniform(0.5, 2.0, size=m).tolist()
    return validate_tree({"m": m, "parents": parents, "lengths": lengths})


class TestValidation:
    def test_two_tier_shape(self):
        t = two_tier_tree()
        assert t.m == 6
        assert t.root == 7
        assert t.boundary == (1, 2, 3, 4, 7)
        assert t.boundary_nonroot == (1, 2, 3, 4)
        assert t.internal == (5, 6)
        assert t.b == 5
        assert t.total_length == 6.0
        assert t.degree[5] == 4 and t.degree[6] == 3

    def test_interval(self):
        t = interval_tree(2.5)
        assert t.b == 2
        assert t.boundary == (1, 2)
        assert t.total_length == 2.5

    def test_star_boundary_count(self):
        # center is internal, so a star with m edges has b = m
        t = star_tree(5)
        assert t.b == 5
        assert t.internal == (5,)

    def test_cycle_detected(self):
        with pytest.raises(TreeError, match="cycle detected"):
            validate_tree({"m": 2, "parents": [2, 1], "lengths": [1, 1]})

    def test_orphan_vertex(self):
        with pytest.raises(TreeError, match="orphan vertex"):
            validate_tree({"m": 2, "parents": [5, 3], "lengths": [1, 1]})

    def test_nonpositive_length(self):
        with pytest.raises(TreeError, match="non-positive length"):
            validate_tree({"m": 1, "parents": [2], "lengths": [0.0]})

    def test_root_degree(self):
        with pytest.raises(TreeError, match="root degree"):
            validate_tree({"m": 2, "parents": [3, 3], "lengths": [1, 1]})

    def test_missing_field(self):
        with pytest.raises(TreeError, match="missing field"):
            validate_tree({"m": 1, "parents": [2]})

    def test_length_mismatch(self):
        with pytest.raises(TreeError, match="arrays must have length"):
            validate_tree({"m": 2, "parents": [3, 3, 4], "lengths": [1, 1]})


class TestIO:
    def test_load_tree_roundtrip(self, tmp_path):
        path = tmp_path / "tree.json"
        path.write_text('{"m": 6, "parents": [6, 5, 5, 5, 6, 7],'
                        ' "lengths": [1, 1, 1, 1, 1, 1]}')
        assert load_tree(path) == two_tier_tree()

    def test_load_tree_bad_json_has_line(self, tmp_path):
        path = tmp_path / "tree.json"
        path.write_text('{"m": 1,\n "parents": [2\n}')
        with pytest.raises(TreeError, match=r"tree\.json:\d+: invalid JSON"):
            load_tree(path)


class TestIncidence:
    def test_incident_edges_two_tier(self):
        t = two_tier_tree()
        assert t.incident_edges(5) == (2, 3, 4, 5)
        assert t.incident_edges(6) == (1, 5, 6)
        assert t.incident_edges(7) == (6,)
        assert t.incident_edges(1) == (1,)

    def test_descendant_edges(self):
        t = two_tier_tree()
        assert t.descendant_edges(5) == frozenset({2, 3, 4})
        assert t.descendant_edges(6) == frozenset({1, 2, 3, 4, 5})
        assert t.descendant_edges(7) == frozenset(range(1, 7))
        assert t.descendant_edges(1) == frozenset()

    def test_boundary_of_subsets(self):
        t = two_tier_tree()
        assert t.boundary_of({2, 3, 4}) == (2, 3, 4)
        assert t.boundary_of({1, 5, 6}) == (1, 5, 7)
        assert t.boundary_of({6}) == (6, 7)


class TestComponents:
    def test_split_two_tier_center(self):
        t = two_tier_tree()
        comps = split_at_vertex(t, 5)
        assert comps == [frozenset({1, 5, 6}), frozenset({2}),
                         frozenset({3}), frozenset({4})]

    def test_split_two_tier_upper(self):
        t = two_tier_tree()
        comps = split_at_vertex(t, 6)
        assert comps == [frozenset({1}), frozenset({2, 3, 4, 5}),
                         frozenset({6})]

    def test_split_requires_internal(self):
        with pytest.raises(TreeError, match="not internal"):
            split_at_vertex(two_tier_tree(), 3)

    def test_components_match_bruteforce_random(self):
        rng = np.random.default_rng(20260823)
        for _ in range(20):
            m = int(rng.integers(2, 13))
            t = random_tree(rng, m)
            for u in t.internal:
                assert (t.components(t.edges, removed_vertex=u)
                        == brute_components(t, t.edges, removed_vertex=u))
            # random edge subsets without vertex removal
            sub = [j for j in t.edges if rng.random() < 0.6]
            if sub:
                assert t.components(sub) == brute_components(t, sub)


class TestDecomposition:
    def test_two_tier_k3(self):
        t = two_tier_tree()
        d = decompose_at_parent(t, 3)
        assert d.pivot == 5
        assert d.lower == frozenset({2, 3, 4})
        assert d.upper == frozenset({1, 5, 6})
        assert d.reduced == frozenset({2, 4})
        assert d.b_p == 3 and d.B_p == 3
        assert d.upper_length == 3.0

    def test_two_tier_k1(self):
        t = two_tier_tree()
        d = decompose_at_parent(t, 1)
        assert d.pivot == 6
        assert d.lower == frozenset({1, 2, 3, 4, 5})
        assert d.upper == frozenset({6})
        assert d.b_p == 4 and d.B_p == 2

    def test_requires_boundary_edge(self):
        with pytest.raises(TreeError, match="not a non-root boundary edge"):
            decompose_at_parent(two_tier_tree(), 5)

    def test_boundary_count_identity_random(self):
        # The pivot always has degree 1 in G_p, so B_p counts the upper
        # boundary plus the pivot; with a branching pivot (>= 2 children)
        # the leaf counts combine as b_p + B_p - 1 = b.
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(40):
            m = int(rng.integers(2, 13))
            t = random_tree(rng, m)
            for k in t.boundary_nonroot:
                d = decompose_at_parent(t, k)
                bl = set(t.boundary_of(d.lower))
                bu = set(t.boundary_of(d.upper))
                assert d.pivot in bu
                assert (bl | bu) - {d.pivot} == set(t.boundary) - {d.pivot}
                single_child = len(t.children[d.pivot]) == 1
                assert d.pivot in bl if single_child else d.pivot not in bl
                assert d.b_p + d.B_p == t.b + 1 + (1 if single_child else 0)
                checked += 1
        assert checked >= 20

"""Rooted metric trees and the subtree decompositions used by the solver.

A tree has vertices ``v_1 .. v_{m+1}`` and directed edges ``e_1 .. e_m``;
edge ``e_j`` runs from ``v_j`` (local coordinate ``x = 0``) to its parent
``v_{p(j)}`` (``x = T_j``) with ``j < p(j) <= m+1``.  The root ``v_{m+1}``
has exactly one incident edge, ``e_m``.  All indices in the public API are
1-based to match the usual ``v_j`` / ``e_j`` bookkeeping in logs and tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class TreeError(ValueError):
    """Raised for malformed tree specifications."""


class MetricTree:
    """Immutable rooted metric tree.

    Attributes
    ----------
    m            : number of edges.
    parent       : dict j -> p(j) for j = 1..m.
    lengths      : dict j -> T_j.
    root         : vertex index m + 1.
    children     : dict v -> sorted tuple of edges e_j with p(j) = v.
    boundary     : sorted tuple of boundary (degree-1) vertices, root included.
    boundary_nonroot : boundary vertices without the root (the set dG').
    internal     : sorted tuple of internal vertices.
    b            : number of boundary vertices.
    total_length : sum of all edge lengths.
    """

    def __init__(self, m, parent, lengths):
        if m < 1:
            raise TreeError("tree must have at least one edge")
        parent = {int(j): int(p) for j, p in parent.items()}
        lengths = {int(j): float(t) for j, t in lengths.items()}
        if sorted(parent) != list(range(1, m + 1)):
            raise TreeError("parent map must cover edges 1..m exactly")
        if sorted(lengths) != list(range(1, m + 1)):
            raise TreeError("length map must cover edges 1..m exactly")
        for j, p in parent.items():
            if p <= j:
                raise TreeError(f"cycle detected: edge {j} has parent vertex {p} <= {j}")
            if p > m + 1:
                raise TreeError(f"orphan vertex: edge {j} points to nonexistent vertex {p}")
        for j, t in lengths.items():
            if not t > 0.0:
                raise TreeError(f"non-positive length on edge {j}: {t}")
        root = m + 1
        root_edges = [j for j, p in parent.items() if p == root]
        if root_edges != [m]:
            raise TreeError(
                f"root degree != 1: edges {root_edges} are incident to the root "
                f"(only e_{m} may be)")

        self.m = m
        self.parent = parent
        self.lengths = lengths
        self.root = root

        children = {v: [] for v in range(1, m + 2)}
        for j, p in parent.items():
            children[p].append(j)
        self.children = {v: tuple(sorted(e)) for v, e in children.items()}

        # Every vertex v_j (j <= m) carries the outgoing edge e_j; the root
        # carries only the incoming e_m.  Degree-1 vertices are the boundary.
        self.degree = {v: len(self.children[v]) + (1 if v <= m else 0)
                       for v in range(1, m + 2)}
        self.boundary = tuple(v for v in range(1, m + 2) if self.degree[v] == 1)
        self.boundary_nonroot = tuple(v for v in self.boundary if v != root)
        self.internal = tuple(v for v in range(1, m + 2) if self.degree[v] > 1)
        self.b = len(self.boundary)
        self.total_length = sum(lengths.values())
        self.edges = tuple(range(1, m + 1))

    # -- incidence helpers -------------------------------------------------

    def edge_vertices(self, j):
        """Vertices (bottom, top) = (v_j, v_{p(j)}) of edge e_j."""
        return j, self.parent[j]

    def incident_edges(self, v):
        """All edges touching vertex v (E_v)."""
        out = list(self.children[v])
        if v <= self.m:
            out.append(v)
        return tuple(sorted(out))

    def descendant_edges(self, v):
        """Edges of the lower subtree g_v rooted at vertex v."""
        out = []
        stack = list(self.children[v])
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self.children[j])
        return frozenset(out)

    def subtree_length(self, edges):
        return sum(self.lengths[j] for j in edges)

    def boundary_of(self, edges):
        """Degree-1 vertices of the subgraph spanned by the given edges."""
        deg = {}
        for j in edges:
            for v in self.edge_vertices(j):
                deg[v] = deg.get(v, 0) + 1
        return tuple(sorted(v for v, d in deg.items() if d == 1))

    def components(self, edges, removed_vertex=None):
        """Edge-connected components of a subgraph.

        If ``removed_vertex`` is given, edges are not considered adjacent
        through that vertex (used by the splitting of Definition-style
        recursions).  Returns a sorted list of frozensets of edge indices.
        """
        edges = set(edges)
        adj = {}
        for j in edges:
            for v in self.edge_vertices(j):
                if v != removed_vertex:
                    adj.setdefault(v, []).append(j)
        seen = set()
        comps = []
        for j0 in sorted(edges):
            if j0 in seen:
                continue
            comp = {j0}
            stack = [j0]
            seen.add(j0)
            while stack:
                j = stack.pop()
                for v in self.edge_vertices(j):
                    if v == removed_vertex:
                        continue
                    for j2 in adj[v]:
                        if j2 not in seen:
                            seen.add(j2)
                            comp.add(j2)
                            stack.append(j2)
            comps.append(frozenset(comp))
        return sorted(comps, key=min)

    def __repr__(self):
        return f"MetricTree(m={self.m}, parent={self.parent}, lengths={self.lengths})"

    def __eq__(self, other):
        return (isinstance(other, MetricTree) and self.m == other.m
                and self.parent == other.parent and self.lengths == other.lengths)

    def __hash__(self):
        return hash((self.m, tuple(sorted(self.parent.items())),
                     tuple(sorted(self.lengths.items()))))


@dataclass(frozen=True)
class SubtreeDecomposition:
    """Split of the tree at the parent vertex p of a boundary edge e_k.

    ``lower`` is the edge set of g_p (the subtree hanging below v_p),
    ``upper`` the edge set of G_p (everything else), ``reduced`` the edge
    set of g_p minus e_k.  ``b_p`` and ``B_p`` count boundary vertices of
    g_p and G_p; ``upper_length`` is length(G_p).
    """
    tree: MetricTree
    k: int
    pivot: int
    lower: frozenset
    upper: frozenset
    reduced: frozenset
    b_p: int
    B_p: int
    upper_length: float


def validate_tree(spec):
    """Build a MetricTree from a raw description.

    ``spec`` is a mapping with keys ``m``, ``parents`` (list of p(j) for
    j = 1..m) and ``lengths`` (list of T_j).
    """
    try:
        m = int(spec["m"])
        parents = list(spec["parents"])
        lengths = list(spec["lengths"])
    except (KeyError, TypeError) as exc:
        raise TreeError(f"tree spec missing field: {exc}") from exc
    if len(parents) != m or len(lengths) != m:
        raise TreeError(
            f"tree spec arrays must have length m={m} "
            f"(got {len(parents)} parents, {len(lengths)} lengths)")
    return MetricTree(m,
                      {j: parents[j - 1] for j in range(1, m + 1)},
                      {j: lengths[j - 1] for j in range(1, m + 1)})


def load_tree(path):
    """Parse a tree spec JSON file; errors carry file/line context."""
    with open(path) as fh:
        text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    try:
        return validate_tree(spec)
    except TreeError as exc:
        raise TreeError(f"{path}: {exc}") from exc


def split_at_vertex(tree, u):
    """Split the tree at internal vertex u into its deg(u) edge-subtrees."""
    if u not in tree.internal:
        raise TreeError(f"vertex {u} is not internal; cannot split there")
    comps = tree.components(tree.edges, removed_vertex=u)
    assert sum(len(c) for c in comps) == tree.m
    return comps


def decompose_at_parent(tree, k):
    """Decomposition (g_p, G_p, g_p*) at the parent of boundary vertex v_k."""
    if k not in tree.boundary_nonroot:
        raise TreeError(f"edge {k} is not a non-root boundary edge")
    p = tree.parent[k]
    lower = tree.descendant_edges(p)
    upper = frozenset(tree.edges) - lower
    reduced = lower - {k}
    b_p = len(tree.boundary_of(lower))
    B_p = len(tree.boundary_of(upper))
    return SubtreeDecomposition(
        tree=tree, k=k, pivot=p, lower=lower, upper=upper, reduced=reduced,
        b_p=b_p, B_p=B_p, upper_length=tree.subtree_length(upper))


def two_tier_tree():
    """The six-edge reference tree used throughout the tests.

    Parents: 1->6, 2->5, 3->5, 4->5, 5->6, 6->7; unit lengths by default.
    """
    return validate_tree({"m": 6, "parents": [6, 5, 5, 5, 6, 7],
                          "lengths": [1.0] * 6})


def star_tree(n_edges, lengths=None):
    """Star with n_edges-1 pendant edges into a center plus one root edge."""
    if lengths is None:
        lengths = [1.0] * n_edges
    parents = [n_edges] * (n_edges - 1) + [n_edges + 1]
    return validate_tree({"m": n_edges, "parents": parents, "lengths": lengths})


def interval_tree(T=1.0):
    """Single edge of length T."""
    return validate_tree({"m": 1, "parents": [2], "lengths": [T]})

"""Characteristic functions of boundary value problems on subtrees.

For a subgraph of the metric tree with a Dirichlet ("D") or Neumann ("N")
condition at each of its boundary vertices, and matching (Kirchhoff-type,
"K") conditions at the interior vertices, the characteristic function
Delta(lambda) is the entire function whose zeros are the eigenvalues of
that boundary value problem.

On a single edge it reduces to a fundamental-solution value at the far
end; on larger subgraphs it satisfies a splitting identity at any interior
vertex u:

    Delta = sum_j Delta_j^N  prod_{k != j} Delta_k^D,

where the sum runs over the edge components obtained by disconnecting the
subgraph at u, and the superscript is the condition imposed at u in that
component.  The identity holds for every choice of u, which the tests use
as a consistency oracle.

Each characteristic function carries an integer ``rho_power``: the growth
exponent d such that Delta(rho^2) ~ rho^d * (trigonometric main term) as
rho -> infinity.  For d Dirichlet conditions among the boundary ones the
exponent is 1 - d; it is computed structurally alongside the values.
"""

from __future__ import annotations

import numpy as np

from .propagator import endpoint_values, zero_endpoint_values
from .tree import TreeError


class CharFnEvaluator:
    """Evaluate characteristic functions of one tree at fixed lambdas.

    Endpoint values of the fundamental solutions are computed once per
    edge and the subtree recursion is memoized, so repeated evaluations
    with different boundary conditions (e.g. Delta and all Delta_k) share
    nearly all of the work.

    ``pot=None`` selects the zero potential through exact closed forms.
    """

    def __init__(self, tree, pot, lam, split_rule="max"):
        if split_rule not in ("max", "min"):
            raise ValueError(f"unknown split rule {split_rule!r}")
        self.tree = tree
        self.pot = pot
        self.lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        self.split_rule = split_rule
        self._edge_ev = {}
        self._memo = {}

    # -- edge-level values ---------------------------------------------------

    def _edge_values(self, j):
        if j not in self._edge_ev:
            if self.pot is None:
                self._edge_ev[j] = zero_endpoint_values(self.tree.lengths[j], self.lam)
            else:
                self._edge_ev[j] = endpoint_values(self.pot[j], self.lam)
        return self._edge_ev[j]

    def _single_edge(self, j, tag0, tag1):
        """Characteristic function of edge e_j with conditions at x=0 / x=T."""
        ev = self._edge_values(j)
        tag0 = "N" if tag0 == "K" else tag0
        tag1 = "N" if tag1 == "K" else tag1
        table = {("D", "D"): (ev.S, -1), ("D", "N"): (ev.S1, 0),
                 ("N", "D"): (ev.phi, 0), ("N", "N"): (ev.phi1, 1)}
        return table[(tag0, tag1)]

    # -- recursion -----------------------------------------------------------

    def _subgraph_degree(self, edges):
        deg = {}
        for j in edges:
            for v in self.tree.edge_vertices(j):
                deg[v] = deg.get(v, 0) + 1
        return deg

    def _delta(self, edges, bc):
        key = (edges, tuple(sorted(bc.items())))
        if key in self._memo:
            return self._memo[key]
        result = self._delta_impl(edges, bc)
        self._memo[key] = result
        return result

    def _delta_impl(self, edges, bc):
        deg = self._subgraph_degree(edges)
        # a Dirichlet condition at an interior vertex decouples the parts
        for v, tag in bc.items():
            if tag == "D" and deg.get(v, 0) > 1:
                vals, power = 1.0, 0
                for comp in self.tree.components(edges, removed_vertex=v):
                    sub_bc = {w: t for w, t in bc.items()
                              if w == v or any(w in self.tree.edge_vertices(j)
                                               for j in comp)}
                    cv, cp = self._delta(comp, sub_bc)
                    vals = vals * cv
                    power += cp
                return vals, power

        comps = self.tree.components(edges)
        if len(comps) > 1:
            vals, power = 1.0, 0
            for comp in comps:
                sub_bc = {w: t for w, t in bc.items()
                          if any(w in self.tree.edge_vertices(j) for j in comp)}
                cv, cp = self._delta(comp, sub_bc)
                vals = vals * cv
                power += cp
            return vals, power

        if len(edges) == 1:
            (j,) = edges
            v0, v1 = self.tree.edge_vertices(j)
            return self._single_edge(j, bc.get(v0, "K"), bc.get(v1, "K"))

        interior = sorted(v for v, d in deg.items() if d > 1)
        u = interior[-1] if self.split_rule == "max" else interior[0]
        parts = self.tree.components(edges, removed_vertex=u)
        dir_vals = []
        neu_vals = []
        for comp in parts:
            sub_bc = {w: t for w, t in bc.items()
                      if any(w in self.tree.edge_vertices(j) for j in comp)}
            dir_vals.append(self._delta(comp, {**sub_bc, u: "D"}))
            neu_vals.append(self._delta(comp, {**sub_bc, u: "N"}))
        total = 0.0
        power = None
        for i in range(len(parts)):
            term = neu_vals[i][0]
            tpow = neu_vals[i][1]
            for k in range(len(parts)):
                if k != i:
                    term = term * dir_vals[k][0]
                    tpow += dir_vals[k][1]
            total = total + term
            power = tpow if power is None else max(power, tpow)
        return total, power

    # -- public entry points ---------------------------------------------

    def evaluate(self, bc=None, edges=None):
        """(values, rho_power) of the characteristic function.

        ``bc`` maps vertices to "D"/"N"/"K"; vertices without a tag get
        matching conditions ("K", i.e. Neumann where the subgraph degree
        is 1).  Default: Dirichlet at every boundary vertex of the tree.
        ``edges`` restricts to a subgraph (any iterable of edge indices).
        """
        if edges is None:
            edges = frozenset(self.tree.edges)
        else:
            edges = frozenset(edges)
            if not edges or not edges <= set(self.tree.edges):
                raise TreeError(f"invalid edge subset {sorted(edges)}")
        if bc is None:
            bc = {v: "D" for v in self.tree.boundary}
        deg = self._subgraph_degree(edges)
        bc = {v: t for v, t in bc.items() if v in deg}
        for v, t in bc.items():
            if t not in ("D", "N", "K"):
                raise ValueError(f"unknown boundary tag {t!r} at vertex {v}")
        return self._delta(edges, bc)


def char_fn(tree, lam, pot=None, bc=None, edges=None, split_rule="max"):
    """Characteristic function values; returns (values, rho_power)."""
    return CharFnEvaluator(tree, pot, lam, split_rule).evaluate(bc, edges)


def char_fn_zero(tree, lam, bc=None, edges=None, split_rule="max"):
    """Characteristic function of the zero potential (exact closed forms)."""
    return CharFnEvaluator(tree, None, lam, split_rule).evaluate(bc, edges)


def dirichlet_bc(tree, neumann_at=()):
    """Dirichlet at every boundary vertex except those listed, which get N."""
    bc = {v: "D" for v in tree.boundary}
    for v in neumann_at:
        if v not in tree.boundary:
            raise TreeError(f"vertex {v} is not a boundary vertex")
        bc[v] = "N"
    return bc


def weyl_fn(tree, lam, pot, k, rel_tol=1e-12):
    """Weyl function M_k = -Delta_k / Delta at boundary vertex v_k.

    Delta has Dirichlet conditions at all boundary vertices; Delta_k has
    Neumann at v_k instead.  Raises if lambda sits on (or numerically too
    close to) a Dirichlet eigenvalue, where M_k has a pole.
    """
    ev = CharFnEvaluator(tree, pot, lam)
    den, _ = ev.evaluate(dirichlet_bc(tree))
    num, _ = ev.evaluate(dirichlet_bc(tree, neumann_at=[k]))
    bad = np.abs(den) < rel_tol * (np.abs(num) + np.abs(den))
    if np.any(bad):
        raise ZeroDivisionError(
            f"Weyl function pole: Delta vanishes at lambda index {np.argmax(bad)}")
    return -num / den


def extract_remainder(tree, rho, pot, bc=None, edges=None):
    """kappa(rho) = rho^{-d} (Delta(rho^2) - Delta0(rho^2)), d = rho_power.

    The remainder is an entire function of exponential type bounded by the
    total subgraph length, square integrable on the real rho axis.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=complex))
    lam = rho ** 2
    vals, power = char_fn(tree, lam, pot=pot, bc=bc, edges=edges)
    vals0, power0 = char_fn_zero(tree, lam, bc=bc, edges=edges)
    assert power == power0
    return (vals - vals0) * rho ** (-power), power


def _l2_line(fn, half_width, step):
    """L2(R) norm of fn over [-R, R] by trapezoid on a symmetric grid."""
    n = int(np.ceil(half_width / step))
    grid = np.linspace(-n * step, n * step, 2 * n + 1)
    vals = np.abs(fn(grid)) ** 2
    w = np.full(grid.shape, step)
    w[0] = w[-1] = step / 2
    return float(np.sqrt(np.sum(vals * w))), grid, vals


def spectral_distance(tree, pot_a, pot_b, tail_tol=1e-6, max_half_width=4096.0):
    """Weighted L2 distance between the spectral data of two potentials.

    delta = ||rho^{b-1} (Delta_a - Delta_b)(rho^2)||_{L2(R)}
            + sum_k ||rho^{b-2} (Delta_{k,a} - Delta_{k,b})(rho^2)||_{L2(R)}

    over the non-root boundary vertices v_k.  Integrals use a uniform grid
    with step <= pi / (8 length(G)); the half-width doubles until the
    outer half contributes less than ``tail_tol`` of the norm (capped at
    ``max_half_width``).
    """
    b = tree.b
    step = np.pi / (8.0 * tree.total_length)
    bcs = [(dirichlet_bc(tree), b - 1)]
    for k in tree.boundary_nonroot:
        bcs.append((dirichlet_bc(tree, neumann_at=[k]), b - 2))

    def diff_factory(bc, wexp):
        def fn(rho):
            rho = np.asarray(rho, dtype=complex)
            lam = rho ** 2
            va, _ = char_fn(tree, lam, pot=pot_a, bc=bc)
            vb, _ = char_fn(tree, lam, pot=pot_b, bc=bc)
            weight = np.where(np.abs(rho) < 1e-12, 0.0 if wexp > 0 else 1.0,
                              rho ** wexp)
            if wexp < 0:
                # the difference vanishes to matching order at rho = 0;
                # drop the (measure-zero) origin node instead of dividing
                weight = np.where(np.abs(rho) < 1e-12, 0.0, weight)
            return (va - vb) * weight
        return fn

    total = 0.0
    for bc, wexp in bcs:
        fn = diff_factory(bc, wexp)
        R = 64.0 * tree.total_length
        norm, grid, vals = _l2_line(fn, R, step)
        while R < max_half_width:
            tail = np.sqrt(np.sum(vals[np.abs(grid) > R / 2] * step))
            if norm == 0.0 or tail < tail_tol * norm:
                break
            R *= 2.0
            norm, grid, vals = _l2_line(fn, R, step)
        total += norm
    return total

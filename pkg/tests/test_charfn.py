"""Tests for characteristic functions on subtrees.

Oracles: single-edge values against the propagator, closed forms for the
zero potential on the interval and the 3-star, invariance of the splitting
recursion under the choice of split vertex, and the structural growth
exponent rho_power = 1 - (# Dirichlet conditions).
"""

import numpy as np
import pytest

from qtree.tree import (two_tier_tree, star_tree, interval_tree, validate_tree,
                        TreeError)
from qtree.potential import TreePotential, random_potential
from qtree.propagator import endpoint_values
from qtree.charfn import (CharFnEvaluator, char_fn, char_fn_zero,
                          dirichlet_bc, weyl_fn, extract_remainder,
                          spectral_distance)

LAM = np.array([0.3, 2.0, -5.0, 13.7, 1.5 + 2.0j, -2.0 - 1.0j, 120.0])


def random_tree(rng, m):
    parents = [int(rng.integers(j + 1, m + 2)) for j in range(1, m)] + [m + 1]
    for i in range(m - 1):
        if parents[i] == m + 1:
            parents[i] = m
    lengths = rng.uniform(0.5, 1.5, size=m).tolist()
    return validate_tree({"m": m, "parents": parents, "lengths": lengths})


class TestSingleEdge:
    def test_four_conditions_match_propagator(self):
        t = interval_tree(1.3)
        pot = random_potential(t, seed=1, n_cells=128, norm=0.8)
        ev = endpoint_values(pot[1], LAM)
        cases = [({1: "D", 2: "D"}, ev.S, -1),
                 ({1: "D", 2: "N"}, ev.S1, 0),
                 ({1: "N", 2: "D"}, ev.phi, 0),
                 ({1: "N", 2: "N"}, ev.phi1, 1)]
        for bc, ref, pw in cases:
            vals, power = char_fn(t, LAM, pot=pot, bc=bc)
            assert power == pw
            assert np.allclose(vals, ref, rtol=0, atol=1e-12)

    def test_k_tag_equals_neumann_on_boundary(self):
        t = interval_tree(1.0)
        pot = random_potential(t, seed=2, n_cells=64)
        a, _ = char_fn(t, LAM, pot=pot, bc={1: "K", 2: "D"})
        b, _ = char_fn(t, LAM, pot=pot, bc={1: "N", 2: "D"})
        assert np.array_equal(a, b)

    def test_zero_interval_closed_form(self):
        T = 2.0
        t = interval_tree(T)
        rho = np.sqrt(LAM.astype(complex))
        vals, power = char_fn_zero(t, LAM)
        assert power == -1
        assert np.allclose(vals, np.sin(rho * T) / rho, atol=1e-12)


class TestStar:
    def test_zero_three_star_closed_form(self):
        # Dirichlet problem on the unit 3-star:
        # Delta = 3 cos(rho) sin(rho)^2 / rho^2, growth exponent -2
        t = star_tree(3)
        rho = np.sqrt(LAM.astype(complex))
        vals, power = char_fn_zero(t, LAM)
        ref = 3.0 * np.cos(rho) * (np.sin(rho) / rho) ** 2
        assert power == -2
        assert np.allclose(vals, ref, rtol=1e-12, atol=1e-12)

    def test_zero_potential_object_matches_closed_forms(self):
        t = two_tier_tree()
        pot = TreePotential.zero(t, n_cells=32)
        a, pa = char_fn(t, LAM, pot=pot)
        b, pb = char_fn_zero(t, LAM)
        assert pa == pb
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


class TestRecursion:
    def test_split_rule_invariance(self):
        rng = np.random.default_rng(314)
        for _ in range(8):
            m = int(rng.integers(2, 9))
            t = random_tree(rng, m)
            pot = random_potential(t, seed=int(rng.integers(1 << 30)),
                                   n_cells=64, norm=1.0)
            a, pa = char_fn(t, LAM, pot=pot, split_rule="max")
            b, pb = char_fn(t, LAM, pot=pot, split_rule="min")
            assert pa == pb
            scale = np.maximum(np.abs(a), 1e-30)
            assert np.max(np.abs(a - b) / scale) < 1e-8

    def test_rho_power_counts_dirichlet_conditions(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            m = int(rng.integers(1, 11))
            t = random_tree(rng, m)
            _, power = char_fn_zero(t, LAM[:2])
            assert power == 1 - t.b
            for k in t.boundary_nonroot:
                _, pk = char_fn_zero(t, LAM[:2], bc=dirichlet_bc(t, [k]))
                assert pk == 1 - (t.b - 1)

    def test_subgraph_evaluation(self):
        # lower 3-star of the two-tier tree with matching at the center: the splitting
        # identity gives Delta = sum_j S1_j prod_{k != j} S_k directly
        t = two_tier_tree()
        pot = random_potential(t, seed=8, n_cells=64)
        vals, power = char_fn(t, LAM, pot=pot, edges={2, 3, 4},
                              bc={2: "D", 3: "D", 4: "D"})
        ev = {j: endpoint_values(pot[j], LAM) for j in (2, 3, 4)}
        ref = (ev[2].S1 * ev[3].S * ev[4].S
               + ev[3].S1 * ev[2].S * ev[4].S
               + ev[4].S1 * ev[2].S * ev[3].S)
        assert power == -2
        assert np.allclose(vals, ref, rtol=1e-10, atol=1e-12)

    def test_dirichlet_at_interior_vertex_decouples(self):
        t = two_tier_tree()
        pot = random_potential(t, seed=8, n_cells=64)
        vals, power = char_fn(t, LAM, pot=pot, edges={2, 3, 4},
                              bc={2: "D", 3: "D", 4: "D", 5: "D"})
        ev = {j: endpoint_values(pot[j], LAM) for j in (2, 3, 4)}
        assert power == -3
        assert np.allclose(vals, ev[2].S * ev[3].S * ev[4].S,
                           rtol=1e-10, atol=1e-12)

    def test_bad_inputs(self):
        t = two_tier_tree()
        with pytest.raises(TreeError, match="invalid edge subset"):
            char_fn_zero(t, LAM, edges={9})
        with pytest.raises(ValueError, match="unknown boundary tag"):
            char_fn_zero(t, LAM, bc={1: "X"})
        with pytest.raises(ValueError, match="unknown split rule"):
            CharFnEvaluator(t, None, LAM, split_rule="median")


def _rename(edge_pot, new_index):
    from qtree.potential import EdgePotential
    return EdgePotential(new_index, edge_pot.grid, edge_pot.values)


class TestWeyl:
    def test_interval_zero_closed_form(self):
        T = 1.0
        t = interval_tree(T)
        pot = TreePotential.zero(t, n_cells=32)
        lam = np.array([0.5, 2.0, -3.0, 7.0 + 1.0j])
        rho = np.sqrt(lam.astype(complex))
        M = weyl_fn(t, lam, pot, k=1)
        ref = -rho * np.cos(rho * T) / np.sin(rho * T)
        assert np.allclose(M, ref, rtol=1e-10)

    def test_pole_detection(self):
        t = interval_tree(1.0)
        pot = TreePotential.zero(t, n_cells=32)
        with pytest.raises(ZeroDivisionError, match="pole"):
            weyl_fn(t, np.array([np.pi ** 2]), pot, k=1)


class TestRemainder:
    def test_zero_for_zero_potential(self):
        t = two_tier_tree()
        pot = TreePotential.zero(t, n_cells=32)
        rho = np.linspace(0.1, 30.0, 50)
        kappa, power = extract_remainder(t, rho, pot)
        assert power == 1 - t.b
        assert np.max(np.abs(kappa)) < 1e-9

    def test_bounded_and_decaying_on_reals(self):
        t = interval_tree(1.0)
        pot = random_potential(t, seed=5, n_cells=256, norm=1.0)
        rho = np.linspace(0.5, 400.0, 1200)
        kappa, _ = extract_remainder(t, rho, pot)
        assert np.max(np.abs(kappa)) < 10.0
        head = np.mean(np.abs(kappa[rho < 50]) ** 2)
        tail = np.mean(np.abs(kappa[rho > 300]) ** 2)
        assert tail < 0.5 * head


class TestSpectralDistance:
    def test_zero_for_equal_potentials(self):
        t = interval_tree(1.0)
        pot = random_potential(t, seed=3, n_cells=64)
        assert spectral_distance(t, pot, pot) == 0.0

    def test_symmetric_and_small_for_close_potentials(self):
        t = interval_tree(1.0)
        a = random_potential(t, seed=3, n_cells=64, norm=0.5)
        b = random_potential(t, seed=4, n_cells=64, norm=0.5)
        dab = spectral_distance(t, a, b)
        dba = spectral_distance(t, b, a)
        assert dab == pytest.approx(dba, rel=1e-12)
        assert dab > 0
        c = a + (b - a).scaled(1e-3)
        assert spectral_distance(t, a, c) < 0.01 * dab

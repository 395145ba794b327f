"""Tests for the vertex-transition step.

Oracles: the determinant identity A = -(Delta*)^2, closed-form sampling
of a raised-cosine band-limited function, and a full transition on the
six-edge reference tree compared against directly computed upper-subtree
characteristic functions.
"""

import numpy as np
import pytest

from qtree.tree import two_tier_tree, interval_tree, star_tree
from qtree.potential import TreePotential, random_potential
from qtree.charfn import CharFnEvaluator, char_fn, dirichlet_bc
from qtree.transition import (TransitionError, four_charfns,
                              solve_transition_system, sampling_nodes,
                              cardinal_series, check_sample_decay,
                              run_transition)


def raised_cosine_transform(rho, T):
    """F(rho) = int_{-T}^{T} (1 + cos(pi t / T)) e^{i rho t} dt / 2."""
    rho = np.asarray(rho, dtype=complex)
    return np.sin(rho * T) * (1.0 / rho - rho / (rho ** 2 - (np.pi / T) ** 2))


class TestDeterminantIdentity:
    def test_two_tier_star_subtree(self):
        t = two_tier_tree()
        pot = random_potential(t, seed=21, n_cells=64, norm=1.0)
        rng = np.random.default_rng(7)
        lam = rng.uniform(-20, 20, 50) + 1j * rng.uniform(-5, 5, 50)
        fns = four_charfns(t, pot, {2, 3, 4}, 2, 5, lam)
        rel = np.max(np.abs(fns["A_raw"] + fns["Astar"] ** 2)
                     / np.abs(fns["A_raw"]))
        assert rel < 1e-8

    def test_two_tier_general_subtree(self):
        t = two_tier_tree()
        pot = random_potential(t, seed=3, n_cells=64, norm=0.7)
        lam = np.linspace(-15, 25, 40) + 0.5j
        fns = four_charfns(t, pot, {1, 2, 3, 4, 5}, 1, 6, lam)
        rel = np.max(np.abs(fns["A_raw"] + fns["Astar"] ** 2)
                     / np.abs(fns["A_raw"]))
        assert rel < 1e-8

    def test_single_edge_gives_minus_one(self):
        t = star_tree(3)
        pot = random_potential(t, seed=5, n_cells=64)
        lam = np.array([1.0, -3.0, 7.0 + 2.0j])
        fns = four_charfns(t, pot, {1}, 1, 3, lam)
        assert np.allclose(fns["A_raw"], -1.0, atol=1e-10)
        assert np.allclose(fns["Astar"], 1.0, atol=0)

    def test_cramer_consistency(self):
        # the solved pair must reproduce the input data when substituted
        # back into the splitting identity
        t = two_tier_tree()
        pot = random_potential(t, seed=9, n_cells=64)
        lam = np.linspace(1, 30, 20) + 1.0j
        fns = four_charfns(t, pot, {2, 3, 4}, 2, 5, lam)
        delta, _ = char_fn(t, lam, pot=pot, bc=dirichlet_bc(t))
        delta_k, _ = char_fn(t, lam, pot=pot, bc=dirichlet_bc(t, [2]))
        un, ud = solve_transition_system(fns, delta, delta_k)
        back = un * fns["DD"] + ud * fns["DK"]
        back_k = un * fns["ND"] + ud * fns["NK"]
        assert np.allclose(back, delta, rtol=1e-9)
        assert np.allclose(back_k, delta_k, rtol=1e-9)


class TestCardinalSeries:
    def test_raised_cosine_closed_form(self):
        # band-limited synthesis: max error 1e-6 with at most 200 nodes
        T, tau = 2.0, 2.0
        nu = sampling_nodes(T, tau, 180)
        assert nu.size <= 2 * 200 + 1
        samples = raised_cosine_transform(nu, T)
        rho = np.linspace(-40, 40, 501) + 1j * tau
        got = cardinal_series(samples, nu, T, rho)
        ref = raised_cosine_transform(rho, T)
        assert np.max(np.abs(got - ref)) < 1e-6

    def test_exact_at_nodes(self):
        T, tau = 1.5, 2.0
        nu = sampling_nodes(T, tau, 50)
        samples = raised_cosine_transform(nu, T)
        got = cardinal_series(samples, nu, T, nu[::7])
        assert np.allclose(got, samples[::7], atol=1e-12)

    def test_rejects_points_off_the_line(self):
        nu = sampling_nodes(1.0, 2.0, 10)
        with pytest.raises(ValueError, match="sampling line"):
            cardinal_series(np.ones(21), nu, 1.0, np.array([1.0 + 1.0j]))


class TestGate:
    def test_accepts_decaying_samples(self):
        n = np.arange(-100, 101)
        assert check_sample_decay(1.0 / (1.0 + n ** 2))

    def test_rejects_flat_samples(self):
        assert not check_sample_decay(np.ones(201))


class TestRunTransition:
    def _setup(self):
        t = two_tier_tree()
        fns = {j: (lambda a: (lambda x: a * np.sin(np.pi * x)))(0.2 + 0.05 * j)
               for j in t.edges}
        pot = TreePotential.from_functions(t, fns, n_cells=64)
        delta_fn = lambda r: char_fn(t, r ** 2, pot=pot, bc=dirichlet_bc(t))[0]
        delta_k_fn = lambda r: char_fn(t, r ** 2, pot=pot,
                                       bc=dirichlet_bc(t, [2]))[0]
        return t, pot, delta_fn, delta_k_fn

    def test_upper_pair_matches_direct_evaluation(self):
        t, pot, delta_fn, delta_k_fn = self._setup()
        res = run_transition(t, pot, t.edges, 2, delta_fn, delta_k_fn,
                             tau=2.0, n_start=256, n_max=1024)
        assert res.upper == frozenset({1, 5, 6})
        assert res.B_p == 3 and res.T_upper == 3.0
        rho = np.linspace(-25, 25, 81) + 2.0j
        un, ud = res.delta_pair(rho)
        ev = CharFnEvaluator(t, pot, rho ** 2)
        bc_d = {v: "D" for v in t.boundary_of(res.upper)}
        bc_n = dict(bc_d)
        bc_n[5] = "N"
        d_ref, _ = ev.evaluate(bc_d, res.upper)
        n_ref, _ = ev.evaluate(bc_n, res.upper)
        assert np.max(np.abs(ud - d_ref)) < 1e-3 * np.max(np.abs(d_ref))
        assert np.max(np.abs(un - n_ref)) < 1e-3 * np.max(np.abs(n_ref))

    def test_gate_rejects_noisy_data(self):
        t, pot, delta_fn, delta_k_fn = self._setup()
        rng = np.random.default_rng(0)

        def noisy_delta(r):
            return delta_fn(r) + 2.0 * rng.standard_normal(r.shape)

        with pytest.raises(TransitionError, match="do not decay"):
            run_transition(t, pot, t.edges, 2, noisy_delta, delta_k_fn,
                           tau=2.0, n_start=256, n_max=512)

    def test_requires_splittable_edges(self):
        t = interval_tree(1.0)
        pot = TreePotential.zero(t, 32)
        with pytest.raises(ValueError, match="does not split"):
            run_transition(t, pot, t.edges, 1, lambda m: m, lambda m: m, 2.0)

"""Tests for the transformation kernels.

The decisive oracle is the propagator: the kernel representation of
phi and phi^[1] must reproduce the exponential-based propagation to
quadrature accuracy (O(h^2), verified by refinement ratios).
"""

import numpy as np
import pytest

from qtree.potential import EdgePotential
from qtree.propagator import propagate
from qtree.kernels import (build_kernels, phi_via_kernels, phi1_via_kernels,
                           verify_representation)

LAM = np.array([0.5, 4.0, -3.0, 25.0, 2.0 + 1.0j, -1.0 + 0.5j])


class TestBaseTerms:
    def test_zero_potential_gives_zero_kernels(self):
        kern = build_kernels(EdgePotential.zero(1, 1.0, 64))
        assert np.max(np.abs(kern.K)) == 0.0
        assert np.max(np.abs(kern.N)) == 0.0
        assert np.max(np.abs(kern.C)) == 0.0

    def test_constant_sigma_leading_term(self):
        # for constant sigma the cumulative is sigma^2 x, so the leading
        # kernel term is sigma - (sigma^2/2) x on the triangle
        sg = 0.7
        pot = EdgePotential.from_function(1, 1.0, lambda x: sg, 32)
        kern = build_kernels(pot, max_terms=1)
        x = pot.grid[:, None]
        t = pot.grid[None, :]
        ref_K = np.tril(sg - 0.5 * sg ** 2 * x + 0 * t)
        ref_N = np.tril(0.5 * sg ** 2 * (x - t) + 0 * t + sg * np.sign(t) ** 0 * 0
                        + 0.5 * sg ** 2 * x - 0.5 * sg ** 2 * x)
        assert np.allclose(kern.K, ref_K, atol=1e-12)
        assert np.allclose(kern.C, -sg ** 2 * pot.grid, atol=1e-12)

    def test_term_decay_is_superexponential(self):
        pot = EdgePotential.from_function(1, 1.0, lambda x: 2 * np.sin(4 * x), 128)
        kern = build_kernels(pot, tol=0.0, max_terms=12)
        norms = kern.term_norms
        # factorial-type decay: more than an order of magnitude per
        # three terms, with a negligible tail
        assert all(norms[i + 3] < 0.1 * norms[i] for i in range(len(norms) - 3))
        assert norms[-1] < 1e-6 * norms[0]

    def test_adaptive_truncation(self):
        pot = EdgePotential.from_function(1, 1.0, lambda x: 0.3 * np.cos(x), 64)
        kern = build_kernels(pot, tol=1e-10)
        assert kern.n_terms <= 10
        assert kern.term_norms[-1] < 1e-8 * kern.term_norms[0]


class TestRepresentation:
    def test_matches_propagator_smooth_sigma(self):
        pot = EdgePotential.from_function(1, 1.0, lambda x: np.sin(3 * x), 256)
        e_phi, e_phi1 = verify_representation(pot, LAM)
        assert e_phi < 2e-5
        assert e_phi1 < 2e-5

    def test_matches_propagator_complex_sigma(self):
        pot = EdgePotential.from_function(
            1, 0.8, lambda x: 0.5 * np.exp(2j * x), 256)
        e_phi, e_phi1 = verify_representation(pot, LAM)
        assert e_phi < 2e-5
        assert e_phi1 < 2e-5

    def test_second_order_convergence(self):
        errs = []
        for M in (64, 128, 256):
            pot = EdgePotential.from_function(1, 1.0,
                                              lambda x: np.sin(3 * x), M)
            errs.append(verify_representation(pot, LAM)[0])
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5

    def test_c_is_quasiderivative_at_zero_energy(self):
        pot = EdgePotential.from_function(1, 1.2, lambda x: np.cos(2 * x), 256)
        kern = build_kernels(pot)
        sol = propagate(pot, np.array([0.0]))
        assert np.max(np.abs(kern.C - sol.phi1[:, 0])) < 1e-5

    def test_phi_at_lambda_zero(self):
        pot = EdgePotential.from_function(1, 1.0, lambda x: x, 256)
        kern = build_kernels(pot)
        sol = propagate(pot, np.array([0.0]))
        phi = phi_via_kernels(kern, np.array([0.0]))
        assert np.max(np.abs(phi[:, 0] - sol.phi[:, 0])) < 1e-5
        phi1 = phi1_via_kernels(kern, np.array([0.0]))
        assert np.max(np.abs(phi1[:, 0] - sol.phi1[:, 0])) < 1e-5

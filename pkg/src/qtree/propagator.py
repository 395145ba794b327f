"""Fundamental solutions of the Sturm-Liouville equation on one edge.

The equation is taken in the sigma-form with quasi-derivative
``y^[1] = y' - sigma y``:

    -(y^[1])' - sigma y^[1] - sigma^2 y = lambda y.

As a first-order system for ``u = (y, y^[1])`` this reads ``u' = A(x) u``
with ``A = [[sigma, 1], [-(sigma^2 + lambda), -sigma]]``.  On each cell of
the potential model sigma is constant and ``A^2 = -lambda I``, so the cell
propagator is exact:

    exp(A h) = cos(rho h) I + (sin(rho h) / rho) A,   rho = sqrt(lambda).

Both branches of the square root give the same matrix (cos and sin/rho are
even), ``det exp(A h) = 1``, and the Wronskian of the two fundamental
solutions is preserved to rounding.  The only discretization error is the
cell-averaging of sigma itself.

Two fundamental solutions are propagated jointly:

    S(0) = 0, S^[1](0) = 1      (sine-type)
    phi(0) = 1, phi^[1](0) = 0  (cosine-type)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _sinc(w):
    """sin(w)/w for complex arrays, stable near w = 0."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-4
    ws = np.where(small, 0.0, w)
    out = np.empty_like(w)
    out[~small] = np.sin(ws[~small]) / ws[~small]
    w2 = w[small] ** 2
    out[small] = 1.0 - w2 / 6.0 + w2 ** 2 / 120.0
    return out


@dataclass
class SolutionGrid:
    """Node values of the fundamental solutions on one edge.

    Arrays have shape ``(n_nodes,) + lam.shape``; ``grid`` is the edge grid.
    """
    grid: np.ndarray
    lam: np.ndarray
    S: np.ndarray
    S1: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray

    def wronskian(self):
        """W = S phi^[1] - S^[1] phi, identically -1 for exact solutions."""
        return self.S * self.phi1 - self.S1 * self.phi

    def endpoint(self):
        return EndpointValues(self.lam, self.S[-1], self.S1[-1],
                              self.phi[-1], self.phi1[-1])


@dataclass
class EndpointValues:
    """Fundamental-solution values at the far end x = T of an edge."""
    lam: np.ndarray
    S: np.ndarray
    S1: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray


def propagate(pot, lam, store_all=True, dtype=complex):
    """Propagate both fundamental solutions across an edge potential.

    Parameters
    ----------
    pot : EdgePotential
        Cell-model potential on [0, T].
    lam : array_like
        Spectral parameters (complex allowed); any shape.
    store_all : bool
        If True return a SolutionGrid with node values, otherwise only
        the EndpointValues at x = T.
    dtype : dtype
        Working precision.  The solutions grow like exp(|Im rho| x), so
        invariants that cancel that growth (e.g. the Wronskian) carry a
        roundoff floor of about eps * exp(2 |Im rho| T); pass
        ``np.clongdouble`` where that floor matters.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=dtype))
    rho = np.sqrt(lam)
    h = dtype(pot.h)
    w = rho * h
    c = np.cos(w)
    s = h * _sinc(w)  # sin(rho h) / rho

    shape = lam.shape
    S = np.zeros(shape, dtype=dtype)
    S1 = np.ones(shape, dtype=dtype)
    phi = np.ones(shape, dtype=dtype)
    phi1 = np.zeros(shape, dtype=dtype)

    if store_all:
        n = pot.n_cells + 1
        gS = np.empty((n,) + shape, dtype=dtype)
        gS1 = np.empty_like(gS)
        gphi = np.empty_like(gS)
        gphi1 = np.empty_like(gS)
        gS[0], gS1[0], gphi[0], gphi1[0] = S, S1, phi, phi1

    for i, sg in enumerate(pot.cells):
        q = sg * sg + lam
        S, S1 = c * S + s * (sg * S + S1), c * S1 - s * (q * S + sg * S1)
        phi, phi1 = c * phi + s * (sg * phi + phi1), c * phi1 - s * (q * phi + sg * phi1)
        if store_all:
            gS[i + 1], gS1[i + 1] = S, S1
            gphi[i + 1], gphi1[i + 1] = phi, phi1

    if store_all:
        return SolutionGrid(pot.grid, lam, gS, gS1, gphi, gphi1)
    return EndpointValues(lam, S, S1, phi, phi1)


def endpoint_values(pot, lam):
    """Fundamental-solution values at x = T only."""
    return propagate(pot, lam, store_all=False)


def wronskian_defect(sol):
    """max |W + 1| over all nodes and spectral parameters."""
    return float(np.max(np.abs(sol.wronskian() + 1.0)))


def zero_endpoint_values(T, lam):
    """Closed forms for sigma = 0: S = sin(rho T)/rho, phi = cos(rho T)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    rho = np.sqrt(lam)
    w = rho * T
    c = np.cos(w)
    s = T * _sinc(w)
    return EndpointValues(lam, s, c, c, -lam * s)

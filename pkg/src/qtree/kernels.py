"""Transformation kernels for the cosine-type solution on one edge.

The cosine-type fundamental solution and its quasi-derivative admit the
representations

    phi(x, lambda)    = cos(rho x) + int_0^x K(x, t) cos(rho t) dt,
    phi^[1](x,lambda) = -rho sin(rho x)
                        + rho int_0^x N(x, t) sin(rho t) dt + C(x),

with kernels depending on the potential only.  They are built as series
K = sum K_n, N = sum N_n, C = sum C_n whose leading terms are explicit in
sigma and its squared cumulative, and whose higher terms satisfy a
recursion of iterated integrals over the triangle 0 <= t <= x.  The terms
decay factorially, so a few of them give full accuracy.

All integrals reduce to cumulative trapezoid sums along rows, diagonals
(x - t constant) and anti-diagonals (x + t constant) of the grid, which
keeps each term at O(n_cells^2) work.  Quadrature nodes are aligned with
the jumps of the piecewise-constant cell model of sigma, and node values
take the mean at jumps, so the trapezoid rule keeps its O(h^2) accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _cumtrapz(y, dx):
    """Cumulative trapezoid along the last axis, starting at 0."""
    seg = 0.5 * (y[..., 1:] + y[..., :-1]) * dx
    zero = np.zeros(y.shape[:-1] + (1,), dtype=seg.dtype)
    return np.concatenate([zero, np.cumsum(seg, axis=-1)], axis=-1)


@dataclass
class TransformKernels:
    """Kernels sampled on the grid triangle t <= x of one edge."""
    grid: np.ndarray
    K: np.ndarray      # (k, k), zero above the diagonal
    N: np.ndarray
    C: np.ndarray      # (k,)
    n_terms: int
    term_norms: list


def _base_terms(pot):
    grid = pot.grid
    xi = grid[:, None]
    xj = grid[None, :]
    plus = (xi + xj) / 2.0
    minus = np.abs(xi - xj) / 2.0
    sp = pot(plus)
    sm = pot(minus)
    q2p = pot.cumulative_sq(plus)
    q2m = pot.cumulative_sq(minus)
    q2x = pot.cumulative_sq(grid)
    K0 = 0.5 * sp + 0.5 * sm - 0.5 * q2m - 0.5 * q2p
    N0 = 0.5 * sp - 0.5 * sm + q2x[:, None] + 0.5 * q2m - 0.5 * q2p
    C0 = -q2x
    tri = np.tril(np.ones((grid.size, grid.size), dtype=bool))
    return np.where(tri, K0, 0), np.where(tri, N0, 0), C0


def _node_values(pot):
    """sigma and sigma^2 at the grid nodes, mean-at-jump convention."""
    c = pot.cells
    sig = np.empty(pot.n_cells + 1, dtype=complex)
    sig[0], sig[-1] = c[0], c[-1]
    sig[1:-1] = 0.5 * (c[:-1] + c[1:])
    sig2 = np.empty_like(sig)
    sig2[0], sig2[-1] = c[0] ** 2, c[-1] ** 2
    sig2[1:-1] = 0.5 * (c[:-1] ** 2 + c[1:] ** 2)
    return sig, sig2


def _recursion_step(Kn, Nn, Cn, sig, sig2, sig_half, h):
    k = Kn.shape[0]
    KpN = Kn + Nn
    KmN = Kn - Nn
    KmN_diag = np.diagonal(KmN)
    # row cumulatives R(s, c) = int_0^c K_n(s, t) dt
    R = _cumtrapz(Kn, h)
    Rdiag = np.diagonal(R)

    Knew = np.zeros_like(Kn)
    Nnew = np.zeros_like(Nn)
    tc_full = _cumtrapz(Cn * sig, h)

    lall = np.arange(k)
    for d in range(k):
        ii = np.arange(d, k)
        jj = ii - d
        # I1: integral of (K_n + N_n) sigma along the diagonal
        f1 = np.diagonal(KpN, offset=-d) * sig[d:]
        g1 = 0.5 * _cumtrapz(f1, h)
        # Ja: sigma^2 (R(s,s) - R(s, s - w)), cumulative in s
        rback = np.zeros(k, dtype=complex)
        rback[d:] = np.diagonal(R, offset=-d)
        ja = _cumtrapz(sig2 * (Rdiag - rback), h)[d:]
        # I2 and Jb depend on w = x - t only
        l0 = (d + 1) // 2
        ls = np.arange(l0, d + 1)
        f2 = KmN[ls, d - ls] * sig[ls]
        if d % 2 == 1:
            q = 0.5 * (KmN_diag[(d - 1) // 2] + KmN_diag[(d + 1) // 2]) * sig_half[d]
            head = 0.25 * h * (q + f2[0])
        else:
            head = 0.0
        i2 = 0.5 * (head + np.trapezoid(f2, dx=h))
        lw = lall[: d + 1]
        jb = np.trapezoid(sig2[lw] * R[lw, np.minimum(lw, d - lw)], dx=h)
        const = i2 - 0.5 * jb - tc_full[d]
        Knew[ii, jj] = g1 + const - 0.5 * ja
        Nnew[ii, jj] = -g1 - const + 0.5 * ja

    for a in range(2 * k - 1):
        i0 = (a + 1) // 2
        imax = min(a, k - 1)
        if i0 > imax:
            continue
        ls = np.arange(i0, imax + 1)
        f3 = KmN[ls, a - ls] * sig[ls]
        fc = sig2[ls] * (Rdiag[ls] - R[ls, a - ls])
        if a % 2 == 1:
            q3 = 0.5 * (KmN_diag[(a - 1) // 2] + KmN_diag[(a + 1) // 2]) * sig_half[a]
            head3 = 0.25 * h * (q3 + f3[0])
            headc = 0.25 * h * fc[0]  # integrand vanishes at s = v/2
        else:
            head3 = headc = 0.0
        g3 = 0.5 * (head3 + _cumtrapz(f3, h))
        gc = headc + _cumtrapz(fc, h)
        Knew[ls, a - ls] += g3 + 0.5 * gc
        Nnew[ls, a - ls] += g3 + 0.5 * gc

    Cnew = -_cumtrapz(sig2 * Rdiag + Cn * sig, h)
    tri = np.tril(np.ones((k, k), dtype=bool))
    return np.where(tri, Knew, 0), np.where(tri, Nnew, 0), Cnew


def build_kernels(pot, tol=1e-10, max_terms=16):
    """Sum the kernel series for one edge potential.

    Truncation is adaptive: the factorial decay makes successive term
    norms contract, so the next term is bounded by the last norm times
    the last contraction ratio; summation stops once that bound drops
    below ``tol`` relative to the accumulated kernels.
    """
    grid = pot.grid
    h = pot.h
    sig, sig2 = _node_values(pot)
    sig_half = pot(np.arange(2 * grid.size - 1) * (h / 2.0))

    Kn, Nn, Cn = _base_terms(pot)
    K, N, C = Kn.copy(), Nn.copy(), Cn.copy()

    def norm(a, b, c):
        return max(np.max(np.abs(a)), np.max(np.abs(b)), np.max(np.abs(c)))

    norms = [norm(Kn, Nn, Cn)]
    n = 1
    while n < max_terms:
        Kn, Nn, Cn = _recursion_step(Kn, Nn, Cn, sig, sig2, sig_half, h)
        K += Kn
        N += Nn
        C += Cn
        norms.append(norm(Kn, Nn, Cn))
        total = norm(K, N, C)
        if norms[-1] == 0.0 or total == 0.0:
            n += 1
            break
        ratio = norms[-1] / norms[-2] if norms[-2] > 0 else 0.0
        n += 1
        if norms[-1] * min(ratio, 1.0) < tol * total:
            break
    return TransformKernels(grid=grid, K=K, N=N, C=C, n_terms=n,
                            term_norms=norms)


def _row_weights(k, h):
    """Trapezoid weights for int_0^{x_i} along each row i."""
    W = np.full((k, k), h)
    W[:, 0] = h / 2.0
    idx = np.arange(k)
    W[idx, idx] = h / 2.0
    W = np.tril(W)
    W[0, 0] = 0.0
    return W


def phi_via_kernels(kern, lam):
    """phi(x_i, lambda) from the kernel representation; shape (k, L)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    rho = np.sqrt(lam)
    k = kern.grid.size
    h = kern.grid[1] - kern.grid[0]
    W = _row_weights(k, h)
    cosM = np.cos(np.outer(kern.grid, rho))
    return cosM + (kern.K * W) @ cosM


def phi1_via_kernels(kern, lam):
    """phi^[1](x_i, lambda) from the kernel representation; shape (k, L)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    rho = np.sqrt(lam)
    k = kern.grid.size
    h = kern.grid[1] - kern.grid[0]
    W = _row_weights(k, h)
    sinM = np.sin(np.outer(kern.grid, rho))
    main = -rho[None, :] * sinM
    integral = rho[None, :] * ((kern.N * W) @ sinM)
    return main + integral + kern.C[:, None]


def verify_representation(pot, lam, tol=1e-10, max_terms=16):
    """Max deviation of the kernel representation from the propagator.

    Returns (err_phi, err_phi1), both scaled by exp(|Im rho| x) and, for
    the quasi-derivative, by max(1, |rho|).
    """
    from .propagator import propagate

    kern = build_kernels(pot, tol=tol, max_terms=max_terms)
    sol = propagate(pot, lam)
    lamv = np.atleast_1d(np.asarray(lam, dtype=complex))
    rho = np.sqrt(lamv)
    envelope = np.exp(np.abs(np.imag(rho))[None, :] * pot.grid[:, None])
    err_phi = np.max(np.abs(phi_via_kernels(kern, lamv) - sol.phi) / envelope)
    scale = envelope * np.maximum(1.0, np.abs(rho))[None, :]
    err_phi1 = np.max(np.abs(phi1_via_kernels(kern, lamv) - sol.phi1) / scale)
    return err_phi, err_phi1

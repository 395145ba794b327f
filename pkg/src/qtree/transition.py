"""Vertex transition: moving spectral data past a recovered subtree.

Setting: a vertex v_k carries a pair of characteristic functions of a
subtree E (Dirichlet everywhere, and Neumann at v_k), and the potentials
on the part g of E hanging below the parent vertex v_p are already known.
Splitting E at v_p gives a 2x2 linear system for the characteristic pair
of the complement G_p = E \\ g:

    Delta   = Delta_p^N  Delta^{DD} + Delta_p^D  Delta^{DK},
    Delta_k = Delta_p^N  Delta^{ND} + Delta_p^D  Delta^{NK},

where Delta^{ab} are characteristic functions of g with condition a at
v_k and b at v_p ("K" = matching).  The system determinant is

    A = Delta^{DD} Delta^{NK} - Delta^{ND} Delta^{DK} = -(Delta^*)^2,

with Delta^* the all-Dirichlet characteristic function of g minus the
edge at v_k (A = -1 when g is a single edge).  The identity pins the
poles of the solved pair and is verified in the tests.

Solving pointwise would be unstable off the sampling nodes, so the
remainders

    kappa_p^N(rho) = rho^{B_p - 2} (Delta_p^N(rho^2) - Delta_p^{N,0}(rho^2)),
    kappa_p^D(rho) = rho^{B_p - 1} (Delta_p^D(rho^2) - Delta_p^{D,0}(rho^2)),

which are band limited with type length(G_p), are sampled at the nodes
nu_n = pi n / length(G_p) + i tau and extended to the whole line
Im rho = tau by the cardinal (sinc) series.  B_p counts the boundary
vertices of G_p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charfn import CharFnEvaluator


class TransitionError(RuntimeError):
    """Raised when the transition data fails its decay (gate) checks."""


def four_charfns(tree, pots, edges_g, child, pivot, lam):
    """Characteristic functions of g for the four (child, pivot) conditions.

    ``pots`` maps edge index -> EdgePotential for every edge of g.  All
    other boundary vertices of g carry Dirichlet conditions.  Returns a
    dict with keys "DD", "DK", "ND", "NK" plus "A" (the system
    determinant) and "Astar" (the all-Dirichlet function of g without the
    child edge, whose negated square must equal A).
    """
    ev = CharFnEvaluator(tree, pots, lam)
    edges_g = frozenset(edges_g)
    others = [v for v in tree.boundary_of(edges_g) if v not in (child, pivot)]
    base = {v: "D" for v in others}
    out = {}
    for ck, tag_c in (("D", "D"), ("N", "N")):
        for pk, tag_p in (("D", "D"), ("K", "K")):
            bc = dict(base)
            bc[child] = tag_c
            bc[pivot] = tag_p
            out[ck + pk], _ = ev.evaluate(bc, edges_g)
    out["A_raw"] = out["DD"] * out["NK"] - out["ND"] * out["DK"]
    reduced = edges_g - {child}
    if reduced:
        bc = {v: "D" for v in tree.boundary_of(reduced)}
        bc[pivot] = "D"
        astar, _ = ev.evaluate(bc, reduced)
    else:
        astar = np.ones(np.atleast_1d(np.asarray(lam)).shape, dtype=complex)
    out["Astar"] = astar
    # the raw 2x2 determinant cancels catastrophically at large |lambda|
    # (products of decaying factors); -(Astar)^2 is the same function
    # computed without subtraction, so it is used everywhere downstream
    out["A"] = -astar ** 2
    return out


def solve_transition_system(fns, delta_vals, delta_k_vals):
    """(Delta_p^N, Delta_p^D) from the 2x2 splitting system by Cramer."""
    A = fns["A"]
    upper_n = (delta_vals * fns["NK"] - delta_k_vals * fns["DK"]) / A
    upper_d = (fns["DD"] * delta_k_vals - fns["ND"] * delta_vals) / A
    return upper_n, upper_d


def sampling_nodes(T_upper, tau, n_max):
    """nu_n = pi n / T + i tau for n = -n_max .. n_max."""
    n = np.arange(-n_max, n_max + 1)
    return np.pi * n / T_upper + 1j * tau


def cardinal_series(samples, nu, T_upper, rho):
    """Band-limited extension F(rho) = sum_n F(nu_n) sinc((rho - nu_n) T).

    ``rho`` must lie on the same horizontal line as the nodes, so the
    sinc arguments are real.  Exact for functions of exponential type
    <= T that are square integrable on the line.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=complex))
    arg = (rho[:, None] - nu[None, :]) * T_upper
    if np.max(np.abs(arg.imag)) > 1e-9:
        raise ValueError("evaluation points must lie on the sampling line")
    x = arg.real
    small = np.abs(x) < 1e-8
    sinc = np.where(small, 1.0 - x ** 2 / 6.0,
                    np.sin(np.where(small, 1.0, x)) / np.where(small, 1.0, x))
    return sinc @ samples


def check_sample_decay(samples, tail_frac=0.1, tol=0.05):
    """Tail-energy gate: the outer tail_frac of |samples|^2 on each side
    must carry less than tol of the total energy.

    The default tolerance separates two well-spaced populations: samples
    of genuine remainders computed through recovered potentials keep the
    tail fraction below ~1e-3, while non-band-limited data puts at least
    the uniform share (~0.1) into the tails."""
    e = np.abs(samples) ** 2
    total = float(np.sum(e))
    if total == 0.0:
        return True
    m = max(1, int(tail_frac * samples.size / 2))
    tail = float(np.sum(e[:m]) + np.sum(e[-m:]))
    return tail < tol * total


@dataclass
class TransitionResult:
    """Characteristic pair of the upper subtree on the line Im rho = tau."""
    tree: object
    pivot: int
    upper: frozenset
    T_upper: float
    B_p: int
    tau: float
    nu: np.ndarray
    kappa_n: np.ndarray
    kappa_d: np.ndarray

    def _zero_pair(self, lam):
        ev0 = CharFnEvaluator(self.tree, None, lam)
        bc_d = {v: "D" for v in self.tree.boundary_of(self.upper)}
        bc_n = dict(bc_d)
        bc_n[self.pivot] = "N"
        d0, _ = ev0.evaluate(bc_d, self.upper)
        n0, _ = ev0.evaluate(bc_n, self.upper)
        return n0, d0

    def delta_pair(self, rho):
        """(Delta_p^N, Delta_p^D)(rho^2) for rho on the line Im rho = tau."""
        rho = np.atleast_1d(np.asarray(rho, dtype=complex))
        n0, d0 = self._zero_pair(rho ** 2)
        kn = cardinal_series(self.kappa_n, self.nu, self.T_upper, rho)
        kd = cardinal_series(self.kappa_d, self.nu, self.T_upper, rho)
        return (n0 + rho ** (2 - self.B_p) * kn,
                d0 + rho ** (1 - self.B_p) * kd)

    def weyl_transform(self, grid):
        """Mcal_p(theta) of the upper subtree at the pivot, on the contour."""
        if abs(grid.tau - self.tau) > 1e-12:
            raise ValueError("contour height differs from the sampling line")
        theta = grid.nodes
        un, ud = self.delta_pair(theta)
        n0, d0 = self._zero_pair(theta ** 2)
        return (-un / ud + n0 / d0) / theta


def run_transition(tree, pots, edges, child, delta_fn, delta_k_fn, tau,
                   n_max=2048, tail_tol=1e-8, gate_tol=0.05, n_start=256,
                   window=np.inf):
    """Compute the upper-subtree pair; adaptive number of sampling nodes.

    ``delta_fn(rho)`` and ``delta_k_fn(rho)`` return the characteristic
    pair of the current subtree at lambda = rho^2; they are only called
    on the line Im rho = tau, so sampled data works as input.  ``window``
    bounds |Re rho| where those callables are trustworthy (finite for
    data reconstructed from finitely many samples): sampling never
    reaches past it.  The node count doubles until the outer tail of the
    remainder samples is negligible (tail_tol), then the decay gate
    (gate_tol) is applied.  Raises TransitionError if the gate rejects
    the data.
    """
    edges = frozenset(edges)
    pivot = tree.parent[child]
    g = frozenset(j for j in tree.descendant_edges(pivot) if j in edges)
    upper = edges - g
    if not g or not upper:
        raise ValueError(f"vertex {pivot} does not split edges {sorted(edges)}")
    T_upper = tree.subtree_length(upper)
    B_p = len(tree.boundary_of(upper))
    n_cap = n_max if not np.isfinite(window) else \
        min(n_max, int(window * T_upper / np.pi))
    if n_cap < 8:
        raise TransitionError(
            f"transition at vertex {pivot}: data window {window:.3g} is too "
            "narrow to sample the upper subtree")

    n = min(n_start, n_cap)
    while True:
        nu = sampling_nodes(T_upper, tau, n)
        mu = nu ** 2
        fns = four_charfns(tree, pots, g, child, pivot, mu)
        un, ud = solve_transition_system(fns, delta_fn(nu), delta_k_fn(nu))
        ev0 = CharFnEvaluator(tree, None, mu)
        bc_d = {v: "D" for v in tree.boundary_of(upper)}
        bc_n = dict(bc_d)
        bc_n[pivot] = "N"
        d0, _ = ev0.evaluate(bc_d, upper)
        n0, _ = ev0.evaluate(bc_n, upper)
        kappa_n = nu ** (B_p - 2) * (un - n0)
        kappa_d = nu ** (B_p - 1) * (ud - d0)
        energy = np.abs(kappa_n) ** 2 + np.abs(kappa_d) ** 2
        total = float(np.sum(energy))
        m = max(1, energy.size // 20)
        tail = float(np.sum(energy[:m]) + np.sum(energy[-m:]))
        if total == 0.0 or tail < tail_tol * total or n >= n_cap:
            break
        n = min(2 * n, n_cap)
    if not (check_sample_decay(kappa_n, tol=gate_tol)
            and check_sample_decay(kappa_d, tol=gate_tol)):
        raise TransitionError(
            f"transition at vertex {pivot}: remainder samples do not decay; "
            "data is not consistent with a band-limited remainder")
    return TransitionResult(tree=tree, pivot=pivot, upper=upper,
                            T_upper=T_upper, B_p=B_p, tau=tau, nu=nu,
                            kappa_n=kappa_n, kappa_d=kappa_d)

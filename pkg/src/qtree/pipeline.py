"""Forward and inverse pipeline on the whole tree.

Forward direction: a potential is mapped to its spectral data, i.e. the
Dirichlet characteristic function Delta and the functions Delta_k with a
Neumann condition at one non-root boundary vertex v_k.  The data is
stored through the band-limited remainders

    kappa_0(rho) = rho^{b-1} (Delta      - Delta^0)(rho^2),
    kappa_k(rho) = rho^{b-2} (Delta_k    - Delta_k^0)(rho^2),

sampled at nu_n = pi n / L + i tau (L the total tree length, b the number
of boundary vertices), from which the data extends to the whole line
Im rho = tau by the cardinal series.

Inverse direction: each non-root boundary vertex starts a chain.  First
its edge is recovered from the Weyl transform of the data; whenever every
edge below an interior vertex is known, a vertex transition replaces the
data by the characteristic pair of the remaining upper subtree, the edge
above the vertex is recovered from the pair's Weyl transform, and the
chain continues toward the root.

A decay gate guards both directions: remainder samples of genuine
spectral data decay (Paley-Wiener), so data whose samples do not decay is
rejected with GateError before any reconstruction is attempted.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boundary_inverse import recover_edge, self_calibrate, taper_window
from .charfn import CharFnEvaluator, char_fn, dirichlet_bc
from .config import RunConfig
from .contour import build_contour, make_grid
from .potential import TreePotential
from .transition import (TransitionError, cardinal_series, check_sample_decay,
                         run_transition, sampling_nodes)
from .tree import validate_tree

log = logging.getLogger("qtree")

DATA_FORMAT = "qtree-spectral/1"


class GateError(TransitionError):
    """Spectral data rejected by the band-limitedness (decay) gate."""


class ExactData:
    """Spectral data evaluated on demand from a known potential."""

    def __init__(self, tree, pot, tau=None):
        self.tree = tree
        self.pot = pot
        self.tau = tau

    def delta(self, rho):
        rho = np.asarray(rho, dtype=complex)
        return char_fn(self.tree, rho ** 2, pot=self.pot,
                       bc=dirichlet_bc(self.tree))[0]

    def delta_k(self, k, rho):
        rho = np.asarray(rho, dtype=complex)
        return char_fn(self.tree, rho ** 2, pot=self.pot,
                       bc=dirichlet_bc(self.tree, neumann_at=[k]))[0]


class SampledData:
    """Spectral data given by remainder samples on the line Im rho = tau.

    ``kappa0`` are the samples of the weighted Dirichlet remainder and
    ``kappa[k]`` those of the vertex-v_k remainder, both at the nodes
    ``nu`` (conjugate-symmetric grid pi n / L + i tau).
    """

    def __init__(self, tree, tau, nu, kappa0, kappa):
        self.tree = tree
        self.tau = float(tau)
        self.nu = np.asarray(nu, dtype=complex)
        self.kappa0 = np.asarray(kappa0, dtype=complex)
        self.kappa = {int(k): np.asarray(v, dtype=complex)
                      for k, v in kappa.items()}
        self.L = tree.total_length

    def _zero(self, rho, k=None):
        bc = dirichlet_bc(self.tree) if k is None else \
            dirichlet_bc(self.tree, neumann_at=[k])
        vals, _ = char_fn(self.tree, rho ** 2, bc=bc)
        return vals

    def delta(self, rho):
        rho = np.asarray(rho, dtype=complex)
        rem = cardinal_series(self.kappa0, self.nu, self.L, rho)
        return self._zero(rho) + rho ** (1 - self.tree.b) * rem

    def delta_k(self, k, rho):
        rho = np.asarray(rho, dtype=complex)
        rem = cardinal_series(self.kappa[k], self.nu, self.L, rho)
        return self._zero(rho, k) + rho ** (2 - self.tree.b) * rem

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        def pack(a):
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        t = self.tree
        return {
            "format": DATA_FORMAT,
            "tree": {"m": t.m,
                     "parents": [t.parent[j] for j in t.edges],
                     "lengths": [t.lengths[j] for j in t.edges]},
            "tau": self.tau,
            "n_nodes": int((self.nu.size - 1) // 2),
            "kappa0": pack(self.kappa0),
            "kappa": {str(k): pack(v) for k, v in self.kappa.items()},
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != DATA_FORMAT:
            raise ValueError(f"unsupported data format {d.get('format')!r}; "
                             f"expected {DATA_FORMAT}")

        def unpack(blob):
            return np.asarray(blob["re"]) + 1j * np.asarray(blob["im"])

        tree = validate_tree(d["tree"])
        tau = float(d["tau"])
        nu = sampling_nodes(tree.total_length, tau, int(d["n_nodes"]))
        kappa0 = unpack(d["kappa0"])
        kappa = {int(k): unpack(v) for k, v in d["kappa"].items()}
        if kappa0.size != nu.size or any(v.size != nu.size
                                         for v in kappa.values()):
            raise ValueError("sample arrays do not match the node count")
        if sorted(kappa) != sorted(tree.boundary_nonroot):
            raise ValueError("data must carry one remainder per non-root "
                             "boundary vertex")
        return cls(tree, tau, nu, kappa0, kappa)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def forward_data(tree, pot, config=RunConfig(), grid=None):
    """Sample the spectral data of (tree, pot) on a certified line.

    The number of sampling nodes doubles until the tails of all remainder
    series are negligible.  Returns a SampledData instance.
    """
    if grid is None:
        grid = build_contour(tree, pot, tau0=config.tau0,
                             tau_cap=config.tau_cap,
                             half_width=config.half_width,
                             step=config.step(tree))
    tau = grid.tau
    L = tree.total_length
    b = tree.b
    n = config.n_start
    while True:
        nu = sampling_nodes(L, tau, n)
        ev = CharFnEvaluator(tree, pot, nu ** 2)
        ev0 = CharFnEvaluator(tree, None, nu ** 2)
        d, _ = ev.evaluate(dirichlet_bc(tree))
        d0, _ = ev0.evaluate(dirichlet_bc(tree))
        kappa0 = nu ** (b - 1) * (d - d0)
        kappa = {}
        for k in tree.boundary_nonroot:
            dk, _ = ev.evaluate(dirichlet_bc(tree, neumann_at=[k]))
            dk0, _ = ev0.evaluate(dirichlet_bc(tree, neumann_at=[k]))
            kappa[k] = nu ** (b - 2) * (dk - dk0)
        energy = np.abs(kappa0) ** 2
        for v in kappa.values():
            energy = energy + np.abs(v) ** 2
        total = float(np.sum(energy))
        m = max(1, energy.size // 20)
        tail = float(np.sum(energy[:m]) + np.sum(energy[-m:]))
        if total == 0.0 or tail < config.tail_tol * total or n >= config.n_max:
            break
        n *= 2
    log.info("forward data: tau=%g, %d sampling nodes", tau, nu.size)
    return SampledData(tree, tau, nu, kappa0, kappa)


def check_data_gate(data, config=RunConfig()):
    """Raise GateError unless all remainder samples decay (Paley-Wiener)."""
    if isinstance(data, ExactData):
        return
    bad = [name for name, s in
           [("kappa0", data.kappa0)] + [(f"kappa{k}", v)
                                        for k, v in sorted(data.kappa.items())]
           if not check_sample_decay(s, tol=config.gate_tol)]
    if bad:
        raise GateError(
            "spectral data rejected: remainder samples do not decay "
            f"({', '.join(bad)}); data is not consistent with an L2 "
            "potential on this tree")


def _data_weyl_transform(data, k, grid):
    """Mcal_k(theta) of the full tree from the data, on the contour."""
    theta = grid.nodes
    ev0 = CharFnEvaluator(data.tree, None, theta ** 2)
    d0, _ = ev0.evaluate(dirichlet_bc(data.tree))
    n0, _ = ev0.evaluate(dirichlet_bc(data.tree, neumann_at=[k]))
    return (-data.delta_k(k, theta) / data.delta(theta) + n0 / d0) / theta


def _contour_for(data, tree, config):
    if data.tau is not None:
        # sampled data pins the line; the grid must sit on it
        return make_grid(data.tau, config.half_width, config.step(tree))
    grid = build_contour(tree, data.pot, tau0=config.tau0,
                         tau_cap=config.tau_cap,
                         half_width=config.half_width,
                         step=config.step(tree))
    data.tau = grid.tau
    return grid


def reconstruct(data, config=RunConfig()):
    """Recover the potential on every edge from spectral data.

    Returns (TreePotential, report) where the report records the order of
    operations, transition statistics and the contour height.
    """
    tree = data.tree
    check_data_gate(data, config)
    grid = _contour_for(data, tree, config)
    report = {"tau": grid.tau, "contour_nodes": int(grid.nodes.size),
              "steps": []}

    pots = {}
    # chain state: vertex v -> (subtree edges, Delta fn,
    # Delta-with-N-at-v fn, |Re rho| window where the pair is trustworthy)
    pairs = {}
    if isinstance(data, SampledData):
        window = float(data.nu[-1].real)
    else:
        window = np.inf

    win = taper_window(grid, config.taper_frac)

    def recover_first(k):
        mcal = _data_weyl_transform(data, k, grid) * win
        rec = recover_edge(tree, k, grid, mcal, n_cells=config.n_cells,
                           cond_warn=config.cond_warn)
        # errors in the first-generation edges are the ones the vertex
        # transitions amplify, so they get the calibration pass
        return k, self_calibrate(rec, grid, config.taper_frac)

    first = sorted(tree.boundary_nonroot)
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(recover_first, first))
    else:
        results = [recover_first(k) for k in first]
    for k, rec in results:
        pots[k] = rec
        pairs[k] = (frozenset(tree.edges),
                    data.delta,
                    lambda rho, k=k: data.delta_k(k, rho),
                    window)
        report["steps"].append({"kind": "boundary", "edge": k})
        log.info("recovered boundary edge %d", k)

    while len(pots) < tree.m:
        progress = False
        for p in sorted(tree.internal):
            if p == tree.root or p in pots:
                continue
            below = tree.descendant_edges(p)
            if not below <= set(pots):
                continue
            children = sorted(j for j in tree.edges
                              if tree.parent[j] == p and j in pairs)
            if not children:
                continue
            last_err = None
            for child in children:
                edges_e, dfn, nfn, pair_win = pairs[child]
                try:
                    res = run_transition(tree, pots, edges_e, child, dfn, nfn,
                                         tau=grid.tau, n_max=config.n_max,
                                         tail_tol=config.tail_tol,
                                         gate_tol=config.gate_tol,
                                         n_start=config.n_start,
                                         window=pair_win)
                except TransitionError as exc:
                    log.warning("transition at %d via child edge %d "
                                "rejected: %s", p, child, exc)
                    last_err = exc
                    continue
                break
            else:
                raise last_err
            mcal = res.weyl_transform(grid) * win
            pots[p] = recover_edge(tree, p, grid, mcal,
                                   n_cells=config.n_cells,
                                   cond_warn=config.cond_warn)
            pairs[p] = (res.upper,
                        lambda rho, r=res: r.delta_pair(rho)[1],
                        lambda rho, r=res: r.delta_pair(rho)[0],
                        float(res.nu[-1].real))
            report["steps"].append({"kind": "transition", "vertex": p,
                                    "child": child, "edge": p,
                                    "samples": int(res.nu.size)})
            log.info("transition at vertex %d (child edge %d), "
                     "recovered edge %d", p, child, p)
            progress = True
        if not progress:
            raise RuntimeError("reconstruction stalled; tree traversal "
                               "could not reach all edges")
    return TreePotential(tree, pots), report


def roundtrip(tree, pot, config=RunConfig()):
    """Forward map then reconstruction; returns (recovered, errors, report).

    ``errors`` maps edge index to the relative L2 reconstruction error
    (absolute error where the true edge potential vanishes).
    """
    data = forward_data(tree, pot, config)
    rec, report = reconstruct(data, config)
    errors = {}
    for j in tree.edges:
        diff = rec[j].values - pot[j](rec[j].grid)
        err = float(np.sqrt(np.trapezoid(np.abs(diff) ** 2, dx=rec[j].h)))
        ref = pot[j].l2_norm()
        errors[j] = err / ref if ref > 1e-12 else err
    report["errors"] = errors
    return rec, errors, report


def _sinc_sum(coeffs, centers, L, rho):
    """sum_n c_n sin((rho - t_n) L) / ((rho - t_n) L) for complex rho."""
    rho = np.atleast_1d(np.asarray(rho, dtype=complex))
    z = (rho[:, None] - centers[None, :]) * L
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    vals = np.where(small, 1.0 - z ** 2 / 6.0, np.sin(zs) / zs)
    return vals @ coeffs


def pw_perturbation(tree, amplitude, seed, n_modes=24):
    """A band-limited data perturbation g with unit L2 norm on the line.

    g is an even real combination of cardinal functions at the real nodes
    pi n / L, so it has exponential type L: adding amplitude * g to the
    Dirichlet remainder keeps the data inside the admissible class.
    Returns a callable g(rho) scaled by ``amplitude``.
    """
    L = tree.total_length
    rng = np.random.default_rng(seed)
    c_half = rng.standard_normal(n_modes + 1)
    c = np.concatenate([c_half[:0:-1], c_half])
    centers = np.pi * np.arange(-n_modes, n_modes + 1) / L
    # cardinal functions at spacing pi/L are orthogonal with norm^2 = pi/L
    c = c / np.sqrt(np.pi / L * np.sum(c ** 2))

    def g(rho):
        return amplitude * _sinc_sum(c, centers, L, rho)

    return g


def perturb_data(data, g):
    """New SampledData with the Dirichlet remainder shifted by g(nu)."""
    return SampledData(data.tree, data.tau, data.nu,
                       data.kappa0 + g(data.nu), dict(data.kappa))


def stability_sweep(tree, pot, amplitudes, config=RunConfig(), seed=None):
    """Reconstruction response to data perturbations of decreasing size.

    For each amplitude a the Dirichlet remainder is shifted by a unit-norm
    band-limited bump scaled by a (so the spectral distance of the data is
    exactly a) and the potential is reconstructed.  Returns a report with
    per-edge response ratios ||sigma_rec - sigma_base|| / a; a stable
    pipeline keeps each edge's ratios in a bounded band as a -> 0.
    """
    if seed is None:
        seed = config.seed
    base_data = forward_data(tree, pot, config)
    base_rec, _ = reconstruct(base_data, config)
    rows = []
    for a in amplitudes:
        g = pw_perturbation(tree, a, seed)
        rec, _ = reconstruct(perturb_data(base_data, g), config)
        ratios = {}
        for j in tree.edges:
            diff = rec[j].values - base_rec[j].values
            err = float(np.sqrt(np.trapezoid(np.abs(diff) ** 2,
                                             dx=rec[j].h)))
            ratios[j] = err / a
        rows.append({"amplitude": float(a), "ratios": ratios})
        log.info("sweep amplitude %g: ratios %s", a,
                 {j: round(r, 3) for j, r in ratios.items()})
    return {"tau": base_data.tau, "seed": seed, "rows": rows}

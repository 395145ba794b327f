"""Per-edge L2 potentials on a metric tree.

A potential sigma_j lives on [0, T_j] and is stored as samples on a uniform
grid x_0 = 0 < ... < x_M = T_j.  The function itself is the piecewise-
constant cell model: on cell [x_i, x_{i+1}] the value is the midpoint value
(average of the two endpoint samples).  The same cell model drives the
propagator's exact per-cell exponentials and the transformation-kernel
quadratures, so there is a single consistent notion of "the potential".
"""

from __future__ import annotations

import csv
import numpy as np


class PotentialError(ValueError):
    """Raised for malformed potential data."""


class EdgePotential:
    """Complex L2 potential on one edge, sampled on a uniform grid."""

    def __init__(self, edge, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=complex)
        if grid.ndim != 1 or grid.size < 9:
            raise PotentialError(f"edge {edge}: grid must have at least 9 points (M >= 8)")
        if values.shape != grid.shape:
            raise PotentialError(f"edge {edge}: grid/value shape mismatch")
        if grid[0] != 0.0:
            raise PotentialError(f"edge {edge}: grid must start at 0")
        steps = np.diff(grid)
        if not np.all(steps > 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise PotentialError(f"edge {edge}: grid must be uniform and increasing")
        self.edge = int(edge)
        self.grid = grid
        self.values = values
        self.length = float(grid[-1])
        self.n_cells = grid.size - 1
        self.h = self.length / self.n_cells
        # Constant value per cell (midpoint of the linear interpolant).
        self.cells = 0.5 * (values[:-1] + values[1:])

    @classmethod
    def zero(cls, edge, length, n_cells=256):
        grid = np.linspace(0.0, length, n_cells + 1)
        return cls(edge, grid, np.zeros(n_cells + 1, dtype=complex))

    @classmethod
    def from_function(cls, edge, length, fn, n_cells=256):
        grid = np.linspace(0.0, length, n_cells + 1)
        return cls(edge, grid, np.asarray([fn(x) for x in grid], dtype=complex))

    def __call__(self, x):
        """Evaluate the cell model at arbitrary points.

        Values at interior cell boundaries are the average of the adjacent
        cells, so aligned trapezoid sums integrate the model exactly.
        """
        x = np.asarray(x, dtype=float)
        scaled = x / self.h
        idx = np.floor(scaled).astype(int)
        on_node = np.isclose(scaled, np.round(scaled), atol=1e-12)
        idx = np.where(on_node, np.round(scaled).astype(int), idx)
        node_idx = np.clip(idx, 0, self.n_cells)
        cell_idx = np.clip(idx, 0, self.n_cells - 1)
        node_val = np.empty(node_idx.shape, dtype=complex)
        interior = on_node & (node_idx > 0) & (node_idx < self.n_cells)
        node_val[...] = self.cells[np.clip(node_idx, 0, self.n_cells - 1)]
        # endpoint nodes take the single adjacent cell value
        node_val = np.where(node_idx >= self.n_cells, self.cells[-1], node_val)
        node_val = np.where(interior,
                            0.5 * (self.cells[np.clip(node_idx - 1, 0, self.n_cells - 1)]
                                   + self.cells[np.clip(node_idx, 0, self.n_cells - 1)]),
                            node_val)
        return np.where(on_node, node_val, self.cells[cell_idx])

    def cumulative_sq(self, x):
        """Exact cumulative integral of |cell model|^2 ... actually of sigma^2
        (no conjugation; the kernels use sigma^2, not |sigma|^2)."""
        csum = np.concatenate([[0.0 + 0.0j], np.cumsum(self.cells ** 2) * self.h])
        x = np.asarray(x, dtype=float)
        scaled = np.clip(x / self.h, 0.0, self.n_cells)
        idx = np.minimum(np.floor(scaled).astype(int), self.n_cells - 1)
        frac = scaled - idx
        return csum[idx] + frac * self.h * self.cells[idx] ** 2

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.cells) ** 2) * self.h))

    def refine(self, factor=2):
        """Resample the cell model on a factor-times finer grid.

        The refined potential represents the same piecewise-constant
        function (cells are subdivided, values repeated)."""
        fine_cells = np.repeat(self.cells, factor)
        grid = np.linspace(0.0, self.length, factor * self.n_cells + 1)
        # node samples are informational here; cells are set directly below
        values = np.concatenate([[fine_cells[0]], fine_cells])
        pot = EdgePotential.__new__(EdgePotential)
        pot.edge = self.edge
        pot.grid = grid
        pot.values = values
        pot.length = self.length
        pot.n_cells = factor * self.n_cells
        pot.h = self.length / pot.n_cells
        pot.cells = fine_cells
        return pot

    def is_real(self, tol=1e-14):
        return bool(np.max(np.abs(self.values.imag)) <= tol)


class TreePotential:
    """Map edge index -> EdgePotential covering all m edges."""

    def __init__(self, tree, edge_potentials):
        missing = [j for j in tree.edges if j not in edge_potentials]
        if missing:
            raise PotentialError(f"missing potentials for edges {missing}")
        for j in tree.edges:
            pot = edge_potentials[j]
            if abs(pot.length - tree.lengths[j]) > 1e-9 * tree.lengths[j]:
                raise PotentialError(
                    f"edge {j}: potential length {pot.length} != edge length {tree.lengths[j]}")
        self.tree = tree
        self.edges = {j: edge_potentials[j] for j in tree.edges}

    @classmethod
    def zero(cls, tree, n_cells=256):
        return cls(tree, {j: EdgePotential.zero(j, tree.lengths[j], n_cells)
                          for j in tree.edges})

    @classmethod
    def from_functions(cls, tree, fns, n_cells=256):
        """fns: map edge -> callable, or a single callable used on every edge."""
        if callable(fns):
            fns = {j: fns for j in tree.edges}
        return cls(tree, {j: EdgePotential.from_function(j, tree.lengths[j],
                                                         fns[j], n_cells)
                          for j in tree.edges})

    def __getitem__(self, j):
        return self.edges[j]

    def l2_norm(self):
        return float(np.sqrt(sum(self.edges[j].l2_norm() ** 2 for j in self.tree.edges)))

    def restrict(self, edge_subset):
        """L2 norm over a subset of edges (used by the stability estimates)."""
        return float(np.sqrt(sum(self.edges[j].l2_norm() ** 2 for j in edge_subset)))

    def scaled(self, c):
        return TreePotential(self.tree, {
            j: EdgePotential(j, p.grid, c * p.values) for j, p in self.edges.items()})

    def __add__(self, other):
        return TreePotential(self.tree, {
            j: EdgePotential(j, p.grid, p.values + other.edges[j].values)
            for j, p in self.edges.items()})

    def __sub__(self, other):
        return TreePotential(self.tree, {
            j: EdgePotential(j, p.grid, p.values - other.edges[j].values)
            for j, p in self.edges.items()})


def l2_norm(p):
    """L2 norm of an EdgePotential or TreePotential."""
    return p.l2_norm()


def ball_membership(p, radius, tol=1e-12):
    """True iff ||p||_{L2(G)} <= radius (within quadrature tolerance)."""
    if radius <= 0:
        raise PotentialError("ball radius must be positive")
    return p.l2_norm() <= radius * (1.0 + tol) + tol


def random_potential(tree, seed, n_cells=256, n_modes=4, norm=1.0):
    """Seeded smooth random real potential of prescribed L2(G) norm.

    Each edge gets a low-order random sine/cosine sum; the whole tree
    potential is then rescaled to the requested norm exactly (under the
    cell-model quadrature).
    """
    rng = np.random.default_rng(seed)
    pots = {}
    for j in tree.edges:
        T = tree.lengths[j]
        a = rng.standard_normal(n_modes)
        bcf = rng.standard_normal(n_modes)
        grid = np.linspace(0.0, T, n_cells + 1)
        vals = np.zeros(n_cells + 1)
        for n in range(n_modes):
            vals += a[n] * np.sin((n + 1) * np.pi * grid / T)
            vals += bcf[n] * np.cos(n * np.pi * grid / T)
        pots[j] = EdgePotential(j, grid, vals)
    pot = TreePotential(tree, pots)
    nrm = pot.l2_norm()
    if nrm == 0.0:
        return pot
    return pot.scaled(norm / nrm)


def perturb(p, amplitude, seed):
    """p + amplitude * eta with eta a seeded unit-norm random potential."""
    if amplitude < 0:
        raise PotentialError("amplitude must be nonnegative")
    if amplitude == 0.0:
        return TreePotential(p.tree, dict(p.edges))
    n_cells = p.edges[p.tree.edges[0]].n_cells
    eta = random_potential(p.tree, seed, n_cells=n_cells, norm=1.0)
    return p + eta.scaled(amplitude)


# -- file format ------------------------------------------------------------

CSV_HEADER = ["edge_index", "x", "re_sigma", "im_sigma"]


def save_potential(path, pot):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for j in pot.tree.edges:
            ep = pot.edges[j]
            for x, v in zip(ep.grid, ep.values):
                writer.writerow([j, repr(float(x)), repr(float(v.real)),
                                 repr(float(v.imag))])


def load_potential(path, tree):
    """Read the per-edge potential CSV; one block per edge, sorted by x."""
    blocks = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise PotentialError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                j = int(row[0])
                x = float(row[1])
                val = complex(float(row[2]), float(row[3]))
            except (ValueError, IndexError) as exc:
                raise PotentialError(f"{path}:{lineno}: bad row {row!r}") from exc
            blocks.setdefault(j, []).append((x, val))
    pots = {}
    for j, rows in blocks.items():
        xs = np.array([r[0] for r in rows])
        vs = np.array([r[1] for r in rows])
        if np.any(np.diff(xs) <= 0):
            raise PotentialError(f"{path}: edge {j} block not sorted by x")
        pots[j] = EdgePotential(j, xs, vs)
    return TreePotential(tree, pots)

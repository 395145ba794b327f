"""Run configuration shared by the pipeline and the command line tool."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class RunConfig:
    """Numerical parameters of a forward/inverse run.

    n_cells            reconstruction resolution per edge (grid intervals)
    tau0, tau_cap      initial / maximal contour height (doubling search)
    half_width         truncation of the contour integrals in Re rho
    step_per_length    contour step is pi / (step_per_length * longest edge)
    n_start, n_max     sampling-node counts for remainder series (doubling)
    tail_tol           relative tail energy at which node doubling stops
    gate_tol           tail-energy threshold of the band-limitedness gate
    taper_frac         cosine roll-off fraction of the contour window
    cond_warn          condition number that triggers a solver warning
    jobs               worker threads for independent edge recoveries
    seed               seed for randomized helpers (perturbations, sweeps)
    """

    n_cells: int = 128
    tau0: float = 2.0
    tau_cap: float = 32.0
    half_width: float = 48.0
    step_per_length: float = 16.0
    n_start: int = 256
    n_max: int = 2048
    tail_tol: float = 1e-8
    gate_tol: float = 0.05
    taper_frac: float = 0.3
    cond_warn: float = 1e8
    jobs: int = 1
    seed: int = 0

    def step(self, tree):
        """Contour step: resolves the fastest Weyl-data oscillation, which
        is set by the longest single edge (longer-range components are
        exponentially damped on the line Im rho = tau)."""
        return float(3.141592653589793 / (self.step_per_length
                                          * max(tree.lengths.values())))

    def refined(self, factor=2):
        """Copy with ``factor`` times the resolution.

        The spatial grid and the sampling-node budget scale linearly; the
        contour window scales with sqrt(factor) because its cost is
        quadratic in the width while the truncation error it controls
        falls off superlinearly.
        """
        return dataclasses.replace(
            self, n_cells=self.n_cells * factor,
            half_width=self.half_width * float(factor) ** 0.5,
            n_max=self.n_max * factor)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def digest(self):
        """Short stable hash identifying the numerical parameters."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

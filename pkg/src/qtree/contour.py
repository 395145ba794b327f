"""Integration contours in the spectral half-plane.

The inverse-problem integrals run along the horizontal line
``gamma = {s + i tau : s real}`` in the rho-plane, traversed from
``s = +inf`` to ``s = -inf``.  The height tau must be chosen so that no
zero of the relevant characteristic function lies on or above the line;
this is certified with the argument principle on a rectangle sitting on
top of gamma.  For real potentials all zeros are real and the default
height works immediately; for complex potentials the height doubles until
the count comes back zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charfn import char_fn, dirichlet_bc


class ContourError(RuntimeError):
    """Raised when no admissible contour height can be certified."""


@dataclass
class ContourGrid:
    """Trapezoid discretization of the line Im rho = tau.

    ``s`` is the increasing grid of real parts, ``nodes = s + i tau``.
    The contour orientation runs from s = +inf to s = -inf, so the signed
    integral is minus the trapezoid sum; ``integrate`` applies the sign.
    """
    tau: float
    s: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        """Contour integral of values sampled at the nodes (oriented)."""
        return -np.sum(self.weights * values, axis=-1)

    @property
    def half_width(self):
        return float(self.s[-1])


def make_grid(tau, half_width, step):
    n = int(np.ceil(half_width / step))
    s = np.linspace(-n * step, n * step, 2 * n + 1)
    w = np.full(s.shape, float(step))
    w[0] = w[-1] = step / 2.0
    return ContourGrid(tau=float(tau), s=s, nodes=s + 1j * tau, weights=w)


def _polyline(vertices, n_per_side):
    ts = []
    for a, b in zip(vertices, list(vertices[1:]) + [vertices[0]]):
        seg = a + (b - a) * np.linspace(0.0, 1.0, n_per_side, endpoint=False)
        ts.append(seg)
    pts = np.concatenate(ts)
    return np.concatenate([pts, pts[:1]])


def winding_number(fn, vertices, n_per_side=64, max_refine=14):
    """Zeros minus poles of fn inside the closed polygon, by phase tracking.

    fn must accept a complex array.  Segments whose phase increment
    exceeds pi/2 are bisected until the phase is resolved; if refinement
    does not settle (a zero sits on the path) ContourError is raised.
    """
    pts = _polyline(list(vertices), n_per_side)
    vals = fn(pts)
    for _ in range(max_refine):
        if np.any(vals == 0) or not np.all(np.isfinite(vals)):
            raise ContourError("characteristic function vanished on the path")
        dphase = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphase) > np.pi / 2
        if not np.any(bad):
            total = np.sum(dphase) / (2 * np.pi)
            return int(np.rint(total))
        mid = 0.5 * (pts[:-1][bad] + pts[1:][bad])
        mid_vals = fn(mid)
        order = np.argsort(np.concatenate(
            [np.arange(pts.size, dtype=float),
             np.flatnonzero(bad) + 0.5]))
        pts = np.concatenate([pts, mid])[order]
        vals = np.concatenate([vals, mid_vals])[order]
    raise ContourError("phase tracking did not converge; zero on or near the path")


def certify_height(fn, tau, half_width, strip_height=6.0, phase_rate=1.0):
    """True iff fn has no zeros in [-S, S] x [tau, tau + strip_height].

    ``phase_rate`` bounds |d arg fn / d rho| (the exponential type of fn;
    the total tree length for characteristic functions).  The initial
    path sampling must resolve that rate: the adaptive refinement inside
    the winding count cannot recover phase steps aliased past 2 pi.
    """
    S = half_width
    rect = [-S + 1j * tau, S + 1j * tau,
            S + 1j * (tau + strip_height), -S + 1j * (tau + strip_height)]
    longest = max(2 * S, strip_height)
    n_per_side = max(64, int(np.ceil(longest * phase_rate * 4 / np.pi)))
    try:
        return winding_number(fn, rect, n_per_side=n_per_side) == 0
    except ContourError:
        return False


def build_contour(tree, pot, tau0=2.0, tau_cap=32.0, half_width=None,
                  step=None, strip_height=6.0):
    """Certified contour for the Weyl functions of (tree, pot).

    The Weyl functions share the Dirichlet characteristic function Delta
    as denominator; the returned grid sits at the smallest height
    tau0 * 2^k (k >= 0, capped) for which Delta has no zeros on or above
    the line within the window.
    """
    if step is None:
        step = np.pi / (8.0 * tree.total_length)
    if half_width is None:
        half_width = 48.0

    bc = dirichlet_bc(tree)

    def delta(rho):
        vals, _ = char_fn(tree, rho ** 2, pot=pot, bc=bc)
        return vals

    tau = tau0
    while tau <= tau_cap:
        if certify_height(delta, tau, half_width + 1.0, strip_height,
                          phase_rate=tree.total_length):
            return make_grid(tau, half_width, step)
        tau *= 2.0
    raise ContourError(
        f"no admissible contour height found up to tau = {tau_cap}")

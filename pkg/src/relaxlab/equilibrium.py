"""Reference Kruzkov solver for the infinite-strength limit equation.

The limit dynamics d(w + A(w))/dt + d f(w)/dx = 0 become a plain scalar
law for z = w + A(w): dz/dt + d F(z)/dx = 0 with F(z) = f(W(z)), where
W inverts the strictly increasing map w -> w + A(w).  F inherits
monotonicity (F' = f'/(1 + A') >= 0) and Lip(F) <= Lip(f), so Godunov
upwinding on z with the convection CFL gives the entropy solution that
the split schemes are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, _GL_NODES, _GL_WEIGHTS
from .model import FluxSpec, EquilibriumMap, invert_monotone_array
from .transport import CflPolicy


@dataclass(frozen=True)
class EquilibriumRun:
    emap: EquilibriumMap
    flux: FluxSpec
    grid: GridSpec
    courant: float = 0.9

    def __post_init__(self):
        if self.grid.refine != 1:
            raise ValueError("reference solver runs on an unrefined grid")
        if not 0.0 < self.courant <= 1.0:
            raise ValueError("courant must lie in (0, 1]")


def _invert_z(emap: EquilibriumMap, z: np.ndarray) -> np.ndarray:
    return invert_monotone_array(emap.forward, z, 0.0, 1.0)


def step_z(run: EquilibriumRun, z: np.ndarray, delta_t: float) -> np.ndarray:
    """One conservative upwind update of z."""
    grid = run.grid
    lam = delta_t / grid.h
    f = run.flux.value(_invert_z(run.emap, z))
    left = np.roll(f, 1) if grid.boundary == "periodic" else np.concatenate(([f[0]], f[:-1]))
    return z - lam * (f - left)


def dump_w(grid: GridSpec, w: np.ndarray, path):
    """CSV dump 'x,w', one row per cell center, 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,w\n")
        for x, val in zip(grid.fine_centers(), w):
            fh.write(f"{x:.17g},{val:.17g}\n")


def solve_equilibrium(w0, run: EquilibriumRun, horizon: float) -> np.ndarray:
    """Evolve w0 to the horizon; returns the w field on the run's grid.

    Initial cell averages of z = w0 + A(w0) are taken with the same
    3-point Gauss-Legendre rule the schemes use.  Sub-steps are tiled at
    courant * h / Lip(f); Lip(f) dominates Lip(F), so the CFL is safe.
    """
    grid = run.grid
    nodes = grid.fine_centers()[:, None] + grid.h * _GL_NODES[None, :]
    wvals = np.asarray(w0(nodes), dtype=float)
    z = (wvals + np.asarray(run.emap.isotherm.value(wvals))) @ _GL_WEIGHTS
    policy = CflPolicy(run.courant)
    for delta in policy.substeps(horizon, run.grid.h, run.flux.lip_bound()):
        z = step_z(run, z, delta)
    return _invert_z(run.emap, z)

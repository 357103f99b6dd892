"""Uniform refined grid, cell-average projector and field norms.

States live on a fine grid of n_coarse * refine cells.  The projector
averages the refine sub-cells of every coarse cell, which is the exact
L2 projection onto coarse-cell constants for data that is piecewise
constant on the fine cells.  refine = 1 collapses the projector to the
identity and recovers a plain finite-volume splitting scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARIES = ("periodic", "outflow")

# 3-point Gauss-Legendre rule on [-1/2, 1/2]; exact through degree 5.
_GL_NODES = np.array([-0.5 * np.sqrt(3.0 / 5.0), 0.0, 0.5 * np.sqrt(3.0 / 5.0)])
_GL_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0

STATE_SLACK = 1e-12


@dataclass(frozen=True)
class GridSpec:
    x_min: float = 0.0
    x_max: float = 1.0
    n_coarse: int = 100
    refine: int = 8
    boundary: str = "periodic"

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("need x_max > x_min")
        if self.n_coarse < 1 or self.refine < 1:
            raise ValueError("n_coarse and refine must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def h(self) -> float:
        """Coarse cell width."""
        return (self.x_max - self.x_min) / self.n_coarse

    @property
    def fine_width(self) -> float:
        return self.h / self.refine

    @property
    def n_fine(self) -> int:
        return self.n_coarse * self.refine

    def fine_centers(self) -> np.ndarray:
        w = self.fine_width
        return self.x_min + w * (np.arange(self.n_fine) + 0.5)


@dataclass
class GridState:
    """Paired fields on the fine cells at time t.  Treated as a value:
    operations return new states and never mutate arrays in place."""

    grid: GridSpec
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def validate(self):
        n = self.grid.n_fine
        if self.u.shape != (n,) or self.v.shape != (n,):
            raise ValueError(f"field shape mismatch: expected ({n},)")
        for name, f in (("u", self.u), ("v", self.v)):
            if f.min() < -STATE_SLACK or f.max() > 1.0 + STATE_SLACK:
                raise ValueError(
                    f"{name} leaves [0,1]: min={f.min():.17g} max={f.max():.17g}"
                )
        return self

    def copy(self) -> "GridState":
        return GridState(self.grid, self.u.copy(), self.v.copy(), self.t)


def project(grid: GridSpec, field: np.ndarray) -> np.ndarray:
    """Average over each coarse cell; constant on coarse cells afterwards."""
    if field.shape != (grid.n_fine,):
        raise ValueError(
            f"field length {field.shape} does not match grid ({grid.n_fine},)"
        )
    means = field.reshape(grid.n_coarse, grid.refine).mean(axis=1)
    return np.repeat(means, grid.refine)


def coarse_means(grid: GridSpec, field: np.ndarray) -> np.ndarray:
    return field.reshape(grid.n_coarse, grid.refine).mean(axis=1)


def init_from_function(grid: GridSpec, u0, v0) -> GridState:
    """Sample u0, v0 (vectorized callables on [x_min, x_max)) by 3-point
    Gauss-Legendre cell averages over every fine cell."""
    centers = grid.fine_centers()
    w = grid.fine_width
    nodes = centers[:, None] + w * _GL_NODES[None, :]
    fields = []
    for name, fn in (("u0", u0), ("v0", v0)):
        vals = np.asarray(fn(nodes), dtype=float)
        avg = vals @ _GL_WEIGHTS
        if avg.min() < -STATE_SLACK or avg.max() > 1.0 + STATE_SLACK:
            raise ValueError(
                f"{name} cell averages leave [0,1]: "
                f"min={avg.min():.17g} max={avg.max():.17g}"
            )
        fields.append(np.clip(avg, 0.0, 1.0))
    return GridState(grid, fields[0], fields[1], 0.0)


def l1_norm(grid: GridSpec, field: np.ndarray) -> float:
    """sum |field| * fine cell width."""
    return float(np.sum(np.abs(field)) * grid.fine_width)


def total_variation(grid: GridSpec, field: np.ndarray) -> float:
    """Sum of absolute jumps between neighbours; wraps around if periodic."""
    tv = float(np.sum(np.abs(np.diff(field))))
    if grid.boundary == "periodic":
        tv += abs(float(field[0]) - float(field[-1]))
    return tv


def mass(grid: GridSpec, field: np.ndarray) -> float:
    return float(np.sum(field) * grid.fine_width)


def dump_fields(grid: GridSpec, u: np.ndarray, v: np.ndarray, path):
    """CSV dump 'x,u,v', one row per fine cell center, 17 significant digits."""
    centers = grid.fine_centers()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,u,v\n")
        for x, a, b in zip(centers, u, v):
            fh.write(f"{x:.17g},{a:.17g},{b:.17g}\n")


def shifted_state(state: GridState, cell: int, du: float, dv: float) -> GridState:
    """Perturb one fine cell; convenience for contraction experiments."""
    out = state.copy()
    out.u[cell] = min(max(out.u[cell] + du, 0.0), 1.0)
    out.v[cell] = min(max(out.v[cell] + dv, 0.0), 1.0)
    return out

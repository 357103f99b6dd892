"""Flux, adsorption isotherm and equilibrium change of variables.

The model couples a fluid concentration u and an adsorbed concentration v
on [0, 1] through a monotone flux f (f(0)=0, f' >= 0) and a monotone
isotherm A (A(0)=0, A(1)=1, A' > 0).  Everything here is a pure function
of immutable specs; all hot-loop entry points accept numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Inputs this far outside the admissible interval are clamped; anything
# worse is a caller bug and raises.
DOMAIN_SLACK = 1e-12

FLUX_KINDS = ("linear", "quadratic")
ISOTHERM_KINDS = ("linear", "langmuir")


def _check_range(x, lo, hi, name):
    """Clamp x into [lo, hi] if within DOMAIN_SLACK, else raise."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < lo - DOMAIN_SLACK) or np.any(arr > hi + DOMAIN_SLACK):
        raise ValueError(
            f"{name} out of range [{lo}, {hi}]: "
            f"min={arr.min():.17g} max={arr.max():.17g}"
        )
    clipped = np.clip(arr, lo, hi)
    if np.isscalar(x) or arr.ndim == 0:
        return float(clipped)
    return clipped


@dataclass(frozen=True)
class FluxSpec:
    """Convective flux: linear f(u) = c*u or quadratic f(u) = u^2/2."""

    kind: str = "linear"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in FLUX_KINDS:
            raise ValueError(f"unknown flux kind {self.kind!r}")
        if self.kind == "linear" and not self.c > 0.0:
            raise ValueError("linear flux needs c > 0")

    def value(self, u):
        if self.kind == "linear":
            return self.c * u
        return 0.5 * u * u

    def deriv(self, u):
        if self.kind == "linear":
            return self.c * np.ones_like(np.asarray(u, dtype=float))
        return np.asarray(u, dtype=float)

    def lip_bound(self) -> float:
        """Upper bound for sup |f'| on [0, 1]."""
        return self.c if self.kind == "linear" else 1.0

    def entropy_flux(self, u):
        """q(u) = integral_0^u xi f'(xi) dxi, normalized q(0) = 0."""
        if self.kind == "linear":
            return 0.5 * self.c * u * u
        return u * u * u / 3.0


@dataclass(frozen=True)
class IsothermSpec:
    """Adsorption isotherm: identity or normalized Langmuir.

    Langmuir: A(u) = (1+beta) u / (1+beta u), which pins A(0)=0, A(1)=1
    for any beta >= 0.  beta = 0 degenerates to the linear isotherm and is
    treated as such wherever the Langmuir closed forms would divide by beta.
    """

    kind: str = "linear"
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ISOTHERM_KINDS:
            raise ValueError(f"unknown isotherm kind {self.kind!r}")
        if self.kind == "langmuir" and self.beta < 0.0:
            raise ValueError("langmuir beta must be >= 0")

    def _is_linear(self) -> bool:
        return self.kind == "linear" or self.beta == 0.0

    def value(self, u):
        if self._is_linear():
            return u * 1.0
        b = self.beta
        return (1.0 + b) * u / (1.0 + b * u)

    def deriv(self, u):
        if self._is_linear():
            return np.ones_like(np.asarray(u, dtype=float))
        b = self.beta
        den = 1.0 + b * np.asarray(u, dtype=float)
        return (1.0 + b) / (den * den)

    def lip_bound(self) -> float:
        """sup A' on [0, 1]; attained at u = 0 for Langmuir."""
        return 1.0 if self._is_linear() else 1.0 + self.beta

    def deriv_min(self) -> float:
        """inf A' on [0, 1]; attained at u = 1 for Langmuir."""
        return 1.0 if self._is_linear() else 1.0 / (1.0 + self.beta)

    def inverse(self, w):
        """A^{-1}(w), closed form (Langmuir inverts rationally)."""
        if self._is_linear():
            return w * 1.0
        b = self.beta
        return w / ((1.0 + b) - b * w)

    def convex_primitive(self, v):
        """H(v) = integral_0^v A^{-1}; strictly convex since (A^{-1})' > 0."""
        if self._is_linear():
            return 0.5 * v * v
        b = self.beta
        c = 1.0 + b
        return (c / (b * b)) * np.log(c / (c - b * np.asarray(v, dtype=float))) - np.asarray(v, dtype=float) / b

    def primitive(self, u):
        """integral_0^u A, used for exact layer mass bookkeeping."""
        if self._is_linear():
            return 0.5 * u * u
        b = self.beta
        return ((1.0 + b) / b) * (np.asarray(u, dtype=float) - np.log1p(b * np.asarray(u, dtype=float)) / b)


@dataclass(frozen=True)
class EquilibriumMap:
    """z = Z(w) = w + A(w), strictly increasing from 0 to 2 on [0, 1]."""

    isotherm: IsothermSpec

    def forward(self, w):
        return w + self.isotherm.value(w)

    def invert(self, z):
        """W(z) by bisection; |W + A(W) - z| <= 1e-12."""
        z = _check_range(z, 0.0, 2.0, "z")
        return invert_monotone_array(self.forward, np.asarray(z, dtype=float), 0.0, 1.0)


@dataclass(frozen=True)
class ModelSpec:
    """A flux and an isotherm, bundled for the drivers."""

    flux: FluxSpec
    isotherm: IsothermSpec

    @property
    def equilibrium(self) -> EquilibriumMap:
        return EquilibriumMap(self.isotherm)


def invert_monotone_array(fn, target, lo, hi, iters: int = 100):
    """Vectorized bisection for a strictly increasing fn on [lo, hi].

    Iterates to sub-1e-15 interval width, which leaves the residual
    |fn(x) - target| below 1e-12 for any Lipschitz bound fn carries here.
    """
    target = np.asarray(target, dtype=float)
    lo_a = np.full_like(target, lo)
    hi_a = np.full_like(target, hi)
    for _ in range(iters):
        mid = 0.5 * (lo_a + hi_a)
        below = fn(mid) < target
        lo_a = np.where(below, mid, lo_a)
        hi_a = np.where(below, hi_a, mid)
        if np.max(hi_a - lo_a) <= 1e-16:
            break
    return 0.5 * (lo_a + hi_a)


# ---------------------------------------------------------------------------
# Operation surface (validated, scalar-or-array)
# ---------------------------------------------------------------------------

def flux_eval(spec: FluxSpec, u):
    u = _check_range(u, 0.0, 1.0, "u")
    return spec.value(u)


def isotherm_eval(spec: IsothermSpec, u):
    u = _check_range(u, 0.0, 1.0, "u")
    return spec.value(u)


def isotherm_inverse(spec: IsothermSpec, w):
    w = _check_range(w, 0.0, 1.0, "w")
    return spec.inverse(w)


def entropy_pair_eval(flux: FluxSpec, iso: IsothermSpec, u, v):
    """(eta, q) with eta(u, v) = u^2/2 + H(v) and q the flux companion."""
    u = _check_range(u, 0.0, 1.0, "u")
    v = _check_range(v, 0.0, 1.0, "v")
    eta = 0.5 * u * u + iso.convex_primitive(v)
    return eta, flux.entropy_flux(u)


def equilibrium_invert(emap: EquilibriumMap, z):
    """w with w + A(w) = z, found by bisection on the monotone map."""
    out = emap.invert(z)
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def flux_from_config(cfg: dict) -> FluxSpec:
    kind = cfg.get("kind")
    if kind == "linear":
        extra = set(cfg) - {"kind", "c"}
        if extra:
            raise ValueError(f"unknown flux keys {sorted(extra)}")
        return FluxSpec(kind="linear", c=float(cfg.get("c", 1.0)))
    if kind == "quadratic":
        extra = set(cfg) - {"kind"}
        if extra:
            raise ValueError(f"unknown flux keys {sorted(extra)}")
        return FluxSpec(kind="quadratic")
    raise ValueError(f"unknown flux kind {kind!r}")


def isotherm_from_config(cfg: dict) -> IsothermSpec:
    kind = cfg.get("kind")
    if kind == "linear":
        extra = set(cfg) - {"kind"}
        if extra:
            raise ValueError(f"unknown isotherm keys {sorted(extra)}")
        return IsothermSpec(kind="linear")
    if kind == "langmuir":
        extra = set(cfg) - {"kind", "beta"}
        if extra:
            raise ValueError(f"unknown isotherm keys {sorted(extra)}")
        return IsothermSpec(kind="langmuir", beta=float(cfg.get("beta", 1.0)))
    raise ValueError(f"unknown isotherm kind {kind!r}")

"""Lattice-time source events: inner projection and relaxation layers.

At every event time n*dt the state jumps through two sub-processes defined
by inner ODEs in a fast variable tau on [0, 1]:

* projection layer  d(w)/dtau = nu*dt*(P w - w), whose explicit solution is
  the convex combination exp(-nu dt) w + (1 - exp(-nu dt)) P w;
* relaxation layer  d(ub, vb)/dtau = mu*dt*(-(A(ub)-vb), A(ub)-vb), which
  conserves s = ub + vb and reduces to the scalar problem
  dvb/dtau = rate*(A(s - vb) - vb).

The classical ordering projects first and relaxes the projected data; the
modified ordering relaxes the incoming data and projects afterwards.

The scalar layer is solved exactly: closed form for the linear isotherm,
otherwise by inverting the monotone quadrature
tau(v) = integral dv' / (rate * g(v')) with adaptive Simpson and bisection.
A single backward-Euler step over the layer is available as an alternative
solver for comparison with splitting schemes built that way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, GridState, project
from .model import IsothermSpec, ModelSpec

# Integration toward the equilibrium root stops this close to it; the
# remaining tail of the (logarithmically divergent) quadrature is treated
# as converged.
ROOT_CAP = 1e-13

RELAX_SOLVERS = ("exact_quadrature", "backward_euler")


@dataclass(frozen=True)
class Strength:
    """Finite nonnegative strength or the infinite limit."""

    value: float = math.inf

    def __post_init__(self):
        if not (self.value >= 0.0):
            raise ValueError(f"strength must be >= 0 or infinite, got {self.value!r}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @staticmethod
    def parse(raw) -> "Strength":
        """Accepts 'infinite' or a nonnegative number (JSON-facing)."""
        if isinstance(raw, str):
            if raw == "infinite":
                return Strength(math.inf)
            raise ValueError(f"strength string must be 'infinite', got {raw!r}")
        return Strength(float(raw))

    def to_json(self):
        return "infinite" if self.is_infinite else self.value


@dataclass(frozen=True)
class InnerOdeProblem:
    """One relaxation layer: initial point, conserved sum, rate = mu*dt."""

    u0: float
    v0: float
    rate: float = 0.0

    @property
    def s(self) -> float:
        return self.u0 + self.v0


# ---------------------------------------------------------------------------
# Equilibrium root of the scalar layer
# ---------------------------------------------------------------------------

def _root_bracket(s):
    return max(0.0, s - 1.0), min(1.0, s)


def relax_equilibrium_root(iso: IsothermSpec, s: float) -> float:
    """v* in [max(0,s-1), min(1,s)] with A(s - v*) = v*, by bisection on
    the strictly decreasing g(v) = A(s - v) - v."""
    if s < -1e-12 or s > 2.0 + 1e-12:
        raise ValueError(f"conserved sum s={s!r} outside [0, 2]")
    s = min(max(s, 0.0), 2.0)
    lo, hi = _root_bracket(s)
    for _ in range(200):
        if hi - lo <= 1e-15:
            break
        mid = 0.5 * (lo + hi)
        if iso.value(s - mid) - mid >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equilibrium_root_array(iso: IsothermSpec, s: np.ndarray) -> np.ndarray:
    """Vectorized twin of relax_equilibrium_root."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 2.0)
    lo = np.maximum(0.0, s - 1.0)
    hi = np.minimum(1.0, s)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        pos = iso.value(s - mid) - mid >= 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Exact scalar layer solve
# ---------------------------------------------------------------------------

def _make_g(iso: IsothermSpec, s: float):
    """Fast scalar closure for g(v) = A(s - v) - v."""
    if iso._is_linear():
        return lambda v: s - 2.0 * v
    b = iso.beta
    c = 1.0 + b
    def g(v, _s=s, _b=b, _c=c):
        u = _s - v
        return _c * u / (1.0 + _b * u) - v
    return g


def _simpson_auto(f, a, b, rel=1e-13, floor=1e-15, n_cap=4096):
    """Composite Simpson with panel doubling until the Richardson check
    meets the tolerance or stalls on the integrand's rounding floor.
    Meant for smooth integrands of bounded variation over [a, b]."""
    if b <= a:
        return 0.0
    width = b - a
    ends = f(a) + f(b)
    n = 4
    h = 0.25 * width
    odd = f(a + h) + f(a + 3.0 * h)
    even = f(a + 2.0 * h)
    prev = (h / 3.0) * (ends + 4.0 * odd + 2.0 * even)
    prev_gap = None
    while n < n_cap:
        even += odd
        n *= 2
        h = width / n
        odd = 0.0
        for i in range(1, n, 2):
            odd += f(a + i * h)
        cur = (h / 3.0) * (ends + 4.0 * odd + 2.0 * even)
        gap = abs(cur - prev)
        if gap <= max(floor, rel * abs(cur)):
            return cur + (cur - prev) / 15.0
        if prev_gap is not None and gap >= 0.3 * prev_gap:
            # stalled: refinement is resolving rounding noise, not the
            # integral; its integrated effect is far below tolerance
            return cur
        prev, prev_gap = cur, gap
    return prev


def _layer_solve_exact(iso: IsothermSpec, s: float, v0: float, rate: float,
                       v_star: float | None = None,
                       force_quadrature: bool = False) -> float:
    """Exact v(tau=1) of dv/dtau = rate*(A(s-v) - v) starting from v0.

    Linear isotherm: closed exponential.  Otherwise the monotone quadrature
    tau(v) = int dv'/(rate g(v')) is inverted by bisection, the integrals
    evaluated by tolerance-driven Simpson after mapping to the coordinate
    sigma = -ln(distance to the root), where the integrand is smooth and
    bounded.  Integration is capped ROOT_CAP away from the root and the
    remainder counted as converged (the tail decays exponentially in tau).
    force_quadrature routes the linear isotherm through the generic path,
    which keeps the two solvers independently checkable against each other.
    """
    if rate == 0.0:
        return v0
    if iso._is_linear() and not force_quadrature:
        vs = 0.5 * s
        return vs + (v0 - vs) * math.exp(-2.0 * rate)

    g = _make_g(iso, s)
    g0 = g(v0)
    if g0 == 0.0:
        return v0
    if v_star is None:
        v_star = relax_equilibrium_root(iso, s)
    d = 1.0 if g0 > 0.0 else -1.0
    span = d * (v_star - v0)
    if span <= ROOT_CAP:
        return v_star

    # |g(v)| >= (1 + min A') * |v* - v| integrates to an upper bound for
    # tau at the cap; below 1 the layer passes the cap before tau = 1.
    m1 = 1.0 + iso.deriv_min()
    if math.log(span / ROOT_CAP) <= rate * m1:
        return v_star

    y_max = span - ROOT_CAP
    abs_g0 = abs(g0)
    lip = 1.0 + iso.lip_bound()
    # |g| decays along the layer at a rate between rate*(1+min A') and
    # rate*(1+Lip A), which brackets the displacement rate*int |g| dtau and
    # keeps the distance to the root at least |g(1)|/(1+Lip A); together
    # these confine the bisection away from the singular end of tau(v)
    # whenever the layer cannot actually reach it.
    tail = abs_g0 * math.exp(-rate * lip) / lip
    y_hi = max(0.0, min(rate * abs_g0, span - tail, y_max))
    y_lo = min(rate * abs_g0 * math.exp(-rate * lip), y_hi)

    # tau(v) is evaluated in sigma = -ln(v* - v oriented): the transformed
    # integrand e^{-sigma} / (rate*|g|) is bounded between 1/(rate(1+Lip A))
    # and 1/(rate(1+min A')) and smooth, so the panel-doubling Simpson is
    # uniformly cheap; the raw 1/g form is log-singular at the root.
    def psi(sigma, _vs=v_star, _d=d, _g=g, _rate=rate):
        x = math.exp(-sigma)
        return x / (_rate * _d * _g(_vs - _d * x))

    def tau_between(ya, yb):
        if yb <= ya:
            return 0.0
        return _simpson_auto(psi, -math.log(span - ya), -math.log(span - yb))

    tau_lo = tau_between(0.0, y_lo)
    if tau_lo > 1.0:
        y_lo, tau_lo = 0.0, 0.0
    tau_hi = tau_lo + tau_between(y_lo, y_hi)
    if tau_hi <= 1.0:
        if y_hi >= y_max:
            return v_star
        # tau never reaches 1 before the analytic displacement bound:
        # the endpoint sits at the bound up to quadrature rounding
        return v0 + d * y_hi

    while y_hi - y_lo > 5e-14:
        y_mid = 0.5 * (y_lo + y_hi)
        tau_mid = tau_lo + tau_between(y_lo, y_mid)
        if tau_mid <= 1.0:
            y_lo, tau_lo = y_mid, tau_mid
        else:
            y_hi = y_mid
    return v0 + d * 0.5 * (y_lo + y_hi)


# rate * (1 + Lip A) above this routes to the scalar segmented path; below
# it the integrand variation over the reachable range is bounded by
# e^{rate (1+Lip A)} and a shared-panel Simpson converges for all cells.
_SMOOTH_RATE_LIMIT = 2.0


def _layer_batch_quadrature(iso: IsothermSpec, s: np.ndarray, v0: np.ndarray,
                            rate: float) -> np.ndarray:
    """Vectorized quadrature inversion of all layers at a moderate rate."""
    v_star = equilibrium_root_array(iso, s)
    g0 = np.asarray(iso.value(s - v0)) - v0
    d = np.where(g0 >= 0.0, 1.0, -1.0)
    span = d * (v_star - v0)
    active = (g0 != 0.0) & (span > ROOT_CAP)
    v1 = np.where((span <= ROOT_CAP) & (g0 != 0.0), v_star, v0)
    if not bool(np.any(active)):
        return v1

    lip = 1.0 + iso.lip_bound()
    abs_g0 = np.abs(g0)
    tail = abs_g0 * math.exp(-rate * lip) / lip
    y_hi = np.maximum(0.0, np.minimum(np.minimum(rate * abs_g0, span - tail),
                                      span - ROOT_CAP))
    y_lo = np.minimum(rate * abs_g0 * math.exp(-rate * lip), y_hi)

    def psi(sigma):
        # smooth transformed integrand; see the scalar twin for the map
        x = np.exp(-sigma)
        v = v_star - d * x
        g = np.asarray(iso.value(s - v)) - v
        with np.errstate(divide="ignore", invalid="ignore"):
            return x / (rate * d * g)

    def tau_between(a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            sa = -np.log(span - a)
            sb = -np.log(span - b)
            width = np.where(b > a, sb - sa, 0.0)
        fa = psi(sa)
        fb = psi(np.where(b > a, sb, sa))
        n = 4
        thetas = np.arange(1, n, 2) / n
        odd = psi(sa[None, :] + thetas[:, None] * width[None, :]).sum(axis=0)
        even = psi(sa + 0.5 * width)
        prev = (width / (3.0 * n)) * (fa + fb + 4.0 * odd + 2.0 * even)
        prev_gap = None
        while n < 2048:
            even = even + odd
            n *= 2
            thetas = np.arange(1, n, 2) / n
            odd = psi(sa[None, :] + thetas[:, None] * width[None, :]).sum(axis=0)
            cur = (width / (3.0 * n)) * (fa + fb + 4.0 * odd + 2.0 * even)
            gap = float(np.max(np.abs(cur - prev)[active], initial=0.0))
            if gap <= max(1e-15, 1e-13 * float(np.max(np.abs(cur)[active], initial=0.0))):
                return cur + (cur - prev) / 15.0
            if prev_gap is not None and gap >= 0.3 * prev_gap:
                return cur
            prev, prev_gap = cur, gap
        return prev

    zeros = np.zeros_like(y_lo)
    tau_lo = tau_between(zeros, y_lo)
    overshoot = tau_lo > 1.0
    y_lo = np.where(overshoot, 0.0, y_lo)
    tau_lo = np.where(overshoot, 0.0, tau_lo)
    tau_hi = tau_lo + tau_between(y_lo, y_hi)
    bisect = active & (tau_hi > 1.0)
    # cells whose tau never reaches 1 inside the analytic displacement
    # bound sit at that bound up to quadrature rounding
    y_best = y_hi.copy()

    lo, hi = y_lo.copy(), y_hi.copy()
    while True:
        width = (hi - lo)[bisect]
        if width.size == 0 or float(width.max()) <= 5e-14:
            break
        mid = 0.5 * (lo + hi)
        tau_mid = tau_lo + tau_between(lo, mid)
        le = tau_mid <= 1.0
        take_lo = bisect & le
        lo = np.where(take_lo, mid, lo)
        tau_lo = np.where(take_lo, tau_mid, tau_lo)
        hi = np.where(bisect & ~le, mid, hi)
    y_best = np.where(bisect, 0.5 * (lo + hi), y_best)
    return np.where(active, v0 + d * y_best, v1)


def _layer_solve_backward_euler(iso: IsothermSpec, s, v0, rate):
    """One implicit Euler step over the whole layer: v1 = v0 + rate*g(v1).

    Vectorized; v1 - v0 - rate*g(v1) is strictly increasing in v1 and
    brackets between v0 and the equilibrium root.
    """
    s = np.asarray(s, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    v_star = equilibrium_root_array(iso, s)
    lo = np.minimum(v0, v_star)
    hi = np.maximum(v0, v_star)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        res = mid - v0 - rate * (iso.value(s - mid) - mid)
        neg = res < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def relax_inner_solve(iso: IsothermSpec, prob: InnerOdeProblem,
                      mu: Strength) -> tuple[float, float]:
    """Endpoint (u1, v1) of one relaxation layer; u1 = s - v1.

    Infinite strength jumps to the equilibrium root of the conserved sum.
    The measured disequilibrium decays at least like exp(-rate):
    |A(u1) - v1| <= exp(-rate) |A(u0) - v0|.
    """
    for name, val in (("u0", prob.u0), ("v0", prob.v0)):
        if val < -1e-12 or val > 1.0 + 1e-12:
            raise ValueError(f"{name}={val!r} outside [0, 1]")
    if mu.is_infinite:
        v1 = relax_equilibrium_root(iso, prob.s)
        return prob.s - v1, v1
    if prob.rate < 0.0:
        raise ValueError("finite-strength layer needs rate >= 0")
    v1 = _layer_solve_exact(iso, prob.s, prob.v0, prob.rate)
    return prob.s - v1, v1


def relax_layer_batch(iso: IsothermSpec, u0: np.ndarray, v0: np.ndarray,
                      mu: Strength, dt: float,
                      solver: str = "exact_quadrature"):
    """Pointwise layer endpoints over whole fields.

    The exact path groups identical (s, v0) pairs before solving, which
    collapses the work to one solve per coarse cell whenever the inputs are
    piecewise constant (classical ordering).
    """
    s = u0 + v0
    if mu.is_infinite:
        v1 = equilibrium_root_array(iso, s)
        return s - v1, v1
    rate = mu.value * dt
    if rate == 0.0:
        return u0.copy(), v0.copy()
    if solver == "backward_euler":
        v1 = _layer_solve_backward_euler(iso, s, v0, rate)
        return s - v1, v1
    if solver != "exact_quadrature":
        raise ValueError(f"unknown relax solver {solver!r}")
    if iso._is_linear():
        v_star = 0.5 * s
        v1 = v_star + (v0 - v_star) * math.exp(-2.0 * rate)
        return s - v1, v1
    if rate * (1.0 + iso.lip_bound()) <= _SMOOTH_RATE_LIMIT:
        v1 = _layer_batch_quadrature(iso, s, v0, rate)
        return s - v1, v1
    pairs = np.stack([s, v0])
    uniq, inverse = np.unique(pairs, axis=1, return_inverse=True)
    roots = equilibrium_root_array(iso, uniq[0])
    out = np.empty(uniq.shape[1])
    for i in range(uniq.shape[1]):
        out[i] = _layer_solve_exact(iso, float(uniq[0, i]), float(uniq[1, i]),
                                    rate, v_star=float(roots[i]))
    v1 = out[np.ravel(inverse)]
    return s - v1, v1


# ---------------------------------------------------------------------------
# Projection layer
# ---------------------------------------------------------------------------

def project_inner_apply(grid: GridSpec, field: np.ndarray, nu: Strength,
                        dt: float) -> np.ndarray:
    """exp(-nu dt) * field + (1 - exp(-nu dt)) * P field; the explicit
    solution of the projection layer.  Infinite nu returns P field."""
    if nu.is_infinite:
        return project(grid, field)
    rate = nu.value * dt
    if rate == 0.0:
        return field.copy()
    a = math.exp(-rate)
    return a * field + (1.0 - a) * project(grid, field)


# ---------------------------------------------------------------------------
# Full event
# ---------------------------------------------------------------------------

@dataclass
class EventReport:
    """Endpoints of the sub-processes of one event plus its measure masses.

    relax_mass is the exact measure mass mu*dt * int |A(ub)-vb| dtau summed
    with cell weights, which telescopes to sum |v1 - v0| since the layer
    integrand has constant sign.  relax_quad is the mu-weighted quadratic
    form mu*dt * int (A(ub)-vb)^2 dtau, evaluated through the same change
    of variables as int g dv between the endpoints.
    """

    t: float
    ordering: str
    theta: float
    u_pre: np.ndarray
    v_pre: np.ndarray
    u_proj_in: np.ndarray
    v_proj_in: np.ndarray
    u_relax_in: np.ndarray
    v_relax_in: np.ndarray
    u_relax_out: np.ndarray
    v_relax_out: np.ndarray
    u_post: np.ndarray
    v_post: np.ndarray
    relax_mass: float = 0.0
    relax_quad: float = 0.0


def _quadratic_layer_mass(iso: IsothermSpec, u0, v0, u1, v1, weight: float) -> float:
    """mu*dt*int (A-v)^2 dtau summed over cells: with dv = rate*g dtau the
    integral becomes int_{v0}^{v1} g dv = [Abar(u0)-Abar(u1)] - (v1^2-v0^2)/2."""
    terms = (iso.primitive(u0) - iso.primitive(u1)) - 0.5 * (v1 * v1 - v0 * v0)
    return float(np.sum(terms)) * weight


def apply_event(state: GridState, model: ModelSpec, cfg) -> tuple[GridState, EventReport]:
    """Fire the Dirac event scheduled at state.t (= n*dt, n >= 1)."""
    dt = cfg.dt
    n = round(state.t / dt)
    if n < 1 or abs(state.t - n * dt) > 1e-12 * dt:
        raise ValueError(f"event fired off-schedule at t={state.t!r} (dt={dt!r})")

    grid = state.grid
    iso = model.isotherm
    theta = 1.0 if cfg.nu.is_infinite else 1.0 - math.exp(-cfg.nu.value * dt)
    u_pre, v_pre = state.u, state.v

    if cfg.ordering == "classical":
        u_proj_in, v_proj_in = u_pre, v_pre
        u_rin = project_inner_apply(grid, u_pre, cfg.nu, dt)
        v_rin = project_inner_apply(grid, v_pre, cfg.nu, dt)
        u_rout, v_rout = relax_layer_batch(iso, u_rin, v_rin, cfg.mu, dt,
                                           cfg.relax_solver)
        u_post, v_post = u_rout, v_rout
    elif cfg.ordering == "modified":
        u_rin, v_rin = u_pre, v_pre
        u_rout, v_rout = relax_layer_batch(iso, u_rin, v_rin, cfg.mu, dt,
                                           cfg.relax_solver)
        u_proj_in, v_proj_in = u_rout, v_rout
        u_post = project_inner_apply(grid, u_rout, cfg.nu, dt)
        v_post = project_inner_apply(grid, v_rout, cfg.nu, dt)
    else:
        raise ValueError(f"unknown ordering {cfg.ordering!r}")

    w = grid.fine_width
    report = EventReport(
        t=state.t, ordering=cfg.ordering, theta=theta,
        u_pre=u_pre, v_pre=v_pre,
        u_proj_in=u_proj_in, v_proj_in=v_proj_in,
        u_relax_in=u_rin, v_relax_in=v_rin,
        u_relax_out=u_rout, v_relax_out=v_rout,
        u_post=u_post, v_post=v_post,
        relax_mass=float(np.sum(np.abs(v_rout - v_rin))) * w,
        relax_quad=_quadratic_layer_mass(iso, u_rin, v_rin, u_rout, v_rout, w),
    )
    return GridState(grid, u_post, v_post, state.t), report

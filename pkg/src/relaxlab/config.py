"""Experiment configuration: JSON parsing, validation and defaults.

Unknown keys are rejected and every complaint names the JSON path of the
offending entry, so a config error is a one-line fix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec
from .model import ModelSpec, flux_from_config, isotherm_from_config
from .sources import Strength
from .splitting import SchemeConfig
from .transport import CflPolicy

INITIAL_KINDS = ("riemann", "hump", "layer_demo", "custom_csv")

DEFAULT_EVENTS = 32  # horizon defaults to this many event spacings


class ConfigError(ValueError):
    """Validation failure carrying the JSON path of the first error."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class InitialData:
    kind: str = "hump"
    u_left: float = 1.0
    u_right: float = 0.0
    jump: float = 0.25
    center: float = 0.3
    width: float = 0.1
    height: float = 0.6
    base: float = 0.1
    path: str = ""

    def build(self, grid: GridSpec, model: ModelSpec):
        """Fine-grid state; riemann and hump are well prepared (v0 = A(u0)),
        the layer demo is u = 0 against an oscillatory v."""
        from .grid import GridState, init_from_function

        iso = model.isotherm
        if self.kind == "riemann":
            def u0(x):
                return np.where(x < self.jump, self.u_left, self.u_right)
            return init_from_function(grid, u0, lambda x: np.asarray(iso.value(u0(x))))
        if self.kind == "hump":
            def u0(x):
                return self.base + self.height * np.exp(-((x - self.center) / self.width) ** 2)
            return init_from_function(grid, u0, lambda x: np.asarray(iso.value(u0(x))))
        if self.kind == "layer_demo":
            h = grid.h
            return init_from_function(
                grid, lambda x: np.zeros_like(x),
                lambda x: np.clip(np.sin(np.pi * x / h), 0.0, 1.0))
        if self.kind == "custom_csv":
            data = np.genfromtxt(self.path, delimiter=",", names=True)
            if data.shape[0] != grid.n_fine:
                raise ConfigError("$.initial_data.path",
                                  f"csv has {data.shape[0]} rows, grid expects {grid.n_fine}")
            return GridState(grid, np.asarray(data["u"], dtype=float),
                             np.asarray(data["v"], dtype=float)).validate()
        raise ConfigError("$.initial_data.kind", f"unknown kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelSpec
    grid: GridSpec
    scheme: SchemeConfig
    initial: InitialData
    outputs: str = ""
    sweeps: dict = field(default_factory=dict)
    probes: tuple = (0.25, 0.5, 0.75)
    snapshots: tuple = ()
    epsilon_ramp_substeps: int = 8

    def to_json_dict(self) -> dict:
        """Full resolved configuration, defaults included (manifest)."""
        return {
            "name": self.name,
            "model": {
                "flux": ({"kind": "linear", "c": self.model.flux.c}
                         if self.model.flux.kind == "linear" else {"kind": "quadratic"}),
                "isotherm": ({"kind": "linear"} if self.model.isotherm.kind == "linear"
                             else {"kind": "langmuir", "beta": self.model.isotherm.beta}),
            },
            "grid": {
                "x_min": self.grid.x_min, "x_max": self.grid.x_max,
                "n_coarse": self.grid.n_coarse, "refine": self.grid.refine,
                "boundary": self.grid.boundary,
            },
            "scheme": {
                "ordering": self.scheme.ordering,
                "mu": self.scheme.mu.to_json(),
                "nu": self.scheme.nu.to_json(),
                "dt": self.scheme.dt,
                "horizon": self.scheme.horizon,
                "courant": self.scheme.cfl.courant,
                "relax_solver": self.scheme.relax_solver,
            },
            "initial_data": {
                "kind": self.initial.kind,
                **({"u_left": self.initial.u_left, "u_right": self.initial.u_right,
                    "jump": self.initial.jump} if self.initial.kind == "riemann" else {}),
                **({"center": self.initial.center, "width": self.initial.width,
                    "height": self.initial.height, "base": self.initial.base}
                   if self.initial.kind == "hump" else {}),
                **({"path": self.initial.path} if self.initial.kind == "custom_csv" else {}),
            },
            "outputs": self.outputs,
            "sweeps": dict(self.sweeps),
            "probes": list(self.probes),
            "snapshots": list(self.snapshots),
            "epsilon_ramp_substeps": self.epsilon_ramp_substeps,
        }


def _expect_keys(section: dict, allowed, path):
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(path, f"unknown key {extra[0]!r}")


def _number(section, key, path, default=None, positive=False):
    if key not in section:
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {val!r}")
    return float(val)


def parse_config(text: str) -> ExperimentConfig:
    """Validate a JSON experiment document; defaults: refine=8, courant=0.9,
    ordering=classical, linear flux c=1 with Langmuir beta=1, dt=h/Lip(f)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("$", f"invalid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError("$", "top level must be an object")
    _expect_keys(doc, ("name", "model", "grid", "scheme", "initial_data",
                       "outputs", "sweeps", "probes", "snapshots",
                       "epsilon_ramp_substeps"), "$")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("$.name", "experiment name is required")

    model_doc = doc.get("model", {})
    _expect_keys(model_doc, ("flux", "isotherm"), "$.model")
    try:
        flux = flux_from_config(model_doc.get("flux", {"kind": "linear", "c": 1.0}))
    except ValueError as err:
        raise ConfigError("$.model.flux", str(err)) from None
    try:
        iso = isotherm_from_config(model_doc.get("isotherm",
                                                 {"kind": "langmuir", "beta": 1.0}))
    except ValueError as err:
        raise ConfigError("$.model.isotherm", str(err)) from None
    model = ModelSpec(flux, iso)

    grid_doc = doc.get("grid", {})
    _expect_keys(grid_doc, ("x_min", "x_max", "n_coarse", "refine", "boundary"),
                 "$.grid")
    boundary = grid_doc.get("boundary", "periodic")
    n_coarse = grid_doc.get("n_coarse", 100)
    refine = grid_doc.get("refine", 8)
    if not isinstance(n_coarse, int) or not isinstance(refine, int):
        raise ConfigError("$.grid", "n_coarse and refine must be integers")
    try:
        grid = GridSpec(x_min=_number(grid_doc, "x_min", "$.grid", 0.0),
                        x_max=_number(grid_doc, "x_max", "$.grid", 1.0),
                        n_coarse=n_coarse, refine=refine, boundary=boundary)
    except ValueError as err:
        raise ConfigError("$.grid", str(err)) from None

    scheme_doc = doc.get("scheme", {})
    _expect_keys(scheme_doc, ("ordering", "mu", "nu", "dt", "horizon",
                              "courant", "relax_solver"), "$.scheme")
    try:
        mu = Strength.parse(scheme_doc.get("mu", "infinite"))
        nu = Strength.parse(scheme_doc.get("nu", "infinite"))
    except ValueError as err:
        raise ConfigError("$.scheme", str(err)) from None
    dt = _number(scheme_doc, "dt", "$.scheme", None, positive=True)
    if dt is None:
        dt = grid.h / model.flux.lip_bound()
    horizon = _number(scheme_doc, "horizon", "$.scheme", None, positive=True)
    if horizon is None:
        horizon = DEFAULT_EVENTS * dt
    ratio = horizon / dt
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigError("$.scheme",
                          f"horizon {horizon!r} is not a multiple of dt {dt!r}")
    try:
        scheme = SchemeConfig(
            ordering=scheme_doc.get("ordering", "classical"),
            mu=mu, nu=nu, dt=dt, horizon=horizon,
            cfl=CflPolicy(_number(scheme_doc, "courant", "$.scheme", 0.9)),
            relax_solver=scheme_doc.get("relax_solver", "exact_quadrature"),
        )
    except ValueError as err:
        raise ConfigError("$.scheme", str(err)) from None

    init_doc = doc.get("initial_data", {"kind": "hump"})
    _expect_keys(init_doc, ("kind", "u_left", "u_right", "jump", "center",
                            "width", "height", "base", "path"), "$.initial_data")
    kind = init_doc.get("kind", "hump")
    if kind not in INITIAL_KINDS:
        raise ConfigError("$.initial_data.kind", f"unknown kind {kind!r}")
    initial = InitialData(
        kind=kind,
        u_left=_number(init_doc, "u_left", "$.initial_data", 1.0),
        u_right=_number(init_doc, "u_right", "$.initial_data", 0.0),
        jump=_number(init_doc, "jump", "$.initial_data", 0.25),
        center=_number(init_doc, "center", "$.initial_data", 0.3),
        width=_number(init_doc, "width", "$.initial_data", 0.1),
        height=_number(init_doc, "height", "$.initial_data", 0.6),
        base=_number(init_doc, "base", "$.initial_data", 0.1),
        path=init_doc.get("path", ""),
    )
    if kind == "custom_csv" and not initial.path:
        raise ConfigError("$.initial_data.path", "custom_csv needs a path")

    sweeps = doc.get("sweeps", {})
    _expect_keys(sweeps, ("mu", "h", "epsilon"), "$.sweeps")
    for key, vals in sweeps.items():
        if (not isinstance(vals, list) or not vals
                or not all(isinstance(v, (int, float)) and v > 0 for v in vals)):
            raise ConfigError(f"$.sweeps.{key}", "expected a list of positive numbers")

    probes = tuple(doc.get("probes", (0.25, 0.5, 0.75)))
    for p in probes:
        if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
            raise ConfigError("$.probes", f"probe {p!r} outside [0, 1]")

    snapshots = tuple(doc.get("snapshots", ()))
    for t in snapshots:
        if not isinstance(t, (int, float)) or t < 0.0 or t > horizon + 1e-12:
            raise ConfigError("$.snapshots", f"snapshot time {t!r} outside [0, horizon]")

    ramp = doc.get("epsilon_ramp_substeps", 8)
    if not isinstance(ramp, int) or ramp < 1:
        raise ConfigError("$.epsilon_ramp_substeps", "must be a positive integer")

    return ExperimentConfig(name=name, model=model, grid=grid, scheme=scheme,
                            initial=initial, outputs=doc.get("outputs", ""),
                            sweeps={k: [float(v) for v in vs] for k, vs in sweeps.items()},
                            probes=probes, snapshots=snapshots,
                            epsilon_ramp_substeps=ramp)


def manifest_json(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_json_dict(), indent=2, sort_keys=True) + "\n"

"""relaxlab: a finite-volume laboratory for a 2x2 relaxing system whose
projection and relaxation act through lattice-time source events."""

from .grid import GridSpec, GridState, init_from_function, l1_norm, project, total_variation
from .model import (EquilibriumMap, FluxSpec, IsothermSpec, ModelSpec,
                    entropy_pair_eval, equilibrium_invert, flux_eval,
                    isotherm_eval, isotherm_inverse)
from .sources import (EventReport, InnerOdeProblem, Strength, apply_event,
                      project_inner_apply, relax_equilibrium_root,
                      relax_inner_solve)
from .splitting import (MollifiedConfig, RunLog, SchemeConfig, run,
                        run_mollified, run_pair)
from .transport import CflPolicy, convect, godunov_flux
from .equilibrium import EquilibriumRun, solve_equilibrium

__all__ = [
    "CflPolicy", "EquilibriumMap", "EquilibriumRun", "EventReport",
    "FluxSpec", "GridSpec", "GridState", "InnerOdeProblem", "IsothermSpec",
    "ModelSpec", "MollifiedConfig", "RunLog", "SchemeConfig", "Strength",
    "apply_event", "convect", "entropy_pair_eval", "equilibrium_invert",
    "flux_eval", "godunov_flux", "init_from_function", "isotherm_eval",
    "isotherm_inverse", "l1_norm", "project", "project_inner_apply",
    "relax_equilibrium_root", "relax_inner_solve", "run", "run_mollified",
    "run_pair", "solve_equilibrium", "total_variation",
]

__version__ = "0.1.0"

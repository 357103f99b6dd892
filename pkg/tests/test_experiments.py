import json

import pytest

from relaxlab.cli import resolve_config
from relaxlab.experiments import REGISTRY, run_experiment


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_experiment_passes(name, tmp_path):
    cfg = resolve_config(json.dumps({"name": name}))
    result = run_experiment(cfg, tmp_path / name)
    failing = {k: v for k, v in result.checks.items() if not v["pass"]}
    assert result.passed, f"{name} failing checks: {failing}"
    out = tmp_path / name
    assert (out / "manifest.json").exists()
    assert (out / "diagnostics.json").exists()
    summary = json.loads((out / "diagnostics.json").read_text())
    assert all(entry["pass"] for entry in summary.values())


def test_equilibrium_limit_parallel_matches_serial(tmp_path):
    cfg = resolve_config(json.dumps({
        "name": "equilibrium-limit",
        "sweeps": {"h": [0.02, 0.01]},
    }))
    run_experiment(cfg, tmp_path / "serial", parallel=1)
    run_experiment(cfg, tmp_path / "par", parallel=2)
    a = (tmp_path / "serial" / "equilibrium_errors.csv").read_bytes()
    b = (tmp_path / "par" / "equilibrium_errors.csv").read_bytes()
    assert a == b


def test_plots_render_for_every_experiment(tmp_path):
    from relaxlab import plots
    cfg = resolve_config(json.dumps({
        "name": "relax-mass",
        "grid": {"n_coarse": 16, "refine": 4},
        "scheme": {"horizon": 0.25},
        "sweeps": {"mu": [10.0, 100.0]},
    }))
    out = tmp_path / "relax-mass"
    run_experiment(cfg, out)
    written = plots.render_experiment(out)
    assert any(p.suffix == ".png" for p in written)
    assert (out / "relax_mass_sweep.png").exists()

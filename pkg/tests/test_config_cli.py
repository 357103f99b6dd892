import json

import numpy as np
import pytest

from relaxlab.cli import deep_merge, main, resolve_config
from relaxlab.config import ConfigError, manifest_json, parse_config
from relaxlab.experiments import REGISTRY


def doc(**over):
    base = {"name": "layer-demo"}
    base.update(over)
    return json.dumps(base)


def test_minimal_document_gets_defaults():
    cfg = parse_config(doc())
    assert cfg.grid.refine == 8
    assert cfg.scheme.cfl.courant == 0.9
    assert cfg.scheme.ordering == "classical"
    assert cfg.model.flux.kind == "linear" and cfg.model.flux.c == 1.0
    assert cfg.model.isotherm.kind == "langmuir"
    # dt defaults to the coarse CFL spacing
    assert cfg.scheme.dt == pytest.approx(cfg.grid.h / cfg.model.flux.lip_bound())


def test_infinite_strength_parse():
    cfg = parse_config(doc(scheme={"mu": "infinite", "nu": 12.5}))
    assert cfg.scheme.mu.is_infinite
    assert cfg.scheme.nu.value == 12.5


def test_unknown_keys_rejected_with_path():
    with pytest.raises(ConfigError) as err:
        parse_config(doc(scheme={"muu": 1.0}))
    assert "$.scheme" in str(err.value)
    with pytest.raises(ConfigError) as err:
        parse_config(doc(extra=1))
    assert "unknown key" in str(err.value)


def test_horizon_multiple_of_dt_enforced():
    with pytest.raises(ConfigError) as err:
        parse_config(doc(scheme={"dt": 0.01, "horizon": 0.025}))
    msg = str(err.value)
    assert "0.025" in msg and "0.01" in msg


def test_bad_json_and_bad_values():
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config(doc(scheme={"dt": -0.1}))
    with pytest.raises(ConfigError):
        parse_config(doc(initial_data={"kind": "wiggle"}))
    with pytest.raises(ConfigError):
        parse_config(doc(probes=[1.5]))
    with pytest.raises(ConfigError):
        parse_config(doc(sweeps={"mu": []}))


def test_manifest_round_trips():
    cfg = parse_config(doc(scheme={"mu": 3.0}))
    manifest = json.loads(manifest_json(cfg))
    assert manifest["scheme"]["mu"] == 3.0
    assert manifest["scheme"]["nu"] == "infinite"
    assert manifest["grid"]["refine"] == 8


def test_deep_merge_and_registry_defaults():
    merged = deep_merge({"a": {"b": 1, "c": 2}}, {"a": {"b": 7}, "d": 3})
    assert merged == {"a": {"b": 7, "c": 2}, "d": 3}
    cfg = resolve_config(json.dumps({"name": "splitting-order"}))
    assert cfg.model.flux.kind == "quadratic"
    assert cfg.grid.refine == 8
    # user overrides win over registry defaults
    cfg = resolve_config(json.dumps({"name": "splitting-order",
                                     "grid": {"n_coarse": 16}}))
    assert cfg.grid.n_coarse == 16 and cfg.grid.refine == 8


def test_registry_contents():
    assert set(REGISTRY) == {
        "layer-demo", "splitting-order", "stiff-regime", "equilibrium-limit",
        "contraction", "mollified-validation", "relax-mass",
    }


def test_unknown_experiment_name():
    with pytest.raises(ConfigError):
        resolve_config(json.dumps({"name": "nope"}))


def test_cli_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for name in REGISTRY:
        assert name in out


def test_cli_run_layer_demo_and_determinism(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "name": "layer-demo",
        "grid": {"n_coarse": 16, "refine": 4},
        "scheme": {"horizon": 0.25},
    }))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "--config", str(cfg_path), "--out", str(out_a)]) == 0
    assert main(["run", "--config", str(cfg_path), "--out", str(out_b)]) == 0
    stdout = capsys.readouterr().out
    assert "[PASS]" in stdout

    dir_a = out_a / "layer-demo"
    dir_b = out_b / "layer-demo"
    names = sorted(p.name for p in dir_a.iterdir())
    assert "manifest.json" in names and "diagnostics.json" in names
    assert any(n.startswith("run_") for n in names)
    for name in names:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name


def test_cli_error_paths(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["run", "--config", str(missing)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "layer-demo", "scheme": {"dt": -1}}))
    assert main(["run", "--config", str(bad)]) == 1
    capsys.readouterr()


def test_cli_env_output_dir(tmp_path, monkeypatch, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "name": "layer-demo",
        "grid": {"n_coarse": 8, "refine": 2},
        "scheme": {"horizon": 0.25},
    }))
    monkeypatch.setenv("RELAXLAB_OUT", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    assert main(["run", "--config", str(cfg_path)]) == 0
    capsys.readouterr()
    assert (tmp_path / "envout" / "layer-demo" / "manifest.json").exists()


def test_cli_plot_subcommand(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "name": "layer-demo",
        "grid": {"n_coarse": 8, "refine": 2},
        "scheme": {"horizon": 0.25},
    }))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_path), "--out", str(out),
                 "--plots"]) == 0
    capsys.readouterr()
    run_dir = out / "layer-demo"
    pngs = list(run_dir.glob("*.png"))
    assert pngs, "expected rendered figures next to the CSV outputs"
    assert main(["plot", "--dir", str(run_dir)]) == 0
    capsys.readouterr()


def test_run_experiment_diagnostic_failure_exit_code(tmp_path, capsys):
    # an unreachable ordering-distance threshold forces exit status 2
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "name": "splitting-order",
        "model": {"isotherm": {"kind": "linear"}},
        "scheme": {"horizon": 0.15625},
    }))
    # linear isotherm: relaxation commutes with projection, distance ~ 0
    assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "x")]) == 2
    capsys.readouterr()


def test_custom_csv_initial_data(tmp_path):
    from relaxlab.grid import GridSpec, dump_fields
    g = GridSpec(n_coarse=4, refine=2)
    u = np.linspace(0.1, 0.8, 8)
    path = tmp_path / "init.csv"
    dump_fields(g, u, u[::-1].copy(), path)
    cfg = parse_config(json.dumps({
        "name": "layer-demo",
        "grid": {"n_coarse": 4, "refine": 2},
        "initial_data": {"kind": "custom_csv", "path": str(path)},
    }))
    state = cfg.initial.build(cfg.grid, cfg.model)
    np.testing.assert_allclose(state.u, u, atol=1e-16)
    np.testing.assert_allclose(state.v, u[::-1], atol=1e-16)

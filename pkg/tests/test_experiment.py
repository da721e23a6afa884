import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bivirus.dynamics import avg_projection
from bivirus.errors import ConfigError
from bivirus.experiment import (
    ExperimentConfig,
    Tolerances,
    emit_outputs,
    run_experiment,
)
from bivirus.graph import complete_graph, emit_edge_list


@pytest.fixture
def k3_files(tmp_path):
    path = tmp_path / "k3.txt"
    path.write_text(emit_edge_list(complete_graph(3)))
    return str(path)


def make_config(path, **kw):
    base = dict(
        graph_a_path=path, graph_b_path=path, beta1=1.0, delta1=1.0, beta2=0.75, delta2=1.0,
        t_end=100.0, sample_every=5.0, seeds=3, rng_seed=42,
    )
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize(
    "field, value",
    [
        ("beta1", 0.0),
        ("delta2", -1.0),
        ("t_end", 0.0),
        ("dt0", -0.1),
        ("seeds", 0),
        ("seeds", 1.5),
        ("rng_seed", -1),
        ("rng_seed", 2**64),
        ("beta1", "1"),
        ("graph_a_path", 3),
    ],
)
def test_config_validation(field, value):
    with pytest.raises(ConfigError):
        make_config("g.txt", **{field: value})


def test_unknown_keys_rejected():
    data = make_config("g.txt").to_dict()
    data["colour"] = "blue"
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)
    data = make_config("g.txt").to_dict()
    data["tolerances"]["bogus"] = 1e-3
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_missing_key_rejected():
    data = make_config("g.txt").to_dict()
    del data["beta2"]
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_bad_json():
    with pytest.raises(ConfigError):
        ExperimentConfig.loads("{not json")


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(1e-6, 1e6),
    t_end=st.floats(1e-3, 1e4),
    seeds=st.integers(1, 1000),
    rng_seed=st.integers(0, 2**64 - 1),
    eig_tol=st.floats(1e-16, 1e-2),
)
def test_config_roundtrip(beta, t_end, seeds, rng_seed, eig_tol):
    cfg = make_config(
        "some/path.txt", beta1=beta, t_end=t_end, seeds=seeds, rng_seed=rng_seed,
        tolerances=Tolerances(eig_tol=eig_tol),
    )
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_config_load_from_file(tmp_path):
    cfg = make_config("x.txt")
    p = tmp_path / "cfg.json"
    p.write_text(cfg.dumps())
    assert ExperimentConfig.load(p) == cfg


def test_r1_run_goes_to_origin(k3_files):
    cfg = make_config(k3_files, beta1=0.4, beta2=0.3)
    out = run_experiment(cfg)
    assert out.report.region.value == "R1"
    assert len(out.equilibria) == 1
    assert not out.equilibria.points[0].state.stack().any()


def test_k3_run_terminal_averages(k3_files):
    out = run_experiment(make_config(k3_files))
    assert out.report.region.value == "R5"
    for traj in out.trajectories:
        ax, ay = avg_projection(traj.final)
        assert ax == pytest.approx(0.5, abs=1e-6)
        assert ay == pytest.approx(0.0, abs=1e-6)


def test_emit_outputs(k3_files, tmp_path):
    out = run_experiment(make_config(k3_files, seeds=1))
    d = tmp_path / "out"
    files = emit_outputs(out, d)
    assert sorted(p.name for p in files) == [
        "equilibria.json", "manifest.json", "regime.json", "trajectory_0.csv",
    ]
    rows = (d / "trajectory_0.csv").read_text().splitlines()
    assert rows[0] == "t,avgX,avgY"
    ax, ay = avg_projection(out.initial_states[0])
    assert rows[1] == f"0,{ax:.17g},{ay:.17g}"
    assert float(rows[-1].split(",")[0]) == out.trajectories[0].times[-1]
    manifest = json.loads((d / "manifest.json").read_text())
    assert manifest["rng_seed"] == 42 and manifest["rng"] == "PCG64"
    assert ExperimentConfig.from_dict(manifest["config"]) == out.config
    regime = json.loads((d / "regime.json").read_text())
    assert regime["region"] == "R5"


def test_csv_values_round_trip(k3_files, tmp_path):
    out = run_experiment(make_config(k3_files, seeds=1))
    emit_outputs(out, tmp_path)
    rows = (tmp_path / "trajectory_0.csv").read_text().splitlines()[1:]
    xs = [float(r.split(",")[1]) for r in rows]
    expected = [avg_projection(s)[0] for s in out.trajectories[0].states]
    assert xs == expected


def test_deterministic_outputs(k3_files, tmp_path):
    cfg = make_config(k3_files)
    emit_outputs(run_experiment(cfg), tmp_path / "a")
    emit_outputs(run_experiment(cfg), tmp_path / "b")
    for name in ("regime.json", "equilibria.json", "manifest.json", "trajectory_0.csv", "trajectory_2.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seed_changes_trajectories(k3_files):
    a = run_experiment(make_config(k3_files, seeds=1, rng_seed=1))
    b = run_experiment(make_config(k3_files, seeds=1, rng_seed=2))
    assert not np.array_equal(a.initial_states[0].x, b.initial_states[0].x)


def test_missing_graph_file(tmp_path):
    with pytest.raises(OSError):
        run_experiment(make_config(str(tmp_path / "missing.txt")))


def test_mismatched_graph_sizes(tmp_path, k3_files):
    other = tmp_path / "k4.txt"
    other.write_text(emit_edge_list(complete_graph(4)))
    with pytest.raises(ConfigError):
        run_experiment(make_config(k3_files, graph_b_path=str(other)))

"""Experiment registry, config resolution, and the suite runner."""

import numpy as np
import pytest

from climbench.configio import write_algo_fragment
from climbench.experiments import (EXPERIMENTS, experiment_spec, make_experiment_env,
                                   plan_experiment_suite, resolve_config,
                                   run_experiment_suite, tuned_fragment_path)
from climbench.records import load_record, load_records_dir, record_filename


def test_sixteen_experiment_codes():
    assert len(EXPERIMENTS) == 16
    for v in ("v0", "v1", "v2"):
        for suffix in ("optim-L", "optim-L-60k", "homo-64L", "homo-64L-60k"):
            assert f"{v}-{suffix}" in EXPERIMENTS
    for suffix in ("optim-L", "optim-L-10k", "homo-64L", "homo-64L-10k"):
        assert f"rce-v0-{suffix}" in EXPERIMENTS


def test_budgets_match_naming():
    assert experiment_spec("v0-homo-64L-60k").steps == 60_000
    assert experiment_spec("v0-homo-64L").steps == 20_000
    assert experiment_spec("rce-v0-optim-L-10k").steps == 10_000
    assert experiment_spec("rce-v0-optim-L").steps == 4_000


def test_unknown_experiment_rejected():
    with pytest.raises(KeyError, match="unknown experiment"):
        experiment_spec("v9-zzz")


def test_plan_cardinality_eight_algorithms_ten_seeds():
    algos = ["reinforce", "dpg", "ddpg", "td3", "trpo", "ppo", "sac", "tqc"]
    plan = plan_experiment_suite("v0-homo-64L-60k", algos, list(range(1, 11)))
    assert len(plan) == 80
    assert len(set(plan)) == 80


def test_homo_64l_forces_layer_size():
    spec = experiment_spec("v1-homo-64L")
    for algo in ("ddpg", "tqc", "ppo"):
        cfg = resolve_config(spec, algo)
        assert cfg.actor_critic_layer_size == 64
        assert cfg.total_timesteps == 20_000


def test_optim_l_requires_and_loads_tuned_fragment(tmp_path):
    spec = experiment_spec("v0-optim-L-60k")
    with pytest.raises(FileNotFoundError, match="tuned"):
        resolve_config(spec, "ddpg")
    with pytest.raises(FileNotFoundError, match="no tuned fragment"):
        resolve_config(spec, "ddpg", tuned_dir=tmp_path)
    path = tuned_fragment_path(tmp_path, "v0", "ddpg")
    write_algo_fragment(path, "ddpg", {"actor_critic_layer_size": 128,
                                       "learning_rate": 0.00025, "tau": 0.02})
    cfg = resolve_config(spec, "ddpg", tuned_dir=tmp_path)
    assert cfg.actor_critic_layer_size == 128
    assert cfg.learning_rate == pytest.approx(0.00025)
    assert cfg.tau == pytest.approx(0.02)


def test_env_overrides_reach_environment():
    spec = experiment_spec("v0-homo-64L")
    env = make_experiment_env(spec, {"t_physics": "325.0", "initial_temperature": "318"})
    assert env.params.t_physics == 325.0
    assert env.params.initial_temperature == 318.0
    rce = make_experiment_env(experiment_spec("rce-v0-homo-64L"),
                              {"isothermal_init": "280"})
    assert rce.params.isothermal_init == 280.0


def test_suite_writes_one_record_per_algo_seed(tmp_path):
    records = run_experiment_suite("v0-homo-64L", ["dpg", "reinforce"], [1, 2],
                                   out_dir=tmp_path, steps=400)
    assert len(records) == 4
    files = sorted(p.name for p in tmp_path.glob("*.rec"))
    assert files == sorted(
        record_filename("v0-homo-64L", a, s)
        for a in ("dpg", "reinforce") for s in (1, 2))
    loaded = load_records_dir(tmp_path)
    assert {(r.algorithm, r.seed) for r in loaded} == {
        ("dpg", 1), ("dpg", 2), ("reinforce", 1), ("reinforce", 2)}
    for rec in loaded:
        assert rec.steps == [200, 400]


def test_suite_rerun_is_byte_identical_apart_from_header(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        run_experiment_suite("v0-homo-64L", ["dpg"], [1], out_dir=out, steps=400)
    name = record_filename("v0-homo-64L", "dpg", 1)
    rec1 = load_record(out1 / name)
    rec2 = load_record(out2 / name)
    assert rec1.body_bytes() == rec2.body_bytes()
    assert rec1.config_digest == rec2.config_digest


def test_parallel_suite_matches_serial(tmp_path):
    serial = run_experiment_suite("v0-homo-64L", ["dpg"], [1, 2], steps=400,
                                  out_dir=tmp_path / "s", workers=1)
    parallel = run_experiment_suite("v0-homo-64L", ["dpg"], [1, 2], steps=400,
                                    out_dir=tmp_path / "p", workers=2)
    for a, b in zip(serial, parallel):
        assert a.entries == b.entries


def test_rce_suite_writes_profile_sidecar(tmp_path):
    run_experiment_suite("rce-v0-homo-64L", ["dpg"], [1], out_dir=tmp_path,
                         steps=500)
    sidecar = tmp_path / "rce-v0-homo-64L__dpg__seed1.profile.csv"
    assert sidecar.exists()
    lines = sidecar.read_text().splitlines()
    assert lines[0] == "pressure_hPa,temperature_K,simulated_K"
    assert len(lines) == 18

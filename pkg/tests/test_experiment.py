import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_array_equal

from src.exceptions import ExperimentError, HorizonOverflowError
from src.harness.experiment import (
    aggregate_experiment,
    check_gains,
    resolve_output_dir,
    run_experiment,
    run_replication,
    simulate_policy,
    summarize_policy,
    write_trace,
)
from src.metrics.aggregate import aggregate
from src.metrics.regret import RegretSeries
from src.models.experiment import PolicyKind
from src.utils.config_loader import ConfigLoader
from tests.conftest import assert_paired_visits, scalar_config, write_config


def _noisy_two_dim(**overrides):
    """K=2, n=m=2, bruit 0.3: oracle, MSPSA et moindres carrés."""
    payload = {
        "name": "deux_etats",
        "objective": "quadratic_regulation",
        "target": [5.0, 5.0],
        "chain": {"P": [[0.7, 0.3], [0.4, 0.6]]},
        "states": [
            {"A": [[-1.0, 0.2], [0.2, -1.2]], "b": [7.0, 7.5], "noise_sigma": 0.3},
            {"A": [[-0.8, 0.0], [0.1, -1.4]], "b": [7.0, 8.0], "noise_sigma": 0.3},
        ],
        "feasible": {"lower": 0.0, "upper": 4.0},
        "initial_input": 3.5,
        "policies": [
            {"name": "mspsa", "kind": "mspsa", "gains": {"gamma": 0.5}},
            {"name": "greedy_lse", "kind": "greedy_lse"},
            {"name": "oracle", "kind": "oracle"},
        ],
        "horizon": 200,
        "replications": 5,
        "seed": 21,
        "checkpoint_count": 10,
    }
    payload.update(overrides)
    return payload


def _load(tmp_path, payload, name="experiment.json"):
    return ConfigLoader.load_config(write_config(tmp_path, payload, name))


def test_single_oracle_period_has_zero_regret(tmp_path):
    experiment = _load(tmp_path, scalar_config(horizon=1))
    summary = run_experiment(experiment, tmp_path / "out")
    oracle = summary.get_policy("oracle")
    assert oracle.final_mean_regret == 0.0
    assert oracle.final_se_regret == 0.0
    assert oracle.fallback_count == 0
    assert summary.optimal_inputs == {1: [pytest.approx(2.0)]}


def test_outputs_are_written(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    out = tmp_path / "out"
    run_experiment(experiment, out)
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted([
        "deux_etats__mspsa.csv", "deux_etats__mspsa__states.csv",
        "deux_etats__greedy_lse.csv", "deux_etats__greedy_lse__states.csv",
        "deux_etats__oracle.csv", "deux_etats__oracle__states.csv",
        "summary.json", "summary.txt",
    ])

    curves = pd.read_csv(out / "deux_etats__mspsa.csv")
    assert list(curves.columns) == ["t", "mean_regret", "se_regret", "mean_input_mse", "mean_est_mse"]
    assert curves["t"].tolist() == list(experiment.checkpoints)
    assert (curves["mean_regret"].diff().dropna() >= 0).all()

    states = pd.read_csv(out / "deux_etats__mspsa__states.csv")
    assert set(states["state"]) == {1, 2}
    assert list(states.columns) == ["state", "t_i", "replications", "mean_est_mse", "se_est_mse"]
    assert states["replications"].between(1, experiment.replications).all()
    for _, group in states.groupby("state"):
        assert (group["replications"].diff().dropna() <= 0).all()

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["provenance"]["seed"] == 21
    assert summary["provenance"]["config_hash"] == ConfigLoader.config_hash(experiment)
    assert [p["name"] for p in summary["policies"]] == ["mspsa", "greedy_lse", "oracle"]
    assert summary["policies"][2]["final_mean_regret"] == 0.0


def test_rerun_gives_identical_bytes(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    run_experiment(experiment, tmp_path / "a")
    run_experiment(experiment, tmp_path / "b")
    for path in (tmp_path / "a").iterdir():
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()


def test_workers_do_not_change_results(tmp_path):
    sequential = _load(tmp_path, _noisy_two_dim(), "seq.json")
    parallel = _load(tmp_path, _noisy_two_dim(workers=2), "par.json")
    curves_seq = aggregate_experiment(sequential)
    curves_par = aggregate_experiment(parallel)
    for name, curves in curves_seq.items():
        assert_array_equal(curves.mean_regret, curves_par[name].mean_regret)
        assert_array_equal(curves.se_regret, curves_par[name].se_regret)
        assert_array_equal(curves.mean_est_mse, curves_par[name].mean_est_mse)


def test_policies_share_common_random_numbers(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    learner = simulate_policy(experiment, "mspsa", 3)
    assert_paired_visits(learner)
    oracle = simulate_policy(experiment, "oracle", 3)
    assert_array_equal(learner.s, oracle.s)
    other = simulate_policy(experiment, "oracle", 4)
    assert not np.array_equal(oracle.y, other.y)


def test_replication_returns_one_series_per_policy(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    series = run_replication((experiment, 0))
    assert len(series) == 3
    assert all(s.horizon == 200 for s in series)
    assert series[2].cumulative_regret[-1] == 0.0


def test_oracle_regret_is_exactly_zero_across_replications(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    curves = aggregate_experiment(experiment)["oracle"]
    assert np.all(curves.mean_regret == 0.0)
    assert np.all(curves.se_regret == 0.0)


def test_gain_warnings(tmp_path):
    low = _load(tmp_path, _noisy_two_dim(policies=[{"name": "m", "kind": "mspsa", "gains": {"gamma": 1e-4}}]))
    high = _load(tmp_path, _noisy_two_dim(policies=[{"name": "m", "kind": "mspsa", "gains": {"gamma": 10.0}}]))
    assert len(check_gains(low)) == 2
    assert check_gains(high) == []


def test_failed_episode_reports_context(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    broken = experiment.__class__(**{**experiment.__dict__, "horizon": 0})
    with pytest.raises(ExperimentError) as excinfo:
        run_experiment(broken, tmp_path / "out")
    assert excinfo.value.policy == "mspsa"
    assert excinfo.value.replication == 0
    assert excinfo.value.t is None
    assert isinstance(excinfo.value.cause, HorizonOverflowError)
    assert not (tmp_path / "out").exists()


def test_output_dir_precedence(tmp_path, monkeypatch):
    experiment = _load(tmp_path, scalar_config(output_dir="depuis_config"))
    monkeypatch.delenv("MSPSA_OUT_DIR", raising=False)
    assert resolve_output_dir(experiment).name == "depuis_config"
    monkeypatch.setenv("MSPSA_OUT_DIR", str(tmp_path / "env"))
    assert resolve_output_dir(experiment) == tmp_path / "env"
    assert resolve_output_dir(experiment, tmp_path / "cli") == tmp_path / "cli"

    monkeypatch.delenv("MSPSA_OUT_DIR")
    plain = _load(tmp_path, scalar_config(), "plain.json")
    assert resolve_output_dir(plain).name == "results"


def test_trace_is_written(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    path = write_trace(experiment, 2, "mspsa", tmp_path / "trace.csv")
    trace = pd.read_csv(path)
    assert len(trace) == 200
    assert list(trace.columns[:3]) == ["t", "s_prev", "s_t"]
    assert set(trace["s_prev"]) <= {1, 2}
    assert (trace["s_prev"].iloc[1:].to_numpy() == trace["s_t"].iloc[:-1].to_numpy()).all()


def test_trace_rejects_unknown_replication_or_policy(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    with pytest.raises(ValueError):
        write_trace(experiment, 5, "mspsa", tmp_path / "trace.csv")
    with pytest.raises(KeyError):
        write_trace(experiment, 0, "absente", tmp_path / "trace.csv")


def test_state_slope_ignores_replication_that_never_reached_the_state():
    t = np.arange(1, 1001, dtype=float)
    ones = np.ones(5)

    def series(replication, curve):
        return RegretSeries(
            replication=replication,
            cumulative_regret=np.cumsum(ones),
            input_sq_err=ones.copy(),
            cumulative_input_sq_err=np.cumsum(ones),
            estimation_sq_err=ones.copy(),
            state_curves={0: curve},
        )

    curves = aggregate([series(0, t ** -0.5), series(1, 3.0 * t ** -0.5), series(2, np.zeros(0))])
    summary = summarize_policy("mspsa", PolicyKind.MSPSA, curves, 0.1)
    assert summary.state_slopes[1] == pytest.approx(-0.5, abs=1e-9)


def test_every_mspsa_replication_pairs_its_visits(tmp_path):
    experiment = _load(tmp_path, _noisy_two_dim())
    for replication in range(experiment.replications):
        assert_paired_visits(simulate_policy(experiment, "mspsa", replication))

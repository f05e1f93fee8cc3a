"""
Exécutions d'acceptation (pytest -m slow).

Instances data/qr_acceptance.json et data/rm_acceptance.json telles
qu'elles sont livrées: T = 10^5, R = 200.
"""
import numpy as np
import pytest

from src.harness.experiment import aggregate_experiment, simulate_policy, summarize_policy
from src.metrics.aggregate import loglog_slope
from src.utils.config_loader import ConfigLoader
from tests.conftest import DATA_DIR, assert_paired_visits

pytestmark = pytest.mark.slow

HORIZON = 100_000
REPLICATIONS = 200

# Fenêtre de la pente du regret: T dans [10^3, 10^5]
REGRET_WINDOW = (1_000, HORIZON)


@pytest.fixture(scope="module", params=["qr_acceptance.json", "rm_acceptance.json"])
def acceptance_run(request):
    experiment = ConfigLoader.load_config(DATA_DIR / request.param)
    assert experiment.horizon == HORIZON
    assert experiment.replications == REPLICATIONS
    curves = aggregate_experiment(experiment)
    summaries = {
        spec.name: summarize_policy(spec.name, spec.kind, curves[spec.name], experiment.slope_window)
        for spec in experiment.policies
    }
    return experiment, curves, summaries


def test_mspsa_regret_grows_like_square_root(acceptance_run):
    _, curves, _ = acceptance_run
    fit = loglog_slope(curves["mspsa"].mean_regret, REGRET_WINDOW)
    assert 0.40 <= fit.slope <= 0.65


def test_mspsa_state_estimation_error_decays(acceptance_run):
    experiment, _, summaries = acceptance_run
    slopes = summaries["mspsa"].state_slopes
    assert set(slopes) == set(range(1, experiment.model.K + 1))
    for slope in slopes.values():
        assert -0.7 <= slope <= -0.35


def test_mspsa_input_error_converges(acceptance_run):
    _, curves, _ = acceptance_run
    mse = curves["mspsa"].mean_input_mse
    assert mse.shape[0] == HORIZON
    assert mse[HORIZON - 1] < 0.05 * mse[99]


def test_mspsa_beats_greedy_least_squares(acceptance_run):
    _, _, summaries = acceptance_run
    assert summaries["mspsa"].final_mean_regret < summaries["greedy_lse"].final_mean_regret


def test_oracle_regret_is_zero(acceptance_run):
    _, curves, _ = acceptance_run
    assert np.all(curves["oracle"].mean_regret == 0.0)


def test_mspsa_visits_are_paired(acceptance_run):
    experiment, _, _ = acceptance_run
    for replication in range(0, REPLICATIONS, 20):
        assert_paired_visits(simulate_policy(experiment, "mspsa", replication))

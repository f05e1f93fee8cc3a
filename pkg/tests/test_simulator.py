import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.exceptions import DimensionMismatchError, EpisodeError, HorizonOverflowError, NonFiniteInputError
from src.models.affine_model import AffineState, JumpAffineModel, Objective
from src.models.feasible_box import FeasibleBox
from src.models.markov_chain import MarkovChain
from src.policies.base import ConstantPolicy
from src.policies.gains import GainSchedule
from src.policies.mspsa import MspsaPolicy
from src.policies.oracle_policy import OraclePolicy
from src.simulation import simulator
from src.simulation.rng import RngStream
from src.simulation.simulator import next_state, observe, realized_cost, run_episode
from tests.conftest import assert_paired_visits, scalar_model


BOX2 = FeasibleBox.uniform(-10.0, 10.0, 2)


def _mspsa(model, box=BOX2):
    return MspsaPolicy(
        model.objective, box, box.center, GainSchedule(gamma=0.5, step_offset=10),
        target=model.target,
    )


# ============================================================================
# RNG
# ============================================================================

def test_rng_streams_are_reproducible_and_distinct():
    a = RngStream(42, 3).uniforms(5)
    b = RngStream(42, 3).uniforms(5)
    c = RngStream(42, 4).uniforms(5)
    d = RngStream(42, 3, RngStream.POLICY_CHANNEL).uniforms(5)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_rng_counts_draws_and_normals_are_finite():
    rng = RngStream(1)
    rng.uniform()
    z = rng.normals(1000)
    assert rng.draws == 1001
    assert np.all(np.isfinite(z))


@pytest.mark.parametrize("seed", [-1, 2 ** 64, 1.5])
def test_rng_rejects_invalid_seed(seed):
    with pytest.raises(ValueError):
        RngStream(seed)


# ============================================================================
# TRANSITIONS ET OBSERVATIONS
# ============================================================================

def test_identity_chain_is_absorbing():
    chain = MarkovChain(np.eye(2))
    rng = RngStream(0)
    assert all(next_state(chain, 1, rng) == 1 for _ in range(100))
    assert rng.draws == 100


def test_deterministic_row():
    chain = MarkovChain([[1.0, 0.0], [1.0, 0.0]])
    rng = RngStream(5)
    assert all(next_state(chain, 0, rng) == 0 for _ in range(100))


def test_uniform_chain_frequency():
    chain = MarkovChain(np.full((2, 2), 0.5))
    rng = RngStream(11)
    draws = 100_000
    ones = sum(next_state(chain, 0, rng) == 0 for _ in range(draws))
    se = np.sqrt(0.25 / draws)
    assert abs(ones / draws - 0.5) < 4 * se


def test_next_state_rejects_unknown_state():
    with pytest.raises(IndexError):
        next_state(MarkovChain(np.eye(2)), 2, RngStream(0))


def test_noiseless_observation():
    rng = RngStream(0)
    y = observe(scalar_model(2.0, 1.0), 0, np.array([3.0]), rng)
    assert y.tolist() == [7.0]
    assert rng.draws == 1


def test_noiseless_identity_observation():
    state = AffineState(np.eye(2), [0.0, 0.0], [0.0, 0.0])
    model = JumpAffineModel(MarkovChain([[1.0]]), (state,), Objective.QUADRATIC_REGULATION, [0.0, 0.0])
    assert observe(model, 0, np.array([1.5, -2.0]), RngStream(0)).tolist() == [1.5, -2.0]


def test_noise_sample_mean():
    model = scalar_model(2.0, 1.0, sigma=0.5)
    rng = RngStream(8)
    draws = 100_000
    ys = np.array([observe(model, 0, np.array([3.0]), rng)[0] for _ in range(draws)])
    assert abs(ys.mean() - 7.0) < 4 * 0.5 / np.sqrt(draws)
    assert ys.std() == pytest.approx(0.5, rel=0.02)


def test_non_finite_input_is_rejected(qr_scalar):
    with pytest.raises(NonFiniteInputError):
        observe(qr_scalar, 0, np.array([np.nan]), RngStream(0))


def test_realized_cost_both_objectives(qr_scalar, rm_scalar):
    assert realized_cost(qr_scalar, np.array([1.0]), np.array([3.0])) == pytest.approx(4.0)
    assert realized_cost(rm_scalar, np.array([0.5]), np.array([0.5])) == pytest.approx(-0.25)


# ============================================================================
# ÉPISODES
# ============================================================================

def test_single_step_constant_policy(qr_scalar, unit_box):
    rng = RngStream(0)
    trajectory = run_episode(qr_scalar, unit_box, ConstantPolicy([1.5]), 1, rng)
    assert len(trajectory) == 1
    record = trajectory[0]
    assert record.t == 1
    assert record.x.tolist() == [1.5]
    assert record.y.tolist() == [4.0]
    assert record.s_prev == 0 and record.s == 0
    # une uniforme pour l'état, m gaussiennes pour le bruit
    assert rng.draws == 2


def test_oracle_on_noiseless_scalar_has_zero_regret(qr_scalar, unit_box):
    trajectory = run_episode(qr_scalar, unit_box, OraclePolicy(qr_scalar), 50, RngStream(0))
    assert np.all(trajectory.stage_regret == 0.0)
    assert np.all(trajectory.stage_cost == 0.0)
    assert np.all(trajectory.input_sq_err == 0.0)


def test_oracle_regret_is_zero_with_noise(two_state_qr):
    trajectory = run_episode(two_state_qr, BOX2, OraclePolicy(two_state_qr), 200, RngStream(3))
    assert np.all(trajectory.stage_regret == 0.0)
    assert trajectory.final_estimates.keys() <= {0, 1}


def test_episode_is_deterministic(two_state_qr):
    first = run_episode(two_state_qr, BOX2, _mspsa(two_state_qr), 300, RngStream(9, 2))
    second = run_episode(two_state_qr, BOX2, _mspsa(two_state_qr), 300, RngStream(9, 2))
    assert_paired_visits(first)
    for column in ("s_prev", "s", "x", "y", "stage_regret", "estimate_sq_err", "update_count"):
        assert_array_equal(getattr(first, column), getattr(second, column))


def test_policies_share_states_and_noise(two_state_qr):
    learner = run_episode(two_state_qr, BOX2, _mspsa(two_state_qr), 300, RngStream(4, 1))
    assert_paired_visits(learner)
    constant = run_episode(two_state_qr, BOX2, ConstantPolicy([0.0, 0.0]), 300, RngStream(4, 1))
    assert_array_equal(learner.s, constant.s)
    # y - A x - b est le même bruit pour les deux politiques
    for k in range(300):
        A = two_state_qr.states[learner.s[k]].A
        b = two_state_qr.states[learner.s[k]].b
        np.testing.assert_allclose(learner.y[k] - A @ learner.x[k] - b, constant.y[k] - A @ constant.x[k] - b,
                                   atol=1e-12)


def test_trajectory_is_chain_consistent(two_state_qr):
    trajectory = run_episode(two_state_qr, BOX2, _mspsa(two_state_qr), 500, RngStream(1))
    assert_paired_visits(trajectory)
    assert trajectory.s_prev[0] == two_state_qr.chain.initial_state
    assert trajectory.visits(0) + trajectory.visits(1) == 500


@pytest.mark.parametrize("horizon", [0, -3])
def test_horizon_out_of_bounds(qr_scalar, unit_box, horizon):
    with pytest.raises(HorizonOverflowError):
        run_episode(qr_scalar, unit_box, ConstantPolicy([1.0]), horizon, RngStream(0))


def test_policy_errors_carry_the_period(qr_scalar, unit_box):
    with pytest.raises(EpisodeError) as excinfo:
        run_episode(qr_scalar, unit_box, ConstantPolicy([np.inf]), 5, RngStream(0))
    assert excinfo.value.t == 1
    assert isinstance(excinfo.value.cause, NonFiniteInputError)


def test_regret_errors_carry_the_period(qr_scalar, unit_box, monkeypatch):
    calls = []

    def failing_regret(*args):
        calls.append(args)
        if len(calls) == 3:
            raise DimensionMismatchError("A_{s_t} incompatible avec x_t")
        return 0.0

    monkeypatch.setattr(simulator, "stage_regret", failing_regret)
    with pytest.raises(EpisodeError) as excinfo:
        run_episode(qr_scalar, unit_box, ConstantPolicy([1.0]), 5, RngStream(0))
    assert excinfo.value.t == 3
    assert isinstance(excinfo.value.cause, DimensionMismatchError)


def test_box_dimension_must_match(qr_scalar):
    with pytest.raises(ValueError):
        run_episode(qr_scalar, BOX2, ConstantPolicy([0.0, 0.0]), 5, RngStream(0))

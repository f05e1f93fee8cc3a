import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.models.affine_model import Objective
from src.models.feasible_box import FeasibleBox
from src.policies.greedy_lse import GreedyLsePolicy, LseState, initialization_input
from src.policies.oracle_policy import OraclePolicy
from src.simulation.rng import RngStream
from src.simulation.simulator import run_episode
from tests.conftest import random_instance, scalar_model


def _policy(model, box, initial):
    return GreedyLsePolicy(model.objective, box, initial, K=model.K, m=model.m, target=model.target)


def test_exact_line_fit():
    state = LseState(K=1, n=1, m=1)
    state.add_sample(0, np.array([1.05]), np.array([3.1]))
    assert state.initializing
    assert 0 in state.deficient
    state.add_sample(0, np.array([0.95]), np.array([2.9]))
    assert not state.initializing
    A_hat, b_hat = state.estimates[0]
    assert_allclose(A_hat, [[2.0]], rtol=1e-9)
    assert_allclose(b_hat, [1.0], rtol=1e-9)


def test_transition_estimate_uses_add_one_smoothing():
    state = LseState(K=2, n=1, m=1)
    for _ in range(3):
        state.add_transition(0, 0)
    state.add_transition(0, 1)
    assert_allclose(state.transition_estimate(0), [4 / 6, 2 / 6])
    assert_allclose(state.transition_estimate(1), [0.5, 0.5])


def test_initialization_sequence():
    initial = np.array([1.0, 0.0])
    widths = np.array([2.0, 4.0])
    sequence = [initialization_input(initial, k, widths).tolist() for k in range(6)]
    assert_allclose(sequence, [
        [1.0, 0.0],
        [1.05, 0.0],
        [0.95, 0.0],
        [1.0, 0.2],
        [1.0, -0.2],
        [1.05, 0.0],
    ])


def test_scalar_regulation_plays_optimum_after_initialization(qr_scalar, unit_box):
    policy = _policy(qr_scalar, unit_box, [1.0])
    rng = RngStream(0)
    inputs = []
    for _ in range(4):
        x = policy.act(0, rng)
        inputs.append(x[0])
        policy.update(2.0 * x + 1.0)
    assert inputs[:2] == pytest.approx([1.0, 1.05])
    assert inputs[2:] == pytest.approx([2.0, 2.0])
    assert policy.fallback_count == 0


def test_noiseless_regret_vanishes_after_initialization(qr_scalar, unit_box):
    trajectory = run_episode(qr_scalar, unit_box, _policy(qr_scalar, unit_box, [1.0]), 30, RngStream(0))
    assert np.all(trajectory.stage_regret[2:] < 1e-16)
    assert not trajectory.fallback.any()


def test_revenue_scalar_optimum(rm_scalar):
    box = FeasibleBox([0.0], [2.0])
    trajectory = run_episode(rm_scalar, box, _policy(rm_scalar, box, [1.5]), 10, RngStream(0))
    assert_allclose(trajectory.x[-1], [0.5], atol=1e-9)


def test_optimum_is_projected():
    model = scalar_model(2.0, 1.0, target=9.0)  # x* = 4
    box = FeasibleBox([0.0], [3.0])
    trajectory = run_episode(model, box, _policy(model, box, [1.0]), 5, RngStream(0))
    assert trajectory.x[-1].tolist() == [3.0]


def test_constant_outputs_trigger_fallback():
    box = FeasibleBox([0.0], [4.0])
    policy = GreedyLsePolicy(Objective.QUADRATIC_REGULATION, box, [1.0], K=1, m=1, target=[5.0])
    rng = RngStream(0)
    inputs = []
    for _ in range(3):
        inputs.append(policy.act(0, rng)[0])
        policy.update(np.array([1.0]))
    # A_hat = 0: le système estimé est singulier, l'entrée précédente est rejouée
    assert inputs == pytest.approx([1.0, 1.05, 1.05])
    assert policy.fallback_count == 1
    assert policy.snapshot(0).fallback


def test_samples_are_attributed_to_realized_states():
    model = random_instance(np.random.default_rng(3), K=2, n=2, objective=Objective.QUADRATIC_REGULATION)
    box = FeasibleBox.uniform(-20.0, 20.0, 2)
    policy = _policy(model, box, [1.0, 1.0])
    run_episode(model, box, policy, 200, RngStream(6))
    for k, state in enumerate(model.states):
        A_hat, b_hat = policy.state.estimates[k]
        assert_allclose(A_hat, state.A, atol=1e-7)
        assert_allclose(b_hat, state.b, atol=1e-7)


@pytest.mark.parametrize("objective", list(Objective))
def test_all_states_estimated_uses_add_one_weights(objective):
    model = random_instance(np.random.default_rng(4), K=3, n=2, objective=objective)
    box = FeasibleBox.uniform(-50.0, 50.0, 2)
    policy = _policy(model, box, [0.5, 0.5])
    run_episode(model, box, policy, 300, RngStream(2))
    assert sorted(policy.state.estimates) == [0, 1, 2]

    A = np.stack([policy.state.estimates[k][0] for k in range(3)])
    b = np.stack([policy.state.estimates[k][1] for k in range(3)])
    for s_prev in range(3):
        row = policy.state.transitions[s_prev]
        weights = (row + 1.0) / (row.sum() + 3)
        if objective is Objective.QUADRATIC_REGULATION:
            lhs = np.einsum("k,kji,kjl->il", weights, A, A)
            rhs = np.einsum("k,kji,kj->i", weights, A, model.target - b)
        else:
            lhs = -np.einsum("k,kij->ij", weights, A + A.transpose(0, 2, 1))
            rhs = np.einsum("k,ki->i", weights, b)
        assert_allclose(policy.certainty_equivalent_input(s_prev), np.linalg.solve(lhs, rhs), rtol=1e-8, atol=1e-10)


def test_oracle_policy_delegates_to_closed_form(rm_scalar):
    policy = OraclePolicy(rm_scalar)
    rng = RngStream(0)
    for _ in range(3):
        assert policy.act(0, rng).tolist() == pytest.approx([0.5])
        policy.update(np.array([0.5]))
    assert policy.snapshot(0).update_count == 3

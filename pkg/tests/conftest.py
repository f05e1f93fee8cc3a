import json
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.models.affine_model import AffineState, JumpAffineModel, Objective
from src.models.feasible_box import FeasibleBox
from src.models.markov_chain import MarkovChain
from src.models.trajectory import Trajectory

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def scalar_model(
    a: float,
    b: float,
    sigma: float = 0.0,
    objective: Objective = Objective.QUADRATIC_REGULATION,
    target: float = 0.0,
) -> JumpAffineModel:
    """Modèle K=1, m=n=1: y = a x + b + w."""
    state = AffineState([[a]], [b], [sigma])
    return JumpAffineModel(
        MarkovChain([[1.0]]),
        (state,),
        objective,
        [target] if objective is Objective.QUADRATIC_REGULATION else None,
    )


def random_instance(
    rng: np.random.Generator,
    K: int,
    n: int,
    objective: Objective,
    sigma: float = 0.0,
) -> JumpAffineModel:
    """Instance aléatoire valide: A_k définies négatives bien conditionnées, P dense."""
    P = rng.uniform(0.1, 1.0, size=(K, K))
    P /= P.sum(axis=1, keepdims=True)
    states = []
    for _ in range(K):
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        A = -(Q * rng.uniform(0.5, 1.5, size=n)) @ Q.T
        states.append(AffineState(A, rng.uniform(-1, 1, size=n), np.full(n, sigma)))
    target = rng.uniform(-1, 1, size=n) if objective is Objective.QUADRATIC_REGULATION else None
    return JumpAffineModel(MarkovChain(P), tuple(states), objective, target)


@pytest.fixture
def qr_scalar() -> JumpAffineModel:
    """y = 2x + 1 sans bruit, y* = 5: x* = 2."""
    return scalar_model(2.0, 1.0, target=5.0)


@pytest.fixture
def rm_scalar() -> JumpAffineModel:
    """y = -x + 1 sans bruit: x* = 0.5."""
    return scalar_model(-1.0, 1.0, objective=Objective.REVENUE_MAXIMIZATION)


@pytest.fixture
def unit_box() -> FeasibleBox:
    return FeasibleBox.uniform(0.0, 4.0, 1)


@pytest.fixture
def two_state_qr() -> JumpAffineModel:
    """K=2, n=m=2, bruit 0.5."""
    P = [[0.6, 0.4], [0.4, 0.6]]
    states = (
        AffineState([[-1.0, 0.2], [0.2, -1.2]], [6.0, 6.5], [0.5, 0.5]),
        AffineState([[-0.8, 0.0], [0.1, -1.4]], [7.0, 8.0], [0.5, 0.5]),
    )
    return JumpAffineModel(MarkovChain(P), states, Objective.QUADRATIC_REGULATION, [5.0, 5.0])


def assert_paired_visits(trajectory: Trajectory) -> None:
    """
    Trajectoire MSPSA: chaîne cohérente et k-ième visite de l'état i jouée
    avec t_i = ceil(k / 2), soit 2 t_i ou 2 t_i - 1 visites à tout instant.
    """
    assert trajectory.is_chain_consistent()
    n = len(trajectory)
    s_prev = trajectory.s_prev[:n]
    counts = trajectory.update_count[:n]
    for i in np.unique(s_prev):
        per_visit = counts[s_prev == i]
        assert_array_equal(per_visit, (np.arange(1, per_visit.size + 1) + 1) // 2)


def write_config(tmp_path: Path, payload: dict, name: str = "experiment.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def scalar_config(objective: str = "quadratic_regulation", **overrides) -> dict:
    """Expérience scalaire minimale (K=1)."""
    if objective == "quadratic_regulation":
        payload = {
            "name": "scalar",
            "objective": objective,
            "target": [5.0],
            "chain": {"P": [[1.0]]},
            "states": [{"A": [[2.0]], "b": [1.0], "noise_sigma": [0.0]}],
            "feasible": {"lower": [0.0], "upper": [4.0]},
            "initial_input": [1.0],
        }
    else:
        payload = {
            "name": "scalar",
            "objective": objective,
            "chain": {"P": [[1.0]]},
            "states": [{"A": [[-1.0]], "b": [1.0], "noise_sigma": [0.0]}],
            "feasible": {"lower": [0.0], "upper": [2.0]},
            "initial_input": [1.5],
        }
    payload.update({
        "policies": [{"name": "oracle", "kind": "oracle"}],
        "horizon": 10,
        "replications": 1,
        "seed": 3,
    })
    payload.update(overrides)
    return payload

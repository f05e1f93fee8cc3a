from typing import Dict

import numpy as np

from src.models.affine_model import JumpAffineModel
from src.policies.base import Policy, PolicySnapshot
from src.simulation.rng import RngStream
from src.solvers.oracle import optimal_inputs


class OraclePolicy(Policy):
    """
    Joue x*_{s_prev} calculé sur le vrai modèle.

    Référence de simulation uniquement: elle lit les paramètres inconnus
    du décideur. Regret d'étape nul en espérance.
    """

    def __init__(self, model: JumpAffineModel, name: str = "oracle"):
        super().__init__()
        self.name = name
        self.optimal = optimal_inputs(model)
        self._visits: Dict[int, int] = {}

    def _act(self, s_prev: int, rng: RngStream) -> np.ndarray:
        self._visits[s_prev] = self._visits.get(s_prev, 0) + 1
        return self.optimal[s_prev]

    def _update(self, s_prev: int, x: np.ndarray, y: np.ndarray) -> None:
        pass

    def snapshot(self, state: int) -> PolicySnapshot:
        return PolicySnapshot(self.optimal[state].copy(), self._visits.get(state, 0))

    def estimates(self) -> Dict[int, np.ndarray]:
        return {state: self.optimal[state].copy() for state in sorted(self._visits)}

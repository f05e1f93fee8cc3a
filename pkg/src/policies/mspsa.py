"""
Politique MSPSA: approximation stochastique par perturbations simultanées,
une estimation par état de la chaîne.

Après chaque observation de l'état i, l'estimation x_hat_i est perturbée:
d'abord x_hat_i + c Delta, puis, à la visite suivante de i, x_hat_i - c Delta.
Les deux coûts observés d+ et d- donnent l'estimation du gradient et la
mise à jour projetée:

    x_hat_i <- Pi( x_hat_i - a_t ((d+ - d-) / c_t) Delta_bar )

avec Delta_bar = 1 / Delta composante par composante. Seul le coût par
période change d'un objectif à l'autre: ||y - y*||^2 pour la régulation,
-x.y pour le revenu.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np

from src.exceptions import DimensionMismatchError, PolicyProtocolError
from src.models.affine_model import Objective
from src.models.feasible_box import FeasibleBox
from src.policies.base import Policy, PolicySnapshot
from src.policies.gains import GainSchedule, PerturbationLaw
from src.simulation.rng import RngStream


@dataclass
class MspsaState:
    """
    Enregistrement MSPSA d'un état i.

    Attributes:
        x_hat: Estimation x_hat_{i,t_i}, toujours dans Pi
        gains: Suites de gains de l'état
        t_i: Nombre de paires commencées
        e_i: 1 si un d+ attend son d-, 0 sinon
        pending_delta: Perturbation Delta_{t_i} de la paire en cours
        pending_d_plus: Coût d+ de la paire en cours
    """
    x_hat: np.ndarray
    gains: GainSchedule
    t_i: int = 0
    e_i: int = 0
    pending_delta: Optional[np.ndarray] = None
    pending_d_plus: Optional[float] = None

    @property
    def perturbation_size(self) -> float:
        return self.gains.perturbation_size(self.t_i)

    @property
    def step_size(self) -> float:
        return self.gains.step_size(self.t_i)


def mspsa_act(state: MspsaState, rng: RngStream, law: PerturbationLaw = PerturbationLaw.RADEMACHER) -> np.ndarray:
    """
    Entrée perturbée de la période.

    Phase e_i = 0: t_i est incrémenté, Delta est tiré et x_hat + c Delta est joué.
    Phase e_i = 1: x_hat - c Delta est joué avec le Delta de la paire en cours.
    """
    if state.e_i == 0:
        state.t_i += 1
        state.pending_delta = law.draw(state.x_hat.shape[0], rng)
        return state.x_hat + state.perturbation_size * state.pending_delta
    return state.x_hat - state.perturbation_size * state.pending_delta


def _record_cost(state: MspsaState, cost: float, feasible: FeasibleBox) -> None:
    """Stocke d+ ou, sur la seconde observation, applique la mise à jour projetée."""
    if state.pending_delta is None:
        raise PolicyProtocolError("Mise à jour MSPSA sans perturbation en cours")

    if state.e_i == 0:
        state.pending_d_plus = cost
        state.e_i = 1
        return

    difference = (state.pending_d_plus - cost) / state.perturbation_size
    step = state.step_size * difference / state.pending_delta
    state.x_hat = feasible.project(state.x_hat - step)
    state.e_i = 0
    state.pending_d_plus = None
    state.pending_delta = None


def mspsa_update_qr(state: MspsaState, y: np.ndarray, target: np.ndarray, feasible: FeasibleBox) -> None:
    """Mise à jour avec d = ||y_t - y*||^2."""
    residual = np.asarray(y, dtype=float) - target
    _record_cost(state, float(residual @ residual), feasible)


def mspsa_update_rm(state: MspsaState, x: np.ndarray, y: np.ndarray, feasible: FeasibleBox) -> None:
    """Mise à jour avec d = -x_t^T y_t (revenu négatif)."""
    _record_cost(state, -float(np.asarray(x, dtype=float) @ np.asarray(y, dtype=float)), feasible)


class MspsaPolicy(Policy):
    """
    MSPSA pour les deux objectifs.

    Attributes:
        objective: Objectif dont le coût alimente le gradient
        feasible: Ensemble Pi
        initial_input: Estimation initiale attribuée à tout nouvel état
        gains: Un GainSchedule commun ou un par état
        law: Loi des composantes de Delta
        target: Cible y* (régulation)
    """

    def __init__(
        self,
        objective: Objective,
        feasible: FeasibleBox,
        initial_input: np.ndarray,
        gains: Union[GainSchedule, Sequence[GainSchedule]],
        law: PerturbationLaw = PerturbationLaw.RADEMACHER,
        target: Optional[np.ndarray] = None,
        name: str = "mspsa",
    ):
        super().__init__()
        initial_input = np.asarray(initial_input, dtype=np.float64)
        if initial_input.shape != (feasible.n,):
            raise DimensionMismatchError(
                f"Entrée initiale de forme {initial_input.shape}, pavé de dimension {feasible.n}"
            )
        if objective is Objective.QUADRATIC_REGULATION and target is None:
            raise ValueError("MSPSA en régulation requiert une cible y*")

        self.name = name
        self.objective = objective
        self.feasible = feasible
        self.initial_input = feasible.project(initial_input)
        self.gains = gains
        self.law = law
        self.target = None if target is None else np.asarray(target, dtype=np.float64)
        self.states: Dict[int, MspsaState] = {}

    def _gains_for(self, i: int) -> GainSchedule:
        if isinstance(self.gains, GainSchedule):
            return self.gains
        return self.gains[i]

    def state_record(self, i: int) -> MspsaState:
        """Enregistrement de l'état i, créé à sa première observation."""
        if i not in self.states:
            self.states[i] = MspsaState(x_hat=self.initial_input.copy(), gains=self._gains_for(i))
        return self.states[i]

    def _act(self, s_prev: int, rng: RngStream) -> np.ndarray:
        return mspsa_act(self.state_record(s_prev), rng, self.law)

    def _update(self, s_prev: int, x: np.ndarray, y: np.ndarray) -> None:
        state = self.states[s_prev]
        if self.objective is Objective.QUADRATIC_REGULATION:
            mspsa_update_qr(state, y, self.target, self.feasible)
        else:
            mspsa_update_rm(state, x, y, self.feasible)

    def snapshot(self, state: int) -> PolicySnapshot:
        record = self.states.get(state)
        if record is None:
            return PolicySnapshot(self.initial_input.copy(), 0)
        return PolicySnapshot(record.x_hat.copy(), record.t_i)

    def estimates(self) -> Dict[int, np.ndarray]:
        return {i: record.x_hat.copy() for i, record in sorted(self.states.items())}

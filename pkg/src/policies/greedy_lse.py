"""
Politique gloutonne par moindres carrés (équivalence certaine).

Les paramètres (A_k, b_k) de chaque état sont estimés par régression de y
sur (1, x), en attribuant chaque observation à l'état réalisé s_t; la
matrice de transition est estimée par fréquences empiriques lissées (+1).
L'entrée est la forme close du modèle connu évaluée en ces estimations,
projetée sur Pi.

L'état s_t d'une période n'est connu qu'au début de la suivante (c'est le
s_prev du prochain act): l'observation de la période est donc gardée en
attente jusqu'à cet appel.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Set, Tuple

import numpy as np
from scipy import linalg

import src.config as config
from src.exceptions import (
    DimensionMismatchError,
    EstimateSingularError,
    SingularGramError,
    SingularSymPartError,
)
from src.models.affine_model import Objective
from src.models.feasible_box import FeasibleBox
from src.policies.base import Policy, PolicySnapshot
from src.simulation.rng import RngStream
from src.solvers.oracle import solve_mixture_qr, solve_mixture_rm

logger = logging.getLogger(__name__)


@dataclass
class LseState:
    """
    Statistiques suffisantes de la régression, pour les K états.

    Attributes:
        gram: Accumulateurs sum z z^T avec z = (1, x), forme (K, n+1, n+1)
        cross: Accumulateurs sum z y^T, forme (K, n+1, m)
        counts: Nombre d'échantillons par état
        transitions: Comptes de transitions observées (K, K)
        cursor: Position dans la séquence d'initialisation
        estimates: Estimations (A_hat, b_hat) des états de rang plein
        deficient: États observés dont la régression est encore de rang déficient
    """
    K: int
    n: int
    m: int
    gram: np.ndarray = field(init=False)
    cross: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    transitions: np.ndarray = field(init=False)
    cursor: int = 0
    estimates: Dict[int, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    deficient: Set[int] = field(default_factory=set)

    def __post_init__(self):
        self.gram = np.zeros((self.K, self.n + 1, self.n + 1))
        self.cross = np.zeros((self.K, self.n + 1, self.m))
        self.counts = np.zeros(self.K, dtype=np.int64)
        self.transitions = np.zeros((self.K, self.K), dtype=np.int64)

    def add_sample(self, state: int, x: np.ndarray, y: np.ndarray) -> None:
        """Ajoute (x, y) à la régression de l'état et réestime ses paramètres."""
        z = np.concatenate(([1.0], x))
        self.gram[state] += np.outer(z, z)
        self.cross[state] += np.outer(z, y)
        self.counts[state] += 1
        self._refit(state)

    def add_transition(self, s_from: int, s_to: int) -> None:
        self.transitions[s_from, s_to] += 1

    def _refit(self, state: int) -> None:
        gram = self.gram[state]
        s = linalg.svdvals(gram)
        if s[-1] <= s[0] / config.CONDITION_LIMIT:
            self.estimates.pop(state, None)
            self.deficient.add(state)
            return
        theta = linalg.solve(gram, self.cross[state], assume_a="sym")
        self.estimates[state] = (theta[1:].T.copy(), theta[0].copy())
        self.deficient.discard(state)

    @property
    def initializing(self) -> bool:
        """Vrai tant qu'aucun état n'est estimé ou qu'un état observé est de rang déficient."""
        return not self.estimates or bool(self.deficient)

    def transition_estimate(self, s_from: int) -> np.ndarray:
        """Ligne s_from de P_hat: (comptes + 1) / (total + K)."""
        row = self.transitions[s_from]
        return (row + 1.0) / (row.sum() + self.K)


def initialization_input(initial_input: np.ndarray, cursor: int, widths: np.ndarray) -> np.ndarray:
    """
    Entrée d'initialisation d'indice cursor.

    0: entrée initiale; puis, cycliquement sur j = 1..n, la coordonnée j
    multipliée par (1 + 0.05) puis par (1 - 0.05). Une coordonnée nulle est
    déplacée de 5% de la largeur du pavé.
    """
    x = initial_input.copy()
    if cursor == 0:
        return x
    k = (cursor - 1) % (2 * x.shape[0])
    j, sign = k // 2, (1.0 if k % 2 == 0 else -1.0)
    scale = abs(x[j]) if x[j] != 0.0 else widths[j]
    x[j] += sign * config.LSE_PERTURBATION * scale
    return x


class GreedyLsePolicy(Policy):
    """
    Référence par équivalence certaine.

    N'utilise aucun tirage aléatoire: rng est ignoré.
    """

    def __init__(
        self,
        objective: Objective,
        feasible: FeasibleBox,
        initial_input: np.ndarray,
        K: int,
        m: int,
        target: Optional[np.ndarray] = None,
        name: str = "greedy_lse",
    ):
        super().__init__()
        initial_input = np.asarray(initial_input, dtype=np.float64)
        if initial_input.shape != (feasible.n,):
            raise DimensionMismatchError(
                f"Entrée initiale de forme {initial_input.shape}, pavé de dimension {feasible.n}"
            )
        if objective is Objective.QUADRATIC_REGULATION and target is None:
            raise ValueError("Les moindres carrés en régulation requièrent une cible y*")

        self.name = name
        self.objective = objective
        self.feasible = feasible
        self.initial_input = initial_input
        self.target = None if target is None else np.asarray(target, dtype=np.float64)
        self.state = LseState(K=K, n=feasible.n, m=m)

        self._observation: Optional[Tuple[int, np.ndarray, np.ndarray]] = None
        self._decisions: Dict[int, np.ndarray] = {}
        self._visits: Dict[int, int] = {}
        self._previous_input = initial_input.copy()
        self._fallback_state: Optional[int] = None
        self.fallback_count = 0

    def _absorb(self, s_t: int) -> None:
        """Attribue l'observation en attente à l'état s_t, désormais connu."""
        if self._observation is None:
            return
        s_prev, x, y = self._observation
        self._observation = None
        self.state.add_transition(s_prev, s_t)
        self.state.add_sample(s_t, x, y)

    def certainty_equivalent_input(self, s_prev: int) -> np.ndarray:
        """
        Forme close avec (theta_hat, P_hat) restreints aux états estimés.

        Raises:
            EstimateSingularError: Si un A_hat est de rang déficient ou si le
                système du mélange estimé est singulier
        """
        estimated = sorted(self.state.estimates)
        weights = self.state.transition_estimate(s_prev)[estimated]
        weights = weights / weights.sum()
        A_hat = np.stack([self.state.estimates[k][0] for k in estimated])
        b_hat = np.stack([self.state.estimates[k][1] for k in estimated])
        for k, A in zip(estimated, A_hat):
            s = linalg.svdvals(A)
            if s[-1] <= config.RANK_TOL * max(1.0, s[0]):
                raise EstimateSingularError(f"A_hat de l'état {k + 1} de rang déficient")
        try:
            if self.objective is Objective.QUADRATIC_REGULATION:
                x = solve_mixture_qr(weights, A_hat, b_hat, self.target, f"estimation état {s_prev + 1}")
            else:
                x = solve_mixture_rm(weights, A_hat, b_hat, f"estimation état {s_prev + 1}")
        except (SingularGramError, SingularSymPartError) as e:
            raise EstimateSingularError(str(e)) from e
        return self.feasible.project(x)

    def _act(self, s_prev: int, rng: RngStream) -> np.ndarray:
        self._absorb(s_prev)
        self._visits[s_prev] = self._visits.get(s_prev, 0) + 1
        self._fallback_state = None

        if self.state.initializing:
            x = initialization_input(self.initial_input, self.state.cursor, self.feasible.widths)
            self.state.cursor += 1
            self._decisions[s_prev] = self.initial_input.copy()
        else:
            try:
                x = self.certainty_equivalent_input(s_prev)
                self._decisions[s_prev] = x.copy()
            except EstimateSingularError as e:
                logger.debug(f"{self.name}: repli sur l'entrée précédente ({e})")
                x = self._previous_input.copy()
                self._fallback_state = s_prev
                self.fallback_count += 1

        self._previous_input = x.copy()
        return x

    def _update(self, s_prev: int, x: np.ndarray, y: np.ndarray) -> None:
        self._observation = (s_prev, x.copy(), y.copy())

    def snapshot(self, state: int) -> PolicySnapshot:
        estimate = self._decisions.get(state, self.initial_input)
        return PolicySnapshot(
            estimate.copy(),
            self._visits.get(state, 0),
            fallback=self._fallback_state == state,
        )

    def estimates(self) -> Dict[int, np.ndarray]:
        return {state: x.copy() for state, x in sorted(self._decisions.items())}

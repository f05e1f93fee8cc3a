"""
Génération aléatoire d'instances.

Chaque A_k est symétrique, de valeurs propres tirées uniformément dans un
intervalle et de base propre orthonormée aléatoire. Un point d'ancrage
x~_k est tiré à l'intérieur de Pi (à une marge près) et b_k est choisi pour
que x~_k soit l'entrée optimale de l'état k pris isolément:

    régulation: b_k = y* - A_k x~_k
    revenu:     b_k = -(A_k + A_k^T) x~_k

Les optima du mélange x*_i sont des moyennes pondérées (matriciellement)
des ancrages; l'instance est retirée tant qu'un x*_i sort de Pi.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.stats import ortho_group

from src.exceptions import GenerationError, SimulatorError
from src.models.affine_model import AffineState, JumpAffineModel, Objective
from src.models.feasible_box import FeasibleBox
from src.models.markov_chain import MarkovChain
from src.solvers.oracle import optimal_inputs

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Paramètres du générateur.

    Attributes:
        states: Nombre d'états K
        input_dim: Dimension n (= m)
        eigenvalue_interval: Intervalle [lo, hi] des valeurs propres de A_k
        noise_sigma: Écart-type du bruit, commun à toutes les coordonnées
        seed: Graine du générateur (indépendante de celle des réplications)
        margin: Marge relative des ancrages par rapport aux bords de Pi
    """
    states: int
    input_dim: int
    eigenvalue_interval: Tuple[float, float]
    noise_sigma: float = 0.0
    seed: int = 0
    margin: float = 0.1

    def __post_init__(self):
        lo, hi = self.eigenvalue_interval
        if self.states < 1 or self.input_dim < 1:
            raise ValueError(f"Dimensions invalides: K={self.states}, n={self.input_dim}")
        if not lo <= hi:
            raise ValueError(f"Intervalle de valeurs propres vide: [{lo}, {hi}]")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma doit être positif ou nul. Reçu: {self.noise_sigma}")
        if not 0 <= self.margin < 0.5:
            raise ValueError(f"margin doit être dans [0, 0.5[. Reçu: {self.margin}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "states": self.states,
            "input_dim": self.input_dim,
            "eigenvalue_interval": list(self.eigenvalue_interval),
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "margin": self.margin,
        }


def self_transition_chain(K: int, self_transition: float, initial_state: int = 0) -> MarkovChain:
    """Chaîne de diagonale self_transition, le reste réparti uniformément."""
    if not 0 <= self_transition <= 1:
        raise ValueError(f"self_transition doit être dans [0, 1]. Reçu: {self_transition}")
    if K == 1:
        return MarkovChain(np.ones((1, 1)), initial_state)
    P = np.full((K, K), (1.0 - self_transition) / (K - 1))
    np.fill_diagonal(P, self_transition)
    return MarkovChain(P, initial_state)


def random_symmetric(n: int, interval: Tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    """Matrice symétrique n x n de valeurs propres uniformes dans interval."""
    eigenvalues = rng.uniform(interval[0], interval[1], size=n)
    if n == 1:
        return eigenvalues.reshape(1, 1)
    Q = ortho_group.rvs(n, random_state=rng)
    A = (Q * eigenvalues) @ Q.T
    return (A + A.T) / 2.0


def generate_model(
    spec: GeneratorSpec,
    chain: MarkovChain,
    objective: Objective,
    feasible: FeasibleBox,
    target: Optional[np.ndarray] = None,
) -> JumpAffineModel:
    """
    Tire une instance dont tous les optima x*_i sont dans Pi.

    Raises:
        GenerationError: Après MAX_ATTEMPTS tirages sans succès
    """
    n = spec.input_dim
    if feasible.n != n:
        raise ValueError(f"Pavé de dimension {feasible.n}, générateur de dimension {n}")
    if chain.K != spec.states:
        raise ValueError(f"Chaîne à {chain.K} états, générateur à {spec.states} états")
    if objective is Objective.QUADRATIC_REGULATION and target is None:
        raise ValueError("La régulation quadratique requiert une cible y*")

    rng = np.random.default_rng(spec.seed)
    low = feasible.lower + spec.margin * feasible.widths
    high = feasible.upper - spec.margin * feasible.widths
    sigma = np.full(n, spec.noise_sigma)

    for attempt in range(1, MAX_ATTEMPTS + 1):
        states = []
        for _ in range(spec.states):
            A = random_symmetric(n, spec.eigenvalue_interval, rng)
            anchor = rng.uniform(low, high)
            if objective is Objective.QUADRATIC_REGULATION:
                b = target - A @ anchor
            else:
                b = -(A + A.T) @ anchor
            states.append(AffineState(A, b, sigma))

        model = JumpAffineModel(chain, tuple(states), objective, target)
        try:
            optima = optimal_inputs(model)
        except SimulatorError:
            continue
        if all(feasible.contains(x) for x in optima):
            logger.debug(f"Instance générée au tirage {attempt} (graine {spec.seed})")
            return model

    raise GenerationError(
        f"Aucune instance avec optima dans Pi après {MAX_ATTEMPTS} tirages (graine {spec.seed})"
    )

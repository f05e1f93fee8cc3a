from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Any, Optional, Tuple

import numpy as np

from src.models.markov_chain import MarkovChain
from src.utils.arrays import frozen_array


class Objective(Enum):
    """Objectifs de coût par période."""
    QUADRATIC_REGULATION = "quadratic_regulation"
    REVENUE_MAXIMIZATION = "revenue_maximization"

    @classmethod
    def from_str(cls, value: str) -> "Objective":
        """Crée un Objective à partir de son nom."""
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(o.value for o in cls)
            raise ValueError(f"Objectif invalide: {value}. Doit être parmi: {choices}.")


@dataclass(frozen=True, eq=False)
class AffineState:
    """
    Modèle affine associé à un état de la chaîne: y = A x + b + w.

    Attributes:
        A: Matrice m x n (rang colonne plein attendu)
        b: Vecteur de décalage (m)
        noise_sigma: Écart-type du bruit gaussien par coordonnée de sortie (m)
    """

    A: np.ndarray
    b: np.ndarray
    noise_sigma: np.ndarray

    def __post_init__(self):
        """Convertit les champs en tableaux non modifiables et vérifie leurs formes."""
        object.__setattr__(self, "A", frozen_array(self.A, 2, "A"))
        object.__setattr__(self, "b", frozen_array(self.b, 1, "b"))
        object.__setattr__(self, "noise_sigma", frozen_array(self.noise_sigma, 1, "noise_sigma"))

    @property
    def m(self) -> int:
        """Dimension de sortie."""
        return self.A.shape[0]

    @property
    def n(self) -> int:
        """Dimension d'entrée."""
        return self.A.shape[1]

    @property
    def noise_trace(self) -> float:
        """Trace de la covariance du bruit, Tr(Sigma_w)."""
        return float(np.sum(self.noise_sigma ** 2))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "noise_sigma": self.noise_sigma.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, AffineState):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.noise_sigma, other.noise_sigma)
        )

    def __hash__(self):
        return hash((self.A.tobytes(), self.b.tobytes(), self.noise_sigma.tobytes()))

    def __repr__(self):
        return f"AffineState(m={self.m}, n={self.n})"


@dataclass(frozen=True, eq=False)
class JumpAffineModel:
    """
    Système affine à sauts markoviens (vérité terrain de la simulation).

    À la période t, y_t = A_{s_t} x_t + b_{s_t} + w_t, où s_t suit la chaîne.

    Attributes:
        chain: Chaîne de Markov modulante
        states: Un AffineState par état de la chaîne
        objective: Objectif de coût par période
        target: Cible y* (régulation quadratique uniquement)
    """

    chain: MarkovChain
    states: Tuple[AffineState, ...]
    objective: Objective = Objective.QUADRATIC_REGULATION
    target: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        """Normalise les états en tuple et la cible en tableau non modifiable."""
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("Le modèle doit contenir au moins un état affine.")
        if self.target is not None:
            object.__setattr__(self, "target", frozen_array(self.target, 1, "target"))

    @property
    def K(self) -> int:
        """Nombre d'états affines."""
        return len(self.states)

    @property
    def m(self) -> int:
        return self.states[0].m

    @property
    def n(self) -> int:
        return self.states[0].n

    # Piles précalculées; valides seulement sur un modèle validé (dimensions homogènes)
    @cached_property
    def A_stack(self) -> np.ndarray:
        return np.stack([s.A for s in self.states])

    @cached_property
    def b_stack(self) -> np.ndarray:
        return np.stack([s.b for s in self.states])

    @cached_property
    def sigma_stack(self) -> np.ndarray:
        return np.stack([s.noise_sigma for s in self.states])

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "objective": self.objective.value,
            "chain": self.chain.to_dict(),
            "states": [s.to_dict() for s in self.states],
        }
        if self.target is not None:
            payload["target"] = self.target.tolist()
        return payload

    def __eq__(self, other):
        if not isinstance(other, JumpAffineModel):
            return NotImplemented
        if (self.target is None) != (other.target is None):
            return False
        if self.target is not None and not np.array_equal(self.target, other.target):
            return False
        return (
            self.chain == other.chain
            and self.states == other.states
            and self.objective is other.objective
        )

    def __hash__(self):
        return hash((self.chain, self.states, self.objective))

    def __repr__(self):
        return (
            f"JumpAffineModel(K={self.K}, m={self.m}, n={self.n}, "
            f"objective={self.objective.value})"
        )

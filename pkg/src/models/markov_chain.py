from dataclasses import dataclass
from typing import Dict, Any

import numpy as np

from src.utils.arrays import frozen_array


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """
    Chaîne de Markov homogène à états finis qui module le système.

    Les états sont indexés en base 0 en interne; l'état initial est
    exposé en base 1 dans les fichiers de configuration.

    Attributes:
        P: Matrice de transition K x K, P[i, j] = p_{i,j}
        initial_state: État s_0 (base 0)
    """

    P: np.ndarray
    initial_state: int = 0

    def __post_init__(self):
        """Convertit P en tableau non modifiable et précalcule les fonctions de répartition."""
        try:
            matrix = frozen_array(self.P, 2, "P")
        except ValueError as e:
            raise ValueError(f"Matrice de transition invalide: {e}")

        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"La matrice de transition doit être carrée. Reçu: {matrix.shape}")

        if matrix.shape[0] < 1:
            raise ValueError("La chaîne doit avoir au moins un état.")

        object.__setattr__(self, "P", matrix)
        object.__setattr__(self, "initial_state", int(self.initial_state))

        cumulative = np.cumsum(matrix, axis=1)
        cumulative.setflags(write=False)
        object.__setattr__(self, "_cumulative", cumulative)

    @property
    def K(self) -> int:
        """Nombre d'états."""
        return self.P.shape[0]

    def cumulative_row(self, i: int) -> np.ndarray:
        """Fonction de répartition de la ligne i (tirage par inversion)."""
        return self._cumulative[i]

    def row(self, i: int) -> np.ndarray:
        """Probabilités de transition depuis l'état i."""
        return self.P[i]

    def to_dict(self) -> Dict[str, Any]:
        """Convertit la chaîne en dictionnaire (état initial en base 1)."""
        return {
            "P": self.P.tolist(),
            "initial_state": self.initial_state + 1,
        }

    def __eq__(self, other):
        if not isinstance(other, MarkovChain):
            return NotImplemented
        return self.initial_state == other.initial_state and np.array_equal(self.P, other.P)

    def __hash__(self):
        return hash((self.P.tobytes(), self.initial_state))

    def __repr__(self):
        return f"MarkovChain(K={self.K}, initial_state={self.initial_state + 1})"

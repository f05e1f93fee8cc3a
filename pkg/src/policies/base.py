from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.exceptions import PolicyProtocolError
from src.simulation.rng import RngStream


@dataclass(frozen=True)
class PolicySnapshot:
    """
    État interne d'une politique pour un état de la chaîne.

    Attributes:
        estimate: Estimation courante de l'entrée optimale
        update_count: Compteur t_i (ou nombre de visites pour les politiques sans paires)
        fallback: Vrai si la dernière entrée est un repli
    """
    estimate: np.ndarray
    update_count: int
    fallback: bool = False


class Policy(ABC):
    """
    Contrat d'une politique: act puis update, strictement alternés.

    act(s_prev, rng) choisit x_t après observation de s_{t-1};
    update(y_t) reçoit la sortie de la même période.
    """

    name: str = "policy"

    def __init__(self):
        self._pending: Optional[int] = None
        self._last_input: Optional[np.ndarray] = None

    def act(self, s_prev: int, rng: RngStream) -> np.ndarray:
        """Retourne l'entrée x_t pour l'état précédent s_prev."""
        if self._pending is not None:
            raise PolicyProtocolError(f"{self.name}: act appelé deux fois sans update")
        x = np.array(self._act(s_prev, rng), dtype=np.float64)
        self._pending = s_prev
        self._last_input = x
        return x.copy()

    def update(self, y: np.ndarray) -> None:
        """Transmet la sortie observée y_t."""
        if self._pending is None:
            raise PolicyProtocolError(f"{self.name}: update appelé sans act préalable")
        s_prev, self._pending = self._pending, None
        self._update(s_prev, self._last_input, np.asarray(y, dtype=np.float64))

    @abstractmethod
    def _act(self, s_prev: int, rng: RngStream) -> np.ndarray:
        ...

    @abstractmethod
    def _update(self, s_prev: int, x: np.ndarray, y: np.ndarray) -> None:
        ...

    @abstractmethod
    def snapshot(self, state: int) -> PolicySnapshot:
        """État interne pour l'état de la chaîne donné."""
        ...

    def estimates(self) -> Dict[int, np.ndarray]:
        """Estimations de toutes les entrées optimales connues."""
        return {}

    def __repr__(self):
        return f"{self.__class__.__name__}(name={self.name})"


class ConstantPolicy(Policy):
    """Joue toujours la même entrée (référence sans apprentissage)."""

    def __init__(self, value: np.ndarray, name: str = "constant"):
        super().__init__()
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self._visits: Dict[int, int] = {}

    def _act(self, s_prev: int, rng: RngStream) -> np.ndarray:
        self._visits[s_prev] = self._visits.get(s_prev, 0) + 1
        return self.value

    def _update(self, s_prev: int, x: np.ndarray, y: np.ndarray) -> None:
        pass

    def snapshot(self, state: int) -> PolicySnapshot:
        return PolicySnapshot(self.value.copy(), self._visits.get(state, 0))

    def estimates(self) -> Dict[int, np.ndarray]:
        return {state: self.value.copy() for state in self._visits}

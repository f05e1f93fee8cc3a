from dataclasses import dataclass, field
from typing import Dict, Iterator

import numpy as np


@dataclass(frozen=True)
class StepRecord:
    """
    Une période d'un épisode.

    Attributes:
        t: Période (1..T)
        s_prev: État précédent s_{t-1} (base 0)
        x: Entrée jouée x_t
        y: Sortie observée y_t
        s: État réalisé s_t (base 0)
        stage_cost: Coût réalisé (||y - y*||^2 ou -x.y)
        stage_regret: Terme de regret réalisé (forme quadratique)
        input_sq_err: ||x_t - x*_{s_prev}||^2
        estimate_sq_err: ||x_hat_{s_prev} - x*_{s_prev}||^2
        update_count: Compteur t_i de la politique pour s_prev
        fallback: Vrai si la politique a dû rejouer son entrée précédente
    """
    t: int
    s_prev: int
    x: np.ndarray
    y: np.ndarray
    s: int
    stage_cost: float
    stage_regret: float
    input_sq_err: float
    estimate_sq_err: float
    update_count: int
    fallback: bool = False


@dataclass
class Trajectory:
    """
    Historique d'un épisode, stocké par colonnes.

    Les enregistrements StepRecord sont reconstruits à la lecture; le
    stockage en tableaux garde la mémoire bornée sur de longs horizons.

    Attributes:
        horizon: Nombre de périodes prévues
        n: Dimension d'entrée
        m: Dimension de sortie
        final_estimates: Estimations par état de la politique en fin d'épisode
    """

    horizon: int
    n: int
    m: int
    final_estimates: Dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        T = self.horizon
        self.t = np.zeros(T, dtype=np.int64)
        self.s_prev = np.zeros(T, dtype=np.int64)
        self.s = np.zeros(T, dtype=np.int64)
        self.x = np.zeros((T, self.n))
        self.y = np.zeros((T, self.m))
        self.stage_cost = np.zeros(T)
        self.stage_regret = np.zeros(T)
        self.input_sq_err = np.zeros(T)
        self.estimate_sq_err = np.zeros(T)
        self.update_count = np.zeros(T, dtype=np.int64)
        self.fallback = np.zeros(T, dtype=bool)
        self._size = 0

    def record(
        self,
        t: int,
        s_prev: int,
        x: np.ndarray,
        y: np.ndarray,
        s: int,
        stage_cost: float,
        stage_regret: float,
        input_sq_err: float,
        estimate_sq_err: float,
        update_count: int,
        fallback: bool = False,
    ) -> None:
        """
        Ajoute une période.

        Raises:
            ValueError: Si la trajectoire est pleine ou si t n'est pas croissant
        """
        k = self._size
        if k >= self.horizon:
            raise ValueError(f"Trajectoire pleine ({self.horizon} périodes)")
        if k > 0 and t <= self.t[k - 1]:
            raise ValueError(f"Périodes non croissantes: {self.t[k - 1]} puis {t}")

        self.t[k] = t
        self.s_prev[k] = s_prev
        self.s[k] = s
        self.x[k] = x
        self.y[k] = y
        self.stage_cost[k] = stage_cost
        self.stage_regret[k] = stage_regret
        self.input_sq_err[k] = input_sq_err
        self.estimate_sq_err[k] = estimate_sq_err
        self.update_count[k] = update_count
        self.fallback[k] = fallback
        self._size += 1

    def append(self, record: StepRecord) -> None:
        """Ajoute un StepRecord."""
        self.record(
            record.t, record.s_prev, record.x, record.y, record.s,
            record.stage_cost, record.stage_regret, record.input_sq_err,
            record.estimate_sq_err, record.update_count, record.fallback,
        )

    def __len__(self) -> int:
        return self._size

    def __getitem__(self, k: int) -> StepRecord:
        if k < 0:
            k += self._size
        if not 0 <= k < self._size:
            raise IndexError(f"Période d'indice {k} hors de la trajectoire")
        return StepRecord(
            t=int(self.t[k]),
            s_prev=int(self.s_prev[k]),
            x=self.x[k].copy(),
            y=self.y[k].copy(),
            s=int(self.s[k]),
            stage_cost=float(self.stage_cost[k]),
            stage_regret=float(self.stage_regret[k]),
            input_sq_err=float(self.input_sq_err[k]),
            estimate_sq_err=float(self.estimate_sq_err[k]),
            update_count=int(self.update_count[k]),
            fallback=bool(self.fallback[k]),
        )

    def __iter__(self) -> Iterator[StepRecord]:
        for k in range(self._size):
            yield self[k]

    def is_chain_consistent(self) -> bool:
        """Vérifie que s_{t-1} de chaque période égale s_t de la précédente et que t croît."""
        n = self._size
        if n <= 1:
            return True
        return bool(
            np.array_equal(self.s_prev[1:n], self.s[:n - 1])
            and np.all(np.diff(self.t[:n]) > 0)
        )

    def visits(self, state: int) -> int:
        """Nombre de périodes avec s_prev = state."""
        return int(np.count_nonzero(self.s_prev[:self._size] == state))

    def state_estimation_curve(self, state: int) -> np.ndarray:
        """
        Erreur d'estimation de l'état indexée par le compteur t_i.

        Élément k: ||x_hat_{state, k+1} - x*_state||^2, pris à la première
        période où le compteur vaut k+1.
        """
        mask = self.s_prev[:self._size] == state
        counts = self.update_count[:self._size][mask]
        errors = self.estimate_sq_err[:self._size][mask]
        if counts.size == 0:
            return np.zeros(0)
        values, first = np.unique(counts, return_index=True)
        curve = errors[first]
        # Seuls les compteurs consécutifs depuis 1 sont retenus
        expected = np.arange(1, values.size + 1)
        contiguous = int(np.argmin(values == expected)) if not np.array_equal(values, expected) else values.size
        return curve[:contiguous]

    def to_columns(self) -> Dict[str, np.ndarray]:
        """Colonnes de la trace (états en base 1)."""
        n = self._size
        columns: Dict[str, np.ndarray] = {
            "t": self.t[:n],
            "s_prev": self.s_prev[:n] + 1,
            "s_t": self.s[:n] + 1,
        }
        for j in range(self.n):
            columns[f"x{j}"] = self.x[:n, j]
        for j in range(self.m):
            columns[f"y{j}"] = self.y[:n, j]
        columns["stage_cost"] = self.stage_cost[:n]
        columns["stage_regret"] = self.stage_regret[:n]
        columns["input_sq_err"] = self.input_sq_err[:n]
        return columns

    def __repr__(self):
        return f"Trajectory(T={len(self)}/{self.horizon}, n={self.n}, m={self.m})"

from dataclasses import dataclass
from typing import Dict, Any

import numpy as np

from src.exceptions import DimensionMismatchError
from src.utils.arrays import frozen_array


@dataclass(frozen=True, eq=False)
class FeasibleBox:
    """
    Ensemble admissible Pi, restreint à un pavé aligné sur les axes.

    Pour un pavé, la projection euclidienne est le bornage coordonnée par
    coordonnée: elle est idempotente et non expansive.

    Attributes:
        lower: Bornes inférieures (n)
        upper: Bornes supérieures (n)
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", frozen_array(self.lower, 1, "lower"))
        object.__setattr__(self, "upper", frozen_array(self.upper, 1, "upper"))
        if self.lower.shape != self.upper.shape:
            raise ValueError(
                f"Bornes de dimensions différentes: {self.lower.shape} vs {self.upper.shape}"
            )

    @classmethod
    def uniform(cls, lower: float, upper: float, n: int) -> "FeasibleBox":
        """Crée le pavé [lower, upper]^n."""
        return cls(lower=np.full(n, float(lower)), upper=np.full(n, float(upper)))

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.lower > self.upper))

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def center(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def project(self, x: np.ndarray) -> np.ndarray:
        """
        Projection euclidienne de x sur le pavé.

        Args:
            x: Vecteur de dimension n

        Returns:
            Nouveau vecteur borné coordonnée par coordonnée

        Raises:
            DimensionMismatchError: Si x n'est pas de dimension n
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.lower.shape:
            raise DimensionMismatchError(
                f"Projection: vecteur de forme {x.shape}, pavé de dimension {self.n}"
            )
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        """Vérifie que x appartient au pavé (à tol près)."""
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def to_dict(self) -> Dict[str, Any]:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __eq__(self, other):
        if not isinstance(other, FeasibleBox):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        return f"FeasibleBox(n={self.n})"

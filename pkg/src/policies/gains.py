from dataclasses import dataclass
from enum import Enum
from typing import Dict, Any

import numpy as np

import src.config as config
from src.simulation.rng import RngStream


@dataclass(frozen=True)
class GainSchedule:
    """
    Suites de gains d'un état.

    a_t = gamma / (N + t)          (pas de mise à jour)
    c_t = gamma' / (N' + t)^0.25   (amplitude de perturbation)

    Attributes:
        gamma: Gain de pas gamma_i > 0
        step_offset: Décalage N_i >= 0
        perturbation_gain: Gain de perturbation gamma'_i > 0
        perturbation_offset: Décalage N'_i >= 0
    """

    gamma: float
    step_offset: int = config.DEFAULT_STEP_OFFSET
    perturbation_gain: float = config.DEFAULT_PERTURBATION_GAIN
    perturbation_offset: int = config.DEFAULT_PERTURBATION_OFFSET

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma doit être strictement positif. Reçu: {self.gamma}")
        # c_t = 0 rendrait la différence (d+ - d-) / c indéfinie
        if not self.perturbation_gain > 0:
            raise ValueError(f"gamma_prime doit être strictement positif. Reçu: {self.perturbation_gain}")
        for name, value in (("N", self.step_offset), ("N_prime", self.perturbation_offset)):
            if int(value) != value or value < 0:
                raise ValueError(f"{name} doit être un entier positif ou nul. Reçu: {value}")

    def step_size(self, t: int) -> float:
        """a_t"""
        return self.gamma / (self.step_offset + t)

    def perturbation_size(self, t: int) -> float:
        """c_t"""
        return self.perturbation_gain / (self.perturbation_offset + t) ** config.PERTURBATION_EXPONENT

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "N": self.step_offset,
            "gamma_prime": self.perturbation_gain,
            "N_prime": self.perturbation_offset,
        }


class PerturbationLaw(Enum):
    """
    Lois symétriques des composantes de Delta.

    Chaque tirage consomme exactement n uniformes.
    """
    RADEMACHER = "rademacher"
    UNIFORM_TWO_LEVEL = "uniform_two_level"

    @classmethod
    def from_str(cls, value: str) -> "PerturbationLaw":
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(law.value for law in cls)
            raise ValueError(f"Loi de perturbation invalide: {value}. Doit être parmi: {choices}.")

    @property
    def xi1(self) -> float:
        """Borne sur |Delta_j|."""
        return 1.0

    @property
    def xi2(self) -> float:
        """E[1 / Delta_j^2]."""
        if self is PerturbationLaw.RADEMACHER:
            return 1.0
        return (1.0 + 4.0) / 2.0

    def draw(self, n: int, rng: RngStream) -> np.ndarray:
        """Tire un vecteur Delta de dimension n."""
        u = rng.uniforms(n)
        if self is PerturbationLaw.RADEMACHER:
            return np.where(u < 0.5, 1.0, -1.0)
        # {-1, -0.5, 0.5, 1} équiprobables
        levels = np.array([-1.0, -0.5, 0.5, 1.0])
        return levels[np.minimum((u * 4).astype(np.int64), 3)]

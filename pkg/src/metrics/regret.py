"""
Regret par période et séries par réplication.

Le regret est mesuré par les formes quadratiques réalisées, pas par des
différences de coûts: le terme de bruit Tr(Sigma_w) s'annule analytiquement.

    régulation: ||A_{s_t} (x_t - x*_{s_{t-1}})||^2
    revenu:     -(x_t - x*)^T A_{s_t} (x_t - x*)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from src.models.affine_model import JumpAffineModel, Objective
from src.models.trajectory import Trajectory
from src.solvers.oracle import optimal_input


def _deviation(model: JumpAffineModel, s_prev: int, x_t: np.ndarray, x_star: Optional[np.ndarray]) -> np.ndarray:
    if x_star is None:
        x_star = optimal_input(model, s_prev)
    return np.asarray(x_t, dtype=np.float64) - x_star


def stage_regret_qr(
    model: JumpAffineModel,
    s_t: int,
    s_prev: int,
    x_t: np.ndarray,
    x_star: Optional[np.ndarray] = None,
) -> float:
    """||A_{s_t} (x_t - x*_{s_prev})||^2, toujours >= 0."""
    r = model.states[s_t].A @ _deviation(model, s_prev, x_t, x_star)
    return float(r @ r)


def stage_regret_rm(
    model: JumpAffineModel,
    s_t: int,
    s_prev: int,
    x_t: np.ndarray,
    x_star: Optional[np.ndarray] = None,
) -> float:
    """-(x_t - x*)^T A_{s_t} (x_t - x*), >= 0 pour A_{s_t} définie négative."""
    d = _deviation(model, s_prev, x_t, x_star)
    return -float(d @ (model.states[s_t].A @ d))


def stage_regret(
    model: JumpAffineModel,
    s_t: int,
    s_prev: int,
    x_t: np.ndarray,
    x_star: Optional[np.ndarray] = None,
) -> float:
    """Regret réalisé de la période pour l'objectif du modèle."""
    if model.objective is Objective.QUADRATIC_REGULATION:
        return stage_regret_qr(model, s_t, s_prev, x_t, x_star)
    return stage_regret_rm(model, s_t, s_prev, x_t, x_star)


@dataclass
class RegretSeries:
    """
    Séries d'une réplication, une valeur par période.

    Attributes:
        replication: Indice de la réplication
        cumulative_regret: Regret cumulé R_t
        input_sq_err: ||x_t - x*_{s_{t-1}}||^2
        cumulative_input_sq_err: Somme cumulée de input_sq_err
        estimation_sq_err: ||x_hat_{s_{t-1}} - x*_{s_{t-1}}||^2
        state_curves: Par état (base 0), e_{i,t_i} indexé par t_i = 1, 2, ...
        fallback_count: Nombre de périodes jouées en repli
    """
    replication: int
    cumulative_regret: np.ndarray
    input_sq_err: np.ndarray
    cumulative_input_sq_err: np.ndarray
    estimation_sq_err: np.ndarray
    state_curves: Dict[int, np.ndarray] = field(default_factory=dict)
    fallback_count: int = 0

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory, replication: int, K: int) -> "RegretSeries":
        n = len(trajectory)
        return cls(
            replication=replication,
            cumulative_regret=np.cumsum(trajectory.stage_regret[:n]),
            input_sq_err=trajectory.input_sq_err[:n].copy(),
            cumulative_input_sq_err=np.cumsum(trajectory.input_sq_err[:n]),
            estimation_sq_err=trajectory.estimate_sq_err[:n].copy(),
            state_curves={i: trajectory.state_estimation_curve(i) for i in range(K)},
            fallback_count=int(np.count_nonzero(trajectory.fallback[:n])),
        )

    @property
    def horizon(self) -> int:
        return self.cumulative_regret.shape[0]

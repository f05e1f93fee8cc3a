"""
Simulation du système affine à sauts markoviens.

Ordre des tirages, fixe et identique pour toutes les politiques:
    1. flux système: une uniforme pour s_t, puis m gaussiennes pour w_t;
    2. flux politique (sous-flux séparé): tirages internes de act.
Une politique ne peut donc pas décaler l'aléa du système: à graine et
réplication égales, toutes les politiques voient les mêmes états et bruits.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

import src.config as config
from src.exceptions import (
    EpisodeError,
    HorizonOverflowError,
    NonFiniteInputError,
    SimulatorError,
)
from src.metrics.regret import stage_regret
from src.models.affine_model import JumpAffineModel, Objective
from src.models.feasible_box import FeasibleBox
from src.models.markov_chain import MarkovChain
from src.models.trajectory import Trajectory
from src.policies.base import Policy
from src.simulation.rng import RngStream
from src.solvers.oracle import optimal_inputs

logger = logging.getLogger(__name__)


def next_state(chain: MarkovChain, s_prev: int, rng: RngStream) -> int:
    """
    Tire s_t selon la ligne s_prev de P (une uniforme consommée).

    Raises:
        IndexError: Si s_prev n'est pas un état de la chaîne
    """
    if not 0 <= s_prev < chain.K:
        raise IndexError(f"État {s_prev + 1} hors de la chaîne (K={chain.K})")
    cumulative = chain.cumulative_row(s_prev)
    # Renormalisé: les états de probabilité nulle ne sont jamais tirés
    u = rng.uniform() * cumulative[-1]
    return int(np.searchsorted(cumulative, u, side="right"))


def observe(model: JumpAffineModel, s_t: int, x_t: np.ndarray, rng: RngStream) -> np.ndarray:
    """
    Sortie y_t = A_{s_t} x_t + b_{s_t} + w_t (m gaussiennes consommées).

    Raises:
        NonFiniteInputError: Si x_t contient des valeurs non finies
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    if not np.all(np.isfinite(x_t)):
        raise NonFiniteInputError(f"Entrée non finie: {x_t}")
    state = model.states[s_t]
    noise = state.noise_sigma * rng.normals(model.m)
    return state.A @ x_t + state.b + noise


def realized_cost(model: JumpAffineModel, x_t: np.ndarray, y_t: np.ndarray) -> float:
    """Coût réalisé: ||y - y*||^2 en régulation, -x.y en revenu."""
    if model.objective is Objective.QUADRATIC_REGULATION:
        residual = y_t - model.target
        return float(residual @ residual)
    return -float(x_t @ y_t)


def run_episode(
    model: JumpAffineModel,
    feasible: FeasibleBox,
    policy: Policy,
    horizon: int,
    rng: RngStream,
    optimal: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    Déroule T périodes de la boucle de décision.

    À chaque période: act(s_{t-1}) -> x_t, tirage de s_t, observation de y_t,
    update(y_t), puis enregistrement de la période. L'estimation interne de
    la politique est lue entre act et update, c'est-à-dire celle qui a servi
    à choisir x_t.

    Args:
        model: Modèle validé
        feasible: Ensemble Pi (les entrées perturbées peuvent en sortir)
        policy: Politique neuve, propre à cet épisode
        horizon: Nombre de périodes T
        rng: Flux système de la réplication
        optimal: Entrées optimales (K, n); calculées si absentes

    Raises:
        HorizonOverflowError: Si T < 1 ou T > config.MAX_HORIZON
        EpisodeError: Pour toute erreur de la politique ou de la simulation, avec la période
    """
    if not 1 <= horizon <= config.MAX_HORIZON:
        raise HorizonOverflowError(f"Horizon {horizon} hors de [1, {config.MAX_HORIZON}]")
    if feasible.n != model.n:
        raise ValueError(f"Pavé de dimension {feasible.n}, modèle de dimension {model.n}")

    if optimal is None:
        optimal = optimal_inputs(model)
    policy_rng = rng.child(RngStream.POLICY_CHANNEL)
    trajectory = Trajectory(horizon=horizon, n=model.n, m=model.m)

    s_prev = model.chain.initial_state
    for t in range(1, horizon + 1):
        try:
            x_t = policy.act(s_prev, policy_rng)
            if not np.all(np.isfinite(x_t)):
                raise NonFiniteInputError(f"{policy.name} a produit une entrée non finie: {x_t}")
            snapshot = policy.snapshot(s_prev)

            s_t = next_state(model.chain, s_prev, rng)
            y_t = observe(model, s_t, x_t, rng)
            policy.update(y_t)

            x_star = optimal[s_prev]
            input_error = x_t - x_star
            estimate_error = snapshot.estimate - x_star
            trajectory.record(
                t=t,
                s_prev=s_prev,
                x=x_t,
                y=y_t,
                s=s_t,
                stage_cost=realized_cost(model, x_t, y_t),
                stage_regret=stage_regret(model, s_t, s_prev, x_t, x_star),
                input_sq_err=float(input_error @ input_error),
                estimate_sq_err=float(estimate_error @ estimate_error),
                update_count=snapshot.update_count,
                fallback=snapshot.fallback,
            )
        except SimulatorError as e:
            raise EpisodeError(t, e) from e
        s_prev = s_t

    trajectory.final_estimates = policy.estimates()
    logger.debug(f"Épisode terminé: {policy.name}, T={horizon}, {rng!r}")
    return trajectory

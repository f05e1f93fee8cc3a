"""
Solutions sous modèle connu.

Le processus markovien étant exogène, le problème se découple période par
période: l'entrée optimale ne dépend que de (theta, P) et de l'état précédent i.
Toutes les espérances sont calculées en forme close, sans échantillonnage.

Indices d'état en base 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Type

import numpy as np
from scipy import linalg

import src.config as config
from src.exceptions import (
    DimensionMismatchError,
    DimensionTooLargeError,
    SimulatorError,
    SingularGramError,
    SingularSymPartError,
    ZeroPerturbationEntryError,
)
from src.models.affine_model import JumpAffineModel, Objective
from src.models.feasible_box import FeasibleBox


# ============================================================================
# MATRICES DE MÉLANGE
# ============================================================================

def mixture_gram(model: JumpAffineModel, i: int) -> np.ndarray:
    """Retourne sum_j p_ij A_j^T A_j."""
    p = model.chain.row(i)
    A = model.A_stack
    return np.einsum("j,jki,jkl->il", p, A, A)


def mixture_sym_part(model: JumpAffineModel, i: int) -> np.ndarray:
    """Retourne sum_j p_ij (A_j + A_j^T)."""
    p = model.chain.row(i)
    A = model.A_stack
    return np.einsum("j,jkl->kl", p, A + np.transpose(A, (0, 2, 1)))


def _guarded_solve(
    matrix: np.ndarray,
    rhs: np.ndarray,
    error_cls: Type[SimulatorError],
    label: str,
) -> np.ndarray:
    """
    Résout matrix @ x = rhs par SVD, avec garde sur le conditionnement.

    Raises:
        error_cls: Si le conditionnement dépasse config.CONDITION_LIMIT
    """
    u, s, vt = linalg.svd(matrix)
    if s[-1] <= 0 or s[0] / s[-1] > config.CONDITION_LIMIT:
        cond = np.inf if s[-1] <= 0 else s[0] / s[-1]
        raise error_cls(f"{label}: conditionnement {cond:.3g} > {config.CONDITION_LIMIT:.0e}")
    return vt.T @ ((u.T @ rhs) / s)


# ============================================================================
# ENTRÉES OPTIMALES
# ============================================================================

def solve_mixture_qr(
    p: np.ndarray,
    A_stack: np.ndarray,
    b_stack: np.ndarray,
    target: np.ndarray,
    label: str = "mélange",
) -> np.ndarray:
    """
    Forme close de la régulation pour un mélange de modèles affines.

    x = (sum_j p_j A_j^T A_j)^-1 (sum_j p_j A_j^T (y* - b_j))

    Args:
        p: Poids du mélange (K,)
        A_stack: Matrices A_j empilées (K, m, n)
        b_stack: Décalages b_j empilés (K, m)
        target: Cible y* (m,)
        label: Libellé repris dans le message d'erreur

    Raises:
        SingularGramError: Si la matrice de Gram du mélange est mal conditionnée
    """
    gram = np.einsum("j,jki,jkl->il", p, A_stack, A_stack)
    rhs = np.einsum("j,jki,jk->i", p, A_stack, target[None, :] - b_stack)
    return _guarded_solve(gram, rhs, SingularGramError, label)


def solve_mixture_rm(
    p: np.ndarray,
    A_stack: np.ndarray,
    b_stack: np.ndarray,
    label: str = "mélange",
) -> np.ndarray:
    """
    Forme close du revenu pour un mélange de modèles affines.

    x = -(sum_j p_j (A_j + A_j^T))^-1 (sum_j p_j b_j)

    Raises:
        SingularSymPartError: Si la partie symétrique du mélange est mal conditionnée
    """
    sym_part = np.einsum("j,jkl->kl", p, A_stack + np.transpose(A_stack, (0, 2, 1)))
    return _guarded_solve(sym_part, -(p @ b_stack), SingularSymPartError, label)


def optimal_input_qr(model: JumpAffineModel, i: int) -> np.ndarray:
    """
    Entrée optimale pour la régulation quadratique depuis l'état i.

    Raises:
        DimensionMismatchError: Si le modèle n'a pas de cible y*
        SingularGramError: Si la matrice de Gram du mélange est mal conditionnée
    """
    if model.target is None:
        raise DimensionMismatchError("La régulation quadratique requiert une cible y*")
    return solve_mixture_qr(
        model.chain.row(i), model.A_stack, model.b_stack, model.target, f"état {i + 1}"
    )


def optimal_input_rm(model: JumpAffineModel, i: int) -> np.ndarray:
    """
    Prix optimal pour la maximisation du revenu depuis l'état i.

    Raises:
        SingularSymPartError: Si la partie symétrique du mélange est mal conditionnée
    """
    return solve_mixture_rm(model.chain.row(i), model.A_stack, model.b_stack, f"état {i + 1}")


def optimal_input(model: JumpAffineModel, i: int, objective: Optional[Objective] = None) -> np.ndarray:
    """Entrée optimale pour l'objectif donné (par défaut celui du modèle)."""
    objective = objective or model.objective
    if objective is Objective.QUADRATIC_REGULATION:
        return optimal_input_qr(model, i)
    return optimal_input_rm(model, i)


def optimal_inputs(model: JumpAffineModel, objective: Optional[Objective] = None) -> np.ndarray:
    """Tableau K x n des entrées optimales de tous les états."""
    return np.stack([optimal_input(model, i, objective) for i in range(model.K)])


# ============================================================================
# COÛTS PAR PÉRIODE
# ============================================================================

def stage_cost_qr(model: JumpAffineModel, i: int, x: np.ndarray) -> float:
    """sum_j p_ij (||y* - A_j x - b_j||^2 + Tr Sigma_w^(j))"""
    return float(_batch_cost(model, i, Objective.QUADRATIC_REGULATION, np.asarray(x, dtype=float)[None, :])[0])


def stage_cost_rm(model: JumpAffineModel, i: int, x: np.ndarray) -> float:
    """-sum_j p_ij x^T (A_j x + b_j)"""
    return float(_batch_cost(model, i, Objective.REVENUE_MAXIMIZATION, np.asarray(x, dtype=float)[None, :])[0])


def stage_cost(model: JumpAffineModel, i: int, x: np.ndarray, objective: Optional[Objective] = None) -> float:
    objective = objective or model.objective
    if objective is Objective.QUADRATIC_REGULATION:
        return stage_cost_qr(model, i, x)
    return stage_cost_rm(model, i, x)


def _batch_cost(model: JumpAffineModel, i: int, objective: Objective, X: np.ndarray) -> np.ndarray:
    """Coût espéré exact pour chaque ligne de X (N x n)."""
    p = model.chain.row(i)
    costs = np.zeros(X.shape[0])
    for j, state in enumerate(model.states):
        if p[j] == 0.0:
            continue
        outputs = X @ state.A.T + state.b
        if objective is Objective.QUADRATIC_REGULATION:
            residual = outputs - model.target
            costs += p[j] * (np.sum(residual ** 2, axis=1) + state.noise_trace)
        else:
            costs -= p[j] * np.sum(X * outputs, axis=1)
    return costs


def foc_residual(model: JumpAffineModel, i: int, x: np.ndarray, objective: Optional[Objective] = None) -> np.ndarray:
    """Résidu de la condition du premier ordre au point x."""
    objective = objective or model.objective
    p = model.chain.row(i)
    x = np.asarray(x, dtype=float)
    if objective is Objective.QUADRATIC_REGULATION:
        outputs = np.einsum("jkl,l->jk", model.A_stack, x) + model.b_stack - model.target
        return np.einsum("j,jki,jk->i", p, model.A_stack, outputs)
    return mixture_sym_part(model, i) @ x + p @ model.b_stack


# ============================================================================
# ESPÉRANCE DU TERME DE GRADIENT SPSA
# ============================================================================

def expected_gradient_term(
    model: JumpAffineModel,
    i: int,
    x_hat: np.ndarray,
    delta: np.ndarray,
    c: float,
    objective: Optional[Objective] = None,
) -> np.ndarray:
    """
    Espérance exacte de ((d+ - d-) / c) * Delta_bar sachant (i, x_hat, Delta).

    Régulation:  4 (Delta_bar Delta^T) (sum_j p_ij A_j^T A_j) (x_hat - x*_i)
    Revenu:     -2 (Delta_bar Delta^T) (sum_j p_ij (A_j + A_j^T)) (x_hat - x*_i)

    Le résultat ne dépend pas de c: le bruit et les termes pairs en c
    s'annulent dans la différence.

    Raises:
        ZeroPerturbationEntryError: Si Delta a une composante nulle
    """
    objective = objective or model.objective
    delta = np.asarray(delta, dtype=float)
    if np.any(delta == 0.0):
        raise ZeroPerturbationEntryError(f"Perturbation avec composante nulle: {delta}")
    if c <= 0:
        raise ValueError(f"c doit être strictement positif. Reçu: {c}")

    error = np.asarray(x_hat, dtype=float) - optimal_input(model, i, objective)
    if objective is Objective.QUADRATIC_REGULATION:
        curvature = 4.0 * mixture_gram(model, i)
    else:
        curvature = -2.0 * mixture_sym_part(model, i)
    return (1.0 / delta) * float(delta @ (curvature @ error))


def gain_threshold(model: JumpAffineModel, i: int, objective: Optional[Objective] = None) -> float:
    """
    Plus petit gain gamma_i couvert par la garantie de décroissance en C/sqrt(t).

    Régulation: 1 / (8 lambda_min(sum_j p_ij A_j^T A_j))
    Revenu:     1 / (8 lambda_min(-sum_j p_ij (A_j + A_j^T) / 2))
    """
    objective = objective or model.objective
    if objective is Objective.QUADRATIC_REGULATION:
        curvature = mixture_gram(model, i)
    else:
        curvature = -mixture_sym_part(model, i) / 2.0
    lambda_min = float(linalg.eigvalsh(curvature)[0])
    if lambda_min <= 0:
        return float("inf")
    return 1.0 / (8.0 * lambda_min)


# ============================================================================
# RECHERCHE EXHAUSTIVE (VÉRIFICATION INDÉPENDANTE)
# ============================================================================

@dataclass(frozen=True)
class GridSpec:
    """
    Grille de recherche sur Pi.

    Attributes:
        box: Pavé de recherche
        points: Points par coordonnée à chaque niveau
        step: Pas final visé
        zoom_steps: Demi-largeur, en pas, de la fenêtre conservée entre niveaux
    """
    box: FeasibleBox
    points: int = config.BRUTE_FORCE_POINTS
    step: float = config.BRUTE_FORCE_STEP
    zoom_steps: int = config.BRUTE_FORCE_ZOOM_STEPS


def brute_force_optimum(
    model: JumpAffineModel,
    i: int,
    objective: Objective,
    grid_spec: GridSpec,
) -> np.ndarray:
    """
    Minimise le coût exact sur une grille de Pi raffinée jusqu'au pas visé.

    Chaque niveau évalue une grille régulière puis resserre la fenêtre autour
    du meilleur point; le pas est divisé par (points - 1) / (2 * zoom_steps).

    Raises:
        DimensionTooLargeError: Si n > config.BRUTE_FORCE_MAX_DIM
    """
    n = grid_spec.box.n
    if n > config.BRUTE_FORCE_MAX_DIM:
        raise DimensionTooLargeError(
            f"Recherche exhaustive limitée à n <= {config.BRUTE_FORCE_MAX_DIM}. Reçu: n={n}"
        )
    if n != model.n:
        raise DimensionMismatchError(f"Grille de dimension {n}, modèle de dimension {model.n}")

    lower = grid_spec.box.lower.copy()
    upper = grid_spec.box.upper.copy()
    while True:
        axes = [np.linspace(lo, hi, grid_spec.points) for lo, hi in zip(lower, upper)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        best = mesh[int(np.argmin(_batch_cost(model, i, objective, mesh)))]

        steps = (upper - lower) / (grid_spec.points - 1)
        if np.max(steps) <= grid_spec.step:
            return best

        lower = np.maximum(grid_spec.box.lower, best - grid_spec.zoom_steps * steps)
        upper = np.minimum(grid_spec.box.upper, best + grid_spec.zoom_steps * steps)

"""
Validateur de modèle (ModelValidator)

- Vérifie les invariants "hard" via ModelConstraints (chaîne stochastique,
  dimensions, rang colonne plein, définie négative pour le revenu, pavé)
- Signale les violations "soft" comme avertissements (optimum hors de Pi)

Usage:
    validator = ModelValidator()
    ok, errors, warnings = validator.validate(model, feasible)
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import src.config as config
from src.constraints.model_constraints import ModelConstraints
from src.exceptions import ModelValidationError, Violation
from src.models.affine_model import JumpAffineModel
from src.models.feasible_box import FeasibleBox

logger = logging.getLogger(__name__)


class ModelValidator:
    def __init__(self, rank_tol: float = config.RANK_TOL) -> None:
        if rank_tol <= 0:
            raise ValueError(f"rank_tol doit être strictement positif. Reçu: {rank_tol}")
        self.rank_tol = rank_tol
        self.constraints = ModelConstraints()

    # ------------------------------------------------------------------
    # API
    # ------------------------------------------------------------------
    def validate(self, model: JumpAffineModel, feasible: FeasibleBox) -> Tuple[bool, List[Violation], List[str]]:
        """Valide un modèle et retourne (ok, erreurs, avertissements)."""
        hard_ok, errors = self.constraints.verify_hard_constraints(model, feasible, self.rank_tol)

        # Les contraintes souples supposent un modèle structurellement valide
        warnings: List[str] = []
        if hard_ok:
            for constraint in self.constraints.get_soft_constraints():
                warnings.extend(
                    str(v) for v in constraint.violations(model, feasible, self.rank_tol)
                )

        return hard_ok, errors, warnings


def validate_model(
    model: JumpAffineModel,
    feasible: FeasibleBox,
    rank_tol: float = config.RANK_TOL,
) -> JumpAffineModel:
    """
    Retourne le modèle s'il respecte tous les invariants.

    Raises:
        ModelValidationError: Avec la liste complète des invariants violés
    """
    ok, errors, warnings = ModelValidator(rank_tol).validate(model, feasible)
    for warning in warnings:
        logger.warning("Modèle: %s", warning)
    if not ok:
        raise ModelValidationError(errors)
    return model

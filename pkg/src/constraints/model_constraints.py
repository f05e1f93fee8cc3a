"""
Définition des invariants d'un système affine à sauts markoviens.

Les contraintes sont décrites de manière déclarative, indépendamment du
validateur qui les applique:
- Matrice de transition stochastique, état initial valide
- Dimensions homogènes entre états (et m = n pour le revenu)
- Rang colonne plein de chaque A_k
- Partie symétrique de A_k définie négative (revenu)
- Écarts-types du bruit positifs, paramètres finis
- Pavé admissible non vide et borné
- (Entrée optimale de chaque état dans Pi, en "soft")
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple

import numpy as np
from scipy import linalg

from src.exceptions import SimulatorError, Violation, ViolationCode
from src.models.affine_model import JumpAffineModel, Objective
from src.models.feasible_box import FeasibleBox
from src.solvers.oracle import optimal_input
import src.config as config


class ConstraintType(Enum):
    """Portée d'une contrainte."""
    CHAIN = "chain"          # Contrainte sur la chaîne de Markov
    STATE = "state"          # Contrainte évaluée état par état
    GLOBAL = "global"        # Contrainte sur le modèle complet
    SOFT = "soft"            # Contrainte souple (avertissement)


CheckFn = Callable[[JumpAffineModel, FeasibleBox, float], List[Violation]]


@dataclass
class Constraint:
    """
    Représente un invariant du modèle.

    Attributes:
        name: Nom descriptif de la contrainte
        constraint_type: Portée de la contrainte
        check_fn: Fonction retournant la liste des violations (vide si satisfaite)
        severity: "hard" (obligatoire) ou "soft" (préférence)
        description: Texte explicatif
    """
    name: str
    constraint_type: ConstraintType
    check_fn: CheckFn
    severity: str = "hard"
    description: str = ""

    def violations(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        """Retourne les violations de la contrainte."""
        return self.check_fn(model, feasible, rank_tol)


class ModelConstraints:
    """
    Gestionnaire des invariants du modèle.

    Centralise toutes les règles et fournit des méthodes pour les vérifier.
    """

    def __init__(self):
        self.constraints: List[Constraint] = []
        self._build_constraints()

    def _build_constraints(self):
        """Construit toutes les contraintes."""

        # ====================================================================
        # CHAÎNE DE MARKOV
        # ====================================================================

        self.constraints.append(Constraint(
            name="row_stochastic",
            constraint_type=ConstraintType.CHAIN,
            check_fn=self._check_row_stochastic,
            description="Chaque ligne de P est dans [0,1] et somme à 1"
        ))

        self.constraints.append(Constraint(
            name="initial_state",
            constraint_type=ConstraintType.CHAIN,
            check_fn=self._check_initial_state,
            description="L'état initial appartient à {1..K}"
        ))

        # ====================================================================
        # DIMENSIONS
        # ====================================================================

        self.constraints.append(Constraint(
            name="dimensions",
            constraint_type=ConstraintType.GLOBAL,
            check_fn=self._check_dimensions,
            description="Dimensions homogènes entre états, chaîne, cible et pavé"
        ))

        # ====================================================================
        # PARAMÈTRES PAR ÉTAT
        # ====================================================================

        self.constraints.append(Constraint(
            name="finite_parameters",
            constraint_type=ConstraintType.STATE,
            check_fn=self._check_finite_parameters,
            description="A, b, sigma et y* sont finis"
        ))

        self.constraints.append(Constraint(
            name="full_column_rank",
            constraint_type=ConstraintType.STATE,
            check_fn=self._check_full_column_rank,
            description="Chaque A_k est de rang colonne plein"
        ))

        self.constraints.append(Constraint(
            name="negative_definite",
            constraint_type=ConstraintType.STATE,
            check_fn=self._check_negative_definite,
            description="Revenu: (A_k + A_k^T)/2 est définie négative"
        ))

        self.constraints.append(Constraint(
            name="noise_nonnegative",
            constraint_type=ConstraintType.STATE,
            check_fn=self._check_noise_nonnegative,
            description="Écarts-types du bruit positifs ou nuls"
        ))

        # ====================================================================
        # ENSEMBLE ADMISSIBLE
        # ====================================================================

        self.constraints.append(Constraint(
            name="feasible_box",
            constraint_type=ConstraintType.GLOBAL,
            check_fn=self._check_feasible_box,
            description="Pi est non vide et borné"
        ))

        # ====================================================================
        # CONTRAINTES SOUPLES
        # ====================================================================

        self.constraints.append(Constraint(
            name="optimum_in_box",
            constraint_type=ConstraintType.SOFT,
            check_fn=self._check_optimum_in_box,
            severity="soft",
            description="L'entrée optimale de chaque état appartient à Pi"
        ))

    # ========================================================================
    # IMPLÉMENTATIONS DES CONTRAINTES
    # ========================================================================

    def _check_row_stochastic(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        """Vérifie que P est stochastique ligne par ligne."""
        violations = []
        for i, row in enumerate(model.chain.P):
            total = float(np.sum(row))
            if not np.all(np.isfinite(row)) or np.any(row < 0) or np.any(row > 1):
                violations.append(Violation(
                    ViolationCode.ROW_NOT_STOCHASTIC, i,
                    f"entrées hors de [0,1]: {row.tolist()}"
                ))
            elif abs(total - 1.0) > config.STOCHASTIC_TOL:
                violations.append(Violation(
                    ViolationCode.ROW_NOT_STOCHASTIC, i,
                    f"la ligne somme à {total!r}"
                ))
        return violations

    def _check_initial_state(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        s0 = model.chain.initial_state
        if not 0 <= s0 < model.chain.K:
            return [Violation(
                ViolationCode.INVALID_INITIAL_STATE, None,
                f"état initial {s0 + 1} hors de {{1..{model.chain.K}}}"
            )]
        return []

    def _check_dimensions(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        """Vérifie la cohérence des dimensions de tout le modèle."""
        violations = []
        m, n = model.m, model.n

        if model.chain.K != model.K:
            violations.append(Violation(
                ViolationCode.DIMENSION_MISMATCH, None,
                f"la chaîne a {model.chain.K} états, le modèle {model.K} états affines"
            ))

        for k, state in enumerate(model.states):
            if state.A.shape != (m, n):
                violations.append(Violation(
                    ViolationCode.DIMENSION_MISMATCH, k,
                    f"A de forme {state.A.shape}, attendu {(m, n)}"
                ))
            if state.b.shape != (state.m,) or state.noise_sigma.shape != (state.m,):
                violations.append(Violation(
                    ViolationCode.DIMENSION_MISMATCH, k,
                    f"b {state.b.shape} / noise_sigma {state.noise_sigma.shape} incompatibles avec m={state.m}"
                ))

        if model.objective is Objective.REVENUE_MAXIMIZATION and m != n:
            violations.append(Violation(
                ViolationCode.DIMENSION_MISMATCH, None,
                f"le revenu requiert m = n (reçu m={m}, n={n})"
            ))

        if model.objective is Objective.QUADRATIC_REGULATION:
            if model.target is None:
                violations.append(Violation(
                    ViolationCode.MISSING_TARGET, None,
                    "la régulation quadratique requiert une cible y*"
                ))
            elif model.target.shape != (m,):
                violations.append(Violation(
                    ViolationCode.DIMENSION_MISMATCH, None,
                    f"cible de forme {model.target.shape}, attendu {(m,)}"
                ))

        if feasible.n != n:
            violations.append(Violation(
                ViolationCode.DIMENSION_MISMATCH, None,
                f"pavé de dimension {feasible.n}, entrée de dimension {n}"
            ))
        return violations

    def _check_finite_parameters(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        violations = []
        for k, state in enumerate(model.states):
            if not (np.all(np.isfinite(state.A)) and np.all(np.isfinite(state.b))
                    and np.all(np.isfinite(state.noise_sigma))):
                violations.append(Violation(ViolationCode.NON_FINITE_PARAMETER, k, "valeurs non finies"))
        if model.target is not None and not np.all(np.isfinite(model.target)):
            violations.append(Violation(ViolationCode.NON_FINITE_PARAMETER, None, "cible non finie"))
        return violations

    def _check_full_column_rank(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        """Plus petite valeur singulière > rank_tol * plus grande, et m >= n."""
        violations = []
        for k, state in enumerate(model.states):
            if not np.all(np.isfinite(state.A)):
                continue
            if state.m < state.n:
                violations.append(Violation(
                    ViolationCode.RANK_DEFICIENT, k, f"m={state.m} < n={state.n}"
                ))
                continue
            singular_values = linalg.svdvals(state.A)
            if singular_values[0] == 0 or singular_values[-1] <= rank_tol * singular_values[0]:
                violations.append(Violation(
                    ViolationCode.RANK_DEFICIENT, k,
                    f"valeurs singulières extrêmes {singular_values[0]:.3g} / {singular_values[-1]:.3g}"
                ))
        return violations

    def _check_negative_definite(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        """Plus grande valeur propre de la partie symétrique < -rank_tol."""
        if model.objective is not Objective.REVENUE_MAXIMIZATION:
            return []
        violations = []
        for k, state in enumerate(model.states):
            if state.m != state.n or not np.all(np.isfinite(state.A)):
                continue
            sym = (state.A + state.A.T) / 2.0
            largest = float(linalg.eigvalsh(sym)[-1])
            if largest >= -rank_tol:
                violations.append(Violation(
                    ViolationCode.NOT_NEGATIVE_DEFINITE, k,
                    f"plus grande valeur propre de la partie symétrique: {largest:.6g}"
                ))
        return violations

    def _check_noise_nonnegative(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        violations = []
        for k, state in enumerate(model.states):
            if np.any(state.noise_sigma < 0):
                violations.append(Violation(
                    ViolationCode.NEGATIVE_NOISE, k,
                    f"écarts-types négatifs: {state.noise_sigma.tolist()}"
                ))
        return violations

    def _check_feasible_box(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        violations = []
        if feasible.n == 0 or feasible.is_empty or np.any(np.isnan(feasible.lower)) or np.any(np.isnan(feasible.upper)):
            violations.append(Violation(ViolationCode.EMPTY_BOX, None, "lower > upper sur au moins une coordonnée"))
        elif not feasible.is_bounded:
            violations.append(Violation(ViolationCode.UNBOUNDED_BOX, None, "bornes infinies"))
        return violations

    def _check_optimum_in_box(self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float) -> List[Violation]:
        """Vérifie que x*_i appartient à Pi pour chaque état i."""
        violations = []
        for i in range(model.K):
            try:
                x_star = optimal_input(model, i)
            except SimulatorError as e:
                violations.append(Violation(ViolationCode.OPTIMUM_OUTSIDE_BOX, i, f"optimum non calculable: {e}"))
                continue
            if not feasible.contains(x_star, tol=1e-9):
                violations.append(Violation(
                    ViolationCode.OPTIMUM_OUTSIDE_BOX, i,
                    f"x* hors de Pi: {np.round(x_star, 6).tolist()}"
                ))
        return violations

    # ========================================================================
    # INTERFACE PUBLIQUE
    # ========================================================================

    def get_hard_constraints(self) -> List[Constraint]:
        """Retourne les contraintes obligatoires."""
        return [c for c in self.constraints if c.severity == "hard"]

    def get_soft_constraints(self) -> List[Constraint]:
        """Retourne les contraintes souples."""
        return [c for c in self.constraints if c.severity == "soft"]

    def verify_hard_constraints(
        self, model: JumpAffineModel, feasible: FeasibleBox, rank_tol: float
    ) -> Tuple[bool, List[Violation]]:
        """Vérifie uniquement les contraintes obligatoires."""
        violated: List[Violation] = []
        for constraint in self.get_hard_constraints():
            violated.extend(constraint.violations(model, feasible, rank_tol))
        return len(violated) == 0, violated

    def get_constraint_details(self) -> List[dict]:
        """Retourne les détails de toutes les contraintes."""
        return [
            {
                "name": c.name,
                "type": c.constraint_type.value,
                "severity": c.severity,
                "description": c.description
            }
            for c in self.constraints
        ]

"""
Exceptions du simulateur.

Toutes dérivent de SimulatorError afin que la CLI puisse les intercepter
d'un seul bloc et retourner un code de sortie non nul.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence


class SimulatorError(Exception):
    """Erreur de base du simulateur."""
    pass


# ============================================================================
# MODÈLE
# ============================================================================

class ViolationCode(Enum):
    """Invariants du modèle pouvant être violés."""
    ROW_NOT_STOCHASTIC = "RowNotStochastic"
    RANK_DEFICIENT = "RankDeficient"
    NOT_NEGATIVE_DEFINITE = "NotNegativeDefinite"
    DIMENSION_MISMATCH = "DimensionMismatch"
    EMPTY_BOX = "EmptyBox"
    UNBOUNDED_BOX = "UnboundedBox"
    NEGATIVE_NOISE = "NegativeNoise"
    NON_FINITE_PARAMETER = "NonFiniteParameter"
    INVALID_INITIAL_STATE = "InvalidInitialState"
    MISSING_TARGET = "MissingTarget"
    OPTIMUM_OUTSIDE_BOX = "OptimumOutsideBox"


@dataclass(frozen=True)
class Violation:
    """
    Violation d'un invariant du modèle.

    Attributes:
        code: Invariant violé
        index: Indice (base 0) de l'état ou de la ligne concernée, None si global
        message: Description lisible
    """
    code: ViolationCode
    index: Optional[int]
    message: str

    @property
    def field(self) -> str:
        """Chemin du champ de configuration concerné (indices en base 1)."""
        if self.code is ViolationCode.ROW_NOT_STOCHASTIC:
            return f"chain.P.row{self.index + 1}" if self.index is not None else "chain.P"
        if self.code is ViolationCode.INVALID_INITIAL_STATE:
            return "chain.initial_state"
        if self.code in (ViolationCode.EMPTY_BOX, ViolationCode.UNBOUNDED_BOX):
            return "feasible"
        if self.code is ViolationCode.MISSING_TARGET:
            return "target"
        if self.index is not None:
            return f"states[{self.index + 1}]"
        return "states"

    def __str__(self):
        label = self.code.value if self.index is None else f"{self.code.value}({self.index + 1})"
        return f"{label}: {self.message}"


class ModelValidationError(SimulatorError):
    """Le modèle viole un ou plusieurs invariants; toutes les violations sont listées."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations: List[Violation] = list(violations)
        details = "; ".join(str(v) for v in self.violations)
        super().__init__(f"Modèle invalide ({len(self.violations)} violation(s)): {details}")

    def __reduce__(self):
        return (self.__class__, (self.violations,))

    @property
    def codes(self) -> List[ViolationCode]:
        return [v.code for v in self.violations]


class DimensionMismatchError(SimulatorError):
    """Dimensions incompatibles entre deux objets."""
    pass


# ============================================================================
# SIMULATION
# ============================================================================

class NonFiniteInputError(SimulatorError):
    """Une entrée x_t contient des valeurs non finies."""
    pass


class HorizonOverflowError(SimulatorError):
    """Horizon hors des bornes acceptées."""
    pass


class EpisodeError(SimulatorError):
    """Erreur survenue pendant un épisode, à la période t."""

    def __init__(self, t: int, cause: Exception):
        self.t = t
        self.cause = cause
        super().__init__(f"Période {t}: {cause}")

    def __reduce__(self):
        return (self.__class__, (self.t, self.cause))


# ============================================================================
# ORACLE
# ============================================================================

class SingularGramError(SimulatorError):
    """La matrice de Gram du mélange est (numériquement) singulière."""
    pass


class SingularSymPartError(SimulatorError):
    """La partie symétrique du mélange est (numériquement) singulière."""
    pass


class ZeroPerturbationEntryError(SimulatorError):
    """Une composante de la perturbation est nulle."""
    pass


class DimensionTooLargeError(SimulatorError):
    """Dimension trop grande pour la recherche exhaustive."""
    pass


# ============================================================================
# POLITIQUES
# ============================================================================

class EstimateSingularError(SimulatorError):
    """Les estimations des moindres carrés ne donnent pas de système inversible."""
    pass


class PolicyProtocolError(SimulatorError):
    """Les appels act / update ne sont pas strictement alternés."""
    pass


# ============================================================================
# MÉTRIQUES ET HARNAIS
# ============================================================================

class LengthMismatchError(SimulatorError):
    """Séries de longueurs différentes."""
    pass


class GenerationError(SimulatorError):
    """Le générateur n'a trouvé aucune instance acceptable."""
    pass


class ConfigParseError(SimulatorError):
    """Fichier de configuration illisible (JSON invalide)."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"Ligne {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.message = message

    def __reduce__(self):
        return (self.__class__, (self.message, self.line))


class ConfigValidationError(SimulatorError):
    """Champ de configuration invalide."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"Champ '{field}': {message}")
        self.message = message

    def __reduce__(self):
        return (self.__class__, (self.field, self.message))


class ExperimentError(SimulatorError):
    """Échec d'un épisode, avec le contexte (politique, réplication, période)."""

    def __init__(self, policy: str, replication: int, t: Optional[int], cause: Exception):
        self.policy = policy
        self.replication = replication
        self.t = t
        self.cause = cause
        where = f", t={t}" if t is not None else ""
        super().__init__(f"Politique '{policy}', réplication {replication}{where}: {cause}")

    def __reduce__(self):
        return (self.__class__, (self.policy, self.replication, self.t, self.cause))

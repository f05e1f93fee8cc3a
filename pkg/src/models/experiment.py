from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

import src.config as config
from src.models.affine_model import JumpAffineModel
from src.models.feasible_box import FeasibleBox
from src.policies.gains import GainSchedule, PerturbationLaw
from src.utils.arrays import format_vector, frozen_array


class PolicyKind(Enum):
    """Politiques disponibles dans les fichiers d'expérience."""
    MSPSA = "mspsa"
    GREEDY_LSE = "greedy_lse"
    ORACLE = "oracle"
    CONSTANT = "constant"

    @classmethod
    def from_str(cls, value: str) -> "PolicyKind":
        """Crée un PolicyKind à partir de son nom."""
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"Politique invalide: {value}. Doit être parmi: {choices}.")


@dataclass(frozen=True)
class PolicySpec:
    """
    Description d'une politique d'une expérience.

    Attributes:
        name: Nom unique dans l'expérience (utilisé dans les noms de fichiers)
        kind: Type de politique
        gains: Un seul GainSchedule commun, ou un par état (MSPSA uniquement)
        perturbation: Loi des composantes de Delta (MSPSA uniquement)
    """
    name: str
    kind: PolicyKind
    gains: Tuple[GainSchedule, ...] = ()
    perturbation: PerturbationLaw = PerturbationLaw.RADEMACHER

    @property
    def shared_gains(self) -> bool:
        return len(self.gains) == 1

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "kind": self.kind.value}
        if self.kind is PolicyKind.MSPSA:
            gains = [g.to_dict() for g in self.gains]
            data["gains"] = gains[0] if self.shared_gains else gains
            data["perturbation"] = self.perturbation.value
        return data


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """
    Expérience complète: modèle, pavé, politiques et plan Monte Carlo.

    Attributes:
        name: Nom de l'expérience (préfixe des fichiers produits)
        model: Modèle validé
        feasible: Ensemble Pi
        initial_input: Point de départ de toutes les politiques (dans Pi)
        policies: Politiques comparées
        horizon: Nombre de périodes T
        replications: Nombre de réplications R
        seed: Graine maître
        checkpoints: Grille strictement croissante de périodes dans [1, T]
        workers: Processus utilisés pour les réplications
        slope_window: Fraction de T où commence l'ajustement des pentes
        output_dir: Répertoire de sortie configuré (peut être surchargé)
    """
    name: str
    model: JumpAffineModel
    feasible: FeasibleBox
    initial_input: np.ndarray
    policies: Tuple[PolicySpec, ...]
    horizon: int
    replications: int
    seed: int
    checkpoints: Tuple[int, ...]
    workers: int = 1
    slope_window: float = config.SLOPE_WINDOW_FRACTION
    output_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "initial_input", frozen_array(self.initial_input, 1, "initial_input"))
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "checkpoints", tuple(int(t) for t in self.checkpoints))

    def get_policy(self, name: str) -> PolicySpec:
        """
        Retourne la politique de nom donné.

        Raises:
            KeyError: Si aucune politique ne porte ce nom
        """
        for spec in self.policies:
            if spec.name == name:
                return spec
        names = ", ".join(spec.name for spec in self.policies)
        raise KeyError(f"Politique inconnue: {name}. Disponibles: {names}")

    def to_dict(self) -> Dict[str, Any]:
        """Forme explicite (matrices résolues), relue à l'identique par le chargeur."""
        data: Dict[str, Any] = {
            "name": self.name,
            "objective": self.model.objective.value,
        }
        model = self.model.to_dict()
        if "target" in model:
            data["target"] = model["target"]
        data["chain"] = model["chain"]
        data["states"] = model["states"]
        data["feasible"] = self.feasible.to_dict()
        data["initial_input"] = self.initial_input.tolist()
        data["policies"] = [spec.to_dict() for spec in self.policies]
        data["horizon"] = self.horizon
        data["replications"] = self.replications
        data["seed"] = self.seed
        data["checkpoints"] = list(self.checkpoints)
        data["workers"] = self.workers
        data["slope_window"] = self.slope_window
        if self.output_dir is not None:
            data["output_dir"] = self.output_dir
        return data

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.name, self.seed, self.horizon, self.replications))

    def __repr__(self):
        return (
            f"ExperimentConfig(name={self.name}, objective={self.model.objective.value}, "
            f"K={self.model.K}, n={self.model.n}, T={self.horizon}, R={self.replications}, "
            f"policies={[spec.name for spec in self.policies]})"
        )


@dataclass
class PolicySummary:
    """
    Résultats agrégés d'une politique.

    Attributes:
        name: Nom de la politique
        kind: Type de politique
        regret_slope: Pente log-log du regret cumulé moyen sur la fenêtre
        regret_slope_ci: Intervalle de confiance de la pente
        final_mean_regret: Regret cumulé moyen à T
        final_se_regret: Erreur standard associée
        regret_sqrt_ratio: final_mean_regret / sqrt(T)
        final_mean_input_mse: Moyenne de ||x_T - x*_{s_{T-1}}||^2
        initial_mean_input_mse: Même quantité à t = 100 (ou à T si T < 100)
        final_mean_est_mse: Moyenne de ||x_hat - x*||^2 à T
        estimation_slope: Pente log-log de l'erreur d'estimation moyenne contre t
        state_slopes: Pente log-log de e_{i,t_i} contre t_i, par état (base 1)
        fallback_count: Replis de la politique, toutes réplications confondues
    """
    name: str
    kind: str
    regret_slope: float
    regret_slope_ci: Tuple[float, float]
    final_mean_regret: float
    final_se_regret: float
    regret_sqrt_ratio: float
    final_mean_input_mse: float
    initial_mean_input_mse: float
    final_mean_est_mse: float
    estimation_slope: float
    state_slopes: Dict[int, float] = field(default_factory=dict)
    fallback_count: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "regret_slope": _finite_or_none(self.regret_slope),
            "regret_slope_ci": [_finite_or_none(v) for v in self.regret_slope_ci],
            "final_mean_regret": self.final_mean_regret,
            "final_se_regret": self.final_se_regret,
            "regret_sqrt_ratio": self.regret_sqrt_ratio,
            "final_mean_input_mse": self.final_mean_input_mse,
            "initial_mean_input_mse": self.initial_mean_input_mse,
            "final_mean_est_mse": self.final_mean_est_mse,
            "estimation_slope": _finite_or_none(self.estimation_slope),
            "state_slopes": {str(k): _finite_or_none(v) for k, v in sorted(self.state_slopes.items())},
            "fallback_count": self.fallback_count,
        }


@dataclass
class ExperimentSummary:
    """
    Résumé d'une expérience et sa provenance.

    Ne contient aucune donnée dépendant de l'horloge: deux exécutions de la
    même configuration avec la même graine donnent le même résumé.
    """
    name: str
    objective: str
    horizon: int
    replications: int
    seed: int
    config_hash: str
    code_version: str = config.CODE_VERSION
    policies: List[PolicySummary] = field(default_factory=list)
    optimal_inputs: Dict[int, List[float]] = field(default_factory=dict)

    def get_policy(self, name: str) -> PolicySummary:
        for summary in self.policies:
            if summary.name == name:
                return summary
        raise KeyError(f"Politique absente du résumé: {name}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "objective": self.objective,
            "horizon": self.horizon,
            "replications": self.replications,
            "provenance": {
                "config_hash": self.config_hash,
                "seed": self.seed,
                "code_version": self.code_version,
            },
            "optimal_inputs": {str(k): v for k, v in sorted(self.optimal_inputs.items())},
            "policies": [p.to_dict() for p in self.policies],
        }

    def to_text(self) -> str:
        """Résumé lisible."""
        lines = [
            f"Expérience {self.name} ({self.objective})",
            f"T = {self.horizon}, R = {self.replications}, graine = {self.seed}",
            f"Configuration {self.config_hash[:16]}, version {self.code_version}",
            "",
        ]
        for state, x in sorted(self.optimal_inputs.items()):
            lines.append(f"x*_{state} = {format_vector(np.asarray(x))}")
        for p in self.policies:
            lo, hi = p.regret_slope_ci
            lines.extend([
                "",
                f"[{p.name}] ({p.kind})",
                f"  regret cumulé moyen à T : {p.final_mean_regret:.6g} (± {p.final_se_regret:.3g})",
                f"  regret / sqrt(T)        : {p.regret_sqrt_ratio:.6g}",
                f"  pente log-log du regret : {p.regret_slope:.4f} [{lo:.4f}, {hi:.4f}]",
                f"  MSE d'entrée à T        : {p.final_mean_input_mse:.6g}",
                f"  MSE d'estimation à T    : {p.final_mean_est_mse:.6g}",
                f"  pente de l'estimation   : {p.estimation_slope:.4f}",
            ])
            for state, slope in sorted(p.state_slopes.items()):
                lines.append(f"    état {state}: pente e_i(t_i) = {slope:.4f}")
            if p.fallback_count:
                lines.append(f"  replis                  : {p.fallback_count}")
        return "\n".join(lines) + "\n"


def _finite_or_none(value: float) -> Optional[float]:
    """NaN et infinis n'ont pas de représentation JSON standard."""
    value = float(value)
    return value if np.isfinite(value) else None

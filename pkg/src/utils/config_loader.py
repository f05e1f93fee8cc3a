"""
Chargement et écriture des fichiers d'expérience (JSON).

Le schéma complet (noms de clés figés) est décrit dans README.md. Les
erreurs de syntaxe sont rapportées avec leur ligne, les erreurs de contenu
avec le chemin du champ fautif (ex: "chain.P.row1", "policies[1].gains.gamma").
"""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

import src.config as config
from src.exceptions import (
    ConfigParseError,
    ConfigValidationError,
    GenerationError,
    ModelValidationError,
)
from src.models.affine_model import AffineState, JumpAffineModel, Objective
from src.models.experiment import ExperimentConfig, PolicyKind, PolicySpec
from src.models.feasible_box import FeasibleBox
from src.models.markov_chain import MarkovChain
from src.metrics.aggregate import checkpoint_grid
from src.policies.gains import GainSchedule, PerturbationLaw
from src.utils.model_generator import GeneratorSpec, generate_model, self_transition_chain
from src.validators.model_validator import validate_model

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_UINT64_LIMIT = 2 ** 64


class ConfigLoader:
    """
    Charge, valide et écrit les configurations d'expérience.

    Toutes les méthodes sont statiques, comme pour les autres chargeurs.
    """

    @staticmethod
    def load_config(filepath: PathLike, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        """
        Charge une expérience depuis un fichier JSON.

        Args:
            filepath: Chemin du fichier
            overrides: Clés de premier niveau remplacées avant validation
                       (seed, horizon, replications, workers, output_dir)

        Returns:
            ExperimentConfig validée

        Raises:
            ConfigParseError: Fichier absent ou JSON invalide (avec la ligne)
            ConfigValidationError: Champ invalide (avec son chemin)
        """
        path = Path(filepath)
        if not path.exists():
            raise ConfigParseError(f"Fichier introuvable: {path}")

        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigParseError(f"JSON invalide: {e.msg}", line=e.lineno) from e

        if not isinstance(data, dict):
            raise ConfigParseError("Le fichier doit contenir un objet JSON", line=1)

        data.setdefault("name", path.stem)
        if overrides:
            data = ConfigLoader.apply_overrides(data, overrides)
        return ConfigLoader.parse_config(data)

    @staticmethod
    def apply_overrides(data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
        """
        Remplace des clés de premier niveau.

        Un nouvel horizon retire de la grille explicite les points au-delà de T.
        """
        data = dict(data)
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        if overrides.get("horizon") is not None and isinstance(data.get("checkpoints"), list):
            kept = [t for t in data["checkpoints"] if isinstance(t, int) and t <= data["horizon"]]
            if kept:
                data["checkpoints"] = kept
            else:
                del data["checkpoints"]
        return data

    @staticmethod
    def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
        """
        Construit une ExperimentConfig à partir d'un dictionnaire.

        Raises:
            ConfigValidationError: Champ invalide (avec son chemin)
        """
        name = data.get("name", "experiment")
        if not isinstance(name, str) or not name.strip():
            raise ConfigValidationError("name", "doit être une chaîne non vide")

        try:
            objective = Objective.from_str(_require(data, "objective", "objective"))
        except ValueError as e:
            raise ConfigValidationError("objective", str(e))

        model, feasible = ConfigLoader._parse_model(data, objective)

        initial_input = _parse_vector(data.get("initial_input", feasible.center.tolist()), feasible.n, "initial_input")
        if not feasible.contains(initial_input):
            raise ConfigValidationError("initial_input", "doit appartenir au pavé feasible")

        policies = ConfigLoader._parse_policies(_require(data, "policies", "policies"), model.K)

        horizon = _parse_int(data.get("horizon"), "horizon", 1, config.MAX_HORIZON)
        replications = _parse_int(data.get("replications", 1), "replications", 1)
        seed = _parse_int(data.get("seed", 0), "seed", 0, _UINT64_LIMIT - 1)
        workers = _parse_int(data.get("workers", 1), "workers", 1)

        slope_window = data.get("slope_window", config.SLOPE_WINDOW_FRACTION)
        if not isinstance(slope_window, (int, float)) or not 0 < slope_window < 1:
            raise ConfigValidationError("slope_window", f"doit être dans ]0, 1[. Reçu: {slope_window}")

        checkpoints = ConfigLoader._parse_checkpoints(data, horizon)

        output_dir = data.get("output_dir")
        if output_dir is not None and not isinstance(output_dir, str):
            raise ConfigValidationError("output_dir", "doit être une chaîne")

        return ExperimentConfig(
            name=name,
            model=model,
            feasible=feasible,
            initial_input=initial_input,
            policies=policies,
            horizon=horizon,
            replications=replications,
            seed=seed,
            checkpoints=checkpoints,
            workers=workers,
            slope_window=float(slope_window),
            output_dir=output_dir,
        )

    # ------------------------------------------------------------------
    # Modèle
    # ------------------------------------------------------------------
    @staticmethod
    def _parse_model(data: Dict[str, Any], objective: Objective) -> Tuple[JumpAffineModel, FeasibleBox]:
        generator = data.get("generator")
        states_data = data.get("states")
        if (generator is None) == (states_data is None):
            raise ConfigValidationError("states", "exactement une des clés 'states' ou 'generator' est requise")

        if generator is not None:
            spec = ConfigLoader._parse_generator(generator)
            n = m = spec.input_dim
            K = spec.states
        else:
            if not isinstance(states_data, list) or not states_data:
                raise ConfigValidationError("states", "doit être une liste non vide")
            states = [ConfigLoader._parse_state(s, f"states[{k + 1}]") for k, s in enumerate(states_data)]
            m, n = states[0].A.shape
            K = len(states)

        chain = ConfigLoader._parse_chain(_require(data, "chain", "chain"), K)
        feasible = ConfigLoader._parse_feasible(_require(data, "feasible", "feasible"), n)

        target = None
        if objective is Objective.QUADRATIC_REGULATION:
            if "target" not in data:
                raise ConfigValidationError("target", "requis pour la régulation quadratique")
            target = _parse_vector(data["target"], m, "target")

        if generator is not None:
            try:
                model = generate_model(spec, chain, objective, feasible, target)
            except (GenerationError, ValueError) as e:
                raise ConfigValidationError("generator", str(e))
        else:
            model = JumpAffineModel(chain, tuple(states), objective, target)

        try:
            validate_model(model, feasible)
        except ModelValidationError as e:
            raise ConfigValidationError(e.violations[0].field, str(e))
        return model, feasible

    @staticmethod
    def _parse_state(state: Any, path: str) -> AffineState:
        if not isinstance(state, dict):
            raise ConfigValidationError(path, "doit être un objet {A, b, noise_sigma}")
        A = _parse_matrix(_require(state, "A", f"{path}.A"), f"{path}.A")
        m = A.shape[0]
        b = _parse_vector(_require(state, "b", f"{path}.b"), m, f"{path}.b")
        sigma = _parse_vector(state.get("noise_sigma", 0.0), m, f"{path}.noise_sigma")
        return AffineState(A, b, sigma)

    @staticmethod
    def _parse_generator(generator: Any) -> GeneratorSpec:
        if not isinstance(generator, dict):
            raise ConfigValidationError("generator", "doit être un objet")
        K = _parse_int(generator.get("states"), "generator.states", 1)
        n = _parse_int(generator.get("input_dim"), "generator.input_dim", 1)
        m = _parse_int(generator.get("output_dim", n), "generator.output_dim", 1)
        if m != n:
            raise ConfigValidationError("generator.output_dim", f"le générateur requiert m = n (reçu m={m}, n={n})")
        interval = _parse_vector(_require(generator, "eigenvalue_interval", "generator.eigenvalue_interval"), 2,
                                 "generator.eigenvalue_interval")
        try:
            return GeneratorSpec(
                states=K,
                input_dim=n,
                eigenvalue_interval=(float(interval[0]), float(interval[1])),
                noise_sigma=float(generator.get("noise_sigma", 0.0)),
                seed=_parse_int(generator.get("seed", 0), "generator.seed", 0, _UINT64_LIMIT - 1),
                margin=float(generator.get("margin", 0.1)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigValidationError("generator", str(e))

    @staticmethod
    def _parse_chain(chain: Any, K: int) -> MarkovChain:
        if not isinstance(chain, dict):
            raise ConfigValidationError("chain", "doit être un objet")
        initial_state = chain.get("initial_state", 1)
        if not isinstance(initial_state, int) or isinstance(initial_state, bool):
            raise ConfigValidationError("chain.initial_state", f"doit être un entier. Reçu: {initial_state!r}")

        if "P" in chain:
            P = _parse_matrix(chain["P"], "chain.P")
            if P.shape != (K, K):
                raise ConfigValidationError("chain.P", f"forme {P.shape}, attendu ({K}, {K})")
            return MarkovChain(P, initial_state - 1)
        if "self_transition" in chain:
            try:
                return self_transition_chain(K, float(chain["self_transition"]), initial_state - 1)
            except (TypeError, ValueError) as e:
                raise ConfigValidationError("chain.self_transition", str(e))
        raise ConfigValidationError("chain", "une des clés 'P' ou 'self_transition' est requise")

    @staticmethod
    def _parse_feasible(feasible: Any, n: int) -> FeasibleBox:
        if not isinstance(feasible, dict):
            raise ConfigValidationError("feasible", "doit être un objet {lower, upper}")
        lower = _parse_vector(_require(feasible, "lower", "feasible.lower"), n, "feasible.lower")
        upper = _parse_vector(_require(feasible, "upper", "feasible.upper"), n, "feasible.upper")
        return FeasibleBox(lower, upper)

    # ------------------------------------------------------------------
    # Politiques et grille
    # ------------------------------------------------------------------
    @staticmethod
    def _parse_policies(policies: Any, K: int) -> Tuple[PolicySpec, ...]:
        if not isinstance(policies, list) or not policies:
            raise ConfigValidationError("policies", "doit être une liste non vide")

        specs: List[PolicySpec] = []
        for idx, entry in enumerate(policies):
            path = f"policies[{idx}]"
            if not isinstance(entry, dict):
                raise ConfigValidationError(path, "doit être un objet")
            try:
                kind = PolicyKind.from_str(_require(entry, "kind", f"{path}.kind"))
            except ValueError as e:
                raise ConfigValidationError(f"{path}.kind", str(e))
            name = entry.get("name", kind.value)
            if not isinstance(name, str) or not name or "/" in name:
                raise ConfigValidationError(f"{path}.name", f"nom invalide: {name!r}")
            if any(spec.name == name for spec in specs):
                raise ConfigValidationError(f"{path}.name", f"nom en double: {name}")

            gains: Tuple[GainSchedule, ...] = ()
            law = PerturbationLaw.RADEMACHER
            if kind is PolicyKind.MSPSA:
                gains = ConfigLoader._parse_gains(entry.get("gains", {}), K, f"{path}.gains")
                try:
                    law = PerturbationLaw.from_str(entry.get("perturbation", law.value))
                except ValueError as e:
                    raise ConfigValidationError(f"{path}.perturbation", str(e))
            specs.append(PolicySpec(name=name, kind=kind, gains=gains, perturbation=law))
        return tuple(specs)

    @staticmethod
    def _parse_gains(gains: Any, K: int, path: str) -> Tuple[GainSchedule, ...]:
        if isinstance(gains, dict):
            return (ConfigLoader._parse_gain_schedule(gains, path),)
        if isinstance(gains, list):
            if len(gains) != K:
                raise ConfigValidationError(path, f"{len(gains)} jeux de gains pour K={K} états")
            return tuple(ConfigLoader._parse_gain_schedule(g, f"{path}[{i + 1}]") for i, g in enumerate(gains))
        raise ConfigValidationError(path, "doit être un objet ou une liste d'objets")

    @staticmethod
    def _parse_gain_schedule(gains: Any, path: str) -> GainSchedule:
        if not isinstance(gains, dict):
            raise ConfigValidationError(path, "doit être un objet")
        if "gamma" in gains and "sigma_lower" in gains:
            raise ConfigValidationError(path, "'gamma' et 'sigma_lower' sont exclusifs")

        if "gamma" in gains:
            gamma = _parse_positive(gains["gamma"], f"{path}.gamma")
        else:
            sigma_lower = _parse_positive(gains.get("sigma_lower", config.DEFAULT_SIGMA_LOWER), f"{path}.sigma_lower")
            gamma = config.gamma_from_sigma_lower(sigma_lower)

        gamma_prime = _parse_positive(gains.get("gamma_prime", config.DEFAULT_PERTURBATION_GAIN), f"{path}.gamma_prime")
        N = _parse_int(gains.get("N", config.DEFAULT_STEP_OFFSET), f"{path}.N", 0)
        N_prime = _parse_int(gains.get("N_prime", config.DEFAULT_PERTURBATION_OFFSET), f"{path}.N_prime", 0)
        return GainSchedule(gamma, N, gamma_prime, N_prime)

    @staticmethod
    def _parse_checkpoints(data: Dict[str, Any], horizon: int) -> Tuple[int, ...]:
        if "checkpoints" in data:
            points = data["checkpoints"]
            if (not isinstance(points, list) or not points
                    or not all(isinstance(t, int) and not isinstance(t, bool) for t in points)):
                raise ConfigValidationError("checkpoints", "doit être une liste non vide d'entiers")
            if any(b <= a for a, b in zip(points, points[1:])):
                raise ConfigValidationError("checkpoints", "doit être strictement croissante")
            if points[0] < 1 or points[-1] > horizon:
                raise ConfigValidationError("checkpoints", f"doit être incluse dans [1, {horizon}]")
            return tuple(points)
        count = _parse_int(data.get("checkpoint_count", config.DEFAULT_CHECKPOINT_COUNT), "checkpoint_count", 2)
        return checkpoint_grid(horizon, count)

    # ------------------------------------------------------------------
    # Écriture
    # ------------------------------------------------------------------
    @staticmethod
    def save_config(experiment: ExperimentConfig, filepath: PathLike) -> None:
        """
        Écrit la configuration sous forme explicite (matrices générées résolues).

        load_config(save_config(c)) == c.
        """
        path = Path(filepath)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(experiment.to_dict(), f, indent=2)
            f.write("\n")
        logger.info(f"Configuration écrite: {path}")

    @staticmethod
    def config_hash(experiment: ExperimentConfig) -> str:
        """Empreinte SHA-256 de la forme explicite, hors répertoire de sortie."""
        payload = experiment.to_dict()
        payload.pop("output_dir", None)
        encoded = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()


# ============================================================================
# LECTURE DES CHAMPS
# ============================================================================

def _require(data: Dict[str, Any], key: str, path: str) -> Any:
    if key not in data:
        raise ConfigValidationError(path, "champ requis manquant")
    return data[key]


def _parse_int(value: Any, path: str, minimum: Optional[int] = None, maximum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(path, f"doit être un entier. Reçu: {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigValidationError(path, f"doit être >= {minimum}. Reçu: {value}")
    if maximum is not None and value > maximum:
        raise ConfigValidationError(path, f"doit être <= {maximum}. Reçu: {value}")
    return value


def _parse_positive(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigValidationError(path, f"doit être un réel strictement positif. Reçu: {value!r}")
    return float(value)


def _parse_vector(value: Any, size: int, path: str) -> np.ndarray:
    """Liste de réels de longueur size, ou scalaire répété."""
    if isinstance(value, bool):
        raise ConfigValidationError(path, f"valeur invalide: {value!r}")
    if isinstance(value, (int, float)):
        return np.full(size, float(value))
    try:
        vector = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigValidationError(path, "doit être un réel ou une liste de réels")
    if vector.shape != (size,):
        raise ConfigValidationError(path, f"forme {vector.shape}, attendu ({size},)")
    return vector


def _parse_matrix(value: Any, path: str) -> np.ndarray:
    try:
        matrix = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigValidationError(path, "doit être une matrice (liste de lignes de réels)")
    if matrix.ndim != 2 or matrix.size == 0:
        raise ConfigValidationError(path, f"doit être une matrice non vide. Forme reçue: {matrix.shape}")
    return matrix

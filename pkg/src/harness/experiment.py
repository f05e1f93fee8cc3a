"""
Orchestration des expériences Monte Carlo.

Pour chaque réplication r et chaque politique, un épisode est simulé avec le
flux système RngStream(seed, r): toutes les politiques d'une réplication
voient les mêmes états et les mêmes bruits. Les réplications sont
indépendantes et peuvent tourner dans un pool de processus; leurs résultats
sont toujours agrégés dans l'ordre des indices.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

import src.config as config
from src.exceptions import EpisodeError, ExperimentError, SimulatorError
from src.metrics.aggregate import AggregateCurves, RunningAggregate, loglog_slope, slope_window
from src.metrics.regret import RegretSeries
from src.models.experiment import ExperimentConfig, ExperimentSummary, PolicyKind, PolicySummary
from src.models.trajectory import Trajectory
from src.policies.registry import build_policy
from src.simulation.rng import RngStream
from src.simulation.simulator import run_episode
from src.solvers.oracle import gain_threshold, optimal_inputs
from src.utils.config_loader import ConfigLoader
from src.utils.csv_export import curves_frame, state_curves_frame, trace_frame, write_frame

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Période de référence de la MSE d'entrée initiale
_EARLY_PERIOD = 100


def resolve_output_dir(experiment: ExperimentConfig, cli_dir: Optional[PathLike] = None) -> Path:
    """Option --out-dir, sinon variable d'environnement, sinon configuration, sinon défaut."""
    if cli_dir is not None:
        return Path(cli_dir)
    env_dir = os.environ.get(config.OUT_DIR_ENV_VAR)
    if env_dir:
        return Path(env_dir)
    if experiment.output_dir is not None:
        return Path(experiment.output_dir)
    return Path(config.DEFAULT_OUTPUT_DIR)


# ============================================================================
# ÉPISODES
# ============================================================================

def simulate_policy(
    experiment: ExperimentConfig,
    policy_name: str,
    replication: int,
    optimal: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    Simule un épisode d'une politique pour une réplication.

    Raises:
        ExperimentError: Avec (politique, réplication, période)
    """
    spec = experiment.get_policy(policy_name)
    rng = RngStream(experiment.seed, replication, RngStream.SYSTEM_CHANNEL)
    try:
        policy = build_policy(spec, experiment)
        return run_episode(experiment.model, experiment.feasible, policy, experiment.horizon, rng, optimal)
    except EpisodeError as e:
        raise ExperimentError(spec.name, replication, e.t, e.cause) from e
    except SimulatorError as e:
        raise ExperimentError(spec.name, replication, None, e) from e


def run_replication(task: Tuple[ExperimentConfig, int]) -> List[RegretSeries]:
    """Séries de toutes les politiques pour une réplication (exécutable dans un worker)."""
    experiment, replication = task
    optimal = optimal_inputs(experiment.model)
    series = []
    for spec in experiment.policies:
        trajectory = simulate_policy(experiment, spec.name, replication, optimal)
        series.append(RegretSeries.from_trajectory(trajectory, replication, experiment.model.K))
    logger.debug(f"Réplication {replication} terminée")
    return series


def _replication_results(experiment: ExperimentConfig) -> Iterator[List[RegretSeries]]:
    tasks = ((experiment, r) for r in range(experiment.replications))
    if experiment.workers == 1:
        yield from map(run_replication, tasks)
        return
    with ProcessPoolExecutor(max_workers=experiment.workers) as pool:
        chunksize = max(1, experiment.replications // (4 * experiment.workers))
        yield from pool.map(run_replication, tasks, chunksize=chunksize)


# ============================================================================
# EXPÉRIENCES
# ============================================================================

def check_gains(experiment: ExperimentConfig) -> List[str]:
    """Avertissements pour les gains gamma_i sous le seuil de la garantie de vitesse."""
    warnings = []
    model = experiment.model
    for spec in experiment.policies:
        if spec.kind is not PolicyKind.MSPSA:
            continue
        for i in range(model.K):
            gains = spec.gains[0] if spec.shared_gains else spec.gains[i]
            threshold = gain_threshold(model, i)
            if gains.gamma < threshold:
                warnings.append(
                    f"{spec.name}: gamma={gains.gamma:.4g} < 1/(8 lambda_min)={threshold:.4g} "
                    f"pour l'état {i + 1}"
                )
    return warnings


def summarize_policy(
    name: str,
    kind: PolicyKind,
    curves: AggregateCurves,
    window_fraction: float,
) -> PolicySummary:
    """Pentes et valeurs finales d'une politique."""
    T = curves.horizon
    window = slope_window(T, window_fraction)
    regret_fit = loglog_slope(curves.mean_regret, window)
    estimation_fit = loglog_slope(curves.mean_est_mse, window)
    state_slopes = {}
    for state, mean in curves.state_mean_est_mse.items():
        # Au-delà de ce préfixe, la moyenne porte sur une partie seulement des réplications
        common = mean[:curves.state_common_length[state]]
        state_slopes[state + 1] = loglog_slope(common, slope_window(common.shape[0], window_fraction)).slope

    final_regret = float(curves.mean_regret[-1])
    return PolicySummary(
        name=name,
        kind=kind.value,
        regret_slope=regret_fit.slope,
        regret_slope_ci=regret_fit.ci,
        final_mean_regret=final_regret,
        final_se_regret=float(curves.se_regret[-1]),
        regret_sqrt_ratio=final_regret / math.sqrt(T),
        final_mean_input_mse=float(curves.mean_input_mse[-1]),
        initial_mean_input_mse=float(curves.mean_input_mse[min(_EARLY_PERIOD, T) - 1]),
        final_mean_est_mse=float(curves.mean_est_mse[-1]),
        estimation_slope=estimation_fit.slope,
        state_slopes=state_slopes,
        fallback_count=curves.fallback_count,
    )


def aggregate_experiment(experiment: ExperimentConfig) -> Dict[str, AggregateCurves]:
    """
    Simule toutes les réplications et retourne les courbes moyennes par politique.

    Raises:
        ExperimentError: Au premier épisode en échec
    """
    running = {spec.name: RunningAggregate() for spec in experiment.policies}
    for replication_series in _replication_results(experiment):
        for spec, series in zip(experiment.policies, replication_series):
            running[spec.name].add(series)
    return {name: agg.result() for name, agg in running.items()}


def run_experiment(experiment: ExperimentConfig, output_dir: Optional[PathLike] = None) -> ExperimentSummary:
    """
    Exécute une expérience et écrit ses fichiers.

    Fichiers produits dans le répertoire de sortie:
        <name>__<policy>.csv          courbes moyennes aux points de la grille
        <name>__<policy>__states.csv  e_{i,t_i} moyen par état
        summary.json / summary.txt    résumé et provenance

    Les fichiers ne sont écrits qu'une fois tous les calculs terminés; en cas
    d'échec d'écriture, les fichiers déjà écrits sont supprimés.

    Raises:
        ExperimentError: Si un épisode échoue
    """
    out_dir = Path(output_dir) if output_dir is not None else resolve_output_dir(experiment)
    logger.info(
        f"Expérience {experiment.name}: {len(experiment.policies)} politique(s), "
        f"T={experiment.horizon}, R={experiment.replications}, graine {experiment.seed}"
    )
    for warning in check_gains(experiment):
        logger.warning(warning)

    all_curves = aggregate_experiment(experiment)

    summary = ExperimentSummary(
        name=experiment.name,
        objective=experiment.model.objective.value,
        horizon=experiment.horizon,
        replications=experiment.replications,
        seed=experiment.seed,
        config_hash=ConfigLoader.config_hash(experiment),
        optimal_inputs={i + 1: x.tolist() for i, x in enumerate(optimal_inputs(experiment.model))},
    )
    for spec in experiment.policies:
        summary.policies.append(summarize_policy(spec.name, spec.kind, all_curves[spec.name], experiment.slope_window))

    write_outputs(experiment, summary, all_curves, out_dir)
    return summary


def write_outputs(
    experiment: ExperimentConfig,
    summary: ExperimentSummary,
    all_curves: Dict[str, AggregateCurves],
    out_dir: Path,
) -> List[Path]:
    """Écrit CSV et résumés; supprime les fichiers partiels en cas d'erreur."""
    written: List[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for spec in experiment.policies:
            curves = all_curves[spec.name]
            stem = f"{experiment.name}__{spec.name}"
            written.append(write_frame(curves_frame(curves, experiment.checkpoints), out_dir / f"{stem}.csv"))
            written.append(write_frame(state_curves_frame(curves), out_dir / f"{stem}__states.csv"))

        json_path = out_dir / "summary.json"
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(summary.to_dict(), f, indent=2)
            f.write("\n")
        written.append(json_path)

        text_path = out_dir / "summary.txt"
        with open(text_path, "w", encoding="utf-8") as f:
            f.write(summary.to_text())
        written.append(text_path)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    for path in written:
        logger.info(f"Écrit: {path}")
    return written


def write_trace(
    experiment: ExperimentConfig,
    replication: int,
    policy_name: str,
    filepath: PathLike,
) -> Path:
    """
    Écrit la trace période par période d'une réplication.

    Raises:
        ValueError: Si la réplication est hors de [0, R)
        KeyError: Si la politique n'existe pas
    """
    if not 0 <= replication < experiment.replications:
        raise ValueError(f"Réplication {replication} hors de [0, {experiment.replications})")
    trajectory = simulate_policy(experiment, policy_name, replication)
    path = write_frame(trace_frame(trajectory), filepath)
    logger.info(f"Trace écrite: {path} ({len(trajectory)} périodes)")
    return path

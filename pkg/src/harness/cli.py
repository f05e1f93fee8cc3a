"""
Interface en ligne de commande.

    python main.py run <config> [--seed S] [--out-dir D] [--replications R] [--horizon T] [--workers W]
    python main.py validate <config>
    python main.py trace <config> --replication k [--policy NAME] [--out FICHIER]
    python main.py oracle <config> --state i

Code de sortie 0 en cas de succès, 1 pour toute erreur du simulateur,
2 pour une erreur d'usage (argparse).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.exceptions import DimensionMismatchError, SimulatorError, SingularGramError, SingularSymPartError
from src.harness.experiment import check_gains, resolve_output_dir, run_experiment, write_trace
from src.models.affine_model import Objective
from src.solvers.oracle import optimal_input
from src.utils.arrays import format_vector
from src.utils.config_loader import ConfigLoader

logger = logging.getLogger(__name__)


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Graine maître (remplace la configuration)")
    parser.add_argument("--replications", type=int, default=None, help="Nombre de réplications R")
    parser.add_argument("--horizon", type=int, default=None, help="Horizon T")
    parser.add_argument("--workers", type=int, default=None, help="Processus pour les réplications")
    parser.add_argument("--out-dir", default=None, help="Répertoire de sortie")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mspsa-sim",
        description="Simulation de politiques d'apprentissage sur des systèmes affines à sauts markoviens.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v: INFO, -vv: DEBUG")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Exécute une expérience Monte Carlo")
    run.add_argument("config", help="Fichier d'expérience JSON")
    _add_overrides(run)

    validate = subparsers.add_parser("validate", help="Charge et valide une configuration")
    validate.add_argument("config")

    trace = subparsers.add_parser("trace", help="Écrit la trace période par période d'une réplication")
    trace.add_argument("config")
    trace.add_argument("--replication", type=int, required=True, help="Indice de réplication (base 0)")
    trace.add_argument("--policy", default=None, help="Politique (par défaut la première)")
    trace.add_argument("--out", default=None, help="Fichier CSV (par défaut dans le répertoire de sortie)")
    _add_overrides(trace)

    oracle = subparsers.add_parser("oracle", help="Affiche l'entrée optimale x*_i")
    oracle.add_argument("config")
    oracle.add_argument("--state", type=int, required=True, help="État précédent i (base 1)")

    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "seed": args.seed,
        "replications": args.replications,
        "horizon": args.horizon,
        "workers": args.workers,
    }


def _cmd_run(args: argparse.Namespace) -> int:
    experiment = ConfigLoader.load_config(args.config, _overrides(args))
    out_dir = resolve_output_dir(experiment, args.out_dir)
    summary = run_experiment(experiment, out_dir)
    print(summary.to_text(), end="")
    print(f"Résultats écrits dans {out_dir}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    experiment = ConfigLoader.load_config(args.config)
    for warning in check_gains(experiment):
        logger.warning(warning)
    print("OK")
    return 0


def _cmd_trace(args: argparse.Namespace) -> int:
    experiment = ConfigLoader.load_config(args.config, _overrides(args))
    policy = args.policy or experiment.policies[0].name
    if args.out is not None:
        path = Path(args.out)
    else:
        path = resolve_output_dir(experiment, args.out_dir) / (
            f"{experiment.name}__{policy}__trace_r{args.replication}.csv"
        )
    write_trace(experiment, args.replication, policy, path)
    print(path)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    experiment = ConfigLoader.load_config(args.config)
    model = experiment.model
    if not 1 <= args.state <= model.K:
        raise SimulatorError(f"État {args.state} hors de [1, {model.K}]")
    i = args.state - 1

    print(f"{model.objective.value}: {format_vector(optimal_input(model, i))}")
    # L'autre objectif, quand le modèle le permet (cible connue, m = n)
    other = (
        Objective.REVENUE_MAXIMIZATION
        if model.objective is Objective.QUADRATIC_REGULATION
        else Objective.QUADRATIC_REGULATION
    )
    if model.m == model.n and (other is Objective.REVENUE_MAXIMIZATION or model.target is not None):
        try:
            print(f"{other.value}: {format_vector(optimal_input(model, i, other))}")
        except (SingularGramError, SingularSymPartError, DimensionMismatchError) as e:
            logger.info(f"{other.value} non applicable: {e}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "trace": _cmd_trace,
    "oracle": _cmd_oracle,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return _COMMANDS[args.command](args)
    except (SimulatorError, KeyError, ValueError) as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"Erreur: {message}", file=sys.stderr)
        return 1

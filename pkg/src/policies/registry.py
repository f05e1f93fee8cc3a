"""
Construction des politiques à partir d'une expérience.

Chaque réplication reçoit des instances neuves: une politique possède un
état mutable propre et n'est jamais partagée entre réplications.
"""

from src.models.experiment import ExperimentConfig, PolicyKind, PolicySpec
from src.policies.base import ConstantPolicy, Policy
from src.policies.greedy_lse import GreedyLsePolicy
from src.policies.mspsa import MspsaPolicy
from src.policies.oracle_policy import OraclePolicy


def build_policy(spec: PolicySpec, experiment: ExperimentConfig) -> Policy:
    """
    Instancie la politique décrite par spec.

    Raises:
        ValueError: Si le nombre de gains ne vaut ni 1 ni K
    """
    model = experiment.model
    if spec.kind is PolicyKind.MSPSA:
        if len(spec.gains) not in (1, model.K):
            raise ValueError(
                f"Politique '{spec.name}': {len(spec.gains)} jeux de gains pour K={model.K} états"
            )
        gains = spec.gains[0] if spec.shared_gains else list(spec.gains)
        return MspsaPolicy(
            objective=model.objective,
            feasible=experiment.feasible,
            initial_input=experiment.initial_input,
            gains=gains,
            law=spec.perturbation,
            target=model.target,
            name=spec.name,
        )

    if spec.kind is PolicyKind.GREEDY_LSE:
        return GreedyLsePolicy(
            objective=model.objective,
            feasible=experiment.feasible,
            initial_input=experiment.initial_input,
            K=model.K,
            m=model.m,
            target=model.target,
            name=spec.name,
        )

    if spec.kind is PolicyKind.ORACLE:
        return OraclePolicy(model, name=spec.name)

    return ConstantPolicy(experiment.initial_input, name=spec.name)
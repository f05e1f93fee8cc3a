"""
Écriture des courbes et des traces au format CSV (pandas).

Les réels sont écrits avec 17 chiffres significatifs pour que deux
exécutions identiques produisent des fichiers identiques octet pour octet.
"""
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from src.metrics.aggregate import AggregateCurves
from src.models.trajectory import Trajectory

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"

CURVE_COLUMNS = ["t", "mean_regret", "se_regret", "mean_input_mse", "mean_est_mse"]
STATE_COLUMNS = ["state", "t_i", "replications", "mean_est_mse", "se_est_mse"]


def curves_frame(curves: AggregateCurves, checkpoints: Sequence[int]) -> pd.DataFrame:
    """Courbes moyennes aux périodes de la grille (t en base 1)."""
    t = np.asarray(checkpoints, dtype=np.int64)
    idx = t - 1
    return pd.DataFrame({
        "t": t,
        "mean_regret": curves.mean_regret[idx],
        "se_regret": curves.se_regret[idx],
        "mean_input_mse": curves.mean_input_mse[idx],
        "mean_est_mse": curves.mean_est_mse[idx],
    }, columns=CURVE_COLUMNS)


def state_curves_frame(curves: AggregateCurves) -> pd.DataFrame:
    """e_{i,t_i} moyen par état (base 1), avec le nombre de réplications ayant atteint chaque t_i."""
    frames = []
    for state, mean in curves.state_mean_est_mse.items():
        frames.append(pd.DataFrame({
            "state": np.full(mean.shape[0], state + 1, dtype=np.int64),
            "t_i": np.arange(1, mean.shape[0] + 1, dtype=np.int64),
            "replications": curves.state_counts[state],
            "mean_est_mse": mean,
            "se_est_mse": curves.state_se_est_mse[state],
        }, columns=STATE_COLUMNS))
    if not frames:
        return pd.DataFrame(columns=STATE_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def trace_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Une ligne par période: t, s_prev, s_t, x0.., y0.., stage_cost, stage_regret, input_sq_err."""
    return pd.DataFrame(trajectory.to_columns())


def write_frame(frame: pd.DataFrame, filepath: PathLike) -> Path:
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path

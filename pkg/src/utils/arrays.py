from typing import Any

import numpy as np


def frozen_array(values: Any, ndim: int, name: str) -> np.ndarray:
    """
    Convertit des valeurs en tableau float64 en lecture seule.

    Args:
        values: Séquence (ou tableau) de nombres
        ndim: Nombre de dimensions attendu
        name: Nom du champ, utilisé dans le message d'erreur

    Returns:
        Copie non modifiable des valeurs

    Raises:
        ValueError: Si les valeurs ne sont pas numériques ou n'ont pas la bonne dimension
    """
    try:
        array = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{name}: valeurs non numériques ({e})")

    if array.ndim != ndim:
        raise ValueError(f"{name}: {ndim} dimension(s) attendue(s), reçu {array.ndim}")

    array.setflags(write=False)
    return array


def format_vector(vector: np.ndarray) -> str:
    """Représentation compacte et stable d'un vecteur."""
    return "[" + ", ".join(f"{v:.10g}" for v in np.asarray(vector, dtype=float)) + "]"

"""
Agrégation Monte Carlo des séries de regret.

Les réplications sont ajoutées une à une, dans l'ordre de leur indice, à
des moyennes courantes (Welford): la mémoire ne dépend pas de R et des
séries identiques donnent une erreur standard exactement nulle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy import stats

import src.config as config
from src.exceptions import LengthMismatchError
from src.metrics.regret import RegretSeries

logger = logging.getLogger(__name__)


class RunningMoments:
    """Moyenne et variance courantes d'une suite de tableaux de même forme."""

    def __init__(self):
        self.count = 0
        self.mean: Optional[np.ndarray] = None
        self._m2: Optional[np.ndarray] = None

    def add(self, values: np.ndarray) -> None:
        """
        Raises:
            LengthMismatchError: Si la forme diffère des tableaux précédents
        """
        values = np.asarray(values, dtype=np.float64)
        if self.mean is None:
            self.mean = np.zeros_like(values)
            self._m2 = np.zeros_like(values)
        elif values.shape != self.mean.shape:
            raise LengthMismatchError(f"Série de forme {values.shape}, attendu {self.mean.shape}")
        self.count += 1
        delta = values - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (values - self.mean)

    @property
    def stderr(self) -> np.ndarray:
        """Écart-type empirique (ddof=1) divisé par sqrt(R); nul pour R = 1."""
        if self.mean is None:
            return np.zeros(0)
        if self.count < 2:
            return np.zeros_like(self.mean)
        variance = np.maximum(self._m2, 0.0) / (self.count - 1)
        return np.sqrt(variance / self.count)


class RaggedMoments:
    """
    Moyenne et variance courantes, indice par indice, de tableaux de longueurs variables.

    L'indice k n'est moyenné que sur les tableaux qui l'atteignent; counts[k]
    en donne le nombre. Les tableaux ajoutés sont des préfixes d'une même
    suite (e_{i,t_i}), donc counts est décroissant.
    """

    def __init__(self):
        self.counts = np.zeros(0, dtype=np.int64)
        self.mean = np.zeros(0)
        self._m2 = np.zeros(0)

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        size = values.shape[0]
        extra = size - self.mean.shape[0]
        if extra > 0:
            self.counts = np.concatenate((self.counts, np.zeros(extra, dtype=np.int64)))
            self.mean = np.concatenate((self.mean, np.zeros(extra)))
            self._m2 = np.concatenate((self._m2, np.zeros(extra)))
        self.counts[:size] += 1
        delta = values - self.mean[:size]
        self.mean[:size] += delta / self.counts[:size]
        self._m2[:size] += delta * (values - self.mean[:size])

    @property
    def stderr(self) -> np.ndarray:
        """Erreur standard par indice; nulle là où moins de deux tableaux contribuent."""
        se = np.zeros_like(self.mean)
        many = self.counts >= 2
        variance = np.maximum(self._m2[many], 0.0) / (self.counts[many] - 1)
        se[many] = np.sqrt(variance / self.counts[many])
        return se

    @property
    def common_length(self) -> int:
        """Nombre d'indices initiaux atteints par tous les tableaux ayant atteint le premier."""
        if self.counts.size == 0:
            return 0
        short = np.flatnonzero(self.counts < self.counts[0])
        return int(short[0]) if short.size else int(self.counts.size)


@dataclass
class AggregateCurves:
    """
    Courbes moyennes d'une politique.

    Attributes:
        replications: Nombre de réplications agrégées
        mean_regret / se_regret: Regret cumulé
        mean_input_mse / se_input_mse: ||x_t - x*||^2
        mean_cumulative_input_mse: Erreur d'entrée cumulée
        mean_est_mse / se_est_mse: ||x_hat - x*||^2 par période
        state_mean_est_mse / state_se_est_mse: e_{i,t_i} par état, indexé par t_i,
            moyenné sur les réplications ayant atteint t_i
        state_counts: Nombre de réplications ayant atteint chaque t_i
        state_common_length: Préfixe de t_i atteint par toutes ces réplications
        fallback_count: Replis cumulés
    """
    replications: int
    mean_regret: np.ndarray
    se_regret: np.ndarray
    mean_input_mse: np.ndarray
    se_input_mse: np.ndarray
    mean_cumulative_input_mse: np.ndarray
    mean_est_mse: np.ndarray
    se_est_mse: np.ndarray
    state_mean_est_mse: Dict[int, np.ndarray] = field(default_factory=dict)
    state_se_est_mse: Dict[int, np.ndarray] = field(default_factory=dict)
    state_counts: Dict[int, np.ndarray] = field(default_factory=dict)
    state_common_length: Dict[int, int] = field(default_factory=dict)
    fallback_count: int = 0

    @property
    def horizon(self) -> int:
        return self.mean_regret.shape[0]


class RunningAggregate:
    """Réduction des RegretSeries d'une politique, alimentée dans l'ordre des réplications."""

    def __init__(self):
        self.regret = RunningMoments()
        self.input_mse = RunningMoments()
        self.cumulative_input_mse = RunningMoments()
        self.est_mse = RunningMoments()
        self.states: Dict[int, RaggedMoments] = {}
        self.fallback_count = 0

    def add(self, series: RegretSeries) -> None:
        """
        Raises:
            LengthMismatchError: Si l'horizon diffère des séries précédentes
        """
        if self.regret.mean is not None and series.horizon != self.regret.mean.shape[0]:
            raise LengthMismatchError(
                f"Réplication {series.replication}: T={series.horizon}, "
                f"attendu T={self.regret.mean.shape[0]}"
            )
        self.regret.add(series.cumulative_regret)
        self.input_mse.add(series.input_sq_err)
        self.cumulative_input_mse.add(series.cumulative_input_sq_err)
        self.est_mse.add(series.estimation_sq_err)
        self.fallback_count += series.fallback_count

        for state, curve in series.state_curves.items():
            self.states.setdefault(state, RaggedMoments()).add(curve)

    def result(self) -> AggregateCurves:
        if self.regret.count == 0:
            raise ValueError("Aucune réplication à agréger")
        return AggregateCurves(
            replications=self.regret.count,
            mean_regret=self.regret.mean,
            se_regret=self.regret.stderr,
            mean_input_mse=self.input_mse.mean,
            se_input_mse=self.input_mse.stderr,
            mean_cumulative_input_mse=self.cumulative_input_mse.mean,
            mean_est_mse=self.est_mse.mean,
            se_est_mse=self.est_mse.stderr,
            state_mean_est_mse={i: m.mean for i, m in sorted(self.states.items())},
            state_se_est_mse={i: m.stderr for i, m in sorted(self.states.items())},
            state_counts={i: m.counts.copy() for i, m in sorted(self.states.items())},
            state_common_length={i: m.common_length for i, m in sorted(self.states.items())},
            fallback_count=self.fallback_count,
        )


def aggregate(series: Iterable[RegretSeries]) -> AggregateCurves:
    """
    Moyennes et erreurs standard point par point de R réplications.

    Raises:
        LengthMismatchError: Si les horizons diffèrent
        ValueError: Si la liste est vide
    """
    running = RunningAggregate()
    for s in series:
        running.add(s)
    return running.result()


# ============================================================================
# PENTES LOG-LOG
# ============================================================================

@dataclass(frozen=True)
class SlopeFit:
    """Pente des moindres carrés de log(y) contre log(t)."""
    slope: float
    ci_low: float
    ci_high: float
    points: int

    @property
    def ci(self) -> Tuple[float, float]:
        return (self.ci_low, self.ci_high)


_NO_FIT = SlopeFit(float("nan"), float("nan"), float("nan"), 0)


def slope_window(length: int, fraction: float = config.SLOPE_WINDOW_FRACTION) -> Tuple[int, int]:
    """Fenêtre [ceil(L * fraction), L] en indices t base 1."""
    return max(1, math.ceil(length * fraction)), length


def loglog_slope(
    values: np.ndarray,
    window: Optional[Tuple[int, int]] = None,
    confidence: float = config.SLOPE_CONFIDENCE,
) -> SlopeFit:
    """
    Ajuste log(values[t-1]) = a + slope * log(t) sur t dans la fenêtre.

    Les points non strictement positifs sont écartés. Moins de deux points
    donnent une pente NaN.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return _NO_FIT
    lo, hi = window if window is not None else slope_window(values.size)
    lo, hi = max(1, lo), min(values.size, hi)
    t = np.arange(lo, hi + 1, dtype=np.float64)
    y = values[lo - 1:hi]
    keep = np.isfinite(y) & (y > 0)
    if np.count_nonzero(keep) < 2:
        return _NO_FIT

    log_t, log_y = np.log(t[keep]), np.log(y[keep])
    if np.ptp(log_t) == 0:
        return _NO_FIT
    fit = stats.linregress(log_t, log_y)
    points = int(log_t.size)
    if points > 2 and np.isfinite(fit.stderr):
        half_width = stats.t.ppf(0.5 + confidence / 2.0, points - 2) * fit.stderr
    else:
        half_width = float("nan")
    return SlopeFit(float(fit.slope), float(fit.slope - half_width), float(fit.slope + half_width), points)


def checkpoint_grid(horizon: int, count: int = config.DEFAULT_CHECKPOINT_COUNT) -> Tuple[int, ...]:
    """Grille log-espacée d'entiers distincts de 1 à T inclus."""
    if horizon < 1:
        raise ValueError(f"Horizon invalide: {horizon}")
    points = np.unique(np.round(np.geomspace(1, horizon, num=max(count, 2))).astype(np.int64))
    return tuple(int(t) for t in points)

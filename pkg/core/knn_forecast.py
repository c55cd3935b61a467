"""
MSMCAST - Nearest Neighbour Forecast
Прогноз по k ближайшим историческим окнам (евклидово расстояние)
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.exceptions import (
    InvalidConfig,
    LengthMismatch,
    NoCandidates,
    NoNeighborsWithinThreshold,
    SeriesTooShort,
)
from core.msm_approx import ApproxSeries, OperationCounter

logger = logging.getLogger('MSMCAST.KNNForecast')

SeriesLike = Union[ApproxSeries, Sequence[float]]


@dataclass(frozen=True)
class ForecastConfig:
    """Параметры прогноза: окно w, соседи k, горизонт m, порог ψ"""
    window: int = 3
    neighbors: int = 2
    horizon: int = 1
    threshold: Optional[float] = None

    def __post_init__(self):
        errors = []
        for name in ('window', 'neighbors', 'horizon'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                errors.append(f"{name} должен быть целым, получено {value!r}")
            elif value < 1:
                errors.append(f"{name} должен быть >= 1, получено {value}")

        if self.threshold is not None:
            try:
                threshold = float(self.threshold)
            except (TypeError, ValueError):
                threshold = math.nan
            if not math.isfinite(threshold) or threshold < 0:
                errors.append(f"threshold должен быть конечным и >= 0, получено {self.threshold!r}")
            else:
                object.__setattr__(self, 'threshold', threshold)

        if errors:
            raise InvalidConfig("; ".join(errors))

    def to_dict(self) -> dict:
        return {
            'window': self.window,
            'neighbors': self.neighbors,
            'horizon': self.horizon,
            'threshold': self.threshold,
        }


@dataclass(frozen=True)
class Neighbor:
    """Найденное историческое окно и m значений после него"""
    start_index: int
    distance: float
    successors: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            'start_index': self.start_index,
            'distance': self.distance,
            'successors': list(self.successors),
        }


@dataclass(frozen=True)
class Forecast:
    """Прогноз P' = среднее последователей соседей по позициям"""
    values: Tuple[float, ...]
    neighbors_used: Tuple[Neighbor, ...]
    query_window: Tuple[float, ...]

    @property
    def divisor(self) -> int:
        """Фактическое число усреднённых соседей |NN|"""
        return len(self.neighbors_used)

    def to_dict(self) -> dict:
        return {
            'values': list(self.values),
            'neighbors_used': [nb.to_dict() for nb in self.neighbors_used],
            'query_window': list(self.query_window),
        }


def _values(ap: SeriesLike) -> np.ndarray:
    if isinstance(ap, ApproxSeries):
        return ap.as_array()
    return np.asarray(ap, dtype=float)


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Евклидово расстояние между двумя окнами

    Квадраты разностей накапливаются слева направо; векторный поиск
    в find_neighbors повторяет тот же порядок, поэтому результаты совпадают побитно.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"Длины окон различаются: {len(a)} и {len(b)}")

    total = 0.0
    for x, y in zip(a, b):
        diff = float(x) - float(y)
        total += diff * diff
    return math.sqrt(total)


def extract_pattern(ap: SeriesLike, window: int) -> Tuple[float, ...]:
    """
    Шаблон PS: последние w значений ряда

    Args:
        ap: Аппроксимированный ряд
        window: Размер окна w

    Returns:
        Кортеж из w значений в хронологическом порядке
    """
    values = _values(ap)
    if window < 1:
        raise InvalidConfig(f"Окно должно быть >= 1, получено {window}")
    if values.size < window:
        raise SeriesTooShort(f"Длина ряда {values.size} < окна w={window}")
    return tuple(values[-window:].tolist())


def _last_candidate_start(length: int, window: int, horizon: int) -> int:
    # кандидат [s, s+w) не пересекается с [n-w, n) и имеет m последователей
    return min(length - window - horizon, length - 2 * window)


def find_neighbors(ap: SeriesLike, pattern: Sequence[float],
                   config: ForecastConfig) -> List[Neighbor]:
    """
    Поиск k ближайших окон к шаблону

    Args:
        ap: Аппроксимированный ряд (история)
        pattern: Шаблон PS длины w
        config: Параметры прогноза

    Returns:
        Соседи, отсортированные по (расстояние, индекс начала)
    """
    values = _values(ap)
    window, horizon = config.window, config.horizon

    query = np.asarray(pattern, dtype=float)
    if query.size != window:
        raise LengthMismatch(f"Длина шаблона {query.size} != w={window}")

    last_start = _last_candidate_start(values.size, window, horizon)
    if last_start < 0:
        raise NoCandidates(
            f"Нет допустимых окон: n={values.size}, w={window}, m={horizon}"
        )

    starts = np.arange(last_start + 1)
    windows = sliding_window_view(values, window)[:starts.size]

    squared = np.zeros(starts.size)
    for offset in range(window):
        diff = windows[:, offset] - query[offset]
        squared += diff * diff
    distances = np.sqrt(squared)

    if config.threshold is not None:
        keep = distances <= config.threshold
        if not keep.any():
            raise NoNeighborsWithinThreshold(
                f"Все {starts.size} кандидатов дальше порога ψ={config.threshold} "
                f"(минимум {distances.min():.6g})"
            )
        starts, distances = starts[keep], distances[keep]

    # стабильная сортировка: при равных расстояниях раньше идёт меньший индекс
    order = np.argsort(distances, kind='stable')[:config.neighbors]

    neighbors = []
    for i in order:
        start = int(starts[i])
        neighbors.append(Neighbor(
            start_index=start,
            distance=float(distances[i]),
            successors=tuple(values[start + window:start + window + horizon].tolist()),
        ))

    logger.debug(
        f"🔍 Кандидатов: {starts.size}, выбрано соседей: {len(neighbors)}, "
        f"ближайший: {neighbors[0].start_index} (d={neighbors[0].distance:.6g})"
    )
    return neighbors


def brute_force_knn_oracle(ap: SeriesLike, pattern: Sequence[float],
                           config: ForecastConfig) -> List[Neighbor]:
    """
    Эталонный перебор всех окон без векторизации

    Используется для сверки с find_neighbors: правила отбора и порядок
    при равенстве расстояний те же.
    """
    values = [float(v) for v in _values(ap)]
    window, horizon = config.window, config.horizon
    query = [float(v) for v in pattern]

    if len(query) != window:
        raise LengthMismatch(f"Длина шаблона {len(query)} != w={window}")

    length = len(values)
    candidates = []
    for start in range(length):
        if start + window + horizon > length:
            continue
        if start + window > length - window:
            continue
        distance = euclidean_distance(values[start:start + window], query)
        candidates.append((distance, start))

    if not candidates:
        raise NoCandidates(f"Нет допустимых окон: n={length}, w={window}, m={horizon}")

    if config.threshold is not None:
        candidates = [c for c in candidates if c[0] <= config.threshold]
        if not candidates:
            raise NoNeighborsWithinThreshold(
                f"Все кандидаты дальше порога ψ={config.threshold}"
            )

    candidates.sort()
    return [
        Neighbor(start, distance, tuple(values[start + window:start + window + horizon]))
        for distance, start in candidates[:config.neighbors]
    ]


def predict(ap: SeriesLike, config: ForecastConfig,
            counter: Optional[OperationCounter] = None) -> Forecast:
    """
    Прогноз следующих m значений

    Args:
        ap: Аппроксимированный ряд (история)
        config: Параметры прогноза
        counter: Счётчик операций этапа усреднения (опционально)

    Returns:
        Forecast; делитель - фактическое число соседей, а не k
    """
    values = _values(ap)
    required = config.window + config.horizon + 1
    if values.size < required:
        raise SeriesTooShort(
            f"Длина ряда {values.size} < w+m+1={required}"
        )

    pattern = extract_pattern(values, config.window)
    neighbors = find_neighbors(values, pattern, config)

    successors = np.array([nb.successors for nb in neighbors], dtype=float)
    forecast = successors.sum(axis=0) / len(neighbors)
    # среднее не выходит за min/max продолжений в каждой позиции
    forecast = np.clip(forecast, successors.min(axis=0), successors.max(axis=0))

    if counter is not None:
        counter.additions += successors.size
        counter.divisions += config.horizon

    return Forecast(
        values=tuple(forecast.tolist()),
        neighbors_used=tuple(neighbors),
        query_window=pattern,
    )


# Тестирование
if __name__ == "__main__":
    logging.basicConfig(level=logging.DEBUG)

    history = ApproxSeries.from_values([1, 2, 4, 1, 2, 6, 1, 2])
    result = predict(history, ForecastConfig(window=2, neighbors=2, horizon=1))
    print(f"🔮 Прогноз: {list(result.values)}")
    for nb in result.neighbors_used:
        print(f"  • окно @{nb.start_index}: d={nb.distance:.4f}, далее {list(nb.successors)}")

"""
MSMCAST - Multilevel Segment Mean
Сжатие ценового ряда в иерархию средних по сегментам (MSM)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import (
    EmptySeries,
    InvalidConfig,
    InvalidSeries,
    LengthMismatch,
    NotPowerOfSegmentSize,
    ZeroSize,
)

logger = logging.getLogger('MSMCAST.MSMApprox')


@dataclass
class OperationCounter:
    """
    Счётчик арифметических операций
    Используется для проверки линейной сложности аппроксимации и усреднения
    """
    additions: int = 0
    divisions: int = 0

    @property
    def total(self) -> int:
        return self.additions + self.divisions

    def reset(self):
        self.additions = 0
        self.divisions = 0


def _readonly(values: Sequence[float]) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class PriceSeries:
    """Дневные цены закрытия с необязательными датами"""
    values: Tuple[float, ...]
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        try:
            values = tuple(float(v) for v in self.values)
        except (TypeError, ValueError) as e:
            raise InvalidSeries(f"Нечисловое значение в ряду: {e}") from e

        bad = [i for i, v in enumerate(values) if not math.isfinite(v)]
        if bad:
            raise InvalidSeries(
                f"Ряд содержит {len(bad)} нечисловых значений (первое на позиции {bad[0]})"
            )
        object.__setattr__(self, 'values', values)

        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != len(values):
                raise InvalidSeries(
                    f"Меток {len(labels)}, а значений {len(values)}"
                )
            object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return _readonly(self.values)

    def head(self, count: int) -> 'PriceSeries':
        """Первые count элементов (история без заглядывания вперёд)"""
        labels = self.labels[:count] if self.labels is not None else None
        return PriceSeries(self.values[:count], labels)


@dataclass(frozen=True)
class ApproxParams:
    """Параметры аппроксимации: размер партиции K и размер сегмента t"""
    partition_size: int = 27
    segment_size: int = 3

    @property
    def level_count(self) -> int:
        return validate_params(self)

    def to_dict(self) -> dict:
        return {
            'partition_size': self.partition_size,
            'segment_size': self.segment_size,
        }


@dataclass(frozen=True)
class MsmTree:
    """
    Дерево средних одной партиции

    levels хранится от уровня l-1 (самый подробный) до уровня 0 (корень);
    уровень j содержит t^j средних.
    """
    partition_index: int
    segment_size: int
    levels: Tuple[Tuple[float, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, j: int) -> Tuple[float, ...]:
        """Средние уровня j (0 - корень)"""
        if not 0 <= j < len(self.levels):
            raise IndexError(f"Уровень {j} вне диапазона 0..{len(self.levels) - 1}")
        return self.levels[len(self.levels) - 1 - j]

    @property
    def root(self) -> float:
        return self.levels[-1][0]

    def to_dict(self) -> dict:
        return {
            'partition_index': self.partition_index,
            'levels': [list(level) for level in self.levels],
        }


@dataclass(frozen=True)
class ApproxSeries:
    """Аппроксимированный ряд Ap: по одному среднему уровня 0 на партицию"""
    values: Tuple[float, ...]
    params: ApproxParams = field(default_factory=lambda: ApproxParams(1, 1))
    dropped_tail: int = 0
    # Метка первого сырого элемента каждой партиции
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if self.labels is not None:
            object.__setattr__(self, 'labels', tuple(self.labels))
            if len(self.labels) != len(self.values):
                raise InvalidSeries(
                    f"Меток {len(self.labels)}, а значений {len(self.values)}"
                )

    @classmethod
    def from_values(cls, values: Sequence[float]) -> 'ApproxSeries':
        """Ряд, уже находящийся в аппроксимированном виде (K=1)"""
        return cls(tuple(values))

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return _readonly(self.values)

    def head(self, count: int) -> 'ApproxSeries':
        """Первые count значений - история для шага бэктеста"""
        labels = self.labels[:count] if self.labels is not None else None
        return ApproxSeries(self.values[:count], self.params, self.dropped_tail, labels)


def validate_params(params: ApproxParams) -> int:
    """
    Проверка параметров аппроксимации

    Args:
        params: Размер партиции K и сегмента t

    Returns:
        Число уровней l, такое что t^l = K
    """
    K, t = params.partition_size, params.segment_size

    for name, value in (('partition_size', K), ('segment_size', t)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise InvalidConfig(f"{name} должен быть целым, получено {value!r}")

    if K == 0 or t == 0:
        raise ZeroSize(f"K и t не могут быть нулевыми (K={K}, t={t})")
    if K < 0 or t < 0:
        raise ZeroSize(f"K и t должны быть положительными (K={K}, t={t})")

    if t == 1:
        if K == 1:
            return 0
        raise NotPowerOfSegmentSize(f"K={K} не является степенью t=1")

    level_count, power = 0, 1
    while power < K:
        power *= t
        level_count += 1

    if power != K:
        raise NotPowerOfSegmentSize(f"K={K} не является целой степенью t={t}")

    return level_count


def partition(series: PriceSeries, partition_size: int) -> Tuple[List[Tuple[float, ...]], int]:
    """
    Разбиение ряда на партиции по K элементов

    Args:
        series: Ценовой ряд
        partition_size: Размер партиции K

    Returns:
        (список партиций, количество отброшенных хвостовых элементов)
    """
    if partition_size < 1:
        raise ZeroSize(f"Размер партиции должен быть >= 1, получено {partition_size}")

    count = len(series) // partition_size
    if count == 0:
        raise EmptySeries(
            f"В ряду {len(series)} элементов - меньше одной партиции K={partition_size}"
        )

    dropped_tail = len(series) - count * partition_size
    if dropped_tail:
        logger.warning(
            f"⚠️ Отброшен неполный хвост: {dropped_tail} элементов "
            f"(N={len(series)}, K={partition_size})"
        )

    values = series.values
    partitions = [
        values[i * partition_size:(i + 1) * partition_size]
        for i in range(count)
    ]
    return partitions, dropped_tail


def _collapse(matrix: np.ndarray, segment_size: int, level_count: int,
              counter: Optional[OperationCounter] = None) -> List[np.ndarray]:
    """
    Свёртка партиций (строки матрицы) по уровням

    Returns:
        Матрицы уровней l-1 ... 0, каждая формы (партиций, t^j)
    """
    if level_count == 0:
        return [matrix]

    rows = matrix.shape[0]
    current = matrix
    collected = []
    for _ in range(level_count):
        segments = current.reshape(rows, -1, segment_size)
        # numpy суммирует попарно; результат зажат в диапазон сегмента
        current = np.clip(segments.mean(axis=2), segments.min(axis=2), segments.max(axis=2))
        if counter is not None:
            counter.additions += segments.size
            counter.divisions += current.size
        collected.append(current)

    return collected


def build_tree(values: Sequence[float], params: ApproxParams,
               partition_index: int = 1,
               counter: Optional[OperationCounter] = None) -> MsmTree:
    """
    Построение дерева средних для одной партиции

    Args:
        values: K сырых цен партиции
        params: Параметры аппроксимации
        partition_index: Номер партиции (с 1)
        counter: Счётчик операций (опционально)

    Returns:
        MsmTree с уровнями l-1 ... 0
    """
    level_count = validate_params(params)

    raw = np.asarray(values, dtype=float)
    if raw.ndim != 1 or raw.size != params.partition_size:
        raise LengthMismatch(
            f"Длина партиции {raw.size} != K={params.partition_size}"
        )

    levels = _collapse(raw.reshape(1, -1), params.segment_size, level_count, counter)
    return MsmTree(
        partition_index=partition_index,
        segment_size=params.segment_size,
        levels=tuple(tuple(level[0].tolist()) for level in levels),
    )


def _levels_for_series(series: PriceSeries, params: ApproxParams,
                       counter: Optional[OperationCounter]) -> Tuple[List[np.ndarray], int, int]:
    level_count = validate_params(params)
    partitions, dropped_tail = partition(series, params.partition_size)
    matrix = np.asarray(partitions, dtype=float)
    return _collapse(matrix, params.segment_size, level_count, counter), len(partitions), dropped_tail


def build_trees(series: PriceSeries, params: ApproxParams) -> List[MsmTree]:
    """
    Деревья всех партиций ряда

    Args:
        series: Ценовой ряд
        params: Параметры аппроксимации

    Returns:
        Список MsmTree в порядке партиций
    """
    levels, count, _ = _levels_for_series(series, params, None)
    return [
        MsmTree(
            partition_index=i + 1,
            segment_size=params.segment_size,
            levels=tuple(tuple(level[i].tolist()) for level in levels),
        )
        for i in range(count)
    ]


def approximate(series: PriceSeries, params: ApproxParams,
                counter: Optional[OperationCounter] = None) -> ApproxSeries:
    """
    Аппроксимация ряда: по одному среднему уровня 0 на партицию

    Args:
        series: Ценовой ряд (N >= K)
        params: Параметры аппроксимации
        counter: Счётчик операций (опционально)

    Returns:
        ApproxSeries длины floor(N / K)
    """
    levels, count, dropped_tail = _levels_for_series(series, params, counter)
    roots = levels[-1][:, 0]

    labels = None
    if series.labels is not None:
        labels = tuple(
            series.labels[i * params.partition_size] for i in range(count)
        )

    logger.debug(
        f"📉 Аппроксимация: N={len(series)} -> n={count} "
        f"(K={params.partition_size}, t={params.segment_size})"
    )

    return ApproxSeries(
        values=tuple(roots.tolist()),
        params=params,
        dropped_tail=dropped_tail,
        labels=labels,
    )


# Тестирование
if __name__ == "__main__":
    logging.basicConfig(level=logging.DEBUG)

    print("🧪 Пример: D = [1..27], K=27, t=3\n")
    tree = build_tree(list(range(1, 28)), ApproxParams(27, 3))
    for j in reversed(range(tree.depth)):
        print(f"  Уровень {j}: {list(tree.level(j))}")

    ap = approximate(PriceSeries(tuple(range(1, 55))), ApproxParams(27, 3))
    print(f"\n  Ap = {list(ap.values)}")

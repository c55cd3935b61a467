"""
MSMCAST - Walk-Forward Backtester
Пошаговая проверка прогноза на истории: MER, MAE, базовые методы
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.exceptions import (
    EmptyHistory,
    InsufficientHistory,
    InvalidConfig,
    LengthMismatch,
    MSMCastError,
    NoCompletedSteps,
    ZeroPeriodMean,
)
from core.knn_forecast import ForecastConfig, predict
from core.msm_approx import ApproxParams, ApproxSeries, PriceSeries, approximate

logger = logging.getLogger('MSMCAST.Backtester')

METHOD_MSM_KNN = 'msm_knn'
METHOD_PERSISTENCE = 'persistence'
METHOD_FULL_RESOLUTION = 'full_resolution'

# history, step_index -> m прогнозных значений
StepForecaster = Callable[[ApproxSeries, int], Sequence[float]]


@dataclass(frozen=True)
class BacktestStep:
    """Один шаг бэктеста"""
    step_index: int
    predicted: Tuple[float, ...]
    actual: Tuple[float, ...]
    absolute_errors: Tuple[float, ...]
    previous: float  # последнее значение истории

    def to_dict(self) -> dict:
        return {
            'step_index': self.step_index,
            'predicted': list(self.predicted),
            'actual': list(self.actual),
            'absolute_errors': list(self.absolute_errors),
            'previous': self.previous,
        }


@dataclass(frozen=True)
class BacktestReport:
    """Итог бэктеста одного метода"""
    steps: Tuple[BacktestStep, ...]
    mer_percent: float
    mae: float
    period_mean: float
    elapsed_prediction_time: float  # секунды
    config: Dict = field(default_factory=dict)
    method: str = METHOD_MSM_KNN
    skipped_steps: Tuple[int, ...] = ()
    direction_accuracy_percent: Optional[float] = None

    @property
    def prediction_count(self) -> int:
        """N в формулах MER/MAE - только завершённые шаги"""
        return sum(len(step.predicted) for step in self.steps)

    @property
    def mean_prediction_ms(self) -> float:
        if not self.steps:
            return 0.0
        return 1000.0 * self.elapsed_prediction_time / len(self.steps)

    def flat_predictions(self) -> List[float]:
        return [v for step in self.steps for v in step.predicted]

    def flat_actuals(self) -> List[float]:
        return [v for step in self.steps for v in step.actual]


@dataclass(frozen=True)
class MonthlyError:
    """Ошибки за календарный месяц"""
    month: str
    steps: int
    mer_percent: float
    mae: float
    period_mean: float

    def to_dict(self) -> dict:
        return {
            'month': self.month,
            'steps': self.steps,
            'mer_percent': self.mer_percent,
            'mae': self.mae,
            'period_mean': self.period_mean,
        }


@dataclass(frozen=True)
class ComparisonRow:
    """Строка для графика: факт против прогнозов всех методов"""
    step_index: int
    actual: Tuple[float, ...]
    msm_knn: Optional[Tuple[float, ...]]
    persistence: Optional[Tuple[float, ...]]
    full_resolution: Optional[Tuple[float, ...]]


@dataclass(frozen=True)
class ComparisonReport:
    """Сравнение MSM-kNN с базовыми методами на одних и тех же шагах"""
    msm_knn: BacktestReport
    persistence: BacktestReport
    full_resolution: Optional[BacktestReport]
    rows: Tuple[ComparisonRow, ...]

    def reports(self) -> Dict[str, BacktestReport]:
        result = {
            METHOD_MSM_KNN: self.msm_knn,
            METHOD_PERSISTENCE: self.persistence,
        }
        if self.full_resolution is not None:
            result[METHOD_FULL_RESOLUTION] = self.full_resolution
        return result


# ============================================
# МЕТРИКИ
# ============================================

def _paired(predicted: Sequence[float], actual: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(predicted, dtype=float)
    act = np.asarray(actual, dtype=float)
    if pred.shape != act.shape or pred.ndim != 1:
        raise LengthMismatch(f"Длины прогноза и факта различаются: {pred.shape} и {act.shape}")
    if pred.size == 0:
        raise LengthMismatch("Пустые списки прогноза и факта")
    return pred, act


def mean_error_relative(predicted: Sequence[float], actual: Sequence[float],
                        period_mean: float) -> float:
    """
    Mean Error Relative, %

    MER = 100 * (1/N) * Σ |P' - P| / P̄
    """
    pred, act = _paired(predicted, actual)
    if not (math.isfinite(period_mean) and period_mean > 0):
        raise ZeroPeriodMean(f"P̄ должна быть > 0, получено {period_mean}")
    return float(100.0 * np.mean(np.abs(pred - act) / period_mean))


def mean_absolute_error(predicted: Sequence[float], actual: Sequence[float]) -> float:
    """MAE = (1/N) * Σ |P' - P|"""
    pred, act = _paired(predicted, actual)
    return float(np.mean(np.abs(pred - act)))


def direction_accuracy(predicted: Sequence[float], actual: Sequence[float],
                       previous: Sequence[float]) -> float:
    """
    Доля шагов (%), где направление изменения угадано

    Args:
        predicted: Прогноз первой позиции горизонта по шагам
        actual: Факт первой позиции горизонта по шагам
        previous: Последнее значение истории по шагам
    """
    pred, act = _paired(predicted, actual)
    prev = np.asarray(previous, dtype=float)
    if prev.shape != pred.shape:
        raise LengthMismatch(f"Длина previous {prev.shape} != {pred.shape}")
    hits = np.sign(pred - prev) == np.sign(act - prev)
    return float(100.0 * hits.mean())


def persistence_baseline(ap_history: ApproxSeries, horizon: int) -> Tuple[float, ...]:
    """
    Наивный прогноз: последнее значение истории повторяется m раз

    Args:
        ap_history: История
        horizon: Горизонт m
    """
    if len(ap_history) == 0:
        raise EmptyHistory("История пуста")
    if horizon < 1:
        raise InvalidConfig(f"Горизонт должен быть >= 1, получено {horizon}")
    return (ap_history.values[-1],) * horizon


# ============================================
# WALK-FORWARD
# ============================================

def start_index(length: int, start_fraction: float) -> int:
    """Индекс первого шага: доля start_fraction от длины ряда"""
    if not 0.0 < start_fraction < 1.0:
        raise InvalidConfig(f"start_fraction должен быть в (0, 1), получено {start_fraction}")
    # округление гасит двоичную погрешность долей вроде 0.7
    return int(math.floor(round(start_fraction * length, 9)))


def _walk_forward(ap: ApproxSeries, fc: ForecastConfig, start_fraction: float,
                  forecaster: StepForecaster, method: str, config: Dict) -> BacktestReport:
    length = len(ap)
    horizon = fc.horizon
    first = start_index(length, start_fraction)
    required = fc.window + fc.horizon + 1

    if first < required:
        raise InsufficientHistory(
            f"Начальная история {first} значений < w+m+1={required} "
            f"(n={length}, start_fraction={start_fraction})"
        )
    if first > length - horizon:
        raise InsufficientHistory(
            f"Нет шагов для проверки: start={first}, n={length}, m={horizon}"
        )

    steps = []
    skipped = []
    elapsed = 0.0
    values = ap.values

    for step in range(first, length - horizon + 1):
        history = ap.head(step)
        actual = values[step:step + horizon]

        started = time.perf_counter()
        try:
            predicted = tuple(float(v) for v in forecaster(history, step))
        except MSMCastError as e:
            elapsed += time.perf_counter() - started
            skipped.append(step)
            logger.warning(f"⚠️ [{method}] Шаг {step} пропущен: {type(e).__name__}: {e}")
            continue
        elapsed += time.perf_counter() - started

        errors = tuple(abs(p - a) for p, a in zip(predicted, actual))
        steps.append(BacktestStep(
            step_index=step,
            predicted=predicted,
            actual=tuple(actual),
            absolute_errors=errors,
            previous=values[step - 1],
        ))

    if not steps:
        raise NoCompletedSteps(f"[{method}] Все {len(skipped)} шагов завершились ошибкой")

    all_predicted = [v for s in steps for v in s.predicted]
    all_actual = [v for s in steps for v in s.actual]
    period_mean = float(np.mean(all_actual))

    mer = mean_error_relative(all_predicted, all_actual, period_mean)
    mae = mean_absolute_error(all_predicted, all_actual)
    direction = direction_accuracy(
        [s.predicted[0] for s in steps],
        [s.actual[0] for s in steps],
        [s.previous for s in steps],
    )

    logger.info(
        f"📊 [{method}] Шагов: {len(steps)} (пропущено {len(skipped)}) | "
        f"MER: {mer:.4f}% | MAE: {mae:.6g} | Направление: {direction:.1f}%"
    )

    return BacktestReport(
        steps=tuple(steps),
        mer_percent=mer,
        mae=mae,
        period_mean=period_mean,
        elapsed_prediction_time=elapsed,
        config=config,
        method=method,
        skipped_steps=tuple(skipped),
        direction_accuracy_percent=direction,
    )


def _report_config(approx: ApproxParams, fc: ForecastConfig, start_fraction: float) -> Dict:
    return {
        **approx.to_dict(),
        **fc.to_dict(),
        'start_fraction': start_fraction,
    }


def backtest_approximated(ap: ApproxSeries, fc: ForecastConfig,
                          start_fraction: float = 0.7) -> BacktestReport:
    """Бэктест MSM-kNN на уже аппроксимированном ряде"""
    return _walk_forward(
        ap, fc, start_fraction,
        forecaster=lambda history, step: predict(history, fc).values,
        method=METHOD_MSM_KNN,
        config=_report_config(ap.params, fc, start_fraction),
    )


def walk_forward_backtest(series: PriceSeries, approx: ApproxParams, fc: ForecastConfig,
                          start_fraction: float = 0.7) -> BacktestReport:
    """
    Walk-forward бэктест с расширяющимся окном

    Ряд аппроксимируется один раз; на шаге s прогноз строится только
    по ap[0, s) и сравнивается с ap[s, s+m).

    Args:
        series: Ценовой ряд
        approx: Параметры аппроксимации
        fc: Параметры прогноза
        start_fraction: Доля ряда, с которой начинаются шаги

    Returns:
        BacktestReport
    """
    ap = approximate(series, approx)
    return backtest_approximated(ap, fc, start_fraction)


def backtest_persistence(series: PriceSeries, approx: ApproxParams, fc: ForecastConfig,
                         start_fraction: float = 0.7) -> BacktestReport:
    """Наивный метод на тех же шагах и с тем же фактом"""
    ap = approximate(series, approx)
    return _walk_forward(
        ap, fc, start_fraction,
        forecaster=lambda history, step: persistence_baseline(history, fc.horizon),
        method=METHOD_PERSISTENCE,
        config=_report_config(approx, fc, start_fraction),
    )


def backtest_full_resolution(series: PriceSeries, approx: ApproxParams, fc: ForecastConfig,
                             start_fraction: float = 0.7) -> BacktestReport:
    """
    kNN по полному (неаппроксимированному) ряду

    Окно w*K и горизонт m*K сырых значений; прогноз сворачивается
    в средние по K, чтобы сравнивать с теми же партициями.
    Порог ψ не переносится: масштаб расстояний другой.
    """
    ap = approximate(series, approx)
    K = approx.partition_size
    raw = approximate(series, ApproxParams(1, 1))
    raw_config = ForecastConfig(
        window=fc.window * K,
        neighbors=fc.neighbors,
        horizon=fc.horizon * K,
    )

    def forecaster(history: ApproxSeries, step: int) -> Sequence[float]:
        forecast = predict(raw.head(step * K), raw_config)
        return np.asarray(forecast.values).reshape(fc.horizon, K).mean(axis=1).tolist()

    config = _report_config(approx, fc, start_fraction)
    config['threshold'] = None
    return _walk_forward(
        ap, fc, start_fraction,
        forecaster=forecaster,
        method=METHOD_FULL_RESOLUTION,
        config=config,
    )


def compare_methods(series: PriceSeries, approx: ApproxParams, fc: ForecastConfig,
                    start_fraction: float = 0.7,
                    include_full_resolution: bool = True) -> ComparisonReport:
    """
    MSM-kNN против наивного метода и kNN по полному ряду

    Returns:
        ComparisonReport со строками для графиков факт/прогноз
    """
    main = walk_forward_backtest(series, approx, fc, start_fraction)
    baseline = backtest_persistence(series, approx, fc, start_fraction)

    full = None
    if include_full_resolution:
        try:
            full = backtest_full_resolution(series, approx, fc, start_fraction)
        except MSMCastError as e:
            logger.warning(f"⚠️ kNN по полному ряду недоступен: {type(e).__name__}: {e}")

    by_method = {
        METHOD_MSM_KNN: {s.step_index: s.predicted for s in main.steps},
        METHOD_PERSISTENCE: {s.step_index: s.predicted for s in baseline.steps},
        METHOD_FULL_RESOLUTION: {s.step_index: s.predicted for s in full.steps} if full else {},
    }

    rows = [
        ComparisonRow(
            step_index=step.step_index,
            actual=step.actual,
            msm_knn=by_method[METHOD_MSM_KNN].get(step.step_index),
            persistence=step.predicted,
            full_resolution=by_method[METHOD_FULL_RESOLUTION].get(step.step_index),
        )
        for step in baseline.steps
    ]

    logger.info(
        f"⚖️ MER: msm_knn {main.mer_percent:.4f}% vs persistence {baseline.mer_percent:.4f}%"
        + (f" vs full_resolution {full.mer_percent:.4f}%" if full else "")
    )

    return ComparisonReport(
        msm_knn=main,
        persistence=baseline,
        full_resolution=full,
        rows=tuple(rows),
    )


def monthly_breakdown(report: BacktestReport, ap: ApproxSeries) -> List[MonthlyError]:
    """
    MER/MAE по календарным месяцам

    Шаг относится к месяцу первой даты прогнозируемой партиции;
    P̄ месяца - среднее факта этого месяца.

    Returns:
        Список по месяцам; пустой, если дат нет или они не разбираются
    """
    if ap.labels is None:
        return []

    try:
        dates = pd.to_datetime([ap.labels[s.step_index] for s in report.steps])
    except (ValueError, TypeError) as e:
        logger.warning(f"⚠️ Даты не разобраны, помесячная разбивка пропущена: {e}")
        return []

    frame = pd.DataFrame({
        'month': dates.strftime('%Y-%m'),
        'step': [s.step_index for s in report.steps],
    })
    frame['predicted'] = [s.predicted for s in report.steps]
    frame['actual'] = [s.actual for s in report.steps]
    frame = frame.explode(['predicted', 'actual'])
    frame['predicted'] = frame['predicted'].astype(float)
    frame['actual'] = frame['actual'].astype(float)

    months = []
    for month, group in frame.groupby('month', sort=True):
        period_mean = float(group['actual'].mean())
        months.append(MonthlyError(
            month=str(month),
            steps=int(group['step'].nunique()),
            mer_percent=mean_error_relative(group['predicted'], group['actual'], period_mean),
            mae=mean_absolute_error(group['predicted'], group['actual']),
            period_mean=period_mean,
        ))
    return months

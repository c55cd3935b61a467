"""
MSMCAST - Report Writer
Экспорт результатов в JSON/CSV и обратная загрузка отчётов
"""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import jsonschema
import pandas as pd

from core.backtester import (
    BacktestReport,
    BacktestStep,
    ComparisonReport,
    ComparisonRow,
    MonthlyError,
)
from core.exceptions import ReportFormatError
from core.knn_forecast import Forecast, Neighbor
from core.msm_approx import ApproxParams, ApproxSeries, MsmTree

logger = logging.getLogger('MSMCAST.ReportWriter')

REPORT_VERSION = '1.0'

KIND_APPROXIMATE = 'approximate'
KIND_FORECAST = 'forecast'
KIND_BACKTEST = 'backtest'
KIND_COMPARE = 'compare'

# ============================================
# JSON-СХЕМЫ
# ============================================

_NUMBERS = {'type': 'array', 'items': {'type': 'number'}}

_STEP_SCHEMA = {
    'type': 'object',
    'required': ['step_index', 'predicted', 'actual', 'absolute_errors', 'previous'],
    'properties': {
        'step_index': {'type': 'integer', 'minimum': 0},
        'predicted': _NUMBERS,
        'actual': _NUMBERS,
        'absolute_errors': {'type': 'array', 'items': {'type': 'number', 'minimum': 0}},
        'previous': {'type': 'number'},
    },
}

_BACKTEST_SCHEMA = {
    'type': 'object',
    'required': ['method', 'steps', 'mer_percent', 'mae', 'period_mean', 'skipped_steps', 'config'],
    'properties': {
        'method': {'type': 'string'},
        'steps': {'type': 'array', 'minItems': 1, 'items': _STEP_SCHEMA},
        'mer_percent': {'type': 'number', 'minimum': 0},
        'mae': {'type': 'number', 'minimum': 0},
        'period_mean': {'type': 'number', 'exclusiveMinimum': 0},
        'skipped_steps': {'type': 'array', 'items': {'type': 'integer'}},
        'direction_accuracy_percent': {'type': ['number', 'null']},
        'config': {'type': 'object'},
        'monthly': {'type': 'array'},
    },
}

_FORECAST_SCHEMA = {
    'type': 'object',
    'required': ['values', 'neighbors_used', 'query_window'],
    'properties': {
        'values': _NUMBERS,
        'query_window': _NUMBERS,
        'neighbors_used': {
            'type': 'array',
            'minItems': 1,
            'items': {
                'type': 'object',
                'required': ['start_index', 'distance', 'successors'],
                'properties': {
                    'start_index': {'type': 'integer', 'minimum': 0},
                    'distance': {'type': 'number', 'minimum': 0},
                    'successors': _NUMBERS,
                },
            },
        },
    },
}

_APPROXIMATE_SCHEMA = {
    'type': 'object',
    'required': ['values', 'partition_size', 'segment_size', 'dropped_tail'],
    'properties': {
        'values': _NUMBERS,
        'partition_size': {'type': 'integer', 'minimum': 1},
        'segment_size': {'type': 'integer', 'minimum': 1},
        'dropped_tail': {'type': 'integer', 'minimum': 0},
        'labels': {'type': ['array', 'null'], 'items': {'type': 'string'}},
        'trees': {'type': 'array'},
    },
}

_COMPARE_SCHEMA = {
    'type': 'object',
    'required': ['methods', 'rows'],
    'properties': {
        'methods': {
            'type': 'object',
            'required': ['msm_knn', 'persistence'],
            'additionalProperties': _BACKTEST_SCHEMA,
        },
        'rows': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['step_index', 'actual', 'msm_knn', 'persistence', 'full_resolution'],
            },
        },
    },
}

REPORT_SCHEMA = {
    'type': 'object',
    'required': ['kind', 'config', 'result', 'metadata'],
    'properties': {
        'kind': {'enum': [KIND_APPROXIMATE, KIND_FORECAST, KIND_BACKTEST, KIND_COMPARE]},
        'config': {'type': 'object'},
        'result': {'type': 'object'},
        'metadata': {'type': 'object'},
    },
}

RESULT_SCHEMAS = {
    KIND_APPROXIMATE: _APPROXIMATE_SCHEMA,
    KIND_FORECAST: _FORECAST_SCHEMA,
    KIND_BACKTEST: _BACKTEST_SCHEMA,
    KIND_COMPARE: _COMPARE_SCHEMA,
}


# ============================================
# СЕРИАЛИЗАЦИЯ
# ============================================

def approximation_to_dict(ap: ApproxSeries, trees: Optional[Sequence[MsmTree]] = None) -> Dict:
    """Сериализация ApproxSeries (и деревьев) для JSON"""
    result = {
        'values': list(ap.values),
        'partition_size': ap.params.partition_size,
        'segment_size': ap.params.segment_size,
        'dropped_tail': ap.dropped_tail,
        'labels': list(ap.labels) if ap.labels is not None else None,
    }
    if trees is not None:
        result['trees'] = [tree.to_dict() for tree in trees]
    return result


def backtest_to_dict(report: BacktestReport,
                     monthly: Optional[Sequence[MonthlyError]] = None) -> Dict:
    """Сериализация BacktestReport; время выполнения уходит в metadata"""
    result = {
        'method': report.method,
        'steps': [step.to_dict() for step in report.steps],
        'mer_percent': report.mer_percent,
        'mae': report.mae,
        'period_mean': report.period_mean,
        'skipped_steps': list(report.skipped_steps),
        'direction_accuracy_percent': report.direction_accuracy_percent,
        'config': report.config,
    }
    if monthly:
        result['monthly'] = [month.to_dict() for month in monthly]
    return result


def _optional_list(values):
    return list(values) if values is not None else None


def comparison_to_dict(comparison: ComparisonReport) -> Dict:
    """Сериализация сравнения методов"""
    return {
        'methods': {
            method: backtest_to_dict(report)
            for method, report in comparison.reports().items()
        },
        'rows': [
            {
                'step_index': row.step_index,
                'actual': list(row.actual),
                'msm_knn': _optional_list(row.msm_knn),
                'persistence': _optional_list(row.persistence),
                'full_resolution': _optional_list(row.full_resolution),
            }
            for row in comparison.rows
        ],
    }


def timing_metadata(reports: Dict[str, BacktestReport]) -> Dict:
    """Недетерминированные поля: время прогноза по методам"""
    return {
        method: {
            'elapsed_prediction_seconds': report.elapsed_prediction_time,
            'mean_prediction_ms': report.mean_prediction_ms,
        }
        for method, report in reports.items()
    }


def build_envelope(kind: str, config: Dict, result: Dict,
                   metadata: Optional[Dict] = None) -> Dict:
    """Конверт отчёта: всё недетерминированное - только в metadata"""
    return {
        'kind': kind,
        'config': config,
        'result': result,
        'metadata': {
            'generated_at': datetime.now().isoformat(),
            'version': REPORT_VERSION,
            **(metadata or {}),
        },
    }


def dumps_report(envelope: Dict) -> str:
    return json.dumps(envelope, indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def _emit(text: str, path: Optional[Union[str, Path]]):
    if path is None:
        sys.stdout.write(text)
        return
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    filepath.write_text(text, encoding='utf-8')
    logger.info(f"📁 Отчёт сохранён: {filepath}")


def write_json(envelope: Dict, path: Optional[Union[str, Path]] = None) -> str:
    """
    Запись JSON-отчёта

    Args:
        envelope: Конверт из build_envelope
        path: Файл; None - stdout

    Returns:
        Записанный текст
    """
    text = dumps_report(envelope)
    _emit(text, path)
    return text


# ============================================
# CSV ДЛЯ ГРАФИКОВ
# ============================================

def approximation_rows(ap: ApproxSeries) -> pd.DataFrame:
    frame = pd.DataFrame({'index': range(len(ap)), 'value': list(ap.values)})
    if ap.labels is not None:
        frame['label'] = list(ap.labels)
    return frame


def forecast_rows(forecast: Forecast) -> pd.DataFrame:
    return pd.DataFrame({
        'horizon': range(1, len(forecast.values) + 1),
        'predicted': list(forecast.values),
    })


def backtest_rows(report: BacktestReport) -> pd.DataFrame:
    rows = [
        {
            'step': step.step_index,
            'horizon': h + 1,
            'predicted': step.predicted[h],
            'actual': step.actual[h],
            'abs_error': step.absolute_errors[h],
        }
        for step in report.steps
        for h in range(len(step.predicted))
    ]
    return pd.DataFrame(rows, columns=['step', 'horizon', 'predicted', 'actual', 'abs_error'])


def comparison_rows(comparison: ComparisonReport) -> pd.DataFrame:
    def at(values, h):
        return values[h] if values is not None else None

    rows = [
        {
            'step': row.step_index,
            'horizon': h + 1,
            'actual': row.actual[h],
            'msm_knn': at(row.msm_knn, h),
            'persistence': at(row.persistence, h),
            'full_resolution': at(row.full_resolution, h),
        }
        for row in comparison.rows
        for h in range(len(row.actual))
    ]
    return pd.DataFrame(
        rows, columns=['step', 'horizon', 'actual', 'msm_knn', 'persistence', 'full_resolution']
    )


def write_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> str:
    """Запись плоского CSV; None - stdout"""
    text = frame.to_csv(index=False, lineterminator='\n')
    _emit(text, path)
    return text


# ============================================
# ЗАГРУЗКА
# ============================================

def validate_envelope(envelope: Dict) -> Dict:
    """Проверка конверта и результата по JSON-схеме"""
    try:
        jsonschema.validate(envelope, REPORT_SCHEMA)
        jsonschema.validate(envelope['result'], RESULT_SCHEMAS[envelope['kind']])
    except jsonschema.ValidationError as e:
        raise ReportFormatError(f"Отчёт не соответствует схеме: {e.message}") from e
    return envelope


def load_json_report(path: Union[str, Path]) -> Dict:
    """
    Загрузка и проверка JSON-отчёта

    Returns:
        Конверт отчёта (dict)
    """
    try:
        envelope = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ReportFormatError(f"Некорректный JSON {path}: {e}") from e
    return validate_envelope(envelope)


def backtest_from_dict(result: Dict, metadata: Optional[Dict] = None) -> BacktestReport:
    """Восстановление BacktestReport из JSON"""
    timing = (metadata or {}).get('timing', {}).get(result['method'], {})
    return BacktestReport(
        steps=tuple(
            BacktestStep(
                step_index=step['step_index'],
                predicted=tuple(step['predicted']),
                actual=tuple(step['actual']),
                absolute_errors=tuple(step['absolute_errors']),
                previous=step['previous'],
            )
            for step in result['steps']
        ),
        mer_percent=result['mer_percent'],
        mae=result['mae'],
        period_mean=result['period_mean'],
        elapsed_prediction_time=timing.get('elapsed_prediction_seconds', 0.0),
        config=result['config'],
        method=result['method'],
        skipped_steps=tuple(result['skipped_steps']),
        direction_accuracy_percent=result.get('direction_accuracy_percent'),
    )


def forecast_from_dict(result: Dict) -> Forecast:
    """Восстановление Forecast из JSON"""
    return Forecast(
        values=tuple(result['values']),
        neighbors_used=tuple(
            Neighbor(nb['start_index'], nb['distance'], tuple(nb['successors']))
            for nb in result['neighbors_used']
        ),
        query_window=tuple(result['query_window']),
    )


def approximation_from_dict(result: Dict) -> ApproxSeries:
    """Восстановление ApproxSeries из JSON"""
    labels = result.get('labels')
    return ApproxSeries(
        values=tuple(result['values']),
        params=ApproxParams(result['partition_size'], result['segment_size']),
        dropped_tail=result['dropped_tail'],
        labels=tuple(labels) if labels is not None else None,
    )


def trees_from_dict(result: Dict) -> List[MsmTree]:
    """Восстановление деревьев MsmTree (если были выгружены)"""
    return [
        MsmTree(
            partition_index=tree['partition_index'],
            segment_size=result['segment_size'],
            levels=tuple(tuple(level) for level in tree['levels']),
        )
        for tree in result.get('trees', [])
    ]


def comparison_from_dict(result: Dict, metadata: Optional[Dict] = None) -> ComparisonReport:
    """Восстановление ComparisonReport из JSON"""
    methods = {
        method: backtest_from_dict(report, metadata)
        for method, report in result['methods'].items()
    }

    def optional_tuple(values):
        return tuple(values) if values is not None else None

    return ComparisonReport(
        msm_knn=methods['msm_knn'],
        persistence=methods['persistence'],
        full_resolution=methods.get('full_resolution'),
        rows=tuple(
            ComparisonRow(
                step_index=row['step_index'],
                actual=tuple(row['actual']),
                msm_knn=optional_tuple(row['msm_knn']),
                persistence=optional_tuple(row['persistence']),
                full_resolution=optional_tuple(row['full_resolution']),
            )
            for row in result['rows']
        ),
    )


def load_backtest_report(path: Union[str, Path]) -> BacktestReport:
    """Загрузка BacktestReport из JSON-отчёта режима backtest"""
    envelope = load_json_report(path)
    if envelope['kind'] != KIND_BACKTEST:
        raise ReportFormatError(f"Ожидался отчёт '{KIND_BACKTEST}', получен '{envelope['kind']}'")
    return backtest_from_dict(envelope['result'], envelope['metadata'])

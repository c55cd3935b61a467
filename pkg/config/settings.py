"""
MSMCAST - Файл конфигурации
Параметры запуска: значения по умолчанию, файл конфигурации, флаги CLI
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv

from core.data_loader import CsvSchema
from core.exceptions import (
    DataFileNotFound,
    InvalidConfig,
    NotPowerOfSegmentSize,
    ZeroSize,
)
from core.knn_forecast import ForecastConfig
from core.msm_approx import ApproxParams, validate_params

# Загрузка переменных окружения из .env файла
load_dotenv()

logger = logging.getLogger('MSMCAST.Settings')

MODES = ('approximate', 'predict', 'backtest', 'compare')
OUTPUT_FORMATS = ('json', 'csv')
GRANULARITIES = ('approx', 'raw')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in _TRUE


@dataclass
class Settings:
    """Окружение процесса: только логирование"""

    # ============================================
    # ЛОГИРОВАНИЕ
    # ============================================
    LOG_LEVEL: str = field(default_factory=lambda: os.getenv('MSMCAST_LOG_LEVEL', 'INFO').upper())
    LOG_TO_FILE: bool = field(default_factory=lambda: _env_bool('MSMCAST_LOG_TO_FILE', 'False'))
    LOG_FILE: str = field(default_factory=lambda: os.getenv('MSMCAST_LOG_FILE', 'logs/msmcast.log'))

    # Максимальный размер лог-файла (MB)
    LOG_MAX_SIZE_MB: int = 50
    LOG_BACKUP_COUNT: int = 5

    def __post_init__(self):
        if self.LOG_LEVEL not in LOG_LEVELS:
            logger.warning(
                f"⚠️ MSMCAST_LOG_LEVEL={self.LOG_LEVEL!r} не из {LOG_LEVELS}, используется INFO"
            )
            self.LOG_LEVEL = 'INFO'


# ============================================
# ПАРАМЕТРЫ ЗАПУСКА
# ============================================

@dataclass
class RunConfig:
    """Полный набор параметров одного запуска CLI"""
    mode: str = 'backtest'
    approx: ApproxParams = field(default_factory=ApproxParams)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    start_fraction: float = 0.7
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    output_format: str = 'json'
    csv: CsvSchema = field(default_factory=CsvSchema)
    emit_trees: bool = False
    granularity: str = 'approx'

    log_level: str = 'INFO'
    log_to_file: bool = False
    log_file: str = 'logs/msmcast.log'

    def validate(self) -> 'RunConfig':
        """Проверка всех ограничений; все нарушения собираются в одно сообщение"""
        errors = []

        if self.mode not in MODES:
            errors.append(f"mode должен быть одним из {MODES}, получено {self.mode!r}")

        try:
            validate_params(self.approx)
        except (ZeroSize, NotPowerOfSegmentSize, InvalidConfig) as e:
            errors.append(str(e))

        if self.granularity == 'raw' and (self.approx.partition_size, self.approx.segment_size) != (1, 1):
            errors.append("granularity=raw требует K=1, t=1")
        elif self.granularity not in GRANULARITIES:
            errors.append(f"granularity должен быть одним из {GRANULARITIES}, получено {self.granularity!r}")

        if not isinstance(self.start_fraction, float) or not 0.0 < self.start_fraction < 1.0:
            errors.append(f"start_fraction должен быть в (0, 1), получено {self.start_fraction!r}")

        if self.output_format not in OUTPUT_FORMATS:
            errors.append(f"format должен быть одним из {OUTPUT_FORMATS}, получено {self.output_format!r}")

        if self.emit_trees and self.mode != 'approximate':
            errors.append("--emit-trees применим только к approximate")
        if self.emit_trees and self.output_format == 'csv':
            errors.append("--emit-trees поддерживается только в формате json")

        if not self.input_path:
            errors.append("не задан входной файл (--input)")

        if self.log_level not in LOG_LEVELS:
            errors.append(f"log_level должен быть одним из {LOG_LEVELS}, получено {self.log_level!r}")

        if errors:
            raise InvalidConfig("Ошибки конфигурации: " + "; ".join(errors))

        return self

    def to_dict(self) -> Dict:
        """Эхо конфигурации для отчёта (без путей вывода и логирования)"""
        return {
            'mode': self.mode,
            'approx': self.approx.to_dict(),
            'forecast': self.forecast.to_dict(),
            'start_fraction': self.start_fraction,
            'input': str(self.input_path) if self.input_path is not None else None,
            'format': self.output_format,
            'csv': self.csv.to_dict(),
            'emit_trees': self.emit_trees,
            'granularity': self.granularity,
        }


# ============================================
# ПРЕОБРАЗОВАНИЕ ЗНАЧЕНИЙ
# ============================================

def _to_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"ожидалось целое, получено {value!r}")
    if isinstance(value, int):
        return value
    return int(str(value).strip())


def _to_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(f"ожидалось число, получено {value!r}")
    return float(str(value).strip()) if not isinstance(value, (int, float)) else float(value)


def _to_optional_float(value: Any) -> Optional[float]:
    if value is None or str(value).strip().lower() in ('', 'none', 'null'):
        return None
    return _to_float(value)


def _to_bool(value: Any) -> bool:
    # в файле конфигурации ключ без значения означает true
    if value is None or isinstance(value, bool):
        return True if value is None else value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ValueError(f"ожидалось true/false, получено {value!r}")


def _to_text(value: Any) -> str:
    return str(value).strip()


def _to_delimiter(value: Any) -> str:
    text = str(value)
    return {'\\t': '\t', 'tab': '\t'}.get(text.strip().lower(), text)


def _to_column(value: Any) -> Union[str, int]:
    return value if isinstance(value, int) and not isinstance(value, bool) else str(value).strip()


def _choice(options, transform=str.lower) -> Callable[[Any], str]:
    def convert(value: Any) -> str:
        text = transform(str(value).strip())
        if text not in options:
            raise ValueError(f"допустимо {options}, получено {value!r}")
        return text
    return convert


# Каноническое имя ключа -> преобразователь
OPTION_KEYS: Dict[str, Callable[[Any], Any]] = {
    'input': _to_text,
    'output': _to_text,
    'format': _choice(OUTPUT_FORMATS),
    'partition_size': _to_int,
    'segment_size': _to_int,
    'window': _to_int,
    'neighbors': _to_int,
    'horizon': _to_int,
    'threshold': _to_optional_float,
    'start_fraction': _to_float,
    'price_column': _to_column,
    'date_column': _to_column,
    'delimiter': _to_delimiter,
    'no_header': _to_bool,
    'skip_bad_rows': _to_bool,
    'emit_trees': _to_bool,
    'granularity': _choice(GRANULARITIES),
    'log_level': _choice(LOG_LEVELS, transform=str.upper),
}

# Короткие флаги (регистр важен: K и k - разные параметры)
SHORT_ALIASES = {
    'K': 'partition_size',
    't': 'segment_size',
    'w': 'window',
    'k': 'neighbors',
    'm': 'horizon',
}


def normalize_key(key: str) -> str:
    """
    Приведение ключа к каноническому виду

    '--partition-size', 'partition_size', 'K' -> 'partition_size'
    """
    stripped = str(key).strip().lstrip('-')
    if stripped in SHORT_ALIASES:
        return SHORT_ALIASES[stripped]

    name = stripped.replace('-', '_').lower()
    if name not in OPTION_KEYS:
        raise InvalidConfig(f"Неизвестный параметр конфигурации: '{key}'")
    return name


def load_config_file(path: Union[str, Path]) -> Dict[str, Optional[str]]:
    """
    Чтение плоского файла key=value (комментарии через #)

    Returns:
        Словарь с каноническими ключами и строковыми значениями
    """
    path = Path(path)
    if not path.is_file():
        raise DataFileNotFound(f"Файл конфигурации не найден: {path}")

    raw = dotenv_values(path, interpolate=False)
    values = {}
    for key, value in raw.items():
        name = normalize_key(key)
        if name in values:
            raise InvalidConfig(f"Параметр '{name}' задан в {path} несколько раз")
        values[name] = value

    logger.debug(f"⚙️ Файл конфигурации {path}: {sorted(values)}")
    return values


def _coerce(name: str, value: Any) -> Any:
    try:
        return OPTION_KEYS[name](value)
    except (TypeError, ValueError) as e:
        raise InvalidConfig(f"Некорректное значение '{name}': {e}") from None


def build_run_config(mode: str,
                     flag_values: Optional[Mapping[str, Any]] = None,
                     file_values: Optional[Mapping[str, Any]] = None,
                     env: Optional[Settings] = None) -> RunConfig:
    """
    Сборка RunConfig: флаг > файл > значение по умолчанию

    Args:
        mode: Подкоманда
        flag_values: Значения флагов (None - флаг не задан)
        file_values: Значения из файла конфигурации
        env: Настройки окружения (по умолчанию - глобальные)

    Returns:
        Проверенный RunConfig
    """
    env = env or settings

    merged: Dict[str, Any] = {}
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            name = normalize_key(key)
            if source is flag_values and value is None:
                continue
            merged[name] = _coerce(name, value)

    granularity = merged.get('granularity', 'approx')
    if granularity == 'raw':
        if 'partition_size' in merged or 'segment_size' in merged:
            logger.warning("⚠️ granularity=raw: K и t игнорируются (используется K=1, t=1)")
        approx = ApproxParams(1, 1)
    else:
        approx = ApproxParams(
            partition_size=merged.get('partition_size', ApproxParams.partition_size),
            segment_size=merged.get('segment_size', ApproxParams.segment_size),
        )

    forecast = ForecastConfig(
        window=merged.get('window', ForecastConfig.window),
        neighbors=merged.get('neighbors', ForecastConfig.neighbors),
        horizon=merged.get('horizon', ForecastConfig.horizon),
        threshold=merged.get('threshold'),
    )

    csv = CsvSchema(
        price_column=merged.get('price_column', CsvSchema.price_column),
        date_column=merged.get('date_column'),
        has_header=not merged.get('no_header', False),
        delimiter=merged.get('delimiter', CsvSchema.delimiter),
        skip_bad_rows=merged.get('skip_bad_rows', False),
    )

    run_config = RunConfig(
        mode=mode,
        approx=approx,
        forecast=forecast,
        start_fraction=merged.get('start_fraction', RunConfig.start_fraction),
        input_path=merged.get('input'),
        output_path=merged.get('output'),
        output_format=merged.get('format', RunConfig.output_format),
        csv=csv,
        emit_trees=merged.get('emit_trees', False),
        granularity=granularity,
        log_level=merged.get('log_level', env.LOG_LEVEL),
        log_to_file=env.LOG_TO_FILE,
        log_file=env.LOG_FILE,
    )
    return run_config.validate()


# Создание глобального экземпляра настроек
settings = Settings()


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("⚙️  КОНФИГУРАЦИЯ MSMCAST (значения по умолчанию)")
    print("=" * 60)
    defaults = RunConfig(input_path='prices.csv').validate()
    for key, value in defaults.to_dict().items():
        print(f"  {key}: {value}")
    print(f"  log_level: {settings.LOG_LEVEL}")
    print("=" * 60 + "\n")

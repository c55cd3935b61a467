"""
MSMCAST - Logger Utility
Настройка логирования: консоль (stderr) и файлы с ротацией
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional, TextIO, Union

ROOT_LOGGER = 'MSMCAST'

DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
CONSOLE_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'
FILE_FORMAT = '%(asctime)s - %(levelname)-8s - %(name)s - %(message)s'

ERROR_LOG_MAX_MB = 10
ERROR_LOG_BACKUPS = 3


class ColoredFormatter(logging.Formatter):
    """Цветной уровень для терминала; эмодзи уже в самих сообщениях"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def __init__(self):
        super().__init__(CONSOLE_FORMAT, datefmt=DATE_FORMAT)

    def format(self, record):
        color = self.COLORS.get(record.levelname)
        if color is None:
            return super().format(record)

        # запись общая для всех обработчиков: уровень восстанавливается после форматирования
        original = record.levelname
        record.levelname = f"{color}{original}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def resolve_level(level: Union[str, int, None]) -> int:
    """
    Числовой уровень логирования по имени

    Неизвестное имя (например, из MSMCAST_LOG_LEVEL) даёт INFO.
    """
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level or 'INFO').strip().upper())
    return value if isinstance(value, int) else logging.INFO


def error_log_path(log_file: Union[str, Path]) -> Path:
    """logs/msmcast.log -> logs/msmcast_errors.log"""
    path = Path(log_file)
    return path.with_name(f"{path.stem}_errors.log")


def _rotating_handler(path: Path, max_mb: int, backups: int, level: int) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        path,
        maxBytes=max_mb * 1024 * 1024,
        backupCount=backups,
        encoding='utf-8',
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
    return handler


def setup_logger(name: str = ROOT_LOGGER, log_level: Union[str, int, None] = 'INFO',
                 log_to_file: bool = False, log_file: Union[str, Path] = 'logs/msmcast.log',
                 max_file_size_mb: int = 50, backup_count: int = 5,
                 stream: Optional[TextIO] = None) -> logging.Logger:
    """
    Настройка логгера MSMCAST

    Консоль - stderr: stdout занят отчётами, когда --output не задан.

    Args:
        name: Имя логгера
        log_level: Уровень (DEBUG, INFO, WARNING, ERROR); неизвестный - INFO
        log_to_file: Дублировать ли логи в файл
        log_file: Путь к файлу логов; ошибки дополнительно в <имя>_errors.log
        max_file_size_mb: Размер файла до ротации, MB
        backup_count: Число резервных копий
        stream: Поток консоли (по умолчанию sys.stderr)

    Returns:
        Настроенный логгер
    """
    logger = logging.getLogger(name)
    logger.setLevel(resolve_level(log_level))

    # повторный вызов (тесты, несколько запусков main) не копит обработчики
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    stream = stream or sys.stderr
    console_handler = logging.StreamHandler(stream)
    if hasattr(stream, 'isatty') and stream.isatty():
        console_handler.setFormatter(ColoredFormatter())
    else:
        console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)

    if log_to_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        logger.addHandler(_rotating_handler(log_path, max_file_size_mb, backup_count, logging.DEBUG))
        logger.addHandler(_rotating_handler(
            error_log_path(log_path), ERROR_LOG_MAX_MB, ERROR_LOG_BACKUPS, logging.ERROR
        ))

    logger.propagate = False
    return logger


def set_log_level(level: Union[str, int, None]):
    """Смена уровня корневого логгера MSMCAST (например, из файла конфигурации)"""
    logging.getLogger(ROOT_LOGGER).setLevel(resolve_level(level))


if __name__ == "__main__":
    demo = setup_logger('MSMCAST.Demo', log_level='DEBUG')
    demo.debug("🔍 Отладка")
    demo.info("ℹ️ Информация")
    demo.warning("⚠️ Предупреждение")
    demo.error("❌ Ошибка")

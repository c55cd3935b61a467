"""
MSMCAST - Exceptions
Иерархия ошибок конвейера аппроксимации и прогноза
"""

from typing import Optional


class MSMCastError(Exception):
    """Базовая ошибка MSMCAST"""


# ============================================
# ДАННЫЕ И ПАРАМЕТРЫ АППРОКСИМАЦИИ
# ============================================

class InvalidSeries(MSMCastError, ValueError):
    """Ряд содержит NaN/inf или метки не совпадают по длине"""


class ZeroSize(MSMCastError, ValueError):
    """Размер партиции или сегмента меньше 1"""


class NotPowerOfSegmentSize(MSMCastError, ValueError):
    """K не является целой степенью t"""


class EmptySeries(MSMCastError, ValueError):
    """В ряду нет ни одной полной партиции"""


class LengthMismatch(MSMCastError, ValueError):
    """Несовпадение длин (партиция, окна, списки метрик)"""


class InvalidConfig(MSMCastError, ValueError):
    """Нарушены инварианты конфигурации"""


# ============================================
# ПРОГНОЗ
# ============================================

class SeriesTooShort(MSMCastError):
    """Аппроксимированный ряд короче, чем требует окно"""


class NoCandidates(MSMCastError):
    """Нет ни одного допустимого исторического окна"""


class NoNeighborsWithinThreshold(MSMCastError):
    """Порог ψ отсеял всех кандидатов"""


# ============================================
# ОЦЕНКА
# ============================================

class ZeroPeriodMean(MSMCastError, ValueError):
    """Средняя цена периода P̄ не положительна"""


class EmptyHistory(MSMCastError):
    """Пустая история для базового прогноза"""


class InsufficientHistory(MSMCastError):
    """Недостаточно истории для бэктеста"""


class NoCompletedSteps(MSMCastError):
    """Ни один шаг бэктеста не завершился успешно"""


# ============================================
# ВВОД / ВЫВОД
# ============================================

class DataFileNotFound(MSMCastError, FileNotFoundError):
    """Входной файл не найден"""


class EmptyFile(MSMCastError):
    """Во входном файле нет ни одной цены"""


class ParseError(MSMCastError):
    """Строка CSV не разбирается как конечное число"""

    def __init__(self, row: Optional[int], column: str, content: str, message: str = None):
        self.row = row
        self.column = column
        self.content = content
        if message is None:
            message = f"строка {row}, колонка '{column}': не удалось разобрать '{content}'"
        super().__init__(message)


class ReportFormatError(MSMCastError, ValueError):
    """Файл отчёта не соответствует JSON-схеме"""

"""
MSMCAST - Data Loader
Загрузка цен закрытия из CSV
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from core.exceptions import DataFileNotFound, EmptyFile, InvalidConfig, ParseError
from core.msm_approx import PriceSeries

logger = logging.getLogger('MSMCAST.DataLoader')

ColumnRef = Union[str, int]


@dataclass(frozen=True)
class CsvSchema:
    """Схема входного CSV"""
    price_column: ColumnRef = -1  # по умолчанию последняя колонка
    date_column: Optional[ColumnRef] = None
    has_header: bool = True
    delimiter: str = ','
    skip_bad_rows: bool = False

    def __post_init__(self):
        if not isinstance(self.delimiter, str) or len(self.delimiter) != 1:
            raise InvalidConfig(f"Разделитель должен быть одним символом, получено {self.delimiter!r}")

    def to_dict(self) -> dict:
        return {
            'price_column': self.price_column,
            'date_column': self.date_column,
            'has_header': self.has_header,
            'delimiter': self.delimiter,
            'skip_bad_rows': self.skip_bad_rows,
        }


def _resolve_column(frame: pd.DataFrame, ref: ColumnRef, role: str):
    """Имя колонки или индекс (в т.ч. отрицательный, в т.ч. строкой '2')"""
    columns = list(frame.columns)

    if isinstance(ref, str) and ref in columns:
        return ref

    index = ref
    if isinstance(ref, str):
        try:
            index = int(ref)
        except ValueError:
            raise InvalidConfig(
                f"Колонка {role} '{ref}' не найдена; доступны: {columns}"
            ) from None

    if not -len(columns) <= index < len(columns):
        raise InvalidConfig(
            f"Индекс колонки {role} {index} вне диапазона (колонок: {len(columns)})"
        )
    return columns[index]


def _encoding_error(path: Path, error: UnicodeDecodeError) -> ParseError:
    """ParseError с номером строки первого байта, который не декодируется как UTF-8"""
    data = path.read_bytes()
    try:
        data.decode('utf-8')
        start, end = error.start, error.end
        row = None
    except UnicodeDecodeError as full:
        start, end = full.start, full.end
        row = data.count(b'\n', 0, start) + 1

    content = repr(data[start:end])
    return ParseError(
        row=row,
        column='*',
        content=content,
        message=f"Файл {path} не в кодировке UTF-8: строка {row}, байты {content}",
    )


def load_csv(path: Union[str, Path], schema: CsvSchema = CsvSchema()) -> PriceSeries:
    """
    Загрузка ценового ряда из CSV

    Args:
        path: Путь к файлу
        schema: Схема CSV

    Returns:
        PriceSeries в порядке строк файла (даты - метки, если задана колонка)
    """
    path = Path(path)
    if not path.is_file():
        raise DataFileNotFound(f"Файл не найден: {path}")

    try:
        frame = pd.read_csv(
            path,
            sep=schema.delimiter,
            header=0 if schema.has_header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"Файл пуст: {path}") from None
    except pd.errors.ParserError as e:
        raise ParseError(None, '*', str(path), f"Ошибка разбора CSV {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise _encoding_error(path, e) from e

    if frame.empty:
        raise EmptyFile(f"В файле нет строк с данными: {path}")

    price_col = _resolve_column(frame, schema.price_column, 'цены')
    date_col = None
    if schema.date_column is not None:
        date_col = _resolve_column(frame, schema.date_column, 'даты')

    raw = frame[price_col].astype(str).str.strip()
    prices = pd.to_numeric(raw, errors='coerce')
    bad = prices.isna() | ~np.isfinite(prices.fillna(0.0))

    # номер строки в файле (с 1), с учётом заголовка
    first_line = 2 if schema.has_header else 1

    if bad.any():
        bad_rows = list(np.flatnonzero(bad.to_numpy()))
        first_bad = bad_rows[0]
        if not schema.skip_bad_rows:
            raise ParseError(
                row=first_line + first_bad,
                column=str(price_col),
                content=raw.iloc[first_bad],
                message=(
                    f"Не разобрано строк: {len(bad_rows)}; первая - строка "
                    f"{first_line + first_bad}, колонка '{price_col}': '{raw.iloc[first_bad]}' "
                    f"(используйте --skip-bad-rows)"
                ),
            )
        logger.warning(f"⚠️ Пропущено строк с ошибками: {len(bad_rows)} из {len(frame)}")

    keep = ~bad
    values = prices[keep].astype(float).tolist()
    if not values:
        raise EmptyFile(f"В файле нет ни одной корректной цены: {path}")

    labels = None
    if date_col is not None:
        labels = frame.loc[keep, date_col].astype(str).str.strip().tolist()

    logger.info(f"📥 Загружено {len(values)} цен из {path}")
    return PriceSeries(tuple(values), tuple(labels) if labels is not None else None)

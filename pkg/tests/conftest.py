"""
Общие фикстуры тестов MSMCAST
"""

import math
from pathlib import Path

import numpy as np
import pytest

from core.msm_approx import PriceSeries


@pytest.fixture
def rng():
    return np.random.default_rng(20100401)


def periodic_series(period_values, repeats) -> PriceSeries:
    """Ряд из одного периода, повторённого repeats раз (партиции побитно равны)"""
    return PriceSeries(tuple(np.tile(np.asarray(period_values, dtype=float), repeats).tolist()))


def sine_values(length=540, period=54, amplitude=10.0, level=100.0):
    one_period = [level + amplitude * math.sin(2 * math.pi * i / period) for i in range(period)]
    return np.tile(one_period, length // period).tolist()


@pytest.fixture
def sine_series():
    return PriceSeries(tuple(sine_values()))


@pytest.fixture
def write_csv(tmp_path):
    """Запись текстового CSV во временную директорию"""
    def _write(text: str, name: str = 'prices.csv') -> Path:
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path
    return _write


@pytest.fixture
def sine_csv(tmp_path):
    path = tmp_path / 'sine.csv'
    lines = ['close'] + [repr(v) for v in sine_values()]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path

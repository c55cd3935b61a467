"""
MSMCAST - Главный файл
CLI: аппроксимация MSM, прогноз kNN, бэктест и сравнение методов
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

# Конфигурация
from config.settings import (
    GRANULARITIES,
    LOG_LEVELS,
    MODES,
    OUTPUT_FORMATS,
    RunConfig,
    build_run_config,
    load_config_file,
    settings,
)

# Основные компоненты
from core.backtester import backtest_approximated, compare_methods, monthly_breakdown
from core.data_loader import load_csv
from core.exceptions import MSMCastError
from core.knn_forecast import predict
from core.msm_approx import approximate, build_trees
from core import report_writer

# Утилиты
from utils.logger import ROOT_LOGGER, set_log_level, setup_logger

logger = logging.getLogger('MSMCAST.Main')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_UNEXPECTED = 3


class MSMCAST:
    """
    Конвейер одного запуска
    Этапы: load -> approximate -> predict/backtest/compare -> write
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.stage = 'init'
        self.series = None
        self.ap = None

    def run(self):
        """Выполнение всех этапов выбранного режима"""
        cfg = self.config
        logger.info("=" * 60)
        logger.info(f"🚀 MSMCAST: {cfg.mode}")
        logger.info(
            f"  📐 K={cfg.approx.partition_size}, t={cfg.approx.segment_size} | "
            f"w={cfg.forecast.window}, k={cfg.forecast.neighbors}, m={cfg.forecast.horizon}, "
            f"ψ={cfg.forecast.threshold}"
        )
        logger.info("=" * 60)

        self.stage = 'load'
        self.series = load_csv(cfg.input_path, cfg.csv)

        handler = {
            'approximate': self._approximate,
            'predict': self._predict,
            'backtest': self._backtest,
            'compare': self._compare,
        }[cfg.mode]
        kind, result, metadata, frame = handler()

        self.stage = 'write'
        if cfg.output_format == 'csv':
            report_writer.write_csv(frame, cfg.output_path)
        else:
            envelope = report_writer.build_envelope(kind, cfg.to_dict(), result, metadata)
            report_writer.write_json(envelope, cfg.output_path)

        logger.info("✅ Готово")

    def _approximated(self):
        self.stage = 'approximate'
        self.ap = approximate(self.series, self.config.approx)
        return self.ap

    def _approximate(self):
        ap = self._approximated()
        trees = build_trees(self.series, self.config.approx) if self.config.emit_trees else None
        logger.info(f"📉 N={len(self.series)} -> n={len(ap)}, отброшено: {ap.dropped_tail}")
        return (
            report_writer.KIND_APPROXIMATE,
            report_writer.approximation_to_dict(ap, trees),
            {},
            report_writer.approximation_rows(ap),
        )

    def _predict(self):
        ap = self._approximated()
        self.stage = 'predict'
        forecast = predict(ap, self.config.forecast)
        logger.info(
            f"🔮 Прогноз: {[round(v, 6) for v in forecast.values]} "
            f"(соседей: {forecast.divisor})"
        )
        return (
            report_writer.KIND_FORECAST,
            forecast.to_dict(),
            {},
            report_writer.forecast_rows(forecast),
        )

    def _backtest(self):
        ap = self._approximated()
        self.stage = 'backtest'
        report = backtest_approximated(ap, self.config.forecast, self.config.start_fraction)
        monthly = monthly_breakdown(report, ap)
        logger.info(
            f"📊 MER: {report.mer_percent:.4f}% | MAE: {report.mae:.6g} | "
            f"шагов: {len(report.steps)} | {report.mean_prediction_ms:.3f} мс/прогноз"
        )
        return (
            report_writer.KIND_BACKTEST,
            report_writer.backtest_to_dict(report, monthly),
            {'timing': report_writer.timing_metadata({report.method: report})},
            report_writer.backtest_rows(report),
        )

    def _compare(self):
        self._approximated()
        self.stage = 'compare'
        cfg = self.config
        comparison = compare_methods(
            self.series, cfg.approx, cfg.forecast, cfg.start_fraction,
            include_full_resolution=cfg.approx.partition_size > 1,
        )
        for method, report in comparison.reports().items():
            logger.info(f"  • {method}: MER {report.mer_percent:.4f}% | MAE {report.mae:.6g}")
        return (
            report_writer.KIND_COMPARE,
            report_writer.comparison_to_dict(comparison),
            {'timing': report_writer.timing_metadata(comparison.reports())},
            report_writer.comparison_rows(comparison),
        )


def run(config: RunConfig) -> int:
    """
    Запуск конвейера

    Returns:
        Код выхода: 0 - успех, 1 - ошибка этапа, 3 - непредвиденная ошибка
    """
    pipeline = MSMCAST(config)
    try:
        pipeline.run()
    except MSMCastError as e:
        logger.error(f"❌ {pipeline.stage} failed: {type(e).__name__}: {e}")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"❌ Критическая ошибка на этапе {pipeline.stage}: {e}", exc_info=True)
        return EXIT_UNEXPECTED
    return EXIT_OK


def _add_common_arguments(parser: argparse.ArgumentParser):
    # default=None: незаданный флаг не перекрывает файл конфигурации
    io = parser.add_argument_group('ввод/вывод')
    io.add_argument('--input', type=str, default=None, help='CSV с ценами закрытия')
    io.add_argument('--output', type=str, default=None, help='Файл отчёта (по умолчанию stdout)')
    io.add_argument('--format', type=str, default=None, choices=OUTPUT_FORMATS,
                    help='Формат отчёта (по умолчанию json)')
    io.add_argument('--config', type=str, default=None, help='Файл конфигурации key=value')

    msm = parser.add_argument_group('аппроксимация')
    msm.add_argument('--partition-size', '-K', type=int, default=None,
                     help='Размер партиции K (по умолчанию 27)')
    msm.add_argument('--segment-size', '-t', type=int, default=None,
                     help='Размер сегмента t, K = t^l (по умолчанию 3)')
    msm.add_argument('--granularity', type=str, default=None, choices=GRANULARITIES,
                     help='raw - дневная гранулярность (K=1, t=1)')
    msm.add_argument('--emit-trees', action='store_true', default=None,
                     help='Выгрузить деревья всех партиций (approximate, json)')

    knn = parser.add_argument_group('прогноз')
    knn.add_argument('--window', '-w', type=int, default=None, help='Окно шаблона w (по умолчанию 3)')
    knn.add_argument('--neighbors', '-k', type=int, default=None, help='Число соседей k (по умолчанию 2)')
    knn.add_argument('--horizon', '-m', type=int, default=None, help='Горизонт m (по умолчанию 1)')
    knn.add_argument('--threshold', type=float, default=None, help='Порог расстояния ψ (по умолчанию нет)')
    knn.add_argument('--start-fraction', type=float, default=None,
                     help='Начало бэктеста, доля ряда (по умолчанию 0.7)')

    csv = parser.add_argument_group('CSV')
    csv.add_argument('--price-column', type=str, default=None,
                     help='Колонка цены: имя или индекс (по умолчанию последняя)')
    csv.add_argument('--date-column', type=str, default=None, help='Колонка даты: имя или индекс')
    csv.add_argument('--delimiter', type=str, default=None, help='Разделитель (по умолчанию ,)')
    csv.add_argument('--no-header', action='store_true', default=None, help='В файле нет заголовка')
    csv.add_argument('--skip-bad-rows', action='store_true', default=None,
                     help='Пропускать строки с нечисловой ценой')

    parser.add_argument('--log-level', type=str, default=None, choices=LOG_LEVELS,
                        help='Уровень логирования')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='msmcast',
        description='MSM-аппроксимация и kNN-прогноз ценовых рядов',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Примеры:
  python main.py approximate --input prices.csv -K 27 -t 3
  python main.py predict --input prices.csv -w 3 -k 2 -m 1
  python main.py backtest --input prices.csv --output report.json
  python main.py compare --input prices.csv --format csv --output compare.csv
        """
    )
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='{' + ','.join(MODES) + '}')
    helps = {
        'approximate': 'Аппроксимация ряда (Ap и, опционально, деревья)',
        'predict': 'Прогноз следующих m значений',
        'backtest': 'Walk-forward бэктест MSM-kNN',
        'compare': 'Сравнение MSM-kNN с базовыми методами',
    }
    for mode in MODES:
        _add_common_arguments(subparsers.add_parser(mode, help=helps[mode]))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа CLI"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    options: Dict = vars(args)
    mode = options.pop('command')
    config_path = options.pop('config')

    setup_logger(
        ROOT_LOGGER,
        log_level=options.get('log_level') or settings.LOG_LEVEL,
        log_to_file=settings.LOG_TO_FILE,
        log_file=settings.LOG_FILE,
        max_file_size_mb=settings.LOG_MAX_SIZE_MB,
        backup_count=settings.LOG_BACKUP_COUNT,
    )

    try:
        file_values = load_config_file(config_path) if config_path else {}
        config = build_run_config(mode, options, file_values)
    except MSMCastError as e:
        logger.error(f"❌ config failed: {type(e).__name__}: {e}")
        return EXIT_FAILURE

    # уровень мог прийти из файла конфигурации
    set_log_level(config.log_level)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

"""
Тесты настройки логирования
"""

import io
import logging

import pytest

from utils.logger import error_log_path, resolve_level, set_log_level, setup_logger


@pytest.fixture
def logger_name():
    name = 'MSMCAST.TestLogger'
    yield name
    logger = logging.getLogger(name)
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()


class TestResolveLevel:

    @pytest.mark.parametrize('level,expected', [
        ('debug', logging.DEBUG),
        ('WARNING', logging.WARNING),
        (' error ', logging.ERROR),
        (logging.INFO, logging.INFO),
        (None, logging.INFO),
        ('verbose', logging.INFO),
    ])
    def test_names(self, level, expected):
        assert resolve_level(level) == expected


class TestSetupLogger:

    def test_console_stream(self, logger_name):
        stream = io.StringIO()
        logger = setup_logger(logger_name, log_level='WARNING', stream=stream)

        logger.info("скрыто")
        logger.warning("видно")

        text = stream.getvalue()
        assert 'видно' in text
        assert 'скрыто' not in text
        assert '\033[' not in text
        assert logger.propagate is False

    def test_repeated_setup_keeps_one_handler(self, logger_name):
        setup_logger(logger_name, stream=io.StringIO())
        logger = setup_logger(logger_name, stream=io.StringIO())
        assert len(logger.handlers) == 1

    def test_unknown_level(self, logger_name):
        logger = setup_logger(logger_name, log_level='verbose', stream=io.StringIO())
        assert logger.level == logging.INFO

    def test_file_and_error_log(self, logger_name, tmp_path):
        log_file = tmp_path / 'logs' / 'run.log'
        logger = setup_logger(logger_name, log_level='DEBUG', log_to_file=True,
                              log_file=log_file, stream=io.StringIO())

        logger.info("шаг готов")
        logger.error("шаг упал")
        for handler in logger.handlers:
            handler.flush()

        errors = error_log_path(log_file)
        assert errors == tmp_path / 'logs' / 'run_errors.log'
        assert 'шаг готов' in log_file.read_text(encoding='utf-8')
        error_text = errors.read_text(encoding='utf-8')
        assert 'шаг упал' in error_text
        assert 'шаг готов' not in error_text


class TestSetLogLevel:

    def test_root_level(self):
        root = logging.getLogger('MSMCAST')
        previous = root.level
        try:
            set_log_level('debug')
            assert root.level == logging.DEBUG
        finally:
            root.setLevel(previous)

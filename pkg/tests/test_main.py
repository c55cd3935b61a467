"""
Сквозные тесты CLI
"""

import dataclasses
import json

import pytest

import main as main_module
from config import settings as settings_module
from config.settings import Settings
from core import report_writer as rw
from core.backtester import backtest_approximated
from core.data_loader import load_csv
from core.knn_forecast import ForecastConfig
from core.msm_approx import ApproxParams, approximate
from main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main

SINE_FLAGS = ['-K', '27', '-t', '3', '-w', '3', '-k', '2', '-m', '1']


def _without_metadata(path):
    envelope = json.loads(path.read_text(encoding='utf-8'))
    envelope.pop('metadata')
    return json.dumps(envelope, sort_keys=True)


class TestBacktestCommand:

    def test_sine_backtest(self, sine_csv, tmp_path):
        out = tmp_path / 'report.json'
        code = main(['backtest', '--input', str(sine_csv), '--output', str(out), *SINE_FLAGS])

        assert code == EXIT_OK
        loaded = rw.load_backtest_report(out)
        assert loaded.mer_percent < 5.0

        ap = approximate(load_csv(sine_csv), ApproxParams(27, 3))
        expected = backtest_approximated(ap, ForecastConfig(3, 2, 1), 0.7)
        assert dataclasses.replace(loaded, elapsed_prediction_time=expected.elapsed_prediction_time) == expected

    def test_report_is_reproducible(self, sine_csv, tmp_path):
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        assert main(['backtest', '--input', str(sine_csv), '--output', str(first)]) == EXIT_OK
        assert main(['backtest', '--input', str(sine_csv), '--output', str(second)]) == EXIT_OK
        assert _without_metadata(first) == _without_metadata(second)

    def test_csv_is_byte_identical(self, sine_csv, tmp_path):
        first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
        for path in (first, second):
            assert main(['backtest', '--input', str(sine_csv), '--format', 'csv', '--output', str(path)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text(encoding='utf-8').splitlines()[0] == 'step,horizon,predicted,actual,abs_error'

    def test_unknown_env_log_level(self, sine_csv, tmp_path, monkeypatch):
        monkeypatch.setenv('MSMCAST_LOG_LEVEL', 'verbose')
        env = Settings()
        monkeypatch.setattr(main_module, 'settings', env)
        monkeypatch.setattr(settings_module, 'settings', env)

        out = tmp_path / 'report.json'
        assert main(['backtest', '--input', str(sine_csv), '--output', str(out)]) == EXIT_OK
        assert json.loads(out.read_text(encoding='utf-8'))['kind'] == rw.KIND_BACKTEST

    def test_config_file_and_flag_precedence(self, sine_csv, tmp_path):
        conf = tmp_path / 'run.conf'
        conf.write_text(f"input={sine_csv}\nwindow=2\nneighbors=3\n", encoding='utf-8')
        out = tmp_path / 'report.json'

        assert main(['backtest', '--config', str(conf), '-k', '2', '--output', str(out)]) == EXIT_OK
        config = json.loads(out.read_text(encoding='utf-8'))['config']
        assert config['forecast']['window'] == 2
        assert config['forecast']['neighbors'] == 2


class TestCompareCommand:

    def test_msm_beats_persistence(self, sine_csv, tmp_path):
        out = tmp_path / 'compare.json'
        assert main(['compare', '--input', str(sine_csv), '--output', str(out), *SINE_FLAGS]) == EXIT_OK

        envelope = rw.load_json_report(out)
        comparison = rw.comparison_from_dict(envelope['result'], envelope['metadata'])
        assert comparison.msm_knn.mer_percent < comparison.persistence.mer_percent
        assert comparison.full_resolution is not None
        assert set(envelope['metadata']['timing']) == {'msm_knn', 'persistence', 'full_resolution'}


class TestApproximateCommand:

    def test_identity_reproduces_prices(self, write_csv, tmp_path):
        path = write_csv("close\n10.5\n11.25\n9.75\n12.0\n")
        out = tmp_path / 'ap.csv'
        code = main(['approximate', '--input', str(path), '-K', '1', '-t', '1',
                     '--format', 'csv', '--output', str(out)])

        assert code == EXIT_OK
        assert out.read_text(encoding='utf-8').splitlines() == \
            ['index,value', '0,10.5', '1,11.25', '2,9.75', '3,12.0']

    def test_emit_trees_to_stdout(self, write_csv, capsys):
        path = write_csv("close\n" + "\n".join(str(v) for v in range(1, 55)) + "\n")
        assert main(['approximate', '--input', str(path), '--emit-trees']) == EXIT_OK

        envelope = json.loads(capsys.readouterr().out)
        assert envelope['result']['values'] == [14.0, 41.0]
        assert envelope['result']['trees'][0]['levels'][-1] == [14.0]


class TestFailures:

    def test_window_longer_than_series(self, write_csv, capsys):
        path = write_csv("close\n" + "\n".join(str(v) for v in range(1, 55)) + "\n")
        code = main(['predict', '--input', str(path), '-w', '3'])

        assert code == EXIT_FAILURE
        err = capsys.readouterr().err
        assert 'SeriesTooShort' in err
        assert 'predict failed' in err

    def test_missing_input(self, tmp_path, capsys):
        code = main(['backtest', '--input', str(tmp_path / 'missing.csv')])
        assert code == EXIT_FAILURE
        assert 'load failed: DataFileNotFound' in capsys.readouterr().err

    def test_undecodable_input(self, tmp_path, capsys):
        path = tmp_path / 'prices.csv'
        path.write_bytes(b'close\n10.5\n\xff\xfe11.0\n')
        code = main(['backtest', '--input', str(path)])
        assert code == EXIT_FAILURE
        assert 'load failed: ParseError' in capsys.readouterr().err

    def test_invalid_parameters(self, sine_csv, capsys):
        code = main(['backtest', '--input', str(sine_csv), '-K', '10'])
        assert code == EXIT_FAILURE
        assert 'config failed: InvalidConfig' in capsys.readouterr().err

    @pytest.mark.parametrize('argv', [
        [],
        ['forecast'],
        ['backtest', '--window', 'three'],
        ['backtest', '--format', 'xml'],
    ])
    def test_usage_errors(self, argv):
        assert main(argv) == EXIT_USAGE

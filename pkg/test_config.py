"""Tests for settings loading and logging setup"""

import logging

import pytest

from nearres.config import RuntimeSettings, load_settings, read_config_file, setup_logging
from nearres.errors import ConfigError


@pytest.fixture
def clean_logger():
    logger = logging.getLogger('nearres')
    saved, level = list(logger.handlers), logger.level
    for handler in saved:
        logger.removeHandler(handler)
    yield logger
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)
    for handler in saved:
        logger.addHandler(handler)
    logger.setLevel(level)


def test_environment_sets_threads(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('NEARRES_THREADS', '3')
    monkeypatch.setenv('NEARRES_OUTPUT_DIR', 'out')
    settings = load_settings(None)
    assert settings.threads == 3
    assert settings.output_dir == 'out'


def test_empty_environment_value_falls_back(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('NEARRES_MAX_MODES', '')
    assert load_settings(None).max_modes == 200_000


def test_yaml_merges_over_defaults(tmp_path):
    path = tmp_path / 'settings.yaml'
    path.write_text("log_level: DEBUG\nthreads: 2\ndefaults:\n  simulate:\n    radius: 4\n")
    settings = load_settings(str(path))
    assert settings.log_level == 'DEBUG'
    assert settings.threads == 2
    assert settings.defaults == {'simulate': {'radius': 4}}


def test_json_is_accepted(tmp_path):
    path = tmp_path / 'settings.json'
    path.write_text('{"max_modes": 5000}')
    assert load_settings(str(path)).max_modes == 5000


@pytest.mark.parametrize('text', [
    "colour: red\n", "threads: 0\n", "max_modes: 0\n", "- a\n- b\n", "a: [\n",
    "tie_margin: -1\n", "reality_tol: loose\n", "blowup_factor: 0.5\n",
])
def test_bad_settings_rejected(tmp_path, text):
    path = tmp_path / 'bad.yaml'
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_settings(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(str(tmp_path / 'absent.yaml'))
    assert read_config_file(str(_empty(tmp_path))) == {}


def _empty(tmp_path):
    path = tmp_path / 'empty.yaml'
    path.write_text('')
    return path


def test_setup_logging_is_idempotent(clean_logger):
    settings = RuntimeSettings(threads=1, log_level='warning')
    setup_logging(settings)
    setup_logging(settings)
    consoles = [h for h in clean_logger.handlers if getattr(h, '_nearres_console', False)]
    assert len(consoles) == 1
    assert clean_logger.level == logging.WARNING


def test_file_handler(clean_logger, tmp_path):
    setup_logging(RuntimeSettings(threads=1, log_dir=str(tmp_path / 'logs')))
    logging.getLogger('nearres.test').info('hello')
    logs = list((tmp_path / 'logs').glob('nearres_*.log'))
    assert len(logs) == 1
    for handler in clean_logger.handlers:
        handler.flush()
    assert 'hello' in logs[0].read_text()


def test_bad_log_level(clean_logger):
    with pytest.raises(ConfigError):
        setup_logging(RuntimeSettings(threads=1, log_level='LOUD'))

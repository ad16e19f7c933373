from fractions import Fraction

import pytest

from probstream import api
from probstream.config import Config
from probstream.core import ParameterError


def test_defaults(config):
    assert config.general['digits'] == 20
    assert config.general['exact_bits_cap'] == 1 << 20
    assert config.general['seed_variable'] == 'PROBSTREAM_SEED'
    assert config.adversary['gamma'] == Fraction(1, 2)
    assert config.amplifier == {'copies': 21, 'mode': 'majority'}


def test_user_file_overrides_defaults(tmp_path):
    # Given
    path = tmp_path / 'probstream.yml'
    path.write_text('general:\n  digits: 8\namplifier:\n  copies: 55\n', encoding='utf-8')

    # When
    config = Config.build(path)

    # Then
    assert config.general['digits'] == 8
    assert config.general['enumeration_cap'] == 4096
    assert config.amplifier == {'copies': 55, 'mode': 'majority'}


def test_empty_user_file(tmp_path):
    # Given
    path = tmp_path / 'empty.yml'
    path.write_text('', encoding='utf-8')

    # When
    config = Config.build(path)

    # Then
    assert config.general['seed'] == 0


def test_initialize_caches_per_path(tmp_path):
    # Given
    path = str(tmp_path / 'probstream.yml')
    with open(path, 'w', encoding='utf-8') as f:
        f.write('general:\n  seed: 7\n')

    # When
    default = api.initialize({})
    custom = api.initialize({'config': path})

    # Then
    assert api.initialize({}) is default
    assert api.initialize({'config': path}) is custom
    assert custom.general['seed'] == 7


def test_make_rng_uses_the_configured_seed():
    assert api.make_rng({}).random() == api.make_rng({}).random()


def test_make_rng_from_environment(monkeypatch):
    # Given
    monkeypatch.setenv('PROBSTREAM_SEED', '42')

    # When
    value = api.make_rng({}).random()

    # Then
    monkeypatch.setenv('PROBSTREAM_SEED', '43')
    assert api.make_rng({}).random() != value


def test_make_rng_rejects_malformed_seed(monkeypatch):
    # Given
    monkeypatch.setenv('PROBSTREAM_SEED', 'seven')

    # When / Then
    with pytest.raises(ParameterError):
        api.make_rng({})

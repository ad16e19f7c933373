from fractions import Fraction

import pytest

from probstream import api
from probstream.core import GenerationError, ParameterError, StreamOverflowError
from probstream.streamfile import parse_stream

HALF = Fraction(1, 2)


def test_approx_report(context):
    # When
    report = api.approx([HALF, HALF], HALF, 2, 1, context=context)

    # Then
    assert report['algorithm'] == 'approx'
    assert report['output']['exact'] == Fraction(81, 256)
    assert report['output']['inexact'] is False
    assert report['space']['index_bound'] == 4
    assert 'oracle' not in report


def test_approx_oracle_without_units():
    # When
    report = api.approx([HALF, HALF], HALF, 2, 1, context={'oracle': True, 'no_units': True})

    # Then
    assert report['oracle']['pass'] is True
    assert report['oracle']['checks'] == {'band': True, 'index_bound': True, 'sum_bound': True, 'space': True}
    assert report['space']['serialized'] == 4


def test_unexpected_errors_are_wrapped(context):
    with pytest.raises(api.ProbstreamException) as excinfo:
        api.approx(['x'], HALF, 2, 1, context=context)

    assert 'Please attach this block to any bug report.' in str(excinfo.value)


def test_library_errors_pass_through(context):
    with pytest.raises(StreamOverflowError):
        api.approx([HALF, HALF, HALF], HALF, 2, 1, context=context)


def test_threshold_report():
    # When
    report = api.threshold([HALF, HALF, HALF], 4, 1, context={'oracle': True})

    # Then
    assert report['decision'] == 1
    assert report['early_exit'] is True
    assert report['oracle']['checks'] == {'decision': True, 'early_exit': True}
    assert report['oracle']['expected'] == 1


def test_threshold_rejects_empty_stream(context):
    with pytest.raises(ParameterError):
        api.threshold([], 2, 1, context=context)


def test_threshold_amplified_is_reproducible(context):
    # Given
    stream = [Fraction(2, 7), Fraction(3, 5), Fraction(3, 7)]

    # When
    first = api.threshold(stream, 2, 3, context=context, noise=Fraction(1, 3))
    second = api.threshold(stream, 2, 3, context=context, noise=Fraction(1, 3))

    # Then
    assert first['automaton'] == 'majority(noisy(ThresholdAutomaton(primes), 1/3) x21)'
    assert first['decision'] == second['decision']


def test_window_report_without_trace(context):
    # When
    report = api.window([HALF, HALF, 1], HALF, 2, 1, context=context)

    # Then
    assert report['steps'] is None
    assert report['output']['exact'] == Fraction(9, 16)
    assert report['space']['slot_width'].magnitude == 3


def test_window_trace_and_oracle():
    # When
    report = api.window([0, HALF, HALF], HALF, 2, 1, context={'trace': True, 'oracle': True})

    # Then
    assert [step['output'] for step in report['steps']] == [0, 0, Fraction(81, 256)]
    assert [step['window'] for step in report['steps']] == [0, 0, Fraction(1, 4)]
    assert report['oracle']['failed_steps'] is None
    assert report['oracle']['pass'] is True


def test_generate_bucket(context):
    # When
    report, files = api.generate('bucket', context=context, epsilon=Fraction(1, 3), n=4, b=2, j=13)

    # Then
    assert report['bucket'] == 13
    assert report['length'] == 6
    assert files == [('bucket-0013.txt', '1/4\n1/4\n1/4\n2/3\n2/3\n2/3\n')]


def test_generate_appfool(context):
    # When
    report, files = api.generate('appfool', context=context, epsilon=Fraction(1, 3), n=4, b=2, stride=5)

    # Then
    assert report['streams'] == 3
    assert [name for name, _ in files] == ['appfool-0000.txt', 'appfool-0001.txt', 'appfool-0002.txt']


def test_generate_primes(context):
    # When
    report, files = api.generate('primes', context=context, n=2, b=1)

    # Then
    assert report['threshold'] == Fraction(2, 17)
    assert report['words'] == 4
    assert len(files) == 8
    word, suffix = parse_stream(files[0][1].splitlines()), parse_stream(files[1][1].splitlines())
    assert word.threshold == Fraction(2, 17)
    assert word.elements == (Fraction(2, 3), Fraction(11, 13))
    assert suffix.elements == (Fraction(3, 7), Fraction(91, 187))


@pytest.mark.parametrize('family, kwargs', [('spiral', {}), ('bucket', {}), ('appfool', {'epsilon': 0})])
def test_generate_rejects(context, family, kwargs):
    with pytest.raises(ParameterError):
        api.generate(family, context=context, **kwargs)


def test_generation_error_passes_through(context, monkeypatch):
    # Given
    monkeypatch.setattr(api, 'bucket_of_value', lambda *args: -1)

    # When / Then
    with pytest.raises(GenerationError):
        api.generate('bucket', context=context, epsilon=Fraction(1, 3), n=4, b=2, j=2)


def test_protocol_gt_app(context):
    # When
    report = api.protocol('gt-app', context=context, epsilon=Fraction(1, 3), n=4, b=2, i=2, j=0)

    # Then
    assert report['automaton'] == 'ProductApproximator'
    assert report['parameters']['y'] == 13
    assert report['transcript']['decision'] == 1
    assert report['oracle']['pass'] is True


def test_protocol_sweep_with_trace():
    # When
    report = api.protocol('gt-tpp', context={'trace': True}, n=1, b=1, sweep=True)

    # Then
    assert report['sweep']['instances'] == 4
    assert len(report['sweep']['transcripts']) == 4
    assert report['oracle'] == {'failures': 0, 'checks': {'decisions': True}, 'pass': True}


@pytest.mark.parametrize('reduction, kwargs', [
    ('gt-both', {}),
    ('gt-app', {'n': 4, 'b': 2, 'i': 1, 'j': 0}),
    ('igt-swapp', {'epsilon': HALF, 'm': 2, 'b': 12, 'alice': (1, 1), 'i': 1}),
])
def test_protocol_rejects(context, reduction, kwargs):
    with pytest.raises(ParameterError):
        api.protocol(reduction, context=context, **kwargs)


def test_debug_info():
    # When
    info = api.debug_info(context={'command': 'approx', 'oracle': False})

    # Then
    assert 'pint: ' in info
    assert 'command: approx' in info
    assert 'oracle' not in info

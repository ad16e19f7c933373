import random
from fractions import Fraction

import pytest

from probstream.automata import Amplifier, AmplifierConfig, NoisyAutomaton, NoisyState, ProductApproximator
from probstream.automata import ThresholdAutomaton
from probstream.core import ParameterError

BELOW = [Fraction(2, 7), Fraction(3, 5), Fraction(3, 7)]
THIRD = Fraction(1, 3)


def error_rate(automaton, trials):
    return sum(1 for _ in range(trials) if not automaton.evaluate(BELOW)) / trials


@pytest.fixture
def threshold_automaton():
    return ThresholdAutomaton(2, 3, 'primes')


@pytest.mark.parametrize('copies, mode', [(0, 'majority'), (4, 'majority'), (3, 'mean')])
def test_config_rejects(copies, mode):
    with pytest.raises(ParameterError):
        AmplifierConfig.build(copies, mode)


@pytest.mark.parametrize('target_error', [0, THIRD, Fraction(1, 2)])
def test_for_error_rejects(target_error):
    with pytest.raises(ParameterError):
        AmplifierConfig.for_error(target_error)


@pytest.mark.parametrize('target_error, copies', [(Fraction(1, 20), 55), (Fraction(1, 100), 83)])
def test_for_error(target_error, copies):
    # When
    config = AmplifierConfig.for_error(target_error)

    # Then
    assert config.copies == copies
    assert config.mode == 'majority'
    assert config.target_error == target_error


def test_noisy_without_error_is_exact(threshold_automaton):
    # Given
    automaton = NoisyAutomaton(threshold_automaton, 0, random.Random(1))

    # Then
    assert automaton.randomized
    assert all(automaton.evaluate(BELOW) for _ in range(50))
    assert automaton.name == 'noisy(ThresholdAutomaton(primes), 0)'


@pytest.mark.parametrize('error', [-THIRD, 1, Fraction(3, 2)])
def test_noisy_rejects(threshold_automaton, error):
    with pytest.raises(ParameterError):
        NoisyAutomaton(threshold_automaton, error)


def test_noisy_error_rate(threshold_automaton, rng):
    # Given
    automaton = NoisyAutomaton(threshold_automaton, THIRD, rng)

    # When
    rate = error_rate(automaton, 3000)

    # Then
    assert 0.28 < rate < 0.39


def test_noisy_serialize_state(threshold_automaton, rng):
    # Given
    automaton = NoisyAutomaton(threshold_automaton, THIRD, rng)
    state = NoisyState(True, threshold_automaton.run(BELOW))

    # When
    bits = automaton.serialize_state(state)

    # Then
    assert bits[0] == '1'
    assert automaton.deserialize_state(bits) == state
    assert automaton.output(state) is False
    with pytest.raises(ParameterError):
        automaton.deserialize_state('')


def test_majority_of_noisy_copies(threshold_automaton, rng):
    # Given
    amplifier = Amplifier(NoisyAutomaton(threshold_automaton, THIRD), AmplifierConfig.build(21, 'majority'), rng)

    # When
    rate = error_rate(amplifier, 2000)

    # Then
    assert amplifier.randomized
    assert amplifier.name == 'majority(noisy(ThresholdAutomaton(primes), 1/3) x21)'
    assert rate < 0.08


def test_copies_for_target_error(threshold_automaton, rng):
    # Given
    config = AmplifierConfig.for_error(Fraction(1, 20))
    amplifier = Amplifier(NoisyAutomaton(threshold_automaton, THIRD), config, rng)

    # When
    rate = error_rate(amplifier, 2000)

    # Then
    assert rate < 0.05


@pytest.mark.slow
def test_majority_of_noisy_copies_at_scale(threshold_automaton, rng):
    # Given
    amplifier = Amplifier(NoisyAutomaton(threshold_automaton, THIRD), AmplifierConfig.for_error(Fraction(1, 20)), rng)

    # When
    rate = error_rate(amplifier, 10 ** 4)

    # Then
    assert rate < 0.05


def test_median_of_deterministic_copies():
    # Given
    automaton = ProductApproximator(2, 1, Fraction(1, 2))
    amplifier = Amplifier(automaton, AmplifierConfig.build(3), random.Random(3))

    # When
    value = amplifier.evaluate([Fraction(1, 2), Fraction(1, 2)])

    # Then
    assert not amplifier.randomized
    assert value == Fraction(81, 256)


def test_amplifier_serialize_state(threshold_automaton, rng):
    # Given
    amplifier = Amplifier(NoisyAutomaton(threshold_automaton, THIRD), AmplifierConfig.build(5, 'majority'), rng)
    state = amplifier.run(BELOW)

    # When
    bits = amplifier.serialize_state(state)

    # Then
    assert amplifier.deserialize_state(bits) == state
    assert amplifier.output(amplifier.deserialize_state(bits)) == amplifier.output(state)


def test_spawned_copies_are_independent(threshold_automaton):
    # Given
    amplifier = Amplifier(NoisyAutomaton(threshold_automaton, THIRD), AmplifierConfig.build(41, 'majority'),
                          random.Random(7))

    # When
    coins = [state.flip for state in amplifier.initial_state()]

    # Then
    assert len(set(coins)) == 2

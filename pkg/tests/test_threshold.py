import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from probstream.adversary import fooling_check, gen_prime_family
from probstream.automata import PrimeExponentVector, ThresholdAutomaton, ThresholdState, factor_over_primes
from probstream.automata.threshold import MODES, early_exit_count
from probstream.core import OversizedElementError, ParameterError, StreamOverflowError
from probstream.numerics import Probability, exact_product

from . import parameters_from_yaml

HALF = Probability(1, 2)


@pytest.mark.parametrize('mode', MODES)
@pytest.mark.parametrize('expected,row', parameters_from_yaml(__name__, 'decisions'))
def test_decision(mode, expected, row):
    # Given
    automaton = ThresholdAutomaton(row['n'], row['b'], mode)

    # When
    actual = automaton.evaluate(row['stream'])

    # Then
    assert actual is expected


@pytest.mark.parametrize('row', parameters_from_yaml(__name__, 'factor_over_primes'))
def test_factor_over_primes(row):
    # When
    vector = factor_over_primes(row['q'], row['b'])

    # Then
    assert vector == row['expected']
    assert vector.value() == row['q']


@pytest.mark.parametrize('expected,b', parameters_from_yaml(__name__, 'early_exit_count'))
def test_early_exit_count(expected, b):
    assert early_exit_count(b) == expected


def test_factor_over_primes_rejects():
    with pytest.raises(OversizedElementError):
        factor_over_primes(Fraction(1, 5), 2)
    with pytest.raises(ValueError):
        factor_over_primes(0, 2)


def test_prime_exponent_vector():
    # Given
    left = PrimeExponentVector({2: 1, 3: -1})
    right = PrimeExponentVector({3: 1, 5: -2})

    # When
    total = left + right

    # Then
    assert dict(total) == {2: 1, 5: -2}
    assert list(total) == [2, 5]
    assert total.split() == (2, 25)
    assert total.value() == Fraction(2, 25)
    assert dict(total.clamp(1)) == {2: 1, 5: -1}
    assert len(total.clamp(0)) == 0


def test_early_exit_is_latched():
    # Given: B = 2 so two elements <= 1/2 force the product below 1/2
    automaton = ThresholdAutomaton(5, 1, 'primes')

    # When
    state = automaton.run([HALF, HALF, HALF])
    later = automaton.run([HALF, 1, 1], state)

    # Then
    assert state.early_exit
    assert state.small_factor_count == 2
    assert later == state._replace(count=5)
    assert automaton.output(later) is True


def test_early_exit_soundness():
    # Given
    rng = random.Random(5)
    automaton = ThresholdAutomaton(60, 3, 'primes')
    big_b = 8

    # When / Then
    for _ in range(300):
        threshold = Probability(rng.randint(1, big_b), big_b)
        stream = [Probability(rng.randint(1, s), s) for s in (rng.randint(1, big_b) for _ in range(60))]
        state = automaton.run([threshold] + stream)
        if state.early_exit and threshold >= Fraction(1, big_b):
            assert exact_product(stream) < threshold
        assert automaton.output(state) == (exact_product(stream) < threshold)


@pytest.mark.parametrize('mode', MODES)
def test_serialize_state(mode):
    # Given
    automaton = ThresholdAutomaton(3, 3, mode)
    states = [
        automaton.initial_state(),
        automaton.run([Fraction(2, 7)]),
        automaton.run([Fraction(2, 7), Fraction(3, 5), Fraction(3, 7)]),
        automaton.run([Fraction(2, 7), Fraction(3, 5), 0]),
    ]

    # When
    encodings = [automaton.serialize_state(state) for state in states]

    # Then
    assert len(set(encodings)) == len(states)
    for state, bits in zip(states, encodings):
        assert automaton.deserialize_state(bits) == state


def test_serialized_size_of_storeall():
    # Given
    automaton = ThresholdAutomaton(2, 3, 'storeall')

    # When
    state = automaton.run([Fraction(2, 7), Fraction(3, 5), Fraction(3, 7)])
    report = automaton.space_report(state)

    # Then
    assert report.serialized_bits == 1 + 6 + 1 + 2 + 12
    assert report.storeall_bits == 2 * 3 * 3


def test_space_report_of_primes():
    # Given
    automaton = ThresholdAutomaton(2, 3, 'primes')

    # When
    report = automaton.space_report(automaton.run([Fraction(2, 7), Fraction(3, 5)]))

    # Then
    assert report.tracked_primes == 4
    assert report.early_exit_count == 17
    assert report.effective_n == 2
    assert report.exponent_bound == 6
    assert report.serialized_bits == 1 + 6 + 1 + 2 + 1 + 5 + 4 * (1 + 3)
    assert report.prime_count_estimate > 0


def test_overflow():
    # Given
    storeall = ThresholdAutomaton(1, 1, 'storeall')
    primes = ThresholdAutomaton(1, 2, 'primes')

    # When / Then
    with pytest.raises(StreamOverflowError):
        storeall.run([HALF, HALF, HALF])
    with pytest.raises(StreamOverflowError):
        primes.run([HALF, Fraction(1, 4), Fraction(1, 4)])


@pytest.mark.parametrize('mode', MODES)
@pytest.mark.parametrize('tail', [(1, 1), (0, HALF), (HALF, HALF)])
def test_every_mode_counts_elements_after_the_threshold(mode, tail):
    # Given
    automaton = ThresholdAutomaton(2, 1, mode)
    state = automaton.run((HALF,) + tail)

    # When / Then
    assert state.count == 2
    with pytest.raises(StreamOverflowError):
        automaton.step(state, 1)
    with pytest.raises(StreamOverflowError):
        automaton.run([1], automaton.deserialize_state(automaton.serialize_state(state)))


@pytest.mark.parametrize('kwargs', [{'mode': 'sorted'}, {'mode': 'storeall', 'exponent_bits': 2},
                                    {'exponent_bits': -1}])
def test_invalid_configuration(kwargs):
    with pytest.raises(ParameterError):
        ThresholdAutomaton(2, 2, **kwargs)


def test_output_needs_threshold():
    # Given
    automaton = ThresholdAutomaton(2, 2)

    # When / Then
    with pytest.raises(ParameterError):
        automaton.output(ThresholdState())


@pytest.mark.parametrize('n, b', [(1, 1), (2, 1), (3, 1), (1, 2)])
def test_modes_match_oracle_on_family(n, b):
    # Given
    fam = gen_prime_family(n, b)
    automata = [ThresholdAutomaton(2 * n, fam.max_bit_size, mode) for mode in MODES]

    # When / Then
    for word in fam.words():
        suffixes = [(), tuple(Probability(s / r) for s, r in zip(fam.suffix_numbers, word))]
        for suffix in suffixes:
            stream = (fam.threshold,) + word + suffix
            expected = exact_product(word + suffix) < fam.threshold
            assert [automaton.evaluate(stream) for automaton in automata] == [expected] * len(MODES)


def test_fooling_check_on_correct_automaton():
    # Given
    fam = gen_prime_family(2, 1)

    # When
    verdict = fooling_check(ThresholdAutomaton(2 * fam.n, fam.max_bit_size, 'primes'), fam)

    # Then
    assert verdict.correct
    assert verdict.words == 4
    assert verdict.pairs == 6
    assert verdict.distinct_states == 4


def test_fooling_check_on_undersized_automaton():
    # Given
    fam = gen_prime_family(1, 1)

    # When
    verdict = fooling_check(ThresholdAutomaton(2, fam.max_bit_size, 'primes', exponent_bits=0), fam)

    # Then
    assert not verdict.correct
    assert verdict.collisions == ((2, 1),)
    assert verdict.wrong_outputs == ((2, 1),)
    assert verdict.violations == 1


def test_all_pairs_of_small_family_are_separated():
    # Given
    fam = gen_prime_family(1, 2)
    automaton = ThresholdAutomaton(2, fam.max_bit_size, 'storeall')

    # When
    states = [automaton.serialize_state(automaton.run((fam.threshold,) + word)) for word in fam.words()]

    # Then
    assert all(left != right for left, right in itertools.combinations(states, 2))


def positive_probabilities(b):
    return st.integers(1, 1 << b).flatmap(lambda s: st.integers(1, s).map(lambda r: Fraction(r, s)))


@given(positive_probabilities(4), positive_probabilities(4))
def test_factorization_of_a_product(q, r):
    # When
    vector = factor_over_primes(q, 4) + factor_over_primes(r, 4)

    # Then
    assert vector == factor_over_primes(q * r, 8)
    assert vector.value() == q * r


@pytest.mark.parametrize('n, b', [(1, 1), (2, 1), (3, 1), (1, 2)])
def test_random_streams_match_the_exact_comparison(n, b):
    # Given
    rng = random.Random(n * 10 + b)
    automata = [ThresholdAutomaton(n, b, mode) for mode in MODES]

    # When / Then
    for _ in range(1000):
        denominators = [rng.randint(1, 1 << b) for _ in range(rng.randint(1, n + 1))]
        stream = [Probability(rng.randint(0, s), s) for s in denominators]
        expected = exact_product(stream[1:]) < stream[0]
        assert [automaton.evaluate(stream) for automaton in automata] == [expected] * len(MODES)

import math
import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from probstream.buckets import (
    ApproxParams,
    PowerValue,
    bucket_boundary,
    bucket_index,
    bucket_of_value,
    compare_values,
    log_gap,
    quotient_exceeds,
    round_fraction,
    within_band,
)
from probstream.core import CertificationError, ExactPowerTooLargeError, InvalidProbabilityError, ParameterError

from . import parameters_from_yaml

THREE_QUARTERS = Fraction(3, 4)


@pytest.mark.parametrize('expected,q', parameters_from_yaml(__name__, 'bucket_three_quarters'))
def test_bucket_index_three_quarters(expected, q):
    assert bucket_index(q, THREE_QUARTERS) == expected


@pytest.mark.parametrize('expected,q', parameters_from_yaml(__name__, 'bucket_half'))
def test_bucket_index_half(expected, q):
    assert bucket_index(q, Fraction(1, 2)) == expected


@pytest.mark.parametrize('expected,row', parameters_from_yaml(__name__, 'within_band'))
def test_within_band(expected, row):
    assert within_band(row['approximation'], row['exact'], row['epsilon']) is expected


@given(st.fractions(min_value=Fraction(1, 10 ** 6), max_value=1, max_denominator=10 ** 6),
       st.sampled_from([Fraction(1, 2), Fraction(2, 3), Fraction(9, 10), Fraction(99, 100)]))
def test_bucket_contains_value(q, base):
    # When
    a = bucket_index(q, base)

    # Then
    assert base ** (a + 1) < q <= base ** a


def test_bucket_of_power_value():
    # Given
    value = PowerValue(Fraction(9, 10), 1000)

    # When
    a = bucket_of_value(value, Fraction(9, 10))

    # Then
    assert a == 1000


@pytest.mark.parametrize('value', [0, Fraction(3, 2), PowerValue(THREE_QUARTERS, 1, zero=True)])
def test_bucket_of_value_rejects(value):
    with pytest.raises(InvalidProbabilityError):
        bucket_of_value(value, THREE_QUARTERS)


@pytest.mark.parametrize('epsilon', [0, Fraction(3, 4), Fraction(-1, 2)])
def test_approx_params_reject(epsilon):
    with pytest.raises(ParameterError):
        ApproxParams.build(epsilon)


def test_approx_params():
    # When
    params = ApproxParams.build(Fraction(1, 2), divisor=2)

    # Then
    assert params.epsilon_prime == Fraction(1, 4)
    assert params.base == THREE_QUARTERS
    assert params.one_minus_eps == Fraction(1, 2)
    assert params.delta == pytest.approx(1.0)


def test_power_value_compares_exactly():
    # Given
    value = PowerValue(THREE_QUARTERS, 2)

    # Then
    assert value == Fraction(9, 16)
    assert value < 1
    assert PowerValue(THREE_QUARTERS, 3) < value
    assert PowerValue(THREE_QUARTERS, 0) == 1
    assert PowerValue(THREE_QUARTERS, 5, zero=True) == 0
    assert not PowerValue(THREE_QUARTERS, 5, zero=True)
    assert compare_values(value, PowerValue(Fraction(9, 16), 1)) == 0
    assert str(PowerValue(THREE_QUARTERS, 4)) == '(3/4)^4'


def test_power_value_is_not_hashable():
    with pytest.raises(TypeError):
        hash(PowerValue(THREE_QUARTERS, 1))


def test_power_value_renderings():
    # Given
    value = PowerValue(THREE_QUARTERS, 4)

    # Then
    assert value.exact() == Fraction(81, 256)
    assert value.decimal(20) == Decimal('0.31640625')
    assert value.log2() == pytest.approx(4 * math.log2(0.75))
    assert PowerValue(THREE_QUARTERS, 4, zero=True).exact() == 0


def test_bucket_boundary():
    assert bucket_boundary(2, THREE_QUARTERS) == Fraction(9, 16)
    assert bucket_boundary(0, THREE_QUARTERS) == 1
    assert bucket_boundary(4, THREE_QUARTERS, 'decimal', digits=3) == Decimal('0.316')


def test_bucket_boundary_above_the_cap():
    # Given
    base = Fraction(999999, 1000000)
    a = 10 ** 7

    # When
    decimal = bucket_boundary(a, base, 'decimal', digits=10)

    # Then
    assert float(decimal) == pytest.approx(math.exp(a * math.log1p(-1e-6)), rel=1e-8)
    with pytest.raises(ExactPowerTooLargeError):
        bucket_boundary(a, base, 'exact')


@pytest.mark.parametrize('a, base, mode', [(-1, THREE_QUARTERS, 'exact'), (1, Fraction(3, 2), 'exact'),
                                           (1, THREE_QUARTERS, 'binary')])
def test_bucket_boundary_rejects(a, base, mode):
    with pytest.raises(ParameterError):
        bucket_boundary(a, base, mode)


def test_round_fraction():
    assert round_fraction(Fraction(1, 3), 5) == Decimal('0.33333')
    assert round_fraction(Fraction(2, 3), 3) == Decimal('0.667')
    assert round_fraction(Fraction(12345), 2) == Decimal('1.2E+4')
    assert round_fraction(Fraction(0), 5) == 0


def test_quotient_exceeds():
    assert not quotient_exceeds(1, Fraction(1, 2), 2)
    assert quotient_exceeds(1, Fraction(1, 2), Fraction(3, 2))
    assert quotient_exceeds(PowerValue(THREE_QUARTERS, 0), PowerValue(THREE_QUARTERS, 10), 17)
    assert not quotient_exceeds(PowerValue(THREE_QUARTERS, 0), PowerValue(THREE_QUARTERS, 10), 18)


def test_log_gap():
    # Given
    upper = Decimal(math.log2(math.log(2)))

    # Then
    assert abs(log_gap(Fraction(1, 2)) + 1) < Decimal('1e-40')
    gaps = [log_gap(epsilon) for epsilon in (Fraction(1, 3), Fraction(1, 10), Fraction(1, 10 ** 6))]
    assert all(-1 < gap < upper for gap in gaps)
    assert gaps == sorted(gaps)
    assert upper - gaps[-1] < Decimal('1e-5')


@pytest.mark.slow
def test_log_gap_on_sampled_errors():
    # Given
    rng = random.Random(9)
    upper = Decimal(math.log2(math.log(2)))

    # When / Then
    for _ in range(1000):
        epsilon = Fraction(rng.randint(1, 499999), 10 ** 6)
        assert -1 < log_gap(epsilon) < upper


@pytest.mark.parametrize('row', parameters_from_yaml(__name__, 'bucket_powers'), ids=lambda row: str(row['base']))
def test_bucket_index_of_exact_powers(row):
    # Given
    base = row['base']

    for a in range(row['last'] + 1):
        # When
        actual = bucket_index(base ** a, base)

        # Then
        assert actual == a


def _linear_scan_index(q, base):
    a = 0
    boundary = base
    while boundary >= q:
        a += 1
        boundary *= base
    return a


@pytest.mark.slow
def test_bucket_index_matches_linear_scan():
    # Given
    rng = random.Random(1729)

    for _ in range(1000):
        base = 1 - Fraction(1, rng.choice([2, 3, 4, 10, 16, 100]))
        q = Fraction(rng.randint(1, 10 ** 4), 10 ** 4) ** rng.randint(1, 3)

        # When
        actual = bucket_index(q, base)

        # Then
        assert actual == _linear_scan_index(q, base)


def test_bucket_index_below_the_float_range():
    # Given: both logs underflow to zero in floating point
    q = 1 - Fraction(1, 10 ** 329)
    base = 1 - Fraction(1, 10 ** 330)

    # When
    a = bucket_index(q, base)

    # Then
    assert a == 10
    assert base ** (a + 1) < q <= base ** a


def test_bucket_index_refuses_an_uncertifiable_boundary():
    # Given: the bucket sits near 7e399, beyond the exact and decimal paths
    base = 1 - Fraction(1, 10 ** 400)

    # When / Then
    with pytest.raises(CertificationError):
        bucket_index(Fraction(1, 2), base)

"""Exact rational probabilities, bit sizes, primes and certified comparisons.

Everything else in probstream is tested against the values computed here, so this module never
decides anything from a rounded value alone: float logarithms only settle comparisons that are far
from their boundary, everything closer goes through integer arithmetic.
"""
import math
import sys
import typing
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from logging import NullHandler, getLogger

from probstream.core import (
    CertificationError,
    InvalidProbabilityError,
    OversizedElementError,
    ParameterError,
    StreamOverflowError,
)

logger = getLogger(__name__)
logger.addHandler(NullHandler())

#: Exact powers are only materialized while numerator and denominator stay below this many bits.
EXACT_BITS_CAP = 1 << 20

#: Relative guard band applied to float log estimates.
FLOAT_GUARD = 2.0 ** -40

#: Working precision of the decimal fallback.
DECIMAL_PRECISION = 80

SEGMENT_SIZE = 1 << 16

_LN2 = math.log(2)
_NEAR_ONE = (Fraction(1, 2), Fraction(2))

Rational = typing.Union[int, Fraction]
Term = typing.Tuple[Rational, int]


class Probability(Fraction):
    """Rational probability in [0, 1], always in lowest terms. Zero is 0/1."""

    __slots__ = ()

    def __new__(cls, numerator: typing.Any = 0, denominator: typing.Any = None):
        """Create a probability, rejecting values outside [0, 1]."""
        try:
            self = super().__new__(cls, numerator, denominator)
        except ZeroDivisionError:
            raise InvalidProbabilityError(f'{numerator}/{denominator} has a zero denominator') from None
        if self < 0 or self > 1:
            raise InvalidProbabilityError(f'{self} is not a probability')
        return self

    @property
    def bit_size(self) -> int:
        """Bit size of the reduced fraction."""
        return bit_size(self)

    def __repr__(self):
        """Return the probability representation."""
        return f'Probability({self.numerator}, {self.denominator})'


class StreamParameters(typing.NamedTuple):
    """Slice of accepted streams: at most n elements, each of bit size at most b."""

    n: int
    b: int

    @classmethod
    def build(cls, n: int, b: int) -> 'StreamParameters':
        """Validate and build stream parameters."""
        if n < 1:
            raise ParameterError(f'stream length n must be positive, got {n}')
        if b < 1:
            raise ParameterError(f'bit size b must be positive, got {b}')
        return cls(n, b)

    def admit(self, q: Fraction, count: typing.Optional[int] = None) -> None:
        """Check that ``q`` may be read after ``count`` elements."""
        if count is not None and count >= self.n:
            raise StreamOverflowError(f'stream longer than n = {self.n}')
        size = bit_size(q)
        if size > self.b:
            raise OversizedElementError(f'{q} has bit size {size} > b = {self.b}')


class PrimeTable(typing.NamedTuple):
    """The first ``count`` primes in ascending order."""

    primes: typing.Tuple[int, ...]

    @property
    def count(self) -> int:
        """Number of primes in the table."""
        return len(self.primes)

    def nth(self, k: int) -> int:
        """Return the k-th prime, 1-indexed."""
        if not 1 <= k <= len(self.primes):
            raise ParameterError(f'prime index {k} outside 1..{len(self.primes)}')
        return self.primes[k - 1]


def make_probability(r: int, s: int) -> Probability:
    """Return the reduced probability r/s."""
    if s == 0:
        raise InvalidProbabilityError(f'{r}/{s} has a zero denominator')
    if r < 0 or s < 0:
        raise InvalidProbabilityError(f'{r}/{s} has a negative part')
    if r > s:
        raise InvalidProbabilityError(f'{r}/{s} is greater than 1')
    return Probability(r, s)


def bit_size(q: Fraction) -> int:
    """Return max(ceil(log2 r), ceil(log2 s)) for q = r/s in lowest terms, and 0 for q = 0."""
    if q == 0:
        return 0
    return max((q.numerator - 1).bit_length(), (q.denominator - 1).bit_length())


def pow2(exponent: int) -> Fraction:
    """Return 2 ** exponent as an exact fraction."""
    return Fraction(1 << exponent) if exponent >= 0 else Fraction(1, 1 << -exponent)


def ceil_log2(x: Rational) -> int:
    """Return the exact ceiling of log2(x) for a positive rational."""
    x = Fraction(x)
    if x <= 0:
        raise ParameterError(f'log2 of nonpositive value {x}')
    c = x.numerator.bit_length() - x.denominator.bit_length()
    while pow2(c) < x:
        c += 1
    while pow2(c - 1) >= x:
        c -= 1
    return c


def exact_product(stream: typing.Iterable[Rational]) -> Fraction:
    """Return the exact product of the stream; the empty product is 1."""
    values = [Fraction(q) for q in stream]
    return Fraction(math.prod(v.numerator for v in values), math.prod(v.denominator for v in values))


def _simple_sieve(limit: int) -> typing.List[int]:
    if limit < 2:
        return []
    flags = bytearray([1]) * (limit + 1)
    flags[0] = flags[1] = 0
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p::p] = bytes(len(range(p * p, limit + 1, p)))
    return [i for i, flag in enumerate(flags) if flag]


@lru_cache(maxsize=32)
def primes_up_to(limit: int) -> typing.Tuple[int, ...]:
    """Return all primes <= limit, using a segmented sieve."""
    root = math.isqrt(max(limit, 0))
    base = _simple_sieve(root)
    primes = list(base)
    low = max(root + 1, 2)
    while low <= limit:
        high = min(low + SEGMENT_SIZE, limit + 1)
        flags = bytearray([1]) * (high - low)
        for p in base:
            start = max(p * p, -(-low // p) * p)
            if start >= high:
                continue
            flags[start - low::p] = bytes(len(range(start - low, high - low, p)))
        primes.extend(low + i for i, flag in enumerate(flags) if flag)
        low = high
    return tuple(primes)


def prime_upper_estimate(k: int) -> float:
    """Return k (ln k + ln ln k), an upper bound of the k-th prime for k >= 6."""
    if k < 3:
        raise ParameterError(f'the prime estimate needs k >= 3, got {k}')
    return k * (math.log(k) + math.log(math.log(k)))


def prime_bound_holds(k: int, p: int) -> bool:
    """Check p <= k (ln k + ln ln k) with outward rounding."""
    estimate = prime_upper_estimate(k)
    if p <= estimate * (1 - FLOAT_GUARD):
        return True
    if p >= estimate * (1 + FLOAT_GUARD):
        return False
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        ln_k = Decimal(k).ln()
        return Decimal(p) <= Decimal(k) * (ln_k + ln_k.ln())


def sieve_limit(count: int) -> int:
    """Return a sieve limit that contains at least ``count`` primes."""
    if count < 6:
        return 13
    return math.ceil(prime_upper_estimate(count) * (1 + FLOAT_GUARD)) + 1


def first_primes(count: int) -> PrimeTable:
    """Return the first ``count`` primes."""
    if count < 1:
        raise ParameterError(f'prime count must be positive, got {count}')
    limit = sieve_limit(count)
    primes = primes_up_to(limit)
    while len(primes) < count:
        limit *= 2
        primes = primes_up_to(limit)
    return PrimeTable(primes[:count])


def log2_estimate(x: Rational) -> typing.Tuple[float, float]:
    """Return a float estimate of log2(x) for x > 0 and a guarded absolute error bound.

    Values close to 1 go through log1p so that no cancellation happens.
    Below the normal float range x - 1 keeps no relative precision, and the error bound is then
    infinite so that every comparison falls back to the certified paths.
    """
    x = Fraction(x)
    if x == 1:
        return 0.0, 0.0
    if _NEAR_ONE[0] <= x <= _NEAR_ONE[1]:
        offset = float(x - 1)
        if abs(offset) < sys.float_info.min:
            return 0.0, math.inf
        value = math.log1p(offset) / _LN2
        return value, abs(value) * FLOAT_GUARD
    value = math.log2(x.numerator) - math.log2(x.denominator)
    bits = x.numerator.bit_length() + x.denominator.bit_length()
    return value, (abs(value) + bits + 1) * FLOAT_GUARD


def _normalize_terms(terms: typing.Iterable[Term]) -> typing.List[typing.Tuple[Fraction, int]]:
    factors = []
    for base, exponent in terms:
        base = Fraction(base)
        if base <= 0:
            raise InvalidProbabilityError(f'power of nonpositive base {base}')
        if exponent and base != 1:
            factors.append((base, exponent))
    return factors


def _exact_sign(factors: typing.List[typing.Tuple[Fraction, int]]) -> int:
    numerator, denominator = 1, 1
    for base, exponent in factors:
        if exponent > 0:
            numerator *= base.numerator ** exponent
            denominator *= base.denominator ** exponent
        else:
            numerator *= base.denominator ** -exponent
            denominator *= base.numerator ** -exponent
    return (numerator > denominator) - (numerator < denominator)


def _decimal_ln(value: int, ln2: Decimal) -> Decimal:
    shift = max(0, value.bit_length() - 256)
    return Decimal(value >> shift).ln() + shift * ln2


def _decimal_log1p(offset: Decimal) -> Decimal:
    # ln(1 + d) = 2 atanh(d / (2 + d)), |d / (2 + d)| <= 1/3 near one
    z = offset / (2 + offset)
    z2 = z * z
    total = Decimal(0)
    term = z
    k = 1
    while term and abs(term) >= abs(total) * Decimal(10) ** -(DECIMAL_PRECISION + 2):
        total += term / k
        term *= z2
        k += 2
    return 2 * total


def _decimal_log(q: Fraction, ln2: Decimal) -> typing.Tuple[Decimal, Decimal]:
    """Return ln(q) and an absolute error bound at the current decimal precision."""
    if _NEAR_ONE[0] <= q <= _NEAR_ONE[1]:
        value = _decimal_log1p(Decimal(q.numerator - q.denominator) / Decimal(q.denominator))
        return value, abs(value) * Decimal(10) ** (5 - DECIMAL_PRECISION)
    ln_numerator = _decimal_ln(q.numerator, ln2)
    ln_denominator = _decimal_ln(q.denominator, ln2)
    return ln_numerator - ln_denominator, (ln_numerator + ln_denominator + 1) * Decimal(10) ** (20 - DECIMAL_PRECISION)


def decimal_ln(q: Rational) -> Decimal:
    """Natural log of a positive rational at the decimal fallback precision."""
    q = Fraction(q)
    if q <= 0:
        raise ParameterError(f'log of nonpositive value {q}')
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        return _decimal_log(q, Decimal(2).ln())[0]


def _decimal_sign(factors: typing.List[typing.Tuple[Fraction, int]]) -> int:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        ln2 = Decimal(2).ln()
        total = Decimal(0)
        tolerance = Decimal(0)
        for base, exponent in factors:
            value, error = _decimal_log(base, ln2)
            total += exponent * value
            tolerance += abs(exponent) * error
        if total > tolerance:
            return 1
        if total < -tolerance:
            return -1
    raise CertificationError(f'cannot certify the sign of a power product of {len(factors)} factors')


def power_product_sign(terms: typing.Iterable[Term], exact_bits_cap: int = EXACT_BITS_CAP) -> int:
    """Return the sign of prod(base ** exponent) - 1 for positive rational bases.

    Exponents are signed integers of any size. Clear cases are decided from float logs with a
    guard band; inside the band the powers are compared exactly when they fit the cap, otherwise
    with high precision decimal logs.
    """
    factors = _normalize_terms(terms)
    if not factors:
        return 0

    estimate = 0.0
    error = 0.0
    for base, exponent in factors:
        value, value_error = log2_estimate(base)
        estimate += exponent * value
        error += abs(exponent) * value_error
    if estimate > error:
        return 1
    if estimate < -error:
        return -1

    size = sum(abs(e) * max(b.numerator.bit_length(), b.denominator.bit_length()) for b, e in factors)
    if size <= exact_bits_cap:
        logger.debug('Guard band hit (%r +- %r), comparing %d bit powers exactly', estimate, error, size)
        return _exact_sign(factors)
    logger.debug('Guard band hit (%r +- %r), powers too large (%d bits), using decimal logs', estimate, error, size)
    return _decimal_sign(factors)


def largest_satisfying(holds: typing.Callable[[int], bool], hint: int = 0) -> int:
    """Return the largest a >= 0 with holds(a).

    ``holds`` must be true at 0 and monotone (true up to some point, false afterwards). The search
    gallops away from ``hint`` and then bisects.
    """
    low = max(hint, 0)
    if holds(low):
        step = 1
        high = low + step
        while holds(high):
            low = high
            step *= 2
            high = low + step
    else:
        high = low
        step = 1
        low = max(high - step, 0)
        while not holds(low):
            if low == 0:
                raise ParameterError('predicate does not hold at 0')
            high = low
            step *= 2
            low = max(high - step, 0)

    while high - low > 1:
        middle = (low + high) // 2
        if holds(middle):
            low = middle
        else:
            high = middle
    return low

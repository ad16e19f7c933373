"""Geometric buckets B_a = ((1 - e)^(a + 1), (1 - e)^a] and values kept in exponent form."""
import functools
import math
import typing
from decimal import Decimal, MAX_EMAX, MIN_EMIN, ROUND_FLOOR, localcontext
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.core import ExactPowerTooLargeError, InvalidProbabilityError, ParameterError
from probstream.numerics import (
    DECIMAL_PRECISION,
    EXACT_BITS_CAP,
    Rational,
    Term,
    decimal_ln,
    largest_satisfying,
    log2_estimate,
    power_product_sign,
)

logger = getLogger(__name__)
logger.addHandler(NullHandler())

MAX_EPSILON = Fraction(1, 2)
DEFAULT_DIGITS = 20
RENDER_MODES = ('exact', 'decimal')


class ApproxParams(typing.NamedTuple):
    """Approximation parameter e, used per element as e / divisor."""

    epsilon: Fraction
    divisor: int = 1

    @classmethod
    def build(cls, epsilon: Rational, divisor: int = 1) -> 'ApproxParams':
        """Validate 0 < e <= 1/2 and a positive divisor."""
        epsilon = Fraction(epsilon)
        if not 0 < epsilon <= MAX_EPSILON:
            raise ParameterError(f'epsilon {epsilon} outside (0, 1/2]')
        if divisor < 1:
            raise ParameterError(f'epsilon divisor must be positive, got {divisor}')
        return cls(epsilon, divisor)

    @property
    def epsilon_prime(self) -> Fraction:
        """Per element approximation parameter."""
        return self.epsilon / self.divisor

    @property
    def base(self) -> Fraction:
        """Bucket base 1 - e / divisor."""
        return 1 - self.epsilon_prime

    @property
    def one_minus_eps(self) -> Fraction:
        return 1 - self.epsilon

    @property
    def delta(self) -> float:
        """Float estimate of -log2(1 - e)."""
        return -log2_estimate(self.one_minus_eps)[0]


def log_gap(epsilon: Rational) -> Decimal:
    """Return log2(e) - log2(-log2(1 - e)).

    The gap decreases in e. Over 0 < e <= 1/2 it lies in [-1, log2(ln 2)) and equals -1 only at
    e = 1/2; it tends to log2(ln 2) as e goes to 0.
    """
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ParameterError(f'epsilon {epsilon} outside (0, 1)')
    with localcontext() as ctx:
        ctx.prec = 50
        ln2 = Decimal(2).ln()
        e = Decimal(epsilon.numerator) / Decimal(epsilon.denominator)
        delta = -(1 - e).ln() / ln2
        return (e.ln() - delta.ln()) / ln2


@functools.total_ordering
class PowerValue:
    """Nonnegative value ``base ** exponent``, or zero, kept in exponent form.

    Values compare exactly against each other and against rationals, without ever expanding
    the power.
    """

    __slots__ = ('base', 'exponent', 'zero')
    __hash__ = None  # type: ignore

    def __init__(self, base: Rational, exponent: int, zero: bool = False):
        """Initialize the value."""
        base = Fraction(base)
        if base <= 0:
            raise ParameterError(f'power base must be positive, got {base}')
        self.base = base
        self.exponent = exponent
        self.zero = zero

    def terms(self) -> typing.List[Term]:
        """Return the value as power product terms. Zero has none."""
        if self.zero:
            raise InvalidProbabilityError('zero has no power product form')
        return [(self.base, self.exponent)]

    def exact(self, exact_bits_cap: int = EXACT_BITS_CAP) -> Fraction:
        """Expand the value, refusing powers above the cap."""
        if self.zero:
            return Fraction(0)
        return bucket_boundary(self.exponent, self.base, 'exact', exact_bits_cap=exact_bits_cap)

    def decimal(self, digits: int = DEFAULT_DIGITS, exact_bits_cap: int = EXACT_BITS_CAP) -> Decimal:
        """Return the value rounded to ``digits`` significant digits, for display only."""
        if self.zero:
            return Decimal(0)
        return bucket_boundary(self.exponent, self.base, 'decimal', digits=digits, exact_bits_cap=exact_bits_cap)

    def log2(self) -> float:
        """Float estimate of log2 of the value."""
        if self.zero:
            return -math.inf
        return self.exponent * log2_estimate(self.base)[0]

    def __eq__(self, other):
        """Compare exactly."""
        if not isinstance(other, (PowerValue, Fraction, int)):
            return NotImplemented
        return compare_values(self, other) == 0

    def __lt__(self, other):
        """Compare exactly."""
        if not isinstance(other, (PowerValue, Fraction, int)):
            return NotImplemented
        return compare_values(self, other) < 0

    def __bool__(self):
        """Return whether the value is nonzero."""
        return not self.zero

    def __repr__(self):
        """Return the value representation."""
        if self.zero:
            return 'PowerValue(0)'
        return f'PowerValue({self.base}^{self.exponent})'

    def __str__(self):
        """Return the power notation."""
        return '0' if self.zero else f'({self.base})^{self.exponent}'


Value = typing.Union[PowerValue, Fraction, int]


def as_terms(value: Value) -> typing.List[Term]:
    """Return a positive value as power product terms."""
    if isinstance(value, PowerValue):
        return value.terms()
    if value <= 0:
        raise InvalidProbabilityError(f'{value} has no power product form')
    return [(Fraction(value), 1)]


def invert(terms: typing.Iterable[Term]) -> typing.List[Term]:
    return [(base, -exponent) for base, exponent in terms]


def is_zero(value: Value) -> bool:
    if isinstance(value, PowerValue):
        return value.zero
    return value == 0


def compare_values(left: Value, right: Value, exact_bits_cap: int = EXACT_BITS_CAP) -> int:
    """Return the sign of left - right for nonnegative values."""
    if is_zero(left) or is_zero(right):
        return (not is_zero(left)) - (not is_zero(right))
    return power_product_sign(as_terms(left) + invert(as_terms(right)), exact_bits_cap=exact_bits_cap)


def quotient_exceeds(
        numerator: Value,
        denominator: Value,
        bound: Rational,
        exact_bits_cap: int = EXACT_BITS_CAP,
) -> bool:
    """Check numerator / denominator > bound exactly."""
    terms = as_terms(numerator) + invert(as_terms(denominator)) + [(Fraction(bound), -1)]
    return power_product_sign(terms, exact_bits_cap=exact_bits_cap) > 0


def _check_base(base: Fraction) -> None:
    if not 0 < base < 1:
        raise ParameterError(f'bucket base {base} outside (0, 1)')


def bucket_of_value(value: Value, base: Rational, exact_bits_cap: int = EXACT_BITS_CAP) -> int:
    """Return the unique a >= 0 with base^(a+1) < value <= base^a.

    Fails for values outside (0, 1]. The float estimate settles the index unless it falls within
    the guard band of a boundary, in which case a certified search around it decides.
    """
    base = Fraction(base)
    _check_base(base)
    if is_zero(value):
        raise InvalidProbabilityError('0 belongs to no bucket')
    if compare_values(value, 1, exact_bits_cap) > 0:
        raise InvalidProbabilityError(f'{value} is greater than 1')
    terms = [(Fraction(term_base), exponent) for term_base, exponent in as_terms(value) if exponent and term_base != 1]
    if not terms:
        return 0

    value_log, value_error = 0.0, 0.0
    for term_base, exponent in terms:
        estimate, error = log2_estimate(term_base)
        value_log += exponent * estimate
        value_error += abs(exponent) * error
    base_log, base_error = log2_estimate(base)
    ratio = value_log / base_log if base_log else math.inf
    if math.isfinite(ratio) and math.isfinite(value_error) and math.isfinite(base_error):
        ratio_error = (value_error + abs(ratio) * base_error) / abs(base_log) + abs(ratio) * 2.0 ** -50
        index = math.floor(ratio)
        fraction = ratio - index
        if index >= 0 and ratio_error < fraction < 1 - ratio_error:
            return index
        logger.debug('Bucket of %s close to a boundary (%r +- %r)', value, ratio, ratio_error)
        hint = max(index, 0)
    else:
        hint = _decimal_index(terms, base)
        logger.debug('Bucket of %s outside the float range, searching from %d', value, hint)

    def holds(a: int) -> bool:
        return power_product_sign(terms + [(base, -a)], exact_bits_cap=exact_bits_cap) <= 0

    return largest_satisfying(holds, hint=hint)


def _decimal_index(terms: typing.List[typing.Tuple[Fraction, int]], base: Fraction) -> int:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        value_ln = sum((exponent * decimal_ln(term_base) for term_base, exponent in terms), Decimal(0))
        ratio = value_ln / decimal_ln(base)
        return max(int(ratio.to_integral_value(rounding=ROUND_FLOOR)), 0)


def bucket_index(q: Rational, one_minus_eps: Rational, exact_bits_cap: int = EXACT_BITS_CAP) -> int:
    """Return the bucket index of a nonzero probability."""
    return bucket_of_value(Fraction(q), one_minus_eps, exact_bits_cap=exact_bits_cap)


def _floor_log10(x: Fraction) -> int:
    e = math.floor(log2_estimate(x)[0] * math.log10(2))
    while Fraction(10) ** e > x:
        e -= 1
    while Fraction(10) ** (e + 1) <= x:
        e += 1
    return e


def round_fraction(x: Fraction, digits: int) -> Decimal:
    """Round a nonnegative fraction to ``digits`` significant digits, half to even."""
    if x == 0:
        return Decimal(0)
    shift = digits - 1 - _floor_log10(x)
    scaled = x * Fraction(10) ** shift
    with localcontext() as ctx:
        ctx.prec = digits + 2
        return Decimal(round(scaled)).scaleb(-shift)


def _power_bits(a: int, base: Fraction) -> int:
    return a * max(base.numerator.bit_length(), base.denominator.bit_length())


def bucket_boundary(
        a: int,
        base: Rational,
        mode: str = 'exact',
        digits: int = DEFAULT_DIGITS,
        exact_bits_cap: int = EXACT_BITS_CAP,
) -> typing.Union[Fraction, Decimal]:
    """Return base^a, exactly or as a decimal rounded to ``digits`` significant digits."""
    base = Fraction(base)
    if a < 0:
        raise ParameterError(f'bucket index must be nonnegative, got {a}')
    if not 0 < base <= 1:
        raise ParameterError(f'bucket base {base} outside (0, 1]')
    if mode not in RENDER_MODES:
        raise ParameterError(f'unknown render mode {mode!r}')

    size = _power_bits(a, base)
    if mode == 'exact':
        if size > exact_bits_cap:
            raise ExactPowerTooLargeError(f'({base})^{a} needs about {size} bits, cap is {exact_bits_cap}')
        return base ** a

    if digits < 1:
        raise ParameterError(f'digits must be positive, got {digits}')
    if size <= exact_bits_cap:
        return round_fraction(base ** a, digits)

    with localcontext() as ctx:
        ctx.prec = max(DECIMAL_PRECISION, digits + 30)
        ctx.Emin = MIN_EMIN
        ctx.Emax = MAX_EMAX
        ln_base = Decimal(base.numerator).ln() - Decimal(base.denominator).ln()
        value = (a * ln_base).exp()
        ctx.prec = digits
        return +value


def render_value(
        value: Value,
        render: typing.Optional[str] = None,
        digits: int = DEFAULT_DIGITS,
        exact_bits_cap: int = EXACT_BITS_CAP,
) -> typing.Union[Value, Decimal]:
    """Return the value as is, expanded exactly or as a display decimal."""
    if render is None:
        return value
    if render not in RENDER_MODES:
        raise ParameterError(f'unknown render mode {render!r}')
    if not isinstance(value, PowerValue):
        return Fraction(value) if render == 'exact' else round_fraction(Fraction(value), digits)
    if render == 'exact':
        return value.exact(exact_bits_cap)
    return value.decimal(digits, exact_bits_cap)


def within_band(
        approximation: Value,
        exact: Rational,
        epsilon: Rational,
        exact_bits_cap: int = EXACT_BITS_CAP,
) -> bool:
    """Check (1 - e) P < approximation < P / (1 - e) for the exact product P.

    Zero only admits itself.
    """
    exact = Fraction(exact)
    one_minus_eps = 1 - Fraction(epsilon)
    if exact == 0 or is_zero(approximation):
        return exact == 0 and is_zero(approximation)
    terms = as_terms(approximation) + [(exact, -1)]
    above = power_product_sign(terms + [(one_minus_eps, -1)], exact_bits_cap=exact_bits_cap) > 0
    below = power_product_sign(terms + [(one_minus_eps, 1)], exact_bits_cap=exact_bits_cap) < 0
    return above and below

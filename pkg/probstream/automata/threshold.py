"""Threshold product decisions: is the product of the stream below its leading element."""
import math
import typing
from collections import Counter
from collections.abc import Mapping
from decimal import Decimal, ROUND_CEILING, localcontext
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.core import (
    CertificationError,
    InvalidProbabilityError,
    OversizedElementError,
    ParameterError,
    StreamOverflowError,
    StreamingAutomaton,
)
from probstream.numerics import (
    DECIMAL_PRECISION,
    Probability,
    Rational,
    StreamParameters,
    bit_size,
    exact_product,
    primes_up_to,
)
from probstream.utils import BitReader, encode_block, encode_minimal, encode_probability, encode_uint

logger = getLogger(__name__)
logger.addHandler(NullHandler())

MODES = ('storeall', 'primes', 'product')


class PrimeExponentVector(Mapping):
    """Sparse factorization: prime to signed exponent, zero entries dropped."""

    __slots__ = ('_exponents',)

    def __init__(self, exponents: typing.Optional[typing.Mapping[int, int]] = None):
        """Initialize the vector."""
        self._exponents = {p: e for p, e in sorted((exponents or {}).items()) if e}

    def __getitem__(self, prime: int) -> int:
        """Exponent of ``prime``."""
        return self._exponents[prime]

    def __iter__(self):
        """Iterate over primes in ascending order."""
        return iter(self._exponents)

    def __len__(self):
        """Number of primes with a nonzero exponent."""
        return len(self._exponents)

    def __add__(self, other: typing.Mapping[int, int]) -> 'PrimeExponentVector':
        """Entrywise sum, the factorization of the product."""
        merged = Counter(self._exponents)
        merged.update(other)
        return PrimeExponentVector(merged)

    def __repr__(self):
        """Return the vector representation."""
        return f'PrimeExponentVector({self._exponents!r})'

    def clamp(self, bits: int) -> 'PrimeExponentVector':
        """Saturate every magnitude at 2^bits - 1."""
        limit = (1 << bits) - 1
        return PrimeExponentVector({p: max(-limit, min(limit, e)) for p, e in self._exponents.items()})

    def split(self) -> typing.Tuple[int, int]:
        """Return the numerator and denominator integers of the factorization."""
        numerator = math.prod(p ** e for p, e in self._exponents.items() if e > 0)
        denominator = math.prod(p ** -e for p, e in self._exponents.items() if e < 0)
        return numerator, denominator

    def value(self) -> Fraction:
        """The rational this vector factorizes."""
        return Fraction(*self.split())


EMPTY_VECTOR = PrimeExponentVector()


def _trial_division(value: int, b: int) -> typing.Iterator[typing.Tuple[int, int]]:
    for p in primes_up_to(math.isqrt(1 << b)):
        if p * p > value:
            break
        exponent = 0
        while value % p == 0:
            value //= p
            exponent += 1
        if exponent:
            yield p, exponent
    if value > 1:
        yield value, 1


def factor_over_primes(q: Rational, b: int) -> PrimeExponentVector:
    """Factor a positive rational of bit size at most b over the primes up to 2^b."""
    q = Fraction(q)
    if q <= 0:
        raise InvalidProbabilityError(f'{q} has no prime factorization')
    if bit_size(q) > b:
        raise OversizedElementError(f'{q} has bit size {bit_size(q)} > b = {b}')
    exponents: typing.Counter[int] = Counter()
    for value, sign in ((q.numerator, 1), (q.denominator, -1)):
        for p, e in _trial_division(value, b):
            exponents[p] += sign * e
    return PrimeExponentVector(exponents)


def early_exit_count(b: int) -> int:
    """Return ceil(B ln B) for B = 2^b."""
    big_b = 1 << b
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        value = Decimal(big_b) * Decimal(big_b).ln()
        count = int(value.to_integral_value(rounding=ROUND_CEILING))
        if count - value < Decimal(10) ** (20 - DECIMAL_PRECISION) * value:
            raise CertificationError(f'cannot certify the ceiling of {big_b} ln {big_b}')
    return count


class ThresholdState(typing.NamedTuple):
    """Threshold plus what the selected mode keeps of the following elements and how many were read."""

    threshold: typing.Optional[Probability] = None
    stored: typing.Tuple[Probability, ...] = ()
    vector: PrimeExponentVector = EMPTY_VECTOR
    product: Fraction = Fraction(1)
    small_factor_count: int = 0
    early_exit: bool = False
    saw_zero: bool = False
    count: int = 0


class ThresholdSpaceReport(typing.NamedTuple):
    """Measured state size and the structural bounds of each mode."""

    serialized_bits: int
    mode: str
    storeall_bits: int
    tracked_primes: int
    exponent_bound: int
    effective_n: int
    early_exit_count: int
    prime_count_estimate: float


class ThresholdAutomaton(StreamingAutomaton[ThresholdState, bool]):
    """Deterministic automaton for the threshold product problem.

    The first element is the threshold t and the answer is whether the product of all later
    elements is strictly below t. Three modes keep the product exactly:

    - ``storeall`` stores the elements verbatim,
    - ``primes`` keeps one signed exponent per prime up to 2^b and stops counting once
      ceil(B ln B) elements <= (B-1)/B force the product below 1/B,
    - ``product`` keeps the running product as a fraction.

    ``exponent_bits`` truncates the exponents of the ``primes`` mode, which makes the automaton
    incorrect; it exists to exhibit fooling set collisions.
    """

    def __init__(self, n: int, b: int, mode: str = 'primes', exponent_bits: typing.Optional[int] = None):
        """Initialize the automaton for streams of at most n elements after the threshold."""
        if mode not in MODES:
            raise ParameterError(f'unknown threshold mode {mode!r}, expected one of {", ".join(MODES)}')
        if exponent_bits is not None and (exponent_bits < 0 or mode != 'primes'):
            raise ParameterError('exponent_bits needs the primes mode and a nonnegative width')
        self.params = StreamParameters.build(n, b)
        self.mode = mode
        self.exponent_bits = exponent_bits
        self.big_b = 1 << b
        self.small_bound = Fraction(self.big_b - 1, self.big_b)
        self.exit_count = early_exit_count(b)

    @property
    def name(self) -> str:
        """Identifier including the mode."""
        suffix = f', {self.exponent_bits} bit exponents' if self.exponent_bits is not None else ''
        return f'ThresholdAutomaton({self.mode}{suffix})'

    @property
    def tracked_primes(self) -> typing.Tuple[int, ...]:
        return primes_up_to(self.big_b)

    @property
    def effective_n(self) -> int:
        """Number of elements the exponents can accumulate before the early exit."""
        return min(self.params.n, self.exit_count)

    @property
    def count_width(self) -> int:
        """Encoded width of the number of elements read after the threshold."""
        return self.params.n.bit_length()

    @property
    def exponent_width(self) -> int:
        """Encoded magnitude width of every exponent."""
        if self.exponent_bits is not None:
            return self.exponent_bits
        return (self.params.n * self.params.b).bit_length()

    def initial_state(self) -> ThresholdState:
        """State waiting for the threshold."""
        return ThresholdState()

    def step(self, state: ThresholdState, q) -> ThresholdState:
        """Read the threshold first, then fold ``q`` into the product."""
        if state.threshold is None:
            self.params.admit(q)
            logger.debug('Threshold %s', q)
            return state._replace(threshold=Probability(q))
        self.params.admit(q, state.count)
        state = state._replace(count=state.count + 1)
        if state.early_exit or q == 1:
            return state
        if q == 0:
            return state._replace(saw_zero=True)

        if self.mode == 'storeall':
            return state._replace(stored=state.stored + (Probability(q),))
        if self.mode == 'product':
            return state._replace(product=state.product * q)

        vector = state.vector + factor_over_primes(q, self.params.b)
        bound = self.params.n * self.params.b
        if any(abs(e) > bound for e in vector.values()):
            raise StreamOverflowError(f'prime exponent above n*b = {bound}, stream longer than n = {self.params.n}')
        if self.exponent_bits is not None:
            vector = vector.clamp(self.exponent_bits)
        count = state.small_factor_count + (q <= self.small_bound)
        early_exit = count >= self.exit_count
        if early_exit:
            logger.debug('Early exit after %d elements <= %s', count, self.small_bound)
        return state._replace(vector=vector, small_factor_count=count, early_exit=early_exit)

    def product_of(self, state: ThresholdState) -> Fraction:
        """Exact product the state represents, ignoring the early exit."""
        if state.saw_zero:
            return Fraction(0)
        if self.mode == 'storeall':
            return exact_product(state.stored)
        if self.mode == 'product':
            return state.product
        return state.vector.value()

    def output(self, state: ThresholdState) -> bool:
        """Whether the product is strictly below the threshold."""
        threshold = state.threshold
        if threshold is None:
            raise ParameterError('no threshold was read')
        if threshold == 0:
            return False
        if state.saw_zero or state.early_exit:
            return True
        if self.mode == 'primes':
            numerator, denominator = state.vector.split()
            return numerator * threshold.denominator < threshold.numerator * denominator
        return self.product_of(state) < threshold

    def serialize_state(self, state: ThresholdState) -> str:
        """Threshold, zero flag, element count and the mode's payload."""
        if state.threshold is None:
            return '0'
        b = self.params.b
        bits = ['1', encode_probability(state.threshold, b), '1' if state.saw_zero else '0',
                encode_uint(state.count, self.count_width)]
        if self.mode == 'storeall':
            bits.extend(encode_probability(q, b) for q in state.stored)
        elif self.mode == 'product':
            bits.append(encode_block(encode_minimal(state.product.numerator)))
            bits.append(encode_block(encode_minimal(state.product.denominator)))
        else:
            bits.append('1' if state.early_exit else '0')
            bits.append(encode_uint(state.small_factor_count, self.exit_count.bit_length()))
            width = self.exponent_width
            if width:
                for p in self.tracked_primes:
                    exponent = state.vector.get(p, 0)
                    bits.append(('1' if exponent < 0 else '0') + encode_uint(abs(exponent), width))
        return ''.join(bits)

    def deserialize_state(self, bits: str) -> ThresholdState:
        """Decode a state produced by serialize_state."""
        reader = BitReader(bits)
        if not reader.read_flag():
            reader.finish()
            return ThresholdState()
        b = self.params.b
        threshold = reader.read_probability(b)
        saw_zero = reader.read_flag()
        count = reader.read_uint(self.count_width)
        state = ThresholdState(threshold=threshold, saw_zero=saw_zero, count=count)
        if self.mode == 'storeall':
            stored = []
            while reader.remaining:
                stored.append(reader.read_probability(b))
            state = state._replace(stored=tuple(stored))
        elif self.mode == 'product':
            numerator = int(reader.read_block() or '0', 2)
            denominator = int(reader.read_block() or '0', 2)
            state = state._replace(product=Fraction(numerator, denominator))
        else:
            early_exit = reader.read_flag()
            small_factor_count = reader.read_uint(self.exit_count.bit_length())
            exponents = {}
            width = self.exponent_width
            if width:
                for p in self.tracked_primes:
                    negative = reader.read_flag()
                    magnitude = reader.read_uint(width)
                    exponents[p] = -magnitude if negative else magnitude
            state = state._replace(
                vector=PrimeExponentVector(exponents), small_factor_count=small_factor_count, early_exit=early_exit)
        reader.finish()
        return state

    def space_report(self, state: ThresholdState) -> ThresholdSpaceReport:
        """Compare the encoded state with the structural bounds of the modes."""
        n, b = self.params
        return ThresholdSpaceReport(
            serialized_bits=len(self.serialize_state(state)),
            mode=self.mode,
            storeall_bits=2 * (n + 1) * b,
            tracked_primes=len(self.tracked_primes),
            exponent_bound=self.effective_n * b,
            effective_n=self.effective_n,
            early_exit_count=self.exit_count,
            prime_count_estimate=1.4427 * self.big_b * (math.log2(n) + math.log2(b) + 1) / b,
        )

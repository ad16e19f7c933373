import typing
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.buckets import (
    ApproxParams,
    DEFAULT_DIGITS,
    PowerValue,
    bucket_index,
    render_value,
)
from probstream.core import ParameterError, StreamingAutomaton
from probstream.numerics import EXACT_BITS_CAP, Rational, StreamParameters, ceil_log2
from probstream.utils import BitReader, encode_minimal

logger = getLogger(__name__)
logger.addHandler(NullHandler())


class ApproxState(typing.NamedTuple):
    """Running sum of bucket indices.

    ``count`` only backs the length check and is not part of the encoded memory state.
    """

    index_sum: int = 0
    count: int = 0
    saw_zero: bool = False


class ApproxSpaceReport(typing.NamedTuple):
    """Measured and predicted size of an approximation state."""

    serialized_bits: int
    index_bits: int
    formula_bits: int
    index_bound: Fraction
    sum_bound: Fraction


class ProductApproximator(StreamingAutomaton[ApproxState, PowerValue]):
    """Deterministic (1 - e)-approximation of the product of a stream.

    Every element is replaced by the index of its bucket under base 1 - e/n and only the sum of
    those indices is kept. The output is (1 - e/n) raised to that sum.
    """

    def __init__(self, n: int, b: int, epsilon: Rational, exact_bits_cap: int = EXACT_BITS_CAP):
        """Initialize the automaton for streams of at most n elements of bit size at most b."""
        self.params = StreamParameters.build(n, b)
        self.approx = ApproxParams.build(epsilon, divisor=n)
        self.base = self.approx.base
        self.exact_bits_cap = exact_bits_cap

    def initial_state(self) -> ApproxState:
        """Return the empty sum."""
        return ApproxState()

    def element_index(self, q: Rational) -> int:
        """Bucket index of a nonzero element under base 1 - e/n."""
        if q == 1:
            return 0
        return bucket_index(q, self.base, exact_bits_cap=self.exact_bits_cap)

    def step(self, state: ApproxState, q) -> ApproxState:
        """Add the bucket index of ``q``."""
        self.params.admit(q, state.count)
        if q == 0:
            logger.debug('Element 0 read at position %d', state.count)
            return state._replace(count=state.count + 1, saw_zero=True)

        index = self.element_index(q)
        logger.debug('Element %s in bucket %d', q, index)
        if index * self.approx.epsilon > self.params.n * self.params.b:
            logger.warning('Bucket index %d of %s exceeds n*b/e = %s', index, q, self.index_bound)
        return ApproxState(state.index_sum + index, state.count + 1, state.saw_zero)

    def power(self, state: ApproxState) -> PowerValue:
        """Output in exponent form."""
        return PowerValue(self.base, state.index_sum, zero=state.saw_zero)

    def output(self, state: ApproxState, render: typing.Optional[str] = None, digits: int = DEFAULT_DIGITS):
        """Return 0 after a zero element, (1 - e/n)^index_sum otherwise.

        ``render`` selects the form: ``None`` keeps the exponent form, ``'exact'`` expands it and
        ``'decimal'`` rounds it to ``digits`` significant digits.
        """
        return render_value(self.power(state), render, digits, self.exact_bits_cap)

    def serialize_state(self, state: ApproxState) -> str:
        """Zero flag followed by the minimal binary form of the index sum."""
        return ('1' if state.saw_zero else '0') + encode_minimal(state.index_sum)

    def deserialize_state(self, bits: str) -> ApproxState:
        """Decode a state. The element count restarts at zero."""
        reader = BitReader(bits)
        saw_zero = reader.read_flag()
        rest = reader.read_rest()
        if rest.startswith('0'):
            raise ParameterError('index sum encoding has a leading zero')
        return ApproxState(int(rest, 2) if rest else 0, 0, saw_zero)

    @property
    def index_bound(self) -> Fraction:
        """Bound n*b/e of every element index."""
        return Fraction(self.params.n * self.params.b) / self.approx.epsilon

    @property
    def sum_bound(self) -> Fraction:
        """Bound n^2*b/e of the index sum."""
        return self.params.n * self.index_bound

    @property
    def formula_bits(self) -> int:
        """Predicted size ceil(2 log n + log b - log e) of the index sum.

        Only the index sum is counted: every integer up to n^2*b/e fits in this many bits. The
        serialized state carries one more bit, the zero flag.
        """
        return ceil_log2(self.sum_bound + 1)

    def space_report(self, state: ApproxState) -> ApproxSpaceReport:
        """Compare the encoded state with the predicted bounds."""
        return ApproxSpaceReport(
            serialized_bits=len(self.serialize_state(state)),
            index_bits=state.index_sum.bit_length(),
            formula_bits=self.formula_bits,
            index_bound=self.index_bound,
            sum_bound=self.sum_bound,
        )

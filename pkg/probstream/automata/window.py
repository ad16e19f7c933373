import typing
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.buckets import ApproxParams, DEFAULT_DIGITS, PowerValue, bucket_index, render_value
from probstream.core import ParameterError, StreamingAutomaton
from probstream.numerics import EXACT_BITS_CAP, Probability, Rational, StreamParameters, ceil_log2, exact_product
from probstream.utils import BitReader, encode_probability, encode_uint

logger = getLogger(__name__)
logger.addHandler(NullHandler())

ONE = Probability(1)


class WindowParams(typing.NamedTuple):
    """Window size m, element bit size b and e, used per element as e/m."""

    m: int
    b: int
    approx: ApproxParams

    @classmethod
    def build(cls, m: int, b: int, epsilon: Rational) -> 'WindowParams':
        """Validate the window parameters."""
        if m < 1:
            raise ParameterError(f'window size must be positive, got {m}')
        if b < 1:
            raise ParameterError(f'bit size b must be positive, got {b}')
        return cls(m, b, ApproxParams.build(epsilon, divisor=m))

    @property
    def index_bound(self) -> Fraction:
        """Bound m*b/e of every slot index."""
        return Fraction(self.m * self.b) / self.approx.epsilon

    @property
    def slot_width(self) -> int:
        """Encoded width of one slot; the all ones code marks a zero element."""
        return ceil_log2(self.index_bound) + 1


class WindowState(typing.NamedTuple):
    """Bucket indices of the last m elements, oldest first. ``None`` marks a zero element."""

    indices: typing.Tuple[typing.Optional[int], ...]
    index_sum: int = 0

    @property
    def zero_positions(self) -> typing.FrozenSet[int]:
        """In-window positions holding 0."""
        return frozenset(i for i, index in enumerate(self.indices) if index is None)


class WindowSpaceReport(typing.NamedTuple):
    """Measured and predicted size of a window state."""

    serialized_bits: int
    slot_width: int
    formula_bits: int
    index_bound: Fraction


class WindowApproximator(StreamingAutomaton[WindowState, PowerValue]):
    """(1 - e)-approximation of the product of the last m elements.

    Before the stream starts the window is filled with ones.
    """

    def __init__(self, m: int, b: int, epsilon: Rational, exact_bits_cap: int = EXACT_BITS_CAP):
        """Initialize the automaton."""
        self.params = WindowParams.build(m, b, epsilon)
        self.elements = StreamParameters.build(m, b)
        self.base = self.params.approx.base
        self.exact_bits_cap = exact_bits_cap

    def initial_state(self) -> WindowState:
        """Window of m ones."""
        return WindowState((0,) * self.params.m)

    def step(self, state: WindowState, q) -> WindowState:
        """Evict the oldest slot and append the bucket index of ``q``."""
        self.elements.admit(q)
        oldest = state.indices[0]
        index_sum = state.index_sum - (oldest or 0)
        if q == 0:
            index = None
        else:
            index = 0 if q == 1 else bucket_index(q, self.base, exact_bits_cap=self.exact_bits_cap)
            index_sum += index
        logger.debug('Window slot %s evicted, %s stored for %s', oldest, index, q)
        return WindowState(state.indices[1:] + (index,), index_sum)

    def output(self, state: WindowState, render: typing.Optional[str] = None, digits: int = DEFAULT_DIGITS):
        """Return 0 while a zero is in the window, (1 - e/m)^index_sum otherwise."""
        value = PowerValue(self.base, state.index_sum, zero=None in state.indices)
        return render_value(value, render, digits, self.exact_bits_cap)

    def serialize_state(self, state: WindowState) -> str:
        """Fixed width slots, oldest first."""
        width = self.params.slot_width
        zero_code = (1 << width) - 1
        return ''.join(encode_uint(zero_code if index is None else index, width) for index in state.indices)

    def deserialize_state(self, bits: str) -> WindowState:
        """Decode a state produced by serialize_state."""
        reader = BitReader(bits)
        width = self.params.slot_width
        zero_code = (1 << width) - 1
        indices = []
        for _ in range(self.params.m):
            code = reader.read_uint(width)
            indices.append(None if code == zero_code else code)
        reader.finish()
        return WindowState(tuple(indices), sum(index for index in indices if index is not None))

    def space_report(self, state: WindowState) -> WindowSpaceReport:
        """Compare the encoded state with m slots of the predicted width."""
        return WindowSpaceReport(
            serialized_bits=len(self.serialize_state(state)),
            slot_width=self.params.slot_width,
            formula_bits=self.params.m * self.params.slot_width,
            index_bound=self.params.index_bound,
        )


class NaiveWindow(StreamingAutomaton[typing.Tuple[Probability, ...], Fraction]):
    """Stores the last m elements verbatim and outputs their exact product."""

    def __init__(self, m: int, b: int):
        """Initialize the automaton."""
        self.params = StreamParameters.build(m, b)

    def initial_state(self) -> typing.Tuple[Probability, ...]:
        """Window of m ones."""
        return (ONE,) * self.params.n

    def step(self, state, q):
        """Evict the oldest element and append ``q``."""
        self.params.admit(q)
        return state[1:] + (Probability(q),)

    def output(self, state) -> Fraction:
        """Exact product of the window."""
        return exact_product(state)

    def serialize_state(self, state) -> str:
        """Every element as r and s - 1 in b bits each."""
        return ''.join(encode_probability(q, self.params.b) for q in state)

    def deserialize_state(self, bits: str):
        """Decode a state produced by serialize_state."""
        reader = BitReader(bits)
        state = tuple(reader.read_probability(self.params.b) for _ in range(self.params.n))
        reader.finish()
        return state

    @property
    def formula_bits(self) -> int:
        """Predicted size 2mb of the state."""
        return 2 * self.params.n * self.params.b

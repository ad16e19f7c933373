import random
import typing
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.core import ParameterError, StreamingAutomaton
from probstream.numerics import Rational

logger = getLogger(__name__)
logger.addHandler(NullHandler())


class NoisyState(typing.NamedTuple):
    """Wrapped state plus the coin drawn for this run."""

    flip: bool
    inner: typing.Any


class NoisyAutomaton(StreamingAutomaton[NoisyState, bool]):
    """Boolean automaton whose answer is flipped with an exact probability.

    The coin is drawn once per run, when the initial state is created.
    """

    randomized = True

    def __init__(self, automaton: StreamingAutomaton, error: Rational, rng: typing.Optional[random.Random] = None):
        """Wrap ``automaton`` with flip probability ``error``."""
        error = Fraction(error)
        if not 0 <= error < 1:
            raise ParameterError(f'flip probability {error} outside [0, 1)')
        self.automaton = automaton
        self.error = error
        self.rng = rng if rng is not None else random.Random()

    def initial_state(self) -> NoisyState:
        """Draw the coin and start the wrapped automaton."""
        flip = self.rng.randrange(self.error.denominator) < self.error.numerator
        return NoisyState(flip, self.automaton.initial_state())

    def step(self, state: NoisyState, q) -> NoisyState:
        """Step the wrapped automaton."""
        return state._replace(inner=self.automaton.step(state.inner, q))

    def output(self, state: NoisyState) -> bool:
        """Wrapped answer, flipped when the coin says so."""
        return bool(self.automaton.output(state.inner)) != state.flip

    def serialize_state(self, state: NoisyState) -> str:
        """Coin bit followed by the wrapped state."""
        return ('1' if state.flip else '0') + self.automaton.serialize_state(state.inner)

    def deserialize_state(self, bits: str) -> NoisyState:
        """Decode a state produced by serialize_state."""
        if not bits:
            raise ParameterError('empty state encoding')
        return NoisyState(bits[0] == '1', self.automaton.deserialize_state(bits[1:]))

    def spawn(self, rng: random.Random) -> 'NoisyAutomaton':
        """Return a copy drawing its coin from ``rng``."""
        return NoisyAutomaton(self.automaton.spawn(rng), self.error, rng)

    @property
    def name(self) -> str:
        """Identifier with the flip probability."""
        return f'noisy({self.automaton.name}, {self.error})'

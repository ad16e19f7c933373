import functools
import random
import typing
from logging import NullHandler, getLogger

logger = getLogger(__name__)
logger.addHandler(NullHandler())

S = typing.TypeVar('S')
V = typing.TypeVar('V')


class ProbstreamError(Exception):
    """Base class for probstream errors."""

    pass


class InvalidProbabilityError(ProbstreamError, ValueError):
    """Value is not a rational probability."""

    pass


class ParameterError(ProbstreamError, ValueError):
    """Invalid algorithm, generator or protocol parameter."""

    pass


class PreconditionError(ParameterError):
    """A generator gate failed. The message names the violated inequality."""

    pass


class StreamError(ProbstreamError):
    """Base class for stream errors."""

    pass


class OversizedElementError(StreamError):
    """Stream element with bit size above the declared b."""

    pass


class StreamOverflowError(StreamError):
    """Stream longer than the declared maximum length."""

    pass


class CertificationError(ProbstreamError, ArithmeticError):
    """A comparison could not be certified."""

    pass


class ExactPowerTooLargeError(CertificationError):
    """Exact power refused by the blow-up cap."""

    pass


class EnumerationCapError(ProbstreamError):
    """Exhaustive enumeration exceeds the configured cap."""

    pass


class GenerationError(ProbstreamError):
    """A generated instance failed its own verification."""

    pass


class StreamingAutomaton(typing.Generic[S, V]):
    """Base class for all streaming automata.

    An automaton is a state machine over immutable states: ``step`` never mutates the state it receives.
    Randomized automata only draw from the random source given to ``spawn``.
    """

    randomized = False

    def initial_state(self) -> S:
        """Return the initial memory state."""
        raise NotImplementedError

    def step(self, state: S, q) -> S:
        """Return the state after reading ``q``."""
        raise NotImplementedError

    def output(self, state: S) -> V:
        """Return the output value of a state."""
        raise NotImplementedError

    def serialize_state(self, state: S) -> str:
        """Encode a state as a string of '0' and '1'."""
        raise NotImplementedError

    def deserialize_state(self, bits: str) -> S:
        """Decode a state produced by serialize_state."""
        raise NotImplementedError

    def spawn(self, rng: random.Random) -> 'StreamingAutomaton[S, V]':
        """Return an instance bound to an independent random source."""
        return self

    def run(self, stream: typing.Iterable, state: typing.Optional[S] = None) -> S:
        """Fold the stream into a state, starting from ``state`` or the initial state."""
        start = self.initial_state() if state is None else state
        return functools.reduce(self.step, stream, start)

    def evaluate(self, stream: typing.Iterable) -> V:
        """Return the output after reading the whole stream."""
        return self.output(self.run(stream))

    @property
    def name(self) -> str:
        """Automaton identifier used in reports."""
        return self.__class__.__name__

"""Error amplification by independent copies."""
import math
import random
import typing
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.core import ParameterError, StreamingAutomaton
from probstream.utils import BitReader, encode_block

logger = getLogger(__name__)
logger.addHandler(NullHandler())

MODES = ('median', 'majority')

#: Per copy error the copy count formula assumes.
BASE_ERROR = Fraction(1, 3)


class AmplifierConfig(typing.NamedTuple):
    """Number of copies and how their outputs are combined."""

    copies: int
    mode: str = 'median'
    target_error: typing.Optional[Fraction] = None

    @classmethod
    def build(
            cls,
            copies: int,
            mode: str = 'median',
            target_error: typing.Optional[Fraction] = None,
    ) -> 'AmplifierConfig':
        """Validate an odd positive copy count and a known mode."""
        if copies < 1 or copies % 2 == 0:
            raise ParameterError(f'copies must be odd and positive, got {copies}')
        if mode not in MODES:
            raise ParameterError(f'unknown amplifier mode {mode!r}, expected one of {", ".join(MODES)}')
        if target_error is not None and not 0 < target_error < BASE_ERROR:
            raise ParameterError(f'target error {target_error} outside (0, 1/3)')
        return cls(copies, mode, target_error)

    @classmethod
    def for_error(cls, target_error: Fraction, mode: str = 'majority') -> 'AmplifierConfig':
        """Smallest odd copy count whose Hoeffding bound exp(-copies/18) is at most the target error."""
        target_error = Fraction(target_error)
        if not 0 < target_error < BASE_ERROR:
            raise ParameterError(f'target error {target_error} outside (0, 1/3)')
        copies = math.ceil(18 * math.log(1 / target_error))
        return cls.build(copies if copies % 2 else copies + 1, mode, target_error)


class Amplifier(StreamingAutomaton[typing.Tuple[typing.Any, ...], typing.Any]):
    """Runs independent copies of an automaton and combines their outputs.

    Median mode needs totally ordered outputs, majority mode boolean ones.
    """

    def __init__(
            self,
            automaton: StreamingAutomaton,
            config: AmplifierConfig,
            rng: typing.Optional[random.Random] = None,
    ):
        """Spawn the copies, each with its own random source drawn from ``rng``."""
        self.automaton = automaton
        self.config = config
        rng = rng if rng is not None else random.Random()
        self.instances = tuple(automaton.spawn(random.Random(rng.getrandbits(64))) for _ in range(config.copies))

    @property
    def randomized(self) -> bool:  # type: ignore[override]
        """Whether the copies draw random bits."""
        return self.automaton.randomized

    def initial_state(self) -> typing.Tuple[typing.Any, ...]:
        """Initial state of every copy."""
        return tuple(instance.initial_state() for instance in self.instances)

    def step(self, state, q):
        """Feed ``q`` to every copy."""
        return tuple(instance.step(inner, q) for instance, inner in zip(self.instances, state))

    def output(self, state):
        """Median or majority of the copies' outputs."""
        values = [instance.output(inner) for instance, inner in zip(self.instances, state)]
        if self.config.mode == 'median':
            return sorted(values)[len(values) // 2]
        votes = sum(1 for value in values if value)
        logger.debug('Majority vote %d of %d', votes, len(values))
        return 2 * votes > len(values)

    def serialize_state(self, state) -> str:
        """Length prefixed states of the copies."""
        return ''.join(encode_block(instance.serialize_state(inner)) for instance, inner in zip(self.instances, state))

    def deserialize_state(self, bits: str):
        """Decode the copies' states."""
        reader = BitReader(bits)
        state = tuple(instance.deserialize_state(reader.read_block()) for instance in self.instances)
        reader.finish()
        return state

    def spawn(self, rng: random.Random) -> 'Amplifier':
        """Return an amplifier whose copies draw from ``rng``."""
        return Amplifier(self.automaton, self.config, rng)

    @property
    def name(self) -> str:
        """Identifier including the wrapped automaton and the copy count."""
        return f'{self.config.mode}({self.automaton.name} x{self.config.copies})'

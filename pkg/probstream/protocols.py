"""One-way protocols where Alice sends the serialized state of a streaming automaton to Bob.

Each reduction turns an automaton for a streaming problem into a protocol for a comparison
problem, so the message sizes measured here accompany the space lower bounds of the automata.
Bob only ever receives the message and his own input.
"""
import itertools
import math
import random
import typing
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.adversary.bucket_streams import BucketFoolingConfig, gen_bucket_stream
from probstream.adversary.prime_family import PrimeFoolingFamily, family_suffix, family_word
from probstream.buckets import ApproxParams, bucket_of_value, quotient_exceeds
from probstream.core import ParameterError, StreamingAutomaton
from probstream.numerics import Probability, Rational, largest_satisfying, log2_estimate, power_product_sign

logger = getLogger(__name__)
logger.addHandler(NullHandler())

#: Stride of the fooling streams used by the greater-than reduction.
GT_STRIDE = 5

#: Smallest bucket distance read as "greater than".
GT_BUCKET_GAP = 3

ONE = Probability(1)


class Transcript(typing.NamedTuple):
    """Record of one protocol run."""

    reduction: str
    alice_input: typing.Any
    bob_input: typing.Any
    message: str
    bob_outputs: typing.Tuple[typing.Any, ...]
    decision: bool
    expected: bool

    @property
    def message_bits(self) -> int:
        return len(self.message)

    @property
    def correct(self) -> bool:
        return self.decision == self.expected

    def to_line(self) -> str:
        """One line audit record."""
        return (f'reduction={self.reduction} alice={_compact(self.alice_input)} bob={_compact(self.bob_input)} '
                f'bits={self.message_bits} decision={int(self.decision)} expected={int(self.expected)}')


def _compact(value: typing.Any) -> str:
    if isinstance(value, (tuple, list)):
        return '[' + ','.join(_compact(v) for v in value) + ']'
    return str(value)


class IgtConfig(typing.NamedTuple):
    """Index greater-than reduction: window words over A = {2^(-i alpha) : 0 <= i < c}.

    alpha = ceil(4 delta) makes neighbouring elements of A differ by 2^alpha >= (1 - e)^-4.
    """

    epsilon: Fraction
    m: int
    b: int
    alpha: int
    c: int
    alphabet: typing.Tuple[Probability, ...]

    @classmethod
    def build(cls, epsilon: Rational, m: int, b: int) -> 'IgtConfig':
        """Derive alpha, c and the alphabet."""
        epsilon = ApproxParams.build(epsilon).epsilon
        if m < 1 or b < 1:
            raise ParameterError(f'm and b must be positive, got m = {m}, b = {b}')
        beta = 1 - epsilon
        below = largest_satisfying(
            lambda a: power_product_sign([(2, a), (beta, 4)]) < 0,
            hint=int(-4 * log2_estimate(beta)[0]),
        )
        alpha = below + 1
        c = b // alpha
        if c < 1:
            raise ParameterError(f'b = {b} is smaller than alpha = {alpha}')
        alphabet = tuple(Probability(1, 1 << (i * alpha)) for i in range(c))
        return cls(epsilon, m, b, alpha, c, alphabet)

    @property
    def one_minus_eps(self) -> Fraction:
        return 1 - self.epsilon

    @property
    def separated(self) -> bool:
        """Check 2^alpha (1 - e)^4 >= 1 exactly."""
        return power_product_sign([(2, self.alpha), (self.one_minus_eps, 4)]) >= 0


class SweepReport(typing.NamedTuple):
    """Correctness and message cost over a family of protocol inputs."""

    reduction: str
    instances: int
    correct: int
    max_bits: int
    mean_bits: Fraction
    reference_bits: float
    transcripts: typing.Tuple[Transcript, ...]

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, self.instances) if self.instances else Fraction(1)


def _parties(
        automaton: StreamingAutomaton,
        rng: typing.Optional[random.Random],
) -> typing.Tuple[StreamingAutomaton, StreamingAutomaton]:
    rng = rng if rng is not None else random.Random()
    return automaton.spawn(random.Random(rng.getrandbits(64))), automaton.spawn(random.Random(rng.getrandbits(64)))


def _alice(automaton: StreamingAutomaton, stream: typing.Iterable) -> str:
    message = automaton.serialize_state(automaton.run(stream))
    logger.debug('Alice sends %d bits', len(message))
    return message


def _check_range(name: str, value: int, low: int, high: int) -> None:
    if not low <= value <= high:
        raise ParameterError(f'{name} = {value} outside {low}..{high}')


def _bob_gt_from_app(
        automaton: StreamingAutomaton,
        cfg: BucketFoolingConfig,
        message: str,
        j: int,
) -> typing.Tuple[typing.Tuple[typing.Any, ...], bool]:
    received = automaton.output(automaton.deserialize_state(message))
    own = automaton.evaluate(gen_bucket_stream(cfg, GT_STRIDE * j))
    gap = bucket_of_value(received, cfg.one_minus_eps) - bucket_of_value(own, cfg.one_minus_eps)
    return (received, own, gap), gap >= GT_BUCKET_GAP


def gt_from_app(
        automaton: StreamingAutomaton,
        cfg: BucketFoolingConfig,
        i: int,
        j: int,
        rng: typing.Optional[random.Random] = None,
) -> Transcript:
    """Decide i > j from an approximation automaton sized for the 2n long fooling streams.

    Bob reads the bucket of both outputs under base 1 - e and answers yes when they are at
    least three buckets apart.
    """
    top = cfg.y // GT_STRIDE
    _check_range('i', i, 0, top)
    _check_range('j', j, 0, top)
    alice, bob = _parties(automaton, rng)
    message = _alice(alice, gen_bucket_stream(cfg, GT_STRIDE * i))
    outputs, decision = _bob_gt_from_app(bob, cfg, message, j)
    return Transcript('gt-app', i, j, message, outputs, decision, i > j)


def _bob_gt_from_tpp(automaton: StreamingAutomaton, fam: PrimeFoolingFamily, message: str, j: int) -> bool:
    state = automaton.run(family_suffix(fam, family_word(fam, j)), automaton.deserialize_state(message))
    return bool(automaton.output(state))


def gt_from_tpp(
        automaton: StreamingAutomaton,
        fam: PrimeFoolingFamily,
        i: int,
        j: int,
        rng: typing.Optional[random.Random] = None,
) -> Transcript:
    """Decide i > j from a threshold automaton sized for 2n elements of the family's bit size."""
    _check_range('i', i, 1, fam.size)
    _check_range('j', j, 1, fam.size)
    alice, bob = _parties(automaton, rng)
    message = _alice(alice, (fam.threshold,) + family_word(fam, i))
    decision = _bob_gt_from_tpp(bob, fam, message, j)
    return Transcript('gt-tpp', i, j, message, (decision,), decision, i > j)


def _bob_igt_from_swapp(
        automaton: StreamingAutomaton,
        cfg: IgtConfig,
        message: str,
        i: int,
        a: Probability,
) -> typing.Tuple[typing.Tuple[typing.Any, ...], bool]:
    state = automaton.deserialize_state(message)
    ones = (ONE,) * (i - 1)
    first = automaton.output(automaton.run(ones, state))
    second = automaton.output(automaton.run(ones + (a,), state))
    return (first, second), quotient_exceeds(first, second, 1 / cfg.one_minus_eps ** 2)


def igt_from_swapp(
        automaton: StreamingAutomaton,
        cfg: IgtConfig,
        alice_word: typing.Sequence[Rational],
        i: int,
        a: Rational,
        rng: typing.Optional[random.Random] = None,
) -> Transcript:
    """Decide a_i > a from a window automaton with window size m.

    Bob pushes i - 1 ones, so that a_i becomes the oldest element, and compares the window with
    and without a pushed after them.
    """
    word = tuple(Probability(q) for q in alice_word)
    if len(word) != cfg.m:
        raise ParameterError(f'Alice needs {cfg.m} elements, got {len(word)}')
    if any(q not in cfg.alphabet for q in word):
        raise ParameterError(f'Alice input {_compact(word)} leaves the alphabet {_compact(cfg.alphabet)}')
    a = Probability(a)
    if a not in cfg.alphabet:
        raise ParameterError(f'Bob value {a} outside the alphabet {_compact(cfg.alphabet)}')
    _check_range('i', i, 1, cfg.m)

    alice, bob = _parties(automaton, rng)
    message = _alice(alice, word)
    outputs, decision = _bob_igt_from_swapp(bob, cfg, message, i, a)
    return Transcript('igt-swapp', word, (i, a), message, outputs, decision, word[i - 1] > a)


def _evaluate(
        run: typing.Callable[..., Transcript],
        inputs: typing.Sequence[typing.Tuple[typing.Any, ...]],
        rng: typing.Optional[random.Random],
        workers: int,
) -> typing.List[Transcript]:
    rng = rng if rng is not None else random.Random()
    seeds = [rng.getrandbits(64) for _ in inputs]

    def evaluate(job: typing.Tuple[typing.Tuple[typing.Any, ...], int]) -> Transcript:
        args, seed = job
        return run(*args, rng=random.Random(seed))

    jobs = list(zip(inputs, seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(evaluate, jobs))
    return [evaluate(job) for job in jobs]


def message_cost_sweep(
        reduction: str,
        transcripts: typing.Sequence[Transcript],
        reference_bits: float,
) -> SweepReport:
    """Aggregate correctness and message sizes of a sweep."""
    sizes = [t.message_bits for t in transcripts]
    report = SweepReport(
        reduction=reduction,
        instances=len(transcripts),
        correct=sum(1 for t in transcripts if t.correct),
        max_bits=max(sizes, default=0),
        mean_bits=Fraction(sum(sizes), len(sizes)) if sizes else Fraction(0),
        reference_bits=reference_bits,
        transcripts=tuple(transcripts),
    )
    logger.debug('%s sweep: %d of %d correct, max %d bits', reduction, report.correct, report.instances,
                 report.max_bits)
    return report


def sweep_gt_from_app(
        automaton: StreamingAutomaton,
        cfg: BucketFoolingConfig,
        rng: typing.Optional[random.Random] = None,
        workers: int = 1,
) -> SweepReport:
    """Run every pair (i, j) of fooling stream indices."""
    indices = range(cfg.y // GT_STRIDE + 1)
    inputs = [(automaton, cfg, i, j) for i, j in itertools.product(indices, indices)]
    transcripts = _evaluate(gt_from_app, inputs, rng, workers)
    return message_cost_sweep('gt-app', transcripts, math.log2(len(indices)))


def sweep_gt_from_tpp(
        automaton: StreamingAutomaton,
        fam: PrimeFoolingFamily,
        rng: typing.Optional[random.Random] = None,
        workers: int = 1,
) -> SweepReport:
    """Run every pair (i, j) of family ranks."""
    fam.words()
    ranks = range(1, fam.size + 1)
    inputs = [(automaton, fam, i, j) for i, j in itertools.product(ranks, ranks)]
    transcripts = _evaluate(gt_from_tpp, inputs, rng, workers)
    return message_cost_sweep('gt-tpp', transcripts, float(fam.n * fam.b))


def sweep_igt_from_swapp(
        automaton: StreamingAutomaton,
        cfg: IgtConfig,
        rng: typing.Optional[random.Random] = None,
        workers: int = 1,
) -> SweepReport:
    """Run every Alice word over the alphabet against every index and value."""
    inputs = [
        (automaton, cfg, word, i, a)
        for word in itertools.product(cfg.alphabet, repeat=cfg.m)
        for i in range(1, cfg.m + 1)
        for a in cfg.alphabet
    ]
    transcripts = _evaluate(igt_from_swapp, inputs, rng, workers)
    return message_cost_sweep('igt-swapp', transcripts, cfg.m * math.log2(cfg.c))


def success_rate(
        run_once: typing.Callable[[random.Random], Transcript],
        trials: int,
        rng: typing.Optional[random.Random] = None,
) -> Fraction:
    """Fraction of correct decisions over independent runs, each with fresh private randomness."""
    if trials < 1:
        raise ParameterError(f'trials must be positive, got {trials}')
    rng = rng if rng is not None else random.Random()
    correct = sum(1 for _ in range(trials) if run_once(random.Random(rng.getrandbits(64))).correct)
    return Fraction(correct, trials)

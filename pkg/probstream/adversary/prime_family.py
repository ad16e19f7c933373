"""Fooling family for threshold automata built from fractions of consecutive primes."""
import itertools
import random
import typing
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.core import EnumerationCapError, GenerationError, ParameterError, StreamingAutomaton
from probstream.numerics import PrimeTable, Probability, Rational, bit_size, ceil_log2, exact_product, first_primes

logger = getLogger(__name__)
logger.addHandler(NullHandler())

DEFAULT_GAMMA = Fraction(1, 2)
DEFAULT_ENUMERATION_CAP = 4096

Word = typing.Tuple[Probability, ...]


class PrimeFoolingFamily:
    """Words v = r_1..r_n with r_i taken from block Q_i, and the threshold t they are compared to.

    Block Q_i holds the B = 2^b fractions p_j / p_(j+1) of consecutive primes in its range, so
    every word has a distinct product, and the suffix s_1/r_1 .. s_n/r_n brings the product of
    any word back to t exactly.
    """

    def __init__(
            self,
            n: int,
            b: int,
            gamma: Fraction,
            table: PrimeTable,
            enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    ):
        """Build the blocks from the first nB + n + 1 primes and check the family invariants."""
        self.n = n
        self.b = b
        self.gamma = gamma
        self.table = table
        self.enumeration_cap = enumeration_cap
        big_b = self.big_b
        p = table.nth
        self.blocks: typing.Tuple[typing.Tuple[Probability, ...], ...] = tuple(
            tuple(Probability(p(j), p(j + 1)) for j in range((i - 1) * (big_b + 1) + 1, i * (big_b + 1)))
            for i in range(1, n + 1)
        )
        self.threshold = Probability(p(1), p(table.count))
        self.suffix_numbers = tuple(
            Probability(p((i - 1) * (big_b + 1) + 1), p(i * (big_b + 1) + 1)) for i in range(1, n + 1)
        )
        self._words: typing.Optional[typing.Tuple[Word, ...]] = None
        self._verify()

    @property
    def big_b(self) -> int:
        return 1 << self.b

    @property
    def size(self) -> int:
        """Number of words, B^n."""
        return self.big_b ** self.n

    @property
    def largest_prime(self) -> int:
        return self.table.primes[-1]

    @property
    def max_bit_size(self) -> int:
        """Largest bit size among the threshold, block elements and suffix elements."""
        candidates = [self.threshold] + [q for block in self.blocks for q in block]
        candidates += [s / r for s, block in zip(self.suffix_numbers, self.blocks) for r in block]
        return max(bit_size(q) for q in candidates)

    @property
    def prime_bits(self) -> int:
        """ceil(2 log2 p) for the largest prime p of the family."""
        return (self.largest_prime ** 2 - 1).bit_length()

    @property
    def bit_budget_holds(self) -> bool:
        """Check ceil(2 log2 p) <= (2 + gamma)(log2 n + b) exactly."""
        g, h = self.gamma.numerator, self.gamma.denominator
        factor = 2 * h + g
        return 1 << (self.prime_bits * h) <= self.n ** factor * (1 << (self.b * factor))

    def _verify(self) -> None:
        elements = [q for block in self.blocks for q in block]
        if len(set(elements)) != len(elements):
            raise GenerationError('prime blocks are not pairwise disjoint')
        if exact_product(self.suffix_numbers) != self.threshold:
            raise GenerationError('suffix numbers do not multiply to the threshold')
        for s, block in zip(self.suffix_numbers, self.blocks):
            if any(s > r for r in block):
                raise GenerationError(f'suffix number {s} exceeds an element of its block')
        if self.max_bit_size > self.prime_bits:
            raise GenerationError(f'bit size {self.max_bit_size} above ceil(2 log2 {self.largest_prime})')
        if not self.bit_budget_holds:
            logger.warning(
                'Bit budget (2 + %s)(log2 n + b) not met at n = %d, b = %d: max bit size is %d',
                self.gamma, self.n, self.b, self.max_bit_size,
            )

    def words(self) -> typing.Tuple[Word, ...]:
        """All words ranked by strictly decreasing product."""
        if self._words is None:
            if self.size > self.enumeration_cap:
                raise EnumerationCapError(f'family of {self.size} words exceeds the cap of {self.enumeration_cap}')
            ranked = sorted(itertools.product(*self.blocks), key=exact_product, reverse=True)
            products = [exact_product(word) for word in ranked]
            if any(current >= previous for previous, current in zip(products, products[1:])):
                raise GenerationError('family words do not have distinct products')
            self._words = tuple(ranked)
        return self._words

    def contains(self, word: typing.Sequence[Rational]) -> bool:
        return len(word) == self.n and all(r in block for r, block in zip(word, self.blocks))


def gen_prime_family(
        n: int,
        b: int,
        gamma: Rational = DEFAULT_GAMMA,
        enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> PrimeFoolingFamily:
    """Build the family over the first nB + n + 1 primes, B = 2^b."""
    gamma = Fraction(gamma)
    if n < 1 or b < 1:
        raise ParameterError(f'n and b must be positive, got n = {n}, b = {b}')
    if gamma <= 0:
        raise ParameterError(f'gamma must be positive, got {gamma}')
    table = first_primes(n * (1 << b) + n + 1)
    logger.debug('Prime family n = %d b = %d over primes up to %d', n, b, table.primes[-1])
    return PrimeFoolingFamily(n, b, gamma, table, enumeration_cap)


def family_word(fam: PrimeFoolingFamily, rank: int) -> Word:
    """Return the word of the given rank; a larger rank means a smaller product."""
    if not 1 <= rank <= fam.size:
        raise ParameterError(f'rank {rank} outside 1..{fam.size}')
    return fam.words()[rank - 1]


def family_suffix(fam: PrimeFoolingFamily, word: typing.Sequence[Rational]) -> Word:
    """Return s_1/r_1 .. s_n/r_n, which brings the product of the word back to the threshold."""
    if not fam.contains(word):
        raise ParameterError(f'{list(map(str, word))} is not a word of the family')
    return tuple(Probability(s / r) for s, r in zip(fam.suffix_numbers, word))


def sample_word(fam: PrimeFoolingFamily, rng: random.Random) -> Word:
    """Draw a uniform word without enumerating the family."""
    return tuple(rng.choice(block) for block in fam.blocks)


class FoolingVerdict(typing.NamedTuple):
    """Outcome of running an automaton on every pair of family words."""

    words: int
    pairs: int
    distinct_states: int
    required_bits: int
    collisions: typing.Tuple[typing.Tuple[int, int], ...]
    wrong_outputs: typing.Tuple[typing.Tuple[int, int], ...]

    @property
    def violations(self) -> int:
        """Pairs whose states after t u and t v collide."""
        return len(self.collisions)

    @property
    def correct(self) -> bool:
        return not self.collisions and not self.wrong_outputs


def fooling_check(automaton: StreamingAutomaton, fam: PrimeFoolingFamily) -> FoolingVerdict:
    """Run t u w_v and t v w_v for every pair of ranks u > v.

    A correct automaton outputs 1 on the first stream and 0 on the second. Pairs whose states
    after t u and t v serialize identically cannot be told apart by any suffix and are reported
    as collisions; runs with the wrong answer are reported as ``(u, v)`` and ``(v, v)``.
    """
    words = fam.words()
    states = [automaton.run((fam.threshold,) + word) for word in words]
    encodings = [automaton.serialize_state(state) for state in states]

    pairs = 0
    collisions = []
    wrong = []
    for v in range(1, len(words) + 1):
        suffix = family_suffix(fam, words[v - 1])
        if automaton.output(automaton.run(suffix, states[v - 1])):
            wrong.append((v, v))
        for u in range(v + 1, len(words) + 1):
            pairs += 1
            if encodings[u - 1] == encodings[v - 1]:
                collisions.append((u, v))
            if not automaton.output(automaton.run(suffix, states[u - 1])):
                wrong.append((u, v))

    verdict = FoolingVerdict(
        words=len(words),
        pairs=pairs,
        distinct_states=len(set(encodings)),
        required_bits=ceil_log2(len(words)),
        collisions=tuple(collisions),
        wrong_outputs=tuple(wrong),
    )
    logger.debug('Fooling check of %s: %d collisions, %d wrong outputs', automaton.name, verdict.violations,
                 len(verdict.wrong_outputs))
    return verdict

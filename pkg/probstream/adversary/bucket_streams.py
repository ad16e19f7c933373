"""Streams over a three element alphabet whose products land in a chosen bucket.

Every stream over {(k-1)/k, (k-2)/(k-1), 2^-b} is built and checked with exact fractions, so the
generated instances separate any automaton that approximates the product too coarsely.
"""
import math
import typing
from functools import lru_cache
from fractions import Fraction
from logging import NullHandler, getLogger

from probstream.buckets import MAX_EPSILON, bucket_of_value
from probstream.core import ExactPowerTooLargeError, GenerationError, ParameterError, PreconditionError
from probstream.numerics import (
    EXACT_BITS_CAP,
    Probability,
    Rational,
    bit_size,
    ceil_log2,
    exact_product,
    largest_satisfying,
    log2_estimate,
    power_product_sign,
)

logger = getLogger(__name__)
logger.addHandler(NullHandler())


def choose_k(epsilon: Rational, b: int) -> int:
    """Return the smallest k >= 3 with 1/k <= e <= 1/(k-1) and k <= 2^b."""
    epsilon = Fraction(epsilon)
    if not 0 < epsilon <= MAX_EPSILON:
        raise ParameterError(f'epsilon {epsilon} outside (0, 1/2]')
    if epsilon * (1 << b) < 1:
        raise PreconditionError(f'-log2(e) <= b violated: e = {epsilon} < 1/2^{b}')
    k = max(3, math.ceil(1 / epsilon))
    if k > 1 << b:
        raise PreconditionError(f'k = {k} exceeds 2^b = {1 << b}')
    if not Fraction(1, k) <= epsilon <= Fraction(1, k - 1):
        raise GenerationError(f'1/k <= e <= 1/(k-1) fails for k = {k}, e = {epsilon}')
    return k


class BucketFoolingConfig(typing.NamedTuple):
    """Parameters of the bucket hitting construction.

    ``n`` is the length budget of the construction (b < -log2(1 - e) n) while generated streams
    may be up to ``max_stream_length`` = 2n long.
    """

    epsilon: Fraction
    b: int
    n: int
    k: int
    alphabet: typing.Tuple[Probability, Probability, Probability]
    y: int

    @classmethod
    def build(cls, epsilon: Rational, b: int, n: int) -> 'BucketFoolingConfig':
        """Check the preconditions exactly and derive k, the alphabet and y = floor(n b / delta)."""
        epsilon = Fraction(epsilon)
        if n < 1 or b < 1:
            raise ParameterError(f'n and b must be positive, got n = {n}, b = {b}')
        k = choose_k(epsilon, b)
        one_minus_eps = 1 - epsilon
        if power_product_sign([(2, b), (one_minus_eps, n)]) >= 0:
            raise PreconditionError(f'b < -log2(1 - e) n violated for e = {epsilon}, b = {b}, n = {n}')
        if epsilon < Fraction(1, (k - 1) ** 2):
            raise GenerationError(f'covering inequality e >= 1/(k-1)^2 fails for k = {k}')

        alphabet = (Probability(k - 1, k), Probability(k - 2, k - 1), Probability(1, 1 << b))
        oversized = [q for q in alphabet if bit_size(q) > b]
        if oversized:
            raise GenerationError(f'alphabet elements {oversized} exceed bit size {b}')

        delta = -log2_estimate(one_minus_eps)[0]

        def below(y: int) -> bool:
            return power_product_sign([(2, -n * b), (one_minus_eps, -y)]) <= 0

        y = largest_satisfying(below, hint=int(n * b / delta) if delta else 0)
        logger.debug('Bucket construction e = %s b = %d n = %d: k = %d, y = %d', epsilon, b, n, k, y)
        return cls(epsilon, b, n, k, alphabet, y)

    @property
    def one_minus_eps(self) -> Fraction:
        return 1 - self.epsilon

    @property
    def heavy(self) -> Probability:
        """Multiplier (k-1)/k."""
        return self.alphabet[0]

    @property
    def light(self) -> Probability:
        """Multiplier (k-2)/(k-1)."""
        return self.alphabet[1]

    @property
    def tiny(self) -> Probability:
        """Multiplier 2^-b."""
        return self.alphabet[2]

    @property
    def max_stream_length(self) -> int:
        return 2 * self.n


@lru_cache(maxsize=1024)
def gen_bucket_stream(
        cfg: BucketFoolingConfig,
        j: int,
        exact_bits_cap: int = EXACT_BITS_CAP,
) -> typing.Tuple[Probability, ...]:
    """Return a stream over the alphabet whose product lies in bucket j of base 1 - e.

    The stream starts with m = floor(j delta / b) copies of 2^-b, which reach some bucket s <= j,
    then every step multiplies by (k-1)/k or (k-2)/(k-1) and moves the product exactly one
    bucket deeper.
    """
    if not 0 <= j <= cfg.y:
        raise ParameterError(f'bucket {j} outside 0..{cfg.y}')
    beta = cfg.one_minus_eps
    size = (j + 2) * max(beta.numerator.bit_length(), beta.denominator.bit_length())
    if size > exact_bits_cap:
        raise ExactPowerTooLargeError(f'bucket {j} needs {size} bit powers, cap is {exact_bits_cap}')

    delta = -log2_estimate(beta)[0]
    m = largest_satisfying(
        lambda m: power_product_sign([(2, cfg.b * m), (beta, j)]) <= 0,
        hint=int(j * delta / cfg.b),
    )
    if m > cfg.n:
        raise GenerationError(f'{m} copies of 2^-{cfg.b} exceed n = {cfg.n}')
    product = Fraction(1, 1 << (cfg.b * m))
    start = bucket_of_value(product, beta) if m else 0
    if not max(0, j - cfg.n) <= start <= j:
        raise GenerationError(f'prefix product lands in bucket {start}, outside {max(0, j - cfg.n)}..{j}')

    stream = [cfg.tiny] * m
    heavy_limit = Fraction(cfg.k, cfg.k - 1)
    light_limit = Fraction(cfg.k - 1, cfg.k - 2)
    upper = beta ** (start + 1)
    for bucket in range(start, j):
        lower = upper * beta
        if product <= heavy_limit * upper:
            q = cfg.heavy
        elif product > light_limit * lower:
            q = cfg.light
        else:
            raise GenerationError(f'neither multiplier applies in bucket {bucket}')
        product *= q
        if not lower < product <= upper:
            raise GenerationError(f'multiplier {q} left bucket {bucket} for a bucket other than {bucket + 1}')
        stream.append(q)
        upper = lower

    if len(stream) > cfg.max_stream_length:
        raise GenerationError(f'stream of length {len(stream)} exceeds 2n = {cfg.max_stream_length}')
    logger.debug('Bucket %d reached with %d elements', j, len(stream))
    return tuple(stream)


def gen_app_fooling_streams(
        cfg: BucketFoolingConfig,
        stride: int,
        exact_bits_cap: int = EXACT_BITS_CAP,
) -> typing.List[typing.Tuple[Probability, ...]]:
    """Return streams s_0..s_(y // stride), the product of s_j lying in bucket stride * j.

    No value approximates the products of two of them at once: consecutive products a_i > a_j
    satisfy a_j / (1 - e) < (1 - e) a_i, checked exactly.
    """
    if stride < 1:
        raise ParameterError(f'stride must be positive, got {stride}')
    streams = [gen_bucket_stream(cfg, stride * j, exact_bits_cap) for j in range(cfg.y // stride + 1)]
    beta = cfg.one_minus_eps
    products = [exact_product(stream) for stream in streams]
    for i, (previous, current) in enumerate(zip(products, products[1:])):
        if not current < previous or not current / beta < beta * previous:
            raise GenerationError(f'streams {i} and {i + 1} are not separated by a factor (1 - e)^2')
    return streams


def fooling_set_bits(cfg: BucketFoolingConfig, stride: int) -> int:
    """Bits a deterministic automaton needs to tell the fooling streams apart."""
    if stride < 1:
        raise ParameterError(f'stride must be positive, got {stride}')
    return ceil_log2(cfg.y // stride + 1)

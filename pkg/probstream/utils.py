from probstream.core import ParameterError
from probstream.numerics import Probability


def encode_uint(value: int, width: int) -> str:
    """Encode a nonnegative integer with a fixed number of bits."""
    if value < 0 or value.bit_length() > width:
        raise ParameterError(f'{value} does not fit in {width} bits')
    return format(value, f'0{width}b') if width else ''


def encode_minimal(value: int) -> str:
    """Encode a nonnegative integer without leading zeros. Zero is the empty string."""
    if value < 0:
        raise ParameterError(f'{value} is negative')
    return format(value, 'b') if value else ''


def encode_gamma(value: int) -> str:
    """Elias gamma code of a nonnegative integer (shifted by one)."""
    if value < 0:
        raise ParameterError(f'{value} is negative')
    body = format(value + 1, 'b')
    return '0' * (len(body) - 1) + body


def encode_block(bits: str) -> str:
    """Prefix a bit string with its gamma coded length."""
    return encode_gamma(len(bits)) + bits


def encode_probability(q, b: int) -> str:
    """Encode a probability r/s of bit size at most b as r and s - 1 in b bits each."""
    return encode_uint(q.numerator, b) + encode_uint(q.denominator - 1, b)


class BitReader:
    """Sequential reader over a string of '0' and '1'."""

    def __init__(self, bits: str):
        """Initialize the reader."""
        if bits.strip('01'):
            raise ParameterError('bit string contains characters other than 0 and 1')
        self.bits = bits
        self.position = 0

    @property
    def remaining(self) -> int:
        """Number of unread bits."""
        return len(self.bits) - self.position

    def read(self, width: int) -> str:
        """Read ``width`` raw bits."""
        if width > self.remaining:
            raise ParameterError(f'truncated bit string: {width} bits requested, {self.remaining} left')
        chunk = self.bits[self.position:self.position + width]
        self.position += width
        return chunk

    def read_flag(self) -> bool:
        """Read one bit as a boolean."""
        return self.read(1) == '1'

    def read_uint(self, width: int) -> int:
        """Read a fixed width unsigned integer."""
        chunk = self.read(width)
        return int(chunk, 2) if chunk else 0

    def read_gamma(self) -> int:
        """Read an Elias gamma coded integer."""
        zeros = 0
        while self.read(1) == '0':
            zeros += 1
        self.position -= 1
        return int(self.read(zeros + 1), 2) - 1

    def read_block(self) -> str:
        """Read a gamma length prefixed block."""
        return self.read(self.read_gamma())

    def read_probability(self, b: int) -> Probability:
        """Read a probability written by encode_probability."""
        numerator = self.read_uint(b)
        return Probability(numerator, self.read_uint(b) + 1)

    def read_rest(self) -> str:
        """Read all unread bits."""
        return self.read(self.remaining)

    def finish(self) -> None:
        """Check that every bit was consumed."""
        if self.remaining:
            raise ParameterError(f'{self.remaining} trailing bits in state encoding')


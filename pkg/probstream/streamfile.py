"""Stream files: one ``r/s`` fraction per line.

Blank lines and lines starting with ``#`` are ignored; a single ``!threshold r/s`` header gives
the threshold of a threshold query. Decimals such as ``0.5`` are rejected.
"""
import os
import re
import typing
from logging import NullHandler, getLogger

from probstream.core import InvalidProbabilityError, ProbstreamError
from probstream.numerics import Probability

logger = getLogger(__name__)
logger.addHandler(NullHandler())

FRACTION_RE = re.compile(r'(?P<numerator>[0-9]+)/(?P<denominator>[0-9]+)')
HEADER_RE = re.compile(r'!threshold (?P<value>\S+)')


class StreamFormatError(ProbstreamError, ValueError):
    """Malformed stream file line."""

    def __init__(self, line_number: int, message: str):
        """Initialize the error with the 1-based line number."""
        super().__init__(f'line {line_number}: {message}')
        self.line_number = line_number


class StreamFile(typing.NamedTuple):
    """Parsed stream file."""

    elements: typing.Tuple[Probability, ...]
    threshold: typing.Optional[Probability] = None

    def threshold_stream(self) -> typing.Tuple[Probability, ...]:
        """Stream with the threshold first; without a header the first element is the threshold."""
        if self.threshold is None:
            return self.elements
        return (self.threshold,) + self.elements


def parse_fraction(text: str) -> Probability:
    """Parse a strict ``r/s`` probability."""
    match = FRACTION_RE.fullmatch(text)
    if not match:
        raise ValueError(f'expected r/s, got {text!r}')
    numerator, denominator = int(match.group('numerator')), int(match.group('denominator'))
    if denominator == 0:
        raise InvalidProbabilityError(f'{text} has a zero denominator')
    if numerator > denominator:
        raise InvalidProbabilityError(f'{text} is greater than 1')
    return Probability(numerator, denominator)


def parse_stream(lines: typing.Iterable[str]) -> StreamFile:
    """Parse stream file lines."""
    elements = []
    threshold = None
    for line_number, raw in enumerate(lines, start=1):
        line = raw.rstrip('\r\n')
        if not line.strip() or line.startswith('#'):
            continue
        try:
            if line.startswith('!'):
                header = HEADER_RE.fullmatch(line)
                if not header:
                    raise ValueError(f'unknown directive {line!r}')
                if threshold is not None:
                    raise ValueError('duplicate threshold directive')
                threshold = parse_fraction(header.group('value'))
            else:
                elements.append(parse_fraction(line))
        except ValueError as error:
            raise StreamFormatError(line_number, str(error)) from error
    logger.debug('Parsed %d elements (threshold %s)', len(elements), threshold)
    return StreamFile(tuple(elements), threshold)


def read_stream(path: typing.Union[str, os.PathLike]) -> StreamFile:
    with open(path, encoding='utf-8') as stream:
        return parse_stream(stream)


def format_stream(
        elements: typing.Iterable[Probability],
        threshold: typing.Optional[Probability] = None,
        comments: typing.Iterable[str] = (),
) -> str:
    """Render a stream file."""
    lines = [f'# {comment}' for comment in comments]
    if threshold is not None:
        lines.append(f'!threshold {threshold.numerator}/{threshold.denominator}')
    lines.extend(f'{q.numerator}/{q.denominator}' for q in elements)
    return ''.join(f'{line}\n' for line in lines)


def write_stream(path: typing.Union[str, os.PathLike], text: str) -> None:
    with open(path, 'w', encoding='utf-8') as stream:
        stream.write(text)

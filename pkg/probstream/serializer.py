import json
import re
import typing
from collections.abc import Mapping
from decimal import Decimal
from fractions import Fraction

import yaml
from yaml.composer import Composer
from yaml.constructor import SafeConstructor
from yaml.parser import Parser
from yaml.reader import Reader
from yaml.resolver import Resolver as DefaultResolver
from yaml.scanner import Scanner

from probstream.buckets import PowerValue, round_fraction
from probstream.units import units

#: Integers above this many bits are shown as a rounded decimal.
DISPLAY_BITS = 12000

FRACTION_PATTERN = re.compile(r'^[0-9]+/[0-9]+$')


def format_fraction(value: Fraction) -> str:
    """Render a fraction as r/s."""
    if max(value.numerator.bit_length(), value.denominator.bit_length()) > DISPLAY_BITS:
        return f'~{round_fraction(value, 20)}'
    return f'{value.numerator}/{value.denominator}'


def format_quantity(quantity) -> str:
    """Render a quantity as '<magnitude> <unit>'."""
    return f'{quantity.magnitude} {quantity.units}'


def format_property(o) -> str:
    """Convert report values to string."""
    if isinstance(o, Fraction):
        return format_fraction(o)

    if isinstance(o, (PowerValue, Decimal)):
        return str(o)

    if hasattr(o, 'units'):
        return format_quantity(o)

    return str(o)


def get_json_encoder(context):
    """Return json encoder that handles all needed object types."""
    class StringEncoder(json.JSONEncoder):
        """String json encoder."""

        def default(self, o):
            return format_property(o)

    return StringEncoder


def get_yaml_dumper(context):
    """Return yaml dumper that handles all needed object types."""
    class CustomDumper(yaml.SafeDumper):
        """Custom YAML Dumper."""

        def default_representer(self, data):
            """Convert data to string."""
            if isinstance(data, int):
                return self.represent_int(data)
            return self.represent_str(format_property(data))

        def default_quantity_representer(self, data):
            """Convert quantity to string."""
            return self.represent_str(format_quantity(data))

    CustomDumper.add_multi_representer(Fraction, CustomDumper.default_representer)
    CustomDumper.add_representer(PowerValue, CustomDumper.default_representer)
    CustomDumper.add_representer(Decimal, CustomDumper.default_representer)
    if units:
        CustomDumper.add_representer(units.Quantity, CustomDumper.default_quantity_representer)

    return CustomDumper


def get_yaml_loader():
    """Return a yaml loader that reads r/s scalars as fractions and sequences as tuples."""
    yaml_implicit_resolvers = dict(DefaultResolver.yaml_implicit_resolvers)

    class Resolver(DefaultResolver):
        """Custom YAML Resolver."""

    Resolver.yaml_implicit_resolvers = {}
    for ch, vs in yaml_implicit_resolvers.items():
        Resolver.yaml_implicit_resolvers.setdefault(ch, []).extend(
            (tag, regexp) for tag, regexp in vs
            if not tag.endswith('float')
        )
    Resolver.add_implicit_resolver('!fraction', FRACTION_PATTERN, list('0123456789'))

    class CustomLoader(Reader, Scanner, Parser, Composer, SafeConstructor, Resolver):
        """Custom YAML Loader."""

        def __init__(self, stream):
            Reader.__init__(self, stream)
            Scanner.__init__(self)
            Parser.__init__(self)
            Composer.__init__(self)
            SafeConstructor.__init__(self)
            Resolver.__init__(self)

    CustomLoader.add_constructor('tag:yaml.org,2002:seq', yaml.Loader.construct_python_tuple)

    def fraction_constructor(loader, node):
        value = loader.construct_scalar(node)
        return Fraction(value)

    CustomLoader.add_constructor('!fraction', fraction_constructor)

    return CustomLoader


def _flatten(
        report: typing.Mapping[str, typing.Any],
        prefix: str = '',
) -> typing.Iterator[typing.Tuple[str, typing.Any]]:
    for key, value in report.items():
        name = f'{prefix}{key}'
        if isinstance(value, Mapping):
            yield from _flatten(value, f'{name}.')
        elif isinstance(value, (list, tuple)) and value and all(isinstance(v, Mapping) for v in value):
            for i, item in enumerate(value):
                if any(isinstance(v, Mapping) for v in item.values()):
                    yield from _flatten(item, f'{name}[{i}].')
                else:
                    # one line per record
                    yield f'{name}[{i}]', item
        else:
            yield name, value


def _format_scalar(value: typing.Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, Mapping):
        return ' '.join(f'{k}={_format_scalar(v)}' for k, v in value.items() if v is not None)
    if isinstance(value, (list, tuple)):
        return '[' + ','.join(_format_scalar(v) for v in value) + ']'
    return format_property(value)


def format_text(report: typing.Mapping[str, typing.Any]) -> str:
    """Render a report as a flat block of 'key: value' lines. Missing values are skipped."""
    return '\n'.join(f'{key}: {_format_scalar(value)}' for key, value in _flatten(report) if value is not None)


YAMLLoader = get_yaml_loader()

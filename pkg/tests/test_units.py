import pytest

from probstream.units import NullRegistry, bits, units


def test_null_registry_is_falsey():
    registry = NullRegistry()
    assert not registry


def test_null_registry_attribute_is_a_scalar_1():
    registry = NullRegistry()
    assert registry.bit == 1
    assert registry.some_attribute == 1


def test_bits_as_quantity():
    # When
    quantity = bits(12)

    # Then
    assert quantity.magnitude == 12
    assert str(quantity.units) == 'bit'
    assert quantity == 12 * units.bit


@pytest.mark.parametrize('value, context', [
    (12, {'no_units': True}),
    (None, {}),
    (None, None),
])
def test_bits_without_units(value, context):
    assert bits(value, context) == value

import typing


class NullRegistry:
    """A NullRegistry that masquerades as a pint.UnitRegistry."""

    def __init__(self):
        """Initialize a null registry."""

    def __getattr__(self, item: typing.Any) -> int:
        """Return a Scalar 1 to simulate a unit."""
        return 1

    def __bool__(self):
        """Return False since a NullRegistry is not a pint.UnitRegistry."""
        return False


def _build_unit_registry():
    try:
        import pint

        registry = pint.UnitRegistry()
        pint.set_application_registry(registry)
        return registry
    except ModuleNotFoundError:
        pass

    return NullRegistry()


units = _build_unit_registry()


def bits(value: typing.Optional[int], context: typing.Optional[typing.Mapping] = None):
    """Return a bit count as a quantity, or as is when units are disabled."""
    if value is None or (context or {}).get('no_units'):
        return value
    return value * units.bit

"""Unit handling shared by photonics and config parsing (pint)."""
from __future__ import annotations

import numbers

import pint

ureg = pint.UnitRegistry()
Q_ = ureg.Quantity


class UnitError(ValueError):
    """Missing or dimensionally incompatible unit."""


def to_si(value, unit: str, name: str = "value", allow_bare: bool = True) -> float:
    """Magnitude of ``value`` expressed in ``unit``.

    ``value`` may be a pint quantity, a string such as ``"619.011 nm"`` or a
    bare number.  Bare numbers are taken to be in ``unit`` already unless
    ``allow_bare`` is False (config files require explicit units).
    """
    target = ureg(unit)
    if isinstance(value, str):
        try:
            value = Q_(value)
        except (pint.errors.UndefinedUnitError, pint.errors.DefinitionSyntaxError, ValueError) as exc:
            raise UnitError(f"{name}: cannot parse {value!r}: {exc}") from exc
    if isinstance(value, pint.Quantity):
        if value.dimensionality != target.dimensionality:
            raise UnitError(f"{name}: expected units compatible with {unit}, got {value.units:~}")
        return float(value.to(target.units).magnitude)
    if isinstance(value, numbers.Real) and not isinstance(value, bool):
        if not allow_bare and not target.dimensionless:
            raise UnitError(f"{name}: missing unit (expected something like {unit})")
        return float(value)
    raise UnitError(f"{name}: unsupported value {value!r}")

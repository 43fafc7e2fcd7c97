"""Unit parsing shared by the config layer.

Everything inside the package is SI with angular frequencies in rad/s.
Frequencies written with a Hz-family suffix are read as cyclic and multiplied
by 2*pi, so ``"20 MHz"`` becomes ``2*pi*20e6`` rad/s.
"""

from __future__ import annotations

import math
import re

_CYCLIC = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}

_SCALES = {
    # angular frequency
    "rad/s": 1.0,
    "1/s": 1.0,
    "s^-1": 1.0,
    # time
    "s": 1.0,
    "ms": 1e-3,
    "us": 1e-6,
    "ns": 1e-9,
    "ps": 1e-12,
    # length
    "m": 1.0,
    "cm": 1e-2,
    "mm": 1e-3,
    "um": 1e-6,
    "nm": 1e-9,
    # area
    "m^2": 1.0,
    "cm^2": 1e-4,
    "mm^2": 1e-6,
    "um^2": 1e-12,
    # inverse length
    "1/m": 1.0,
    "m^-1": 1.0,
    "1/cm": 1e2,
    "cm^-1": 1e2,
    "1/mm": 1e3,
    "1/um": 1e6,
    # density
    "m^-3": 1.0,
    "1/m^3": 1.0,
    "cm^-3": 1e6,
    "1/cm^3": 1e6,
    # field, charge*length, magnetic field
    "v/m": 1.0,
    "v/cm": 1e2,
    "c*m": 1.0,
    "t": 1.0,
    "mt": 1e-3,
    "g": 1e-4,
    "gauss": 1e-4,
    "rad": 1.0,
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text: str | float | int) -> float:
    """Parse ``"<number> [unit]"`` into an SI float.

    A leading ``2pi*`` / ``2pi x`` factor is accepted and simply ignored when a
    cyclic frequency suffix is present (the suffix already implies it).

    >>> round(parse_quantity("1 MHz") / (2 * math.pi))
    1000000
    >>> parse_quantity("10 um")
    1e-05
    """
    if isinstance(text, (int, float)):
        return float(text)
    s = text.strip()
    explicit_2pi = False
    m2 = re.match(r"^\s*2\s*\*?\s*pi\s*[*x×]?\s*", s, flags=re.IGNORECASE)
    if m2:
        explicit_2pi = True
        s = s[m2.end():]
    m = _NUMBER.match(s)
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    unit = m.group(2).replace(" ", "").replace("μ", "u").lower()
    if unit in _CYCLIC:
        return 2.0 * math.pi * value * _CYCLIC[unit]
    if unit == "":
        return 2.0 * math.pi * value if explicit_2pi else value
    if unit not in _SCALES:
        raise UnitError(f"unknown unit {m.group(2)!r} in {text!r}")
    scaled = value * _SCALES[unit]
    return 2.0 * math.pi * scaled if explicit_2pi else scaled

"""Physical quantities with explicit units, converted to the dimensionless
internal units (longitudinal frequency ``w_L = 1``).

Frequencies written in MHz are read as angular frequencies in rad/us, so
with ``w_L = 1 MHz`` the value in MHz is the dimensionless value. A bare
``wL`` unit (or ``/wL`` for times) states a dimensionless value directly.
"""

import math
import re

from .errors import ConfigError

__all__ = [
    "AMU",
    "parse_quantity",
    "frequency",
    "frequency_squared",
    "time",
    "rate",
    "temperature",
    "length",
    "mass",
]

AMU = 1.66053906660e-27  # kg

_SCALES = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "rad/s": 1.0},
    "frequency_squared": {"Hz^2": 1.0, "kHz^2": 1e6, "MHz^2": 1e12, "(rad/s)^2": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "rate": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "/s": 1.0},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6},
    "length": {"m": 1.0, "um": 1e-6, "nm": 1e-9},
    "mass": {"kg": 1.0, "u": AMU, "amu": AMU},
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PATTERN = re.compile(rf"^\s*(?:(sqrt)\(\s*({_NUMBER})\s*\)|({_NUMBER}))\s*(\S+)\s*$")


def parse_quantity(text, kind):
    """Split ``"2 MHz"`` into value and unit and convert to SI.

    Returns
    -------
    (float, str)
        The SI value (or the dimensionless value for ``wL`` units) and the unit.

    Raises
    ------
    ConfigError
        Missing or unknown unit, or an unparsable number.
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        raise ConfigError(f"{kind} {text!r} needs an explicit unit, e.g. '{text} {_example(kind)}'")
    if not isinstance(text, str):
        raise ConfigError(f"expected a {kind} string with unit, got {text!r}")
    m = _PATTERN.match(text)
    if not m:
        raise ConfigError(f"cannot read {kind} {text!r}; expected '<number> <unit>'")
    if m.group(1) and float(m.group(2)) < 0:
        raise ConfigError(f"cannot take the square root of a negative number in {text!r}")
    value = math.sqrt(float(m.group(2))) if m.group(1) else float(m.group(3))
    unit = m.group(4)
    if kind in ("frequency", "rate") and unit == "wL":
        return value, unit
    if kind == "frequency_squared" and unit == "wL^2":
        return value, unit
    if kind == "time" and unit == "/wL":
        return value, unit
    scales = _SCALES[kind]
    if unit not in scales:
        raise ConfigError(f"unknown {kind} unit {unit!r} in {text!r}; use one of {sorted(scales)}")
    return value * scales[unit], unit


def _example(kind):
    return {"frequency": "MHz", "frequency_squared": "MHz^2", "time": "us", "rate": "Hz", "temperature": "K",
            "length": "nm", "mass": "u"}[kind]


def frequency(text, omega_l):
    """Dimensionless angular frequency; ``omega_l`` in rad/s."""
    value, unit = parse_quantity(text, "frequency")
    return value if unit == "wL" else value / omega_l


def frequency_squared(text, omega_l):
    """Dimensionless squared angular frequency, e.g. a change of trap curvature."""
    value, unit = parse_quantity(text, "frequency_squared")
    return value if unit == "wL^2" else value / omega_l**2


def time(text, omega_l):
    """Dimensionless time (units of ``1/omega_l``)."""
    value, unit = parse_quantity(text, "time")
    return value if unit == "/wL" else value * omega_l


def rate(text, omega_l):
    """Dimensionless rate such as a loss rate in Hz."""
    value, unit = parse_quantity(text, "rate")
    return value if unit == "wL" else value / omega_l


def temperature(text):
    return parse_quantity(text, "temperature")[0]


def length(text):
    return parse_quantity(text, "length")[0]


def mass(text):
    return parse_quantity(text, "mass")[0]

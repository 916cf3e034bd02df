import re

from errors import ConfigError

ELECTRON_VOLT = 1.602176634e-19  # J
JULIAN_YEAR = 365.25 * 86400.0  # s

ENERGY_UNITS = {"J": 1.0, "eV": ELECTRON_VOLT, "meV": 1e-3 * ELECTRON_VOLT}
TIME_UNITS = {"s": 1.0, "yr": JULIAN_YEAR}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")


def _split(text: str) -> tuple[float, str]:
    m = _QUANTITY.match(str(text))
    if not m:
        raise ConfigError(f"Cannot read a quantity from {text!r}.")
    return float(m.group(1)), m.group(2)


def _parse(text: str, table: dict, kind: str, si: bool) -> float:
    value, unit = _split(text)
    if not si:
        if unit:
            raise ConfigError(f"{kind} {text!r} carries a unit, but the natural preset is dimensionless.")
        return value
    if not unit:
        raise ConfigError(f"{kind} {text!r} needs a unit suffix ({', '.join(table)}) in SI mode.")
    if unit not in table:
        raise ConfigError(f"Unknown {kind.lower()} unit {unit!r}; expected one of {', '.join(table)}.")
    return value * table[unit]


def parse_energy(text: str, si: bool = True) -> float:
    """'7meV' -> joules in SI mode; bare numbers only in natural mode."""
    return _parse(text, ENERGY_UNITS, "Energy", si)


def parse_time(text: str, si: bool = True) -> float:
    return _parse(text, TIME_UNITS, "Time", si)


def energy_scale(unit: str | None) -> float:
    if unit is None:
        return 1.0
    if unit not in ENERGY_UNITS:
        raise ConfigError(f"Unknown energy unit {unit!r}.")
    return ENERGY_UNITS[unit]

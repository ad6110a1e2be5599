import json
import math
import sys
from fractions import Fraction
from typing import Optional, Union

from loguru import logger

from primexp import settings
from primexp.errors import ConfigError, DomainError

MAX_DECIMAL_DENOMINATOR = 10 ** 6


def configure_logging(level: str = settings.LOG_LEVEL, log_file: Optional[str] = settings.LOG_FILE):
    """Route loguru output to stderr (and optionally a file) at ``level``."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level:<7} | {name}:{function} - {message}")
    if log_file:
        logger.add(log_file, level="DEBUG", encoding="utf-8")
    return logger


def parse_fraction(value: Union[str, int, float, Fraction]) -> Fraction:
    """Exact rational from ``a/b``; decimals are limited to denominators <= 10^6."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(MAX_DECIMAL_DENOMINATOR)
    text = str(value).strip()
    try:
        if "/" in text:
            return Fraction(text)
        return Fraction(text).limit_denominator(MAX_DECIMAL_DENOMINATOR)
    except (ValueError, ZeroDivisionError) as e:
        raise DomainError(f"not a rational number: {value!r}") from e


def format_fraction(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def iroot(n: int, r: int) -> int:
    """Largest integer z >= 0 with z**r <= n."""
    if n < 0 or r < 1:
        raise DomainError(f"iroot needs n >= 0 and r >= 1, got n={n}, r={r}")
    if n < 2 or r == 1:
        return n
    z = 1 << ((n.bit_length() + r - 1) // r)
    while True:
        nxt = ((r - 1) * z + n // z ** (r - 1)) // r
        if nxt >= z:
            break
        z = nxt
    while z ** r > n:
        z -= 1
    while (z + 1) ** r <= n:
        z += 1
    return z


def floor_power(x: int, theta: Fraction) -> int:
    """floor(x ** theta) for integer x >= 1 and 0 <= theta <= 1, exactly."""
    theta = Fraction(theta)
    return iroot(x ** theta.numerator, theta.denominator)


def ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


def xpow(x: float, exponent: Fraction) -> float:
    """x ** exponent, evaluated once from the exact exponent."""
    return math.exp(math.log(x) * float(exponent))


def load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

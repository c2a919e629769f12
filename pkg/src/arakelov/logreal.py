"""Exactly represented log-scale reals ``r + log(q)`` with ``r``, ``q`` rational.

Metric weights, scaling parameters and ball radii (through ``log radius``)
all live here.  Keeping them exact means ``exp`` of a value is either a
rational number (``r == 0``) or transcendental (Lindemann-Weierstrass), which
is what lets ball-membership decisions terminate.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .exact import to_fraction

DEFAULT_PRECISION_BITS = int(os.environ.get("ARAKELOV_PRECISION_BITS", "128"))
MAX_PRECISION_BITS = 8192


class PrecisionError(ArithmeticError):
    """A comparison could not be decided within the precision cap."""


@dataclass(frozen=True, order=False)
class LogReal:
    rat: Fraction = Fraction(0)
    arg: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "rat", to_fraction(self.rat))
        object.__setattr__(self, "arg", to_fraction(self.arg))
        if self.arg <= 0:
            raise ValueError("log argument must be positive")

    @classmethod
    def coerce(cls, value) -> "LogReal":
        if isinstance(value, LogReal):
            return value
        if isinstance(value, str):
            return parse_logreal(value)
        return cls(to_fraction(value))

    @classmethod
    def log(cls, q) -> "LogReal":
        return cls(Fraction(0), to_fraction(q))

    def __add__(self, other) -> "LogReal":
        other = LogReal.coerce(other)
        return LogReal(self.rat + other.rat, self.arg * other.arg)

    __radd__ = __add__

    def __neg__(self) -> "LogReal":
        return LogReal(-self.rat, 1 / self.arg)

    def __sub__(self, other) -> "LogReal":
        return self + (-LogReal.coerce(other))

    def __rsub__(self, other) -> "LogReal":
        return LogReal.coerce(other) - self

    def __mul__(self, k) -> "LogReal":
        if isinstance(k, int) and not isinstance(k, bool):
            return LogReal(self.rat * k, self.arg**k)
        k = to_fraction(k)
        if k.denominator == 1:
            return self * int(k)
        if self.arg == 1:
            return LogReal(self.rat * k)
        raise ValueError("non-integer multiples of log-rational parts are not exact")

    __rmul__ = __mul__

    @property
    def is_log_rational(self) -> bool:
        """True when ``exp`` of this value is rational."""
        return self.rat == 0

    def exp_rational(self) -> Fraction:
        if self.rat != 0:
            raise ValueError("exp is not rational")
        return self.arg

    def mp(self, prec: int | None = None):
        with mpmath.workprec(prec or DEFAULT_PRECISION_BITS):
            return mpmath.mpf(self.rat.numerator) / self.rat.denominator + mpmath.log(
                mpmath.mpf(self.arg.numerator) / self.arg.denominator
            )

    def __float__(self) -> float:
        return float(self.mp(64))

    def sign(self) -> int:
        """Exact sign of the represented real."""
        if self.rat == 0:
            return (self.arg > 1) - (self.arg < 1)
        if self.arg == 1:
            return (self.rat > 0) - (self.rat < 0)
        return -cmp_rational_exp(Fraction(1), self)

    def __eq__(self, other) -> bool:
        try:
            other = LogReal.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        # r + log(q) determines (r, q): a nonzero rational is never log of a rational
        return self.rat == other.rat and self.arg == other.arg

    def __hash__(self):
        return hash((self.rat, self.arg))

    def __lt__(self, other):
        return (self - LogReal.coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - LogReal.coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - LogReal.coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - LogReal.coerce(other)).sign() >= 0

    def to_json(self):
        if self.arg == 1:
            f = float(self.rat)
            if to_fraction(f) == self.rat:
                return f
            return str(self.rat)
        return str(self)

    def __str__(self) -> str:
        parts = []
        if self.rat != 0 or self.arg == 1:
            parts.append(str(self.rat))
        if self.arg != 1:
            parts.append(f"log({self.arg})")
        return "+".join(parts)

    def __repr__(self) -> str:
        return f"LogReal({self})"


_TERM = re.compile(r"\s*([+-]?)\s*(?:(log)\(\s*([0-9./]+)\s*\)|([0-9.eE+-]+(?:/[0-9]+)?))\s*")


def parse_logreal(text: str) -> LogReal:
    """Parse ``"0.5"``, ``"1/3"``, ``"log(2)"``, ``"0.1+log(3/2)"``, ``"-log(2)"``."""
    s = text.strip()
    if not s:
        raise ValueError("empty weight")
    total = LogReal()
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse weight {text!r}")
        sign, is_log, log_arg, number = m.groups()
        if is_log:
            term = LogReal.log(Fraction(log_arg))
        else:
            term = LogReal(Fraction(number))
        total = total + (-term if sign == "-" else term)
        pos = m.end()
    return total


def cmp_rational_exp(value: Fraction, power: LogReal, prec: int | None = None) -> int:
    """Sign of ``value - exp(power)`` for a nonnegative rational ``value``."""
    value = Fraction(value)
    if power.rat == 0:
        target = power.arg
        return (value > target) - (value < target)
    if value <= 0:
        return -1
    # exp(power) is transcendental here, so equality never happens.
    prec = prec or DEFAULT_PRECISION_BITS
    while prec <= MAX_PRECISION_BITS:
        with mpmath.workprec(prec + 20):
            lhs = mpmath.log(mpmath.mpf(value.numerator) / value.denominator)
            rhs = power.mp(prec + 20)
            diff = lhs - rhs
            if abs(diff) > mpmath.ldexp(1, -prec + 8) * (1 + abs(rhs)):
                return 1 if diff > 0 else -1
        prec *= 2
    raise PrecisionError(f"could not compare {value} with exp({power})")


def cmp_interval_exp(center, radius, power: LogReal, prec: int) -> int | None:
    """Decide ``x`` vs ``exp(power)`` for ``x`` in ``[center-radius, center+radius]``.

    Returns ``None`` when the interval straddles the target at this precision.
    """
    with mpmath.workprec(prec + 20):
        target = mpmath.exp(power.mp(prec + 20))
        slack = radius + mpmath.ldexp(abs(target), -prec + 4)
        if center - slack > target:
            return 1
        if center + slack < target:
            return -1
    return None

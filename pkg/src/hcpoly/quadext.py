"""Exact arithmetic in the field Q(sqrt 2)."""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from math import isqrt, lcm

import mpmath

Rational = int | Fraction


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"cannot use {type(v).__name__} as a rational")


@total_ordering
class QuadExt:
    """The number ``a + b*sqrt(2)`` with rational ``a`` and ``b``.

    Ordering and floor are decided exactly; nothing is rounded.
    """

    __slots__ = ("_a", "_b")

    def __init__(self, a: Rational | str = 0, b: Rational | str = 0) -> None:
        self._a = _frac(a)
        self._b = _frac(b)

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @classmethod
    def coerce(cls, v) -> QuadExt:
        if isinstance(v, QuadExt):
            return v
        return cls(_frac(v), 0)

    def __repr__(self) -> str:
        return f"QuadExt({self._a!s}, {self._b!s})"

    def __str__(self) -> str:
        if self._b == 0:
            return str(self._a)
        sign = "+" if self._b > 0 else "-"
        return f"{self._a} {sign} {abs(self._b)}*sqrt2"

    def __hash__(self) -> int:
        return hash((self._a, self._b))

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QuadExt(other)
        if not isinstance(other, QuadExt):
            return NotImplemented
        return self._a == other._a and self._b == other._b

    def __lt__(self, other) -> bool:
        return (self - QuadExt.coerce(other)).sign() < 0

    def __add__(self, other) -> QuadExt:
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExt(self._a + other._a, self._b + other._b)

    __radd__ = __add__

    def __neg__(self) -> QuadExt:
        return QuadExt(-self._a, -self._b)

    def __sub__(self, other) -> QuadExt:
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExt(self._a - other._a, self._b - other._b)

    def __rsub__(self, other) -> QuadExt:
        return QuadExt.coerce(other) - self

    def __mul__(self, other) -> QuadExt:
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self._a, self._b, other._a, other._b
        return QuadExt(a * c + 2 * b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self) -> QuadExt:
        return QuadExt(self._a, -self._b)

    def norm(self) -> Fraction:
        """Field norm ``a^2 - 2 b^2``; zero only for zero."""
        return self._a * self._a - 2 * self._b * self._b

    def inverse(self) -> QuadExt:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadExt division by zero")
        return QuadExt(self._a / n, -self._b / n)

    def __truediv__(self, other) -> QuadExt:
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> QuadExt:
        return QuadExt.coerce(other) * self.inverse()

    def __abs__(self) -> QuadExt:
        return -self if self.sign() < 0 else self

    def is_rational(self) -> bool:
        return self._b == 0

    def sign(self) -> int:
        a, b = self._a, self._b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: the larger magnitude wins; a^2 == 2b^2 is impossible
        return sa if a * a > 2 * b * b else sb

    def floor(self) -> int:
        den = lcm(self._a.denominator, self._b.denominator)
        big_a = self._a.numerator * (den // self._a.denominator)
        big_b = self._b.numerator * (den // self._b.denominator)
        if big_b == 0:
            return big_a // den
        s = isqrt(2 * big_b * big_b)
        # B*sqrt2 is irrational, strictly between consecutive integers
        m = big_a + s if big_b > 0 else big_a - s - 1
        return m // den

    def __floor__(self) -> int:
        return self.floor()

    def trunc(self) -> int:
        """Integer part, rounding toward zero."""
        f = self.floor()
        if self.sign() < 0 and QuadExt(f) != self:
            return f + 1
        return f

    def __float__(self) -> float:
        return float(self.to_mpf(80))

    def to_mpf(self, prec: int = 256) -> mpmath.mpf:
        with mpmath.workprec(prec + 16):
            v = mpmath.mpf(self._a.numerator) / self._a.denominator
            if self._b:
                v += mpmath.mpf(self._b.numerator) / self._b.denominator * mpmath.sqrt(2)
        return +v

    def to_json(self) -> dict:
        return {"a": _fmt(self._a), "b": _fmt(self._b)}

    @classmethod
    def from_json(cls, obj) -> QuadExt:
        if isinstance(obj, dict):
            if set(obj) != {"a", "b"}:
                raise ValueError(f"QuadExt needs exactly keys a, b: {obj!r}")
            return cls(Fraction(obj["a"]), Fraction(obj["b"]))
        return cls(Fraction(obj))


def _fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


SQRT2 = QuadExt(0, 1)


def parse_quad(text: str) -> QuadExt:
    """Parse ``"a,b"`` (meaning a + b*sqrt2) or a plain rational ``"p/q"``."""
    text = text.strip()
    if "," in text:
        a, b = text.split(",", 1)
        return QuadExt(Fraction(a.strip()), Fraction(b.strip()))
    return QuadExt(Fraction(text))

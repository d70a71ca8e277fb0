"""Exact integers and rationals, residues modulo 2^n and 3^n, power
comparisons, and rigorous enclosures of the slopes used by the word
generators.

Rationals are plain :class:`fractions.Fraction` objects, which are always
stored reduced with a positive denominator.  Slopes are provided by
:class:`AlphaOracle`, which hands out nested dyadic enclosures and decides
floors of integer multiples exactly.
"""

from __future__ import annotations

import enum
import math
import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DenominatorNotInvertible, InputError, PrecisionExhausted

Rational = Fraction
RationalLike = Union[int, Fraction, str]

DEFAULT_PRECISION_CAP = 1 << 16
_START_BITS = 64
# Up to this length, floors of l*ln2/ln3 go through power comparison only.
# Longer prefixes first try a rigorous dyadic enclosure (still exact: the
# enclosure either decides the floor or we fall back to powers).
EXACT_POWER_LIMIT = 1 << 16


def as_rational(x: RationalLike) -> Fraction:
    """Coerce ints, Fractions and strings like ``"-65/27"`` or ``"0.69"``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {x!r}") from exc
    raise InputError(f"not a rational: {x!r}")


def format_rational(q: Fraction) -> str:
    """``num/den``, or just ``num`` for integers."""
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def precision_cap_from_env() -> int:
    raw = os.environ.get("CONJLAB_PRECISION_CAP")
    if not raw:
        return DEFAULT_PRECISION_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InputError(f"CONJLAB_PRECISION_CAP must be an integer, got {raw!r}") from exc
    if cap < _START_BITS:
        raise InputError(f"CONJLAB_PRECISION_CAP must be at least {_START_BITS}")
    return cap


# -- residues -----------------------------------------------------------------


@dataclass(frozen=True)
class Residue:
    value: int
    prime: int
    exponent: int

    def __post_init__(self):
        if self.prime not in (2, 3):
            raise InputError(f"prime must be 2 or 3, got {self.prime}")
        if self.exponent < 1:
            raise InputError("exponent must be positive")
        # bit length settles the range check without building p^n in all but edge cases
        small = self.value.bit_length() <= (self.exponent if self.prime == 2 else int(self.exponent * 1.58))
        if self.value < 0 or not (small or self.value < self.prime ** self.exponent):
            raise InputError(f"{self.value} is not reduced modulo {self.prime}^{self.exponent}")

    @property
    def modulus(self) -> int:
        return self.prime ** self.exponent


def reduce_mod_prime_power(q: RationalLike, p: int, n: int) -> Residue:
    """numerator * denominator^-1 mod p^n, for p in {2, 3}."""
    q = as_rational(q)
    if p not in (2, 3):
        raise InputError(f"prime must be 2 or 3, got {p}")
    if n < 1:
        raise InputError("exponent must be positive")
    if q.denominator % p == 0:
        raise DenominatorNotInvertible(f"{format_rational(q)} has no {p}-adic integer expansion")
    mod = p ** n
    return Residue(q.numerator * pow(q.denominator, -1, mod) % mod, p, n)


# -- power comparison ----------------------------------------------------------


class Ordering(enum.Enum):
    Less = -1
    Equal = 0
    Greater = 1


def compare_pow(l: int, h: int) -> Ordering:
    """Order of 2^l against 3^h, decided on exact integers."""
    if l < 0 or h < 0:
        raise InputError("exponents must be non-negative")
    # bit lengths settle almost every case without building 3^h
    lo3 = math.floor(h * 1.584962500721156) - 1
    if h and l < lo3:
        return Ordering.Less
    if l > h * 1.5849625007211563 + 2:
        return Ordering.Greater
    a, b = 1 << l, 3 ** h
    return Ordering.Less if a < b else Ordering.Greater if a > b else Ordering.Equal


def least_power3_above_power2(l: int) -> int:
    """Smallest h with 3^h > 2^l."""
    h = int(l * 0.6309297535714574)
    while h > 0 and compare_pow(l, h - 1) is Ordering.Less:
        h -= 1
    while compare_pow(l, h) is not Ordering.Less:
        h += 1
    return h


# -- fixed-point logarithm enclosures -----------------------------------------


def _ln2_fixed(w: int) -> tuple[int, int]:
    """(lo, hi) with lo/2^w <= ln 2 <= hi/2^w, from sum 1/(k 2^k)."""
    n = w + 2
    s = 0
    for k in range(1, n + 1):
        s += (1 << (w + 8 - k)) // k if w + 8 >= k else 0
    # 8 guard bits; each floor loses < 1 unit, tail < 2/((n+1)2^n)
    lo = s >> 8
    tail_units = -(-(2 << (w + 8)) // ((n + 1) << n))
    hi = -(-(s + n + tail_units) >> 8)
    return lo, hi


def _ln3_over_2_fixed(w: int) -> tuple[int, int]:
    """(lo, hi) for ln(3/2) = sum 2/((2k+1) 5^(2k+1))."""
    g = w + 8
    s = 0
    n = 0
    p5 = 5
    while True:
        term = (2 << g) // ((2 * n + 1) * p5)
        if term == 0:
            break
        s += term
        n += 1
        p5 *= 25
    # remaining terms are each < 1 unit and decay by 25, so add 2 units
    lo = s >> 8
    hi = -(-(s + n + 2) >> 8)
    return lo, hi


@dataclass(frozen=True)
class Interval:
    """Closed rational interval used for enclosure arithmetic."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise InputError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: RationalLike) -> "Interval":
        x = as_rational(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        if isinstance(x, float):
            return float(self.lo) <= x <= float(self.hi)
        return self.lo <= as_rational(x) <= self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def _lift(self, other) -> "Interval":
        return other if isinstance(other, Interval) else Interval.point(other)

    def __add__(self, other):
        o = self._lift(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        c = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(c), max(c))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            raise InputError("interval division by an interval containing 0")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __float__(self):
        return float(self.mid)

    def __repr__(self):
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"


def ln2_interval(bits: int = 128) -> Interval:
    lo, hi = _ln2_fixed(bits)
    return Interval(Fraction(lo, 1 << bits), Fraction(hi, 1 << bits))


def ln3_interval(bits: int = 128) -> Interval:
    a, b = _ln2_fixed(bits)
    c, d = _ln3_over_2_fixed(bits)
    return Interval(Fraction(a + c, 1 << bits), Fraction(b + d, 1 << bits))


# -- slope oracles --------------------------------------------------------------


class AlphaKind(enum.Enum):
    LogRatio23 = "LogRatio23"
    NatLog = "NatLog"
    QuadraticSurd = "QuadraticSurd"
    ExactRational = "ExactRational"


class AlphaOracle:
    """Rigorous provider of a slope alpha.

    Enclosures are dyadic: ``dyadic(bits)`` returns integers ``lo, hi`` with
    ``lo / 2**bits <= alpha <= hi / 2**bits``.  Refined enclosures are
    memoized per bit count; the memo is guarded by a lock so concurrent
    readers only ever see finished entries.
    """

    def __init__(self, kind: AlphaKind, *, value: Fraction | None = None,
                 surd: tuple[int, int, int, int] | None = None,
                 precision_cap: int | None = None, label: str | None = None):
        self.kind = kind
        self.value = value
        self.surd = surd
        self.precision_cap = precision_cap if precision_cap is not None else precision_cap_from_env()
        self._memo: dict[int, tuple[int, int]] = {}
        self._lock = threading.Lock()
        self.label = label or self._default_label()

    # constructors

    @classmethod
    def log_ratio_23(cls, **kw) -> "AlphaOracle":
        return cls(AlphaKind.LogRatio23, label="ln2/ln3", **kw)

    @classmethod
    def nat_log2(cls, **kw) -> "AlphaOracle":
        return cls(AlphaKind.NatLog, label="ln2", **kw)

    @classmethod
    def quadratic_surd(cls, a: int, b: int, d: int, c: int, **kw) -> "AlphaOracle":
        """alpha = (a + b*sqrt(d)) / c with d a positive non-square and c > 0."""
        if d <= 0 or math.isqrt(d) ** 2 == d or c <= 0 or b == 0:
            raise InputError("quadratic surd needs a positive non-square d, b != 0 and c > 0")
        return cls(AlphaKind.QuadraticSurd, surd=(a, b, d, c), **kw)

    @classmethod
    def golden(cls, **kw) -> "AlphaOracle":
        """2/(1+sqrt 5) = (sqrt 5 - 1)/2."""
        return cls.quadratic_surd(-1, 1, 5, 2, label="golden", **kw)

    @classmethod
    def exact(cls, q: RationalLike, **kw) -> "AlphaOracle":
        return cls(AlphaKind.ExactRational, value=as_rational(q), **kw)

    @classmethod
    def parse(cls, spec: str, **kw) -> "AlphaOracle":
        """Parse ``ln2``, ``ln2/ln3``, ``golden``, ``surd:a,b,d,c`` or a rational."""
        s = spec.strip().lower()
        if s in ("ln2", "ln(2)", "natlog"):
            return cls.nat_log2(**kw)
        if s in ("ln2/ln3", "ln(2)/ln(3)", "logratio23"):
            return cls.log_ratio_23(**kw)
        if s in ("golden", "phi"):
            return cls.golden(**kw)
        if s.startswith("surd:"):
            try:
                a, b, d, c = (int(t) for t in s[5:].split(","))
            except ValueError as exc:
                raise InputError(f"bad surd spec {spec!r}") from exc
            return cls.quadratic_surd(a, b, d, c, **kw)
        return cls.exact(s, **kw)

    def _default_label(self) -> str:
        if self.kind is AlphaKind.ExactRational:
            return format_rational(self.value)
        if self.kind is AlphaKind.QuadraticSurd:
            a, b, d, c = self.surd
            return f"({a}+{b}*sqrt({d}))/{c}"
        return self.kind.value

    def __repr__(self):
        return f"AlphaOracle({self.label})"

    @property
    def is_rational(self) -> bool:
        return self.kind is AlphaKind.ExactRational

    # enclosures

    def _compute_dyadic(self, bits: int) -> tuple[int, int]:
        if self.kind is AlphaKind.ExactRational:
            q = self.value
            lo = (q.numerator << bits) // q.denominator
            return lo, -((-q.numerator << bits) // q.denominator)
        if self.kind is AlphaKind.NatLog:
            return _ln2_fixed(bits)
        if self.kind is AlphaKind.LogRatio23:
            w = bits + 8
            a, b = _ln2_fixed(w)
            c, d = _ln3_over_2_fixed(w)
            l3lo, l3hi = a + c, b + d
            return (a << bits) // l3hi, -((-b << bits) // l3lo)
        a, b, d, c = self.surd
        w = bits + abs(b).bit_length() + c.bit_length() + 4
        s = math.isqrt(d << (2 * w))
        blo, bhi = (b * s, b * (s + 1)) if b > 0 else (b * (s + 1), b * s)
        den = c << w
        return ((a << w) + blo << bits) // den, -((-((a << w) + bhi) << bits) // den)

    def dyadic(self, bits: int) -> tuple[int, int]:
        got = self._memo.get(bits)
        if got is None:
            got = self._compute_dyadic(bits)
            with self._lock:
                self._memo.setdefault(bits, got)
        return got

    def _bit_schedule(self, start: int = _START_BITS):
        bits = max(start, _START_BITS)
        while bits <= self.precision_cap:
            yield bits
            bits *= 2
        if bits // 2 < self.precision_cap:
            yield self.precision_cap

    def enclosure(self, eps: RationalLike) -> Interval:
        """Rational interval of width <= eps containing alpha."""
        eps = as_rational(eps)
        if eps <= 0:
            raise InputError("eps must be positive")
        if self.is_rational:
            return Interval.point(self.value)
        need = max(_START_BITS, math.ceil(math.log2(eps.denominator) - math.log2(eps.numerator)) + 2)
        bits = _START_BITS
        while True:
            if bits >= need or bits >= self.precision_cap:
                lo, hi = self.dyadic(bits)
                if Fraction(hi - lo, 1 << bits) <= eps:
                    return Interval(Fraction(lo, 1 << bits), Fraction(hi, 1 << bits))
                if bits >= self.precision_cap:
                    raise PrecisionExhausted(f"cannot enclose {self.label} within {eps} at the cap")
            bits = min(bits * 2, max(self.precision_cap, _START_BITS))

    def approx(self) -> float:
        lo, hi = self.dyadic(_START_BITS)
        return (lo + hi) / 2 / (1 << _START_BITS)

    def compare(self, p: int, q: int) -> int:
        """Sign of alpha - p/q (q > 0)."""
        if q <= 0:
            raise InputError("denominator must be positive")
        if self.kind is AlphaKind.ExactRational:
            d = self.value - Fraction(p, q)
            return (d > 0) - (d < 0)
        if p <= 0:
            return 1
        if self.kind is AlphaKind.LogRatio23 and q <= EXACT_POWER_LIMIT:
            # alpha > p/q  <=>  2^q > 3^p
            return compare_pow(q, p).value
        for bits in self._bit_schedule(_START_BITS + q.bit_length() + p.bit_length()):
            lo, hi = self.dyadic(bits)
            if lo * q > p << bits:
                return 1
            if hi * q < p << bits:
                return -1
        raise PrecisionExhausted(f"cannot compare {self.label} with {p}/{q} at the cap")


def alpha_floor(oracle: AlphaOracle, l: int) -> int:
    """Exact floor(l * alpha)."""
    if l < 0:
        raise InputError("l must be non-negative")
    if l == 0:
        return 0
    if oracle.is_rational:
        return l * oracle.value.numerator // oracle.value.denominator
    if oracle.kind is AlphaKind.LogRatio23:
        if l > EXACT_POWER_LIMIT:
            lo, hi = oracle.dyadic(_START_BITS + l.bit_length())
            bits = _START_BITS + l.bit_length()
            a, b = (l * lo) >> bits, (l * hi) >> bits
            if a == b:
                return a
        return least_power3_above_power2(l) - 1
    for bits in oracle._bit_schedule(_START_BITS + l.bit_length()):
        lo, hi = oracle.dyadic(bits)
        a, b = (l * lo) >> bits, (l * hi) >> bits
        if a == b:
            return a
    raise PrecisionExhausted(f"floor({l}*{oracle.label}) undecided at {oracle.precision_cap} bits")


def alpha_ceil(oracle: AlphaOracle, l: int) -> int:
    """Exact ceil(l * alpha)."""
    if l == 0:
        return 0
    if oracle.is_rational:
        q = oracle.value
        return -((-l * q.numerator) // q.denominator)
    return alpha_floor(oracle, l) + 1


def oracle_less_than(a: AlphaOracle, b: AlphaOracle) -> bool:
    """True when alpha_a < alpha_b, decided by separating enclosures."""
    if (a.kind, a.value, a.surd) == (b.kind, b.value, b.surd):
        return False
    if a.is_rational and b.is_rational:
        return a.value < b.value
    if a.is_rational:
        return b.compare(a.value.numerator, a.value.denominator) > 0
    if b.is_rational:
        return a.compare(b.value.numerator, b.value.denominator) < 0
    bits = _START_BITS
    while bits <= min(a.precision_cap, b.precision_cap):
        alo, ahi = a.dyadic(bits)
        blo, bhi = b.dyadic(bits)
        if ahi < blo:
            return True
        if bhi < alo:
            return False
        bits *= 2
    raise PrecisionExhausted(f"cannot separate {a.label} and {b.label}")

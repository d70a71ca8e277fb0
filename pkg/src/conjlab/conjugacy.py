"""The 3x+1 map on rationals with odd denominator, affine instruction maps
T_u, the finite conjugacy values Phi(u), cycle values C(u), real partial
sums of Phi over infinite words, and the Christoffel-subsequence limit
used when the plain series diverges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import EvenDenominator, InputError, SlopeTooLarge
from .exactnum import AlphaOracle, RationalLike, as_rational, format_rational, oracle_less_than
from .sturmian import christoffel, convergents, sturmian_stream
from .words import FiniteWord, WordStream, ensure_stream

DIVERGENCE_THRESHOLD = -10 ** 9


def _word(u: FiniteWord | str) -> FiniteWord:
    return u if isinstance(u, FiniteWord) else FiniteWord.parse(u)


def parity(x: RationalLike) -> int:
    x = as_rational(x)
    if x.denominator % 2 == 0:
        raise EvenDenominator(f"{x} has even denominator; its parity is undefined")
    return x.numerator & 1


def t_step(x: RationalLike) -> Fraction:
    """x/2 for even x, (3x+1)/2 for odd x."""
    x = as_rational(x)
    return (3 * x + 1) / 2 if parity(x) else x / 2


@dataclass(frozen=True)
class AffineMap:
    """x -> offset + slope*x."""

    offset: Fraction
    slope: Fraction

    def __call__(self, x: RationalLike) -> Fraction:
        return self.offset + self.slope * as_rational(x)

    def then(self, other: "AffineMap") -> "AffineMap":
        """Apply self first, then other."""
        return AffineMap(other.offset + other.slope * self.offset, other.slope * self.slope)


def affine_of(u: FiniteWord | str) -> AffineMap:
    u = _word(u)
    den = 1 << u.length
    return AffineMap(Fraction(u.phi, den), Fraction(3 ** u.height, den))


def apply_word(u: FiniteWord | str, x: RationalLike) -> Fraction:
    """T_u(x), parity ignored."""
    return affine_of(u)(x)


def apply_word_stepwise(u: FiniteWord | str, x: RationalLike) -> Fraction:
    """T_u(x) by composing the one-digit maps; used to cross-check affine_of."""
    x = as_rational(x)
    for b in _word(u):
        x = (3 * x + 1) / 2 if b else x / 2
    return x


def trajectory(z: RationalLike, steps: int) -> list[Fraction]:
    """(T^0 z, ..., T^steps z)."""
    z = as_rational(z)
    parity(z)
    out = [z]
    for _ in range(steps):
        z = t_step(z)
        out.append(z)
    return out


def parity_vector(z: RationalLike, l: int) -> FiniteWord:
    z = as_rational(z)
    bits = []
    for _ in range(l):
        bits.append(parity(z))
        z = t_step(z)
    return FiniteWord(bits)


def phi_finite(u: FiniteWord | str) -> Fraction:
    """Phi(u) = -phi(u)/3^h."""
    u = _word(u)
    return Fraction(-u.phi, 3 ** u.height)


def cycle_value(u: FiniteWord | str) -> Fraction:
    """C(u) = phi(u)/(2^l - 3^h), the rational with purely periodic parity vector u^inf."""
    u = _word(u)
    if u.length == 0:
        raise InputError("cycle value needs a non-empty word")
    return Fraction(u.phi, (1 << u.length) - 3 ** u.height)


def _prefix_phis(v: WordStream, depth: int):
    """Yield (l, phi, h) for every prefix length 1..depth."""
    x = h = 0
    for i, b in enumerate(ensure_stream(v).prefix_bytes(depth)):
        if b:
            x = 3 * x + (1 << i)
            h += 1
        yield i + 1, x, h


def phi_partials(v: WordStream, depth: int) -> list[Fraction]:
    """Phi of every prefix u^(1), ..., u^(depth)."""
    return [Fraction(-x, 3 ** h) for _, x, h in _prefix_phis(v, depth)]


def cycle_partials(v: WordStream, depth: int) -> list[Fraction]:
    """C of every prefix u^(1), ..., u^(depth)."""
    return [Fraction(x, (1 << l) - 3 ** h) for l, x, h in _prefix_phis(v, depth)]


@dataclass(frozen=True)
class LimitEstimate:
    value: Fraction
    depth: int
    tail_bound: Fraction | None = None
    certified: bool = False
    diverging: bool = False
    next_term: Fraction | None = None

    def __post_init__(self):
        if self.certified and self.tail_bound is None:
            raise AssertionError("certified estimates need a tail bound")

    def __float__(self):
        return float(self.value)

    @property
    def interval(self) -> tuple[Fraction, Fraction] | None:
        """[value - tail_bound, value] when certified (the tail is negative)."""
        if not self.certified:
            return None
        return self.value - self.tail_bound, self.value


def slope_tail_bound(depth: int, slope: Fraction) -> Fraction:
    """Exact sum over l > depth of 2^(l-1) / 3^ceil(l*slope).

    This bounds the magnitude of all terms after a prefix of length depth
    when h(l) >= ceil(l*slope) holds beyond it.  For slope = a/b the
    exponent pattern repeats every b steps, which makes the sum a finite
    geometric expression.
    """
    a, b = slope.numerator, slope.denominator
    r = Fraction(1 << b, 3 ** a)
    if r >= 1:
        raise InputError("slope floor must exceed ln2/ln3 for a finite tail")
    block = sum(Fraction(1 << (l - 1), 3 ** (-((-l * a) // b))) for l in range(depth + 1, depth + b + 1))
    return block / (1 - r)


def _slope_floor_holds(heights: Sequence[int], slope: Fraction, start: int) -> bool:
    a, b = slope.numerator, slope.denominator
    return all(heights[l - 1] * b >= l * a for l in range(max(start, 1), len(heights) + 1))


def phi_limit_estimate(v: WordStream | FiniteWord | str, eps: RationalLike,
                       slope_floor: RationalLike | None = None, *, max_depth: int = 4096,
                       divergence_threshold: Fraction | int = DIVERGENCE_THRESHOLD) -> LimitEstimate:
    """Estimate Phi_R(v) by a partial sum.

    The depth is the deepest prefix length <= max_depth whose next term
    2^l/3^(h+1) is below eps (max_depth itself if none is).  The estimate is
    certified only when a slope floor s > ln2/ln3 is given and
    h(l) >= l*s holds on the second half of the scanned prefix; the tail
    bound then assumes the floor continues.  A periodic stream u^inf with
    2^l < 3^h is summed exactly.
    """
    eps = as_rational(eps)
    if eps <= 0:
        raise InputError("eps must be positive")
    v = ensure_stream(v)
    if v.period is not None and not v.preperiod.length:
        u = v.period
        if (1 << u.length) < 3 ** u.height:
            return LimitEstimate(cycle_value(u), 0, Fraction(0), True, False, Fraction(0))
    heights = v.heights(max_depth)
    depth = max_depth
    for l in range(max_depth, 0, -1):
        if Fraction(1 << l, 3 ** (heights[l - 1] + 1)) < eps:
            depth = l
            break
    u = v.prefix(depth)
    value = phi_finite(u)
    nxt = Fraction(1 << depth, 3 ** (u.height + 1))
    tail, certified = None, False
    if slope_floor is not None:
        s = as_rational(slope_floor)
        if s <= 0 or s >= 1:
            raise InputError("slope floor must lie in (0, 1)")
        if (1 << s.denominator) < 3 ** s.numerator and _slope_floor_holds(heights[:depth], s, depth // 2 + 1):
            tail = slope_tail_bound(depth, s)
            certified = True
    return LimitEstimate(value, depth, tail, certified, value < divergence_threshold, nxt)


def phi_estimate_at(v: WordStream | FiniteWord | str, depth: int,
                    slope_floor: RationalLike | None = None) -> LimitEstimate:
    """Partial sum at exactly the given prefix length, with the same
    certification rule as :func:`phi_limit_estimate`."""
    return phi_limit_estimate(v, Fraction(10) ** 100, slope_floor, max_depth=depth)


def pseudo_trajectory(x: RationalLike, v: WordStream | FiniteWord | str, steps: int) -> list[Fraction]:
    """(x, T_{v0}(x), T_{v0 v1}(x), ...) with steps+1 entries, parity ignored."""
    x = as_rational(x)
    out = [x]
    for b in ensure_stream(v).prefix_bytes(steps):
        x = (3 * x + 1) / 2 if b else x / 2
        out.append(x)
    return out


@dataclass(frozen=True)
class PhiStarReport:
    """C over the Christoffel prefixes of 1c_alpha.

    ``odd`` holds (k, q_k, C(w_k)) for odd k; ``even`` holds the values for
    even k, where the prefix of length q_k is w_k with its final 0 turned
    into 1.
    """

    odd: list[tuple[int, int, Fraction]] = field(default_factory=list)
    even: list[tuple[int, int, Fraction]] = field(default_factory=list)

    def odd_values(self) -> list[Fraction]:
        return [c for _, _, c in self.odd]

    def even_values(self) -> list[Fraction]:
        return [c for _, _, c in self.even]

    @property
    def limit(self) -> Fraction:
        """Deepest odd-k member."""
        return self.odd[-1][2]


def _christoffel_cycles(oracle: AlphaOracle, K: int):
    """Yield (k, q_k, C) for k = 1..K in order, the even-k entries using the
    prefix w_k with its final 0 turned into 1."""
    if not oracle_less_than(oracle, AlphaOracle.log_ratio_23()):
        raise SlopeTooLarge(f"{oracle.label} is not below ln2/ln3; the Christoffel limit does not exist")
    cf = convergents(oracle, K)
    for k in range(1, len(cf)):
        p, q = cf.p(k), cf.q(k)
        w = christoffel(p, q)
        if k % 2:
            yield k, q, Fraction(w.phi, (1 << q) - 3 ** p)
        else:
            # replacing the final 0 by 1 adds 2^(q-1) to 3 phi
            yield k, q, Fraction(3 * w.phi + (1 << (q - 1)), (1 << q) - 3 ** (p + 1))


def phi_star_estimate(oracle: AlphaOracle, K: int) -> PhiStarReport:
    """C(u^(q_k)) for k <= K, split by parity of k.  Needs alpha < ln2/ln3."""
    rep = PhiStarReport()
    for k, q, c in _christoffel_cycles(oracle, K):
        (rep.odd if k % 2 else rep.even).append((k, q, c))
    return rep


def phi_star_limit(oracle: AlphaOracle, tol: RationalLike = Fraction(1, 10 ** 9),
                   k_min: int = 11, k_max: int = 41) -> tuple[int, Fraction]:
    """Walk the odd-k members from k_min until two consecutive ones agree
    within tol; return (k, value) of the later member.  Members are built
    one at a time, so deep convergents are only reached when needed."""
    tol = as_rational(tol)
    prev = None
    for k, _, c in _christoffel_cycles(oracle, k_max):
        if k % 2 == 0 or k < k_min:
            continue
        if prev is not None and abs(c - prev[1]) < tol:
            return k, c
        prev = (k, c)
    if prev is None:
        raise InputError(f"no odd convergent index in [{k_min}, {k_max}]")
    return prev


def stream_for_word_source(source: str) -> WordStream:
    """Literal or run-length word, extended by zeros."""
    return WordStream.from_finite(FiniteWord.parse(source))


def golden_stream() -> WordStream:
    return sturmian_stream(AlphaOracle.golden())


def parity_stream(z: RationalLike) -> WordStream:
    """The parity vector of z as an infinite word."""
    z = as_rational(z)
    parity(z)

    def gen():
        x = z
        while True:
            chunk = []
            for _ in range(256):
                b = x.numerator & 1
                chunk.append(b)
                x = (3 * x + 1) / 2 if b else x / 2
            yield chunk

    return WordStream.from_chunks(gen, name=f"parity[{format_rational(z)}]")

"""Continued fractions, Sturmian and Christoffel words, the standard
sequence, and the factor-by-factor word constructor with its counting
formulas.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import InputError, InvalidSlope, ZeroRunTooLarge
from .exactnum import (
    EXACT_POWER_LIMIT,
    AlphaKind,
    AlphaOracle,
    Interval,
    alpha_ceil,
    alpha_floor,
    as_rational,
    ln2_interval,
    ln3_interval,
)
from .words import FiniteWord, WordStream

# -- continued fractions ------------------------------------------------------


@dataclass(frozen=True)
class Convergents:
    """Rows (a_k, p_k, q_k) for k = 0..K."""

    terms: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        for k in range(1, len(self.terms)):
            _, p1, q1 = self.terms[k - 1]
            _, p, q = self.terms[k]
            if p * q1 - p1 * q != (-1) ** (k - 1):
                raise AssertionError(f"determinant identity fails at k={k}")

    def __len__(self):
        return len(self.terms)

    def a(self, k: int) -> int:
        return self.terms[k][0]

    def p(self, k: int) -> int:
        return -1 if k == -1 else self.terms[k][1] if k >= 0 else 0

    def q(self, k: int) -> int:
        return 0 if k == -1 else self.terms[k][2] if k >= 0 else 1

    def fractions(self) -> list[Fraction]:
        return [Fraction(p, q) for _, p, q in self.terms]

    @property
    def partial_quotients(self) -> list[int]:
        return [a for a, _, _ in self.terms]


def convergents(oracle: AlphaOracle, K: int) -> Convergents:
    """First K+1 convergents (fewer if alpha is rational and the expansion ends).

    Each partial quotient is the largest a for which the intermediate
    fraction (p_{k-2} + a p_{k-1}) / (q_{k-2} + a q_{k-1}) stays on the side
    of alpha where p_{k-2}/q_{k-2} lies; sides are decided by the oracle
    (exact power comparison for ln2/ln3, enclosure refinement otherwise).
    """
    if K < 0:
        raise InputError("K must be non-negative")
    a0 = alpha_floor(oracle, 1)
    terms = [(a0, a0, 1)]
    p2, q2, p1, q1 = 1, 0, a0, 1
    if oracle.compare(a0, 1) == 0:
        return Convergents(tuple(terms))
    side = -1  # alpha lies below p_{-1}/q_{-1} = infinity
    for _ in range(1, K + 1):
        def ok(a: int) -> tuple[bool, bool]:
            s = oracle.compare(p2 + a * p1, q2 + a * q1)
            return s == 0 or s == side, s == 0

        hi = 1
        while ok(hi)[0] and not ok(hi)[1]:
            hi *= 2
        if ok(hi)[0]:
            a = hi  # exact hit: the expansion terminates here
        else:
            lo = hi // 2  # ok(lo) holds, ok(hi) fails
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ok(mid)[0]:
                    lo = mid
                else:
                    hi = mid
            a = lo
        p, q = p2 + a * p1, q2 + a * q1
        terms.append((a, p, q))
        if oracle.compare(p, q) == 0:
            break
        p2, q2, p1, q1 = p1, q1, p, q
        side = -side
    return Convergents(tuple(terms))


# -- Sturmian words --------------------------------------------------------------


def _floor_iter(oracle: AlphaOracle) -> Iterator[int]:
    """floor(j*alpha) for j = 0, 1, 2, ... exactly."""
    yield 0
    j = 1
    if oracle.is_rational:
        num, den = oracle.value.numerator, oracle.value.denominator
        while True:
            yield j * num // den
            j += 1
    if oracle.kind is AlphaKind.LogRatio23:
        # least h with 3^h > 2^j; for j >= 1, 3^h > 2^j iff bitlen(3^h) > j
        h, p3 = 0, 1
        while j <= EXACT_POWER_LIMIT:
            while p3.bit_length() <= j:
                p3 *= 3
                h += 1
            yield h - 1
            j += 1
    bits = 0
    lo = hi = 0
    while True:
        need = 96 + j.bit_length()
        if need > bits:
            bits = need + 32
            lo, hi = oracle.dyadic(bits)
        a, b = (j * lo) >> bits, (j * hi) >> bits
        yield a if a == b else alpha_floor(oracle, j)
        j += 1


def floor_multiples(oracle: AlphaOracle, L: int) -> list[int]:
    """[floor(j*alpha) for j in 0..L]."""
    it = _floor_iter(oracle)
    return [next(it) for _ in range(L + 1)]


class Variant(enum.Enum):
    UpperC = "upper"  # 1c_alpha, ceilings
    LowerC = "lower"  # 0c_alpha, floors


def sturmian_stream(oracle: AlphaOracle, variant: Variant | str = Variant.UpperC) -> WordStream:
    """1c_alpha (ceiling differences) or 0c_alpha (floor differences)."""
    variant = Variant(variant) if isinstance(variant, str) else variant
    rational = oracle.is_rational
    num = oracle.value.numerator if rational else 0
    den = oracle.value.denominator if rational else 1

    def ceil_of(j: int, f: int) -> int:
        if rational:
            return -((-j * num) // den)
        return f + 1 if j else 0

    def gen():
        it = _floor_iter(oracle)
        j, f = 0, next(it)
        prev = f if variant is Variant.LowerC else ceil_of(0, f)
        while True:
            chunk = bytearray()
            for _ in range(4096):
                j += 1
                f = next(it)
                cur = f if variant is Variant.LowerC else ceil_of(j, f)
                chunk.append(cur - prev)
                prev = cur
            yield chunk

    tag = "1c" if variant is Variant.UpperC else "0c"
    return WordStream.from_chunks(gen, name=f"{tag}[{oracle.label}]")


def christoffel(p: int, q: int) -> FiniteWord:
    """Lower Christoffel word 1z0 of slope p/q: digit j = ceil((j+1)p/q) - ceil(jp/q)."""
    if q < 1 or p < 0 or p > q or math.gcd(p, q) != 1:
        raise InvalidSlope(f"christoffel word needs gcd(p,q)=1 and 0 <= p <= q, got {p}/{q}")
    c = [-((-j * p) // q) for j in range(q + 1)]
    return FiniteWord(bytes(48 + c[j + 1] - c[j] for j in range(q)).decode())


def standard_sequence(oracle: AlphaOracle, n: int) -> FiniteWord:
    """s_{-1}=1, s_0=0, s_n = s_{n-1}^{d_n} s_{n-2}; d_1 = a_1 - 1, d_k = a_k."""
    if n < -1:
        raise InputError("n must be >= -1")
    if n == -1:
        return FiniteWord("1")
    if n == 0:
        return FiniteWord("0")
    cf = convergents(oracle, n)
    if len(cf) <= n:
        raise InputError(f"the expansion of {oracle.label} ends before index {n}")
    s2, s1 = "1", "0"
    for k in range(1, n + 1):
        d = cf.a(k) - 1 if k == 1 else cf.a(k)
        s2, s1 = s1, s1 * d + s2
    return FiniteWord(s1)


# -- zero-run families -------------------------------------------------------


class ZeroRunFamily:
    name = "family"

    def __call__(self, n: int) -> int:
        raise NotImplementedError

    def distance_offset(self, n: int) -> int | None:
        """Offset term of the distance D_n, when the family defines one."""
        return None

    @staticmethod
    def parse(spec: str) -> "ZeroRunFamily":
        """``identity``, ``sub:c/d`` (n - floor(cn/d)), ``sixths``, ``quarters``,
        ``q:Q``, ``pow:beta`` (floor(beta^n)), ``poly:c0,c1,...``."""
        s = spec.strip().lower()
        if s in ("identity", "id", "n"):
            return Identity()
        if s == "sixths":
            return SubtractFloor(5, 6)
        if s == "quarters":
            return SubtractFloor(1, 4)
        kind, _, arg = s.partition(":")
        try:
            if kind == "q":
                return SubtractFloor(1, int(arg))
            if kind == "sub":
                c, d = arg.split("/")
                return SubtractFloor(int(c), int(d))
            if kind == "pow":
                return PowerFloor(as_rational(arg))
            if kind == "poly":
                return Polynomial(tuple(int(t) for t in arg.split(",")))
        except ValueError as exc:
            raise InputError(f"bad family spec {spec!r}") from exc
        raise InputError(f"unknown family {spec!r}")


class Identity(ZeroRunFamily):
    name = "identity"

    def __call__(self, n):
        return n


@dataclass(frozen=True)
class SubtractFloor(ZeroRunFamily):
    """f(n) = n - floor(c n / d) with 0 <= c < d."""

    c: int
    d: int

    def __post_init__(self):
        if not 0 <= self.c < self.d:
            raise InputError("need 0 <= c < d")

    @property
    def name(self):
        return f"n-floor({self.c}n/{self.d})"

    def __call__(self, n):
        return n - self.c * n // self.d

    def distance_offset(self, n):
        return self.c * n // self.d - 1


@dataclass(frozen=True)
class PowerFloor(ZeroRunFamily):
    """f(n) = floor(beta^n) with rational beta > 1."""

    beta: Fraction

    def __post_init__(self):
        if self.beta <= 1:
            raise InputError("beta must exceed 1")

    @property
    def name(self):
        return f"floor(({self.beta})^n)"

    def __call__(self, n):
        return self.beta.numerator ** n // self.beta.denominator ** n


@dataclass(frozen=True)
class Polynomial(ZeroRunFamily):
    """f(n) = sum c_i n^i with non-negative integer coefficients."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not self.coeffs or any(c < 0 for c in self.coeffs) or not any(self.coeffs[1:]):
            raise InputError("polynomial needs non-negative coefficients and positive degree")

    @property
    def name(self):
        return "poly(" + ",".join(map(str, self.coeffs)) + ")"

    def __call__(self, n):
        return sum(c * n ** i for i, c in enumerate(self.coeffs))


# -- constructor --------------------------------------------------------------


class Shape(enum.Enum):
    ZerosFirst = "zeros-first"  # factors 0^f 1^m
    OnesFirst = "ones-first"  # factors 1^m 0^f


@dataclass(frozen=True)
class ConstructorConfig:
    """``m_uses_index`` picks the n inside the height formula
    m = floor(((l + n) alpha - h) / (1 - alpha)): the zero-run length f(j)
    when False, the loop index j when True.  It defaults to False for
    ZerosFirst and True for OnesFirst, which is the reading that reproduces
    the printed prefixes of both shapes."""

    oracle: AlphaOracle
    family: ZeroRunFamily
    shape: Shape = Shape.ZerosFirst
    top: int = 20
    m_uses_index: bool | None = None
    stall_limit: int = 64

    @property
    def index_rule(self) -> bool:
        if self.m_uses_index is not None:
            return self.m_uses_index
        return self.shape is Shape.OnesFirst


@dataclass(frozen=True)
class FactorRecord:
    n: int
    f: int
    m: int
    L: int
    H: int
    Z: int


def max_ones(oracle: AlphaOracle, A: int, B: int) -> int:
    """floor((A alpha - B) / (1 - alpha)) for irrational or rational alpha < 1.

    Equals the largest integer m with (A + m) alpha >= B + m, i.e. with
    floor((A + m) alpha) >= B + m, so only exact floors are needed.
    """

    def ok(m: int) -> bool:
        x = A + m
        if x < 0:
            return 0 >= B + m  # (A+m) alpha is then <= 0
        return alpha_floor(oracle, x) >= B + m

    a = oracle.approx()
    m = math.floor((A * a - B) / (1 - a)) if a < 1 else 0
    while not ok(m):
        m -= 1
    while ok(m + 1):
        m += 1
    return m


def factor_bits(shape: Shape, rec: FactorRecord) -> str:
    if shape is Shape.ZerosFirst:
        return "0" * rec.f + "1" * rec.m
    return "1" * rec.m + "0" * rec.f


class WordConstructor:
    """Builds the constructor word factor by factor on demand.

    The factor records are shared by the lazy stream and by the logs, so
    each factor is computed once.
    """

    def __init__(self, config: ConstructorConfig):
        if config.oracle.compare(1, 1) >= 0 or config.oracle.compare(0, 1) <= 0:
            raise InvalidSlope("the constructor needs 0 < alpha < 1")
        self.config = config
        self.records: list[FactorRecord] = []
        self._lock = threading.Lock()
        self._stall = 0

    def _extend(self, count: int) -> None:
        with self._lock:
            cfg = self.config
            while len(self.records) < count:
                last = self.records[-1] if self.records else FactorRecord(0, 0, 0, 0, 0, 0)
                j = last.n + 1
                f = cfg.family(j)
                if f < 1:
                    raise InputError(f"zero-run family returned {f} at n={j}")
                n = j if cfg.index_rule else f
                m = max_ones(cfg.oracle, last.L + n, last.H)
                if m <= 0:
                    self._stall += 1
                    if self._stall >= cfg.stall_limit:
                        raise ZeroRunTooLarge(
                            f"height formula gave m <= 0 for {cfg.stall_limit} consecutive factors (n={j})")
                    m = max(m, 0)
                else:
                    self._stall = 0
                self.records.append(FactorRecord(j, f, m, last.L + f + m, last.H + m, last.Z + f))

    def record(self, n: int) -> FactorRecord:
        self._extend(n)
        return self.records[n - 1]

    def log(self, top: int) -> "FactorLog":
        self._extend(top)
        return FactorLog(tuple(self.records[:top]), self.config)

    def stream(self) -> WordStream:
        def gen():
            i = 0
            while True:
                i += 1
                yield factor_bits(self.config.shape, self.record(i))

        return WordStream.from_chunks(gen, name=f"construct[{self.config.family.name},{self.config.shape.value}]")


@dataclass(frozen=True)
class FactorLog:
    records: tuple[FactorRecord, ...]
    config: ConstructorConfig

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i) -> FactorRecord:
        return self.records[i]

    def word(self) -> FiniteWord:
        return FiniteWord("".join(factor_bits(self.config.shape, r) for r in self.records))

    def distance(self, n: int) -> int | None:
        """D_n = ceil((L_n + off_n) alpha) - ceil(L_n alpha); None when the
        family has no offset term."""
        off = self.config.family.distance_offset(n)
        if off is None:
            return None
        L = self.records[n - 1].L
        return alpha_ceil(self.config.oracle, L + off) - alpha_ceil(self.config.oracle, L)

    def distances(self) -> list[int | None]:
        return [self.distance(n) for n in range(1, len(self.records) + 1)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# conjugacy-lab v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "f", "m", "L", "H", "Z", "D"])
        for r, d in zip(self.records, self.distances()):
            w.writerow([r.n, r.f, r.m, r.L, r.H, r.Z, "" if d is None else d])
        return buf.getvalue()


def construct_word(config: ConstructorConfig) -> tuple[WordStream, FactorLog]:
    """The constructor word as a lazy stream plus the log of its first
    ``config.top`` factors."""
    if config.top < 0:
        raise InputError("top must be non-negative")
    c = WordConstructor(config)
    return c.stream(), c.log(config.top)


# -- closed forms for the n - floor(cn/d) families ---------------------------------


def zero_count(n: int, family: SubtractFloor) -> int:
    """Z_n = f(1) + ... + f(n) in closed form (sixths family or c = 1)."""
    if n < 1:
        raise InputError("n must be positive")
    if not isinstance(family, SubtractFloor):
        raise InputError("closed form exists only for n - floor(cn/d) families")
    if (family.c, family.d) == (5, 6):
        k = n // 6
        return 6 * k * (k + 1) // 2 + (k + 1) * (n % 6)
    if family.c == 1 and family.d >= 2:
        q, k = family.d, n // family.d
        return n * (n + 1) // 2 - q * (k - 1) * k // 2 - k * (n % q + 1)
    raise InputError(f"no closed form for {family.name}")


def sixths_height(oracle: AlphaOracle, n: int) -> int:
    """H_n = floor((Z_{n-1} + n) alpha / (1 - alpha)) for the sixths family."""
    z = zero_count(n - 1, SubtractFloor(5, 6)) if n > 1 else 0
    return max_ones(oracle, z + n, 0)


def distance_D(log: FactorLog, n: int) -> int:
    if not 1 <= n <= len(log):
        raise InputError(f"n={n} outside the factor log")
    d = log.distance(n)
    if d is None:
        raise InputError(f"family {log.config.family.name} has no distance offset")
    return d


def growth_bound(oracle: AlphaOracle, bits: int = 128) -> Interval:
    """Enclosure of alpha (ln3/ln2 - 1) / (1 - alpha)."""
    eps = Fraction(1, 1 << bits)
    a = oracle.enclosure(eps)
    if a.hi >= 1:
        raise InvalidSlope("growth bound needs alpha < 1")
    ratio = ln3_interval(bits) / ln2_interval(bits)
    return a * (ratio - 1) / (1 - a)

"""2-adic and 3-adic expansions.

Digits are stored least significant first, so the string ``"1101"`` means
1 + 2 + 8 in base 2.  Every expansion keeps its residue chain
(r_1, ..., r_n) with r_k the value modulo p^k, which lets callers compare
either representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .conjugacy import cycle_value
from .errors import DenominatorNotInvertible, IncompatibleChain, InputError, NotStabilizing
from .exactnum import Residue, RationalLike, as_rational, format_rational
from .words import FiniteWord, WordStream, ensure_stream


@dataclass(frozen=True)
class PadicExpansion:
    prime: int
    digits: tuple[int, ...]
    residues: tuple[Residue, ...]
    # eventual period of a rational's expansion, when known
    preperiod: int | None = None
    period: int | None = None

    def __post_init__(self):
        if self.prime not in (2, 3):
            raise InputError(f"prime must be 2 or 3, got {self.prime}")
        if len(self.digits) != len(self.residues):
            raise InputError("digit and residue counts differ")
        acc, scale = 0, 1
        for d, r in zip(self.digits, self.residues):
            if not 0 <= d < self.prime:
                raise InputError(f"digit {d} out of range for base {self.prime}")
            acc += d * scale
            scale *= self.prime
            if r.prime != self.prime or r.value != acc % scale:
                raise InputError("residue chain does not match digits")

    @property
    def precision(self) -> int:
        return len(self.digits)

    def __str__(self):
        return "".join(map(str, self.digits))

    def residue_values(self) -> list[int]:
        return [r.value for r in self.residues]

    def to_csv_rows(self) -> list[tuple[int, int, int]]:
        return [(r.exponent, r.modulus, r.value) for r in self.residues]


def _from_digits(p: int, digits: Sequence[int], **meta) -> PadicExpansion:
    res, acc, scale = [], 0, 1
    for i, d in enumerate(digits):
        acc += d * scale
        scale *= p
        res.append(Residue(acc, p, i + 1))
    return PadicExpansion(p, tuple(digits), tuple(res), **meta)


def digits_from_residues(chain: Sequence[Residue | int], p: int) -> list[int]:
    """digit_n = (r_{n+1} - r_n) / p^n with r_0 = 0."""
    out, prev, scale = [], 0, 1
    for k, r in enumerate(chain):
        v = r.value if isinstance(r, Residue) else r
        if not 0 <= v < scale * p:
            raise IncompatibleChain(f"r_{k + 1} = {v} is not reduced modulo {p}^{k + 1}")
        if (v - prev) % scale:
            raise IncompatibleChain(f"r_{k + 1} = {v} is not congruent to r_{k} = {prev} modulo {p}^{k}")
        out.append((v - prev) // scale)
        prev, scale = v, scale * p
    return out


def residues_of(q: RationalLike, p: int, n: int) -> list[int]:
    """(q mod p, q mod p^2, ..., q mod p^n)."""
    q = as_rational(q)
    if q.denominator % p == 0:
        raise DenominatorNotInvertible(f"{format_rational(q)} has no {p}-adic integer expansion")
    top = q.numerator * pow(q.denominator, -1, p ** n) % p ** n
    return [top % p ** k for k in range(1, n + 1)]


def rational_to_padic(q: RationalLike, p: int, n: int) -> PadicExpansion:
    """First n digits of q in Z_p, with the eventual period when it shows up
    within those n steps."""
    q = as_rational(q)
    if p not in (2, 3):
        raise InputError(f"prime must be 2 or 3, got {p}")
    if n < 1:
        raise InputError("digit count must be positive")
    a, b = q.numerator, q.denominator
    if b % p == 0:
        raise DenominatorNotInvertible(f"{format_rational(q)} has no {p}-adic integer expansion")
    inv = pow(b, -1, p)
    digits: list[int] = []
    seen: dict[int, int] = {}
    pre = per = None
    # the state after k digits is the numerator of (q - sum)/p^k over b
    for k in range(n):
        if pre is None:
            if a in seen:
                pre, per = seen[a], k - seen[a]
            else:
                seen[a] = k
        d = a * inv % p
        digits.append(d)
        a = (a - d * b) // p
    if pre is None and a in seen:
        pre, per = seen[a], n - seen[a]
    return _from_digits(p, digits, preperiod=pre, period=per)


def padic_to_rational(digits: Sequence[int], p: int, preperiod: int, period: int) -> Fraction:
    """Value of the eventually periodic expansion whose first preperiod+period
    digits are given."""
    if period < 1 or len(digits) < preperiod + period:
        raise InputError("need the preperiod and one full period of digits")
    head = sum(d * p ** i for i, d in enumerate(digits[:preperiod]))
    cyc = sum(d * p ** i for i, d in enumerate(digits[preperiod:preperiod + period]))
    return head + Fraction(cyc * p ** preperiod, 1 - p ** period)


def phi_2adic(v: WordStream | FiniteWord | str, l: int) -> PadicExpansion:
    """First l digits of Phi(v) in Z_2.

    The residue chain takes r_n = C(u^(n)) mod 2^n from each prefix; the
    result is checked against Phi(u^(l)) = -phi/3^h reduced modulo 2^l.
    """
    if l < 1:
        raise InputError("digit count must be positive")
    bits = ensure_stream(v).prefix_bytes(l)
    x = h = 0
    chain = []
    for i, b in enumerate(bits):
        if b:
            x = 3 * x + (1 << i)
            h += 1
        n = i + 1
        mod = 1 << n
        chain.append(x * pow(((1 << n) - 3 ** h) % mod, -1, mod) % mod)
    mod = 1 << l
    direct = -x * pow(3 ** h, -1, mod) % mod
    if direct != chain[-1]:
        raise AssertionError("cycle and conjugacy routes disagree modulo 2^l")
    return _from_digits(2, digits_from_residues(chain, 2))


def cycle_residues_3(u: FiniteWord, n: int | None = None) -> list[int]:
    """C(u) mod 3^k for k = 1..n (default h(u))."""
    n = u.height if n is None else n
    if n < 1:
        return []
    return residues_of(Fraction(u.phi, (1 << u.length) - 3 ** u.height), 3, n)


def output_3adic(v: WordStream | FiniteWord | str, indices: Iterable[int], depth: int) -> PadicExpansion:
    """3-adic digits of lim C(u^(l)) along l in ``indices``.

    A residue modulo 3^n is emitted once two consecutive indices a < b give
    the same value and n <= h(a).  The emitted chain must stay a prefix of
    every later agreement.  Raises NotStabilizing if the indices run out
    before ``depth`` digits are settled.
    """
    if depth < 1:
        raise InputError("depth must be positive")
    v = ensure_stream(v)
    settled: list[int] = []
    prev_l = prev_res = None
    for l in indices:
        if prev_l is not None and l <= prev_l:
            raise InputError("index sequence must be strictly increasing")
        u = v.prefix(l)
        res = cycle_residues_3(u, min(u.height, depth))
        if prev_res is not None:
            agree = 0
            for a, b in zip(prev_res, res):
                if a != b:
                    break
                agree += 1
            # an earlier emission cannot be revised
            if agree > len(settled) and res[:len(settled)] == settled:
                settled = res[:agree]
        if len(settled) >= depth:
            return _from_digits(3, digits_from_residues(settled[:depth], 3))
        prev_l, prev_res = l, res
    raise NotStabilizing(len(settled), depth)


@dataclass(frozen=True)
class Table1Row:
    length: int
    prefix: str
    t_zero: Fraction
    cycle: Fraction
    residues: tuple[int, ...]
    digits: str

    def cells(self) -> list[str]:
        return [str(self.length), self.prefix, format_rational(self.t_zero), format_rational(self.cycle),
                "(" + ",".join(map(str, self.residues)) + ")", self.digits]


def table1_row(v: WordStream | FiniteWord | str, l: int) -> Table1Row:
    """Prefix u of length l, T_u(0), C(u), C(u) mod 3^n for n <= h, and those digits."""
    if l < 1:
        raise InputError("prefix length must be positive")
    u = ensure_stream(v).prefix(l)
    res = cycle_residues_3(u)
    return Table1Row(l, str(u), Fraction(u.phi, 1 << l), cycle_value(u), tuple(res),
                     "".join(map(str, digits_from_residues(res, 3))))


@dataclass(frozen=True)
class IndexCandidate:
    name: str
    reached: int
    stable: bool


def search_index_sequences(v: WordStream | FiniteWord | str, candidates: dict[str, Sequence[int]],
                           depth: int) -> list[IndexCandidate]:
    """Run :func:`output_3adic` over several index sequences and report how
    many digits each one settles."""
    out = []
    for name, seq in candidates.items():
        try:
            output_3adic(v, seq, depth)
            out.append(IndexCandidate(name, depth, True))
        except NotStabilizing as exc:
            out.append(IndexCandidate(name, exc.reached, False))
    return out


def arithmetic_indices(start: int, step: int, count: int) -> list[int]:
    if start < 1 or step < 1 or count < 1:
        raise InputError("start, step and count must be positive")
    return [start + i * step for i in range(count)]

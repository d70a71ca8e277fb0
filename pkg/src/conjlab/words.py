"""Finite and infinite binary words, the integer encoding phi, height
profiles, relative heights against a Sturmian baseline, and the
associated word built from the last positions of each relative height.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from functools import cached_property
from itertools import groupby
from typing import Callable, Iterable, Iterator, Sequence

from .errors import InputError, Unresolved
from .exactnum import AlphaKind, AlphaOracle, alpha_ceil

# Below this length the digit recursion beats divide and conquer.
_PHI_LEAF = 256
# expanded run-length words beyond this many letters are refused rather than built
MAX_PARSED_LENGTH = 10 ** 8


def _phi_and_height(bits: str) -> tuple[int, int]:
    if len(bits) <= _PHI_LEAF:
        x = h = 0
        for i, c in enumerate(bits):
            if c == "1":
                x = 3 * x + (1 << i)
                h += 1
        return x, h
    mid = len(bits) // 2
    a, ha = _phi_and_height(bits[:mid])
    b, hb = _phi_and_height(bits[mid:])
    return 3 ** hb * a + (b << mid), ha + hb


class FiniteWord:
    """Immutable binary word with cached length, height and phi."""

    __slots__ = ("bits", "__dict__")

    def __init__(self, bits: str | Iterable[int] = ""):
        if not isinstance(bits, str):
            bits = "".join("1" if b else "0" for b in bits)
        if bits.strip("01"):
            raise InputError(f"word must contain only 0 and 1: {bits[:40]!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text: str) -> "FiniteWord":
        """Accept plain '0'/'1' strings or run-length forms like ``1^4 0^2 (1^5 0^2)^5``."""
        return cls(parse_word(text))

    def __len__(self):
        return len(self.bits)

    @property
    def length(self) -> int:
        return len(self.bits)

    @cached_property
    def height(self) -> int:
        return self.bits.count("1")

    @cached_property
    def phi(self) -> int:
        return _phi_and_height(self.bits)[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return FiniteWord(self.bits[i])
        return int(self.bits[i])

    def __iter__(self) -> Iterator[int]:
        return (int(c) for c in self.bits)

    def __add__(self, other: "FiniteWord") -> "FiniteWord":
        return FiniteWord(self.bits + other.bits)

    def __mul__(self, k: int) -> "FiniteWord":
        return FiniteWord(self.bits * k)

    def __eq__(self, other):
        if isinstance(other, FiniteWord):
            return self.bits == other.bits
        if isinstance(other, str):
            return self.bits == other
        return NotImplemented

    def __hash__(self):
        return hash(self.bits)

    def __str__(self):
        return self.bits

    def __repr__(self):
        s = self.bits if len(self.bits) <= 60 else self.bits[:57] + "..."
        return f"FiniteWord({s!r})"

    def one_positions(self) -> list[int]:
        return [i for i, c in enumerate(self.bits) if c == "1"]

    def runlength(self) -> str:
        return to_runlength(self.bits)


EMPTY = FiniteWord("")


def phi(u: FiniteWord | str) -> int:
    """phi(eps)=0, phi(u0)=phi(u), phi(u1)=3 phi(u) + 2^len(u)."""
    return (u if isinstance(u, FiniteWord) else FiniteWord(u)).phi


def phi_concat(u: FiniteWord, w: FiniteWord) -> int:
    """phi(uw) from the parts: 3^h(w) phi(u) + 2^len(u) phi(w)."""
    return 3 ** w.height * u.phi + (w.phi << u.length)


# -- serialization -------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\(|\)|[01]+|\^\s*\d+)")


def _tokenize(text: str) -> list[str]:
    pos, tokens = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise InputError(f"cannot parse word at {text[pos:pos + 10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return tokens


def parse_word(text: str) -> str:
    """Expand run-length notation such as ``10 1^4 0 (1^5 0^2)^5``.

    An exponent binds to the last digit of a literal run (``10^3`` is
    ``1000``) or to a whole parenthesized group.
    """
    tokens = _tokenize(text)

    def seq(i: int) -> tuple[list[tuple[str, bool]], int]:
        # items are (text, is_group)
        items: list[tuple[str, bool]] = []
        while i < len(tokens) and tokens[i] != ")":
            t = tokens[i]
            if t == "(":
                inner, i = seq(i + 1)
                if i >= len(tokens):
                    raise InputError("unbalanced parenthesis in word")
                items.append(("".join(s for s, _ in inner), True))
            elif t[0] == "^":
                if not items:
                    raise InputError("exponent without a base")
                k = int(t[1:].strip())
                s, grp = items.pop()
                if not grp and len(s) > 1:
                    items.append((s[:-1], False))
                    s = s[-1]
                if len(s) * k > MAX_PARSED_LENGTH:
                    raise InputError(f"word expands beyond {MAX_PARSED_LENGTH} letters")
                items.append((s * k, True))
            else:
                items.append((t, False))
            i += 1
        return items, i

    items, i = seq(0)
    if i != len(tokens):
        raise InputError("unbalanced parenthesis in word")
    return "".join(s for s, _ in items)


def to_runlength(bits: str | FiniteWord) -> str:
    """``0 1^2 0^2 1^4``; exponent 1 is omitted."""
    bits = str(bits)
    out = []
    for c, run in groupby(bits):
        k = sum(1 for _ in run)
        out.append(c if k == 1 else f"{c}^{k}")
    return " ".join(out)


# -- infinite words -----------------------------------------------------------


class WordStream:
    """Lazily evaluated infinite binary word with a memoized prefix.

    Digits come either from an index function or from a chunk generator.
    The memo grows by doubling and is extended under a lock, so readers of
    an already materialized prefix never block and never see partial data.
    """

    def __init__(self, digit: Callable[[int], int] | None = None,
                 chunks: Callable[[], Iterator[Iterable[int] | str]] | None = None,
                 *, name: str = "stream", period: FiniteWord | None = None,
                 preperiod: FiniteWord | None = None, limit: int | None = None):
        if (digit is None) == (chunks is None):
            raise InputError("give exactly one of digit or chunks")
        self._digit = digit
        self._chunks = chunks() if chunks is not None else None
        self._buf = bytearray()
        self._lock = threading.Lock()
        self.name = name
        self.period = period
        self.preperiod = preperiod or EMPTY
        # doubling never reads past this many digits unless a caller asks
        self.limit = limit

    # factories

    @classmethod
    def from_function(cls, f: Callable[[int], int], name: str = "stream",
                      limit: int | None = None) -> "WordStream":
        return cls(digit=f, name=name, limit=limit)

    @classmethod
    def from_chunks(cls, gen: Callable[[], Iterator[Iterable[int] | str]], name: str = "stream") -> "WordStream":
        return cls(chunks=gen, name=name)

    @classmethod
    def periodic(cls, u: FiniteWord | str, prefix: FiniteWord | str = "") -> "WordStream":
        """prefix u u u ..."""
        u = u if isinstance(u, FiniteWord) else FiniteWord(u)
        pre = prefix if isinstance(prefix, FiniteWord) else FiniteWord(prefix)
        if u.length == 0:
            raise InputError("period must be non-empty")
        p, n = pre.bits, u.bits

        def digit(j: int) -> int:
            return int(p[j]) if j < len(p) else int(n[(j - len(p)) % len(n)])

        return cls(digit=digit, name=f"{p}({n})^inf", period=u, preperiod=pre)

    @classmethod
    def from_finite(cls, u: FiniteWord | str, fill: int = 0) -> "WordStream":
        """u followed by fill^inf."""
        return cls.periodic(FiniteWord(str(fill)), u)

    # access

    def _ensure(self, n: int) -> None:
        if n <= len(self._buf):
            return
        with self._lock:
            have = len(self._buf)
            if n <= have:
                return
            target = max(n, 2 * have, 64)
            if self.limit is not None:
                target = max(n, min(target, self.limit))
            if self._digit is not None:
                self._buf.extend(self._digit(j) for j in range(have, target))
            else:
                while len(self._buf) < target:
                    chunk = next(self._chunks)
                    if isinstance(chunk, str):
                        self._buf.extend(chunk.encode().translate(_FROM_ASCII))
                    else:
                        self._buf.extend(1 if b else 0 for b in chunk)

    def digit(self, j: int) -> int:
        self._ensure(j + 1)
        return self._buf[j]

    __getitem__ = digit

    def prefix(self, l: int) -> FiniteWord:
        self._ensure(l)
        return FiniteWord(self._buf[:l].translate(_TO_ASCII).decode())

    def prefix_bytes(self, l: int) -> bytes:
        """First l digits as bytes with values 0/1 (no copy of the memo beyond l)."""
        self._ensure(l)
        return bytes(self._buf[:l])

    def heights(self, L: int) -> list[int]:
        """h(1..L) as a list indexed from 0 (entry i is h(i+1))."""
        out, h = [], 0
        for b in self.prefix_bytes(L):
            h += b
            out.append(h)
        return out

    def shift(self, k: int) -> "WordStream":
        """Suffix S^k(v)."""
        return WordStream.from_function(lambda j: self.digit(j + k), name=f"S^{k}({self.name})")

    def __repr__(self):
        return f"WordStream({self.name})"


_TO_ASCII = bytes.maketrans(b"\x00\x01", b"01")
_FROM_ASCII = bytes.maketrans(b"01", b"\x00\x01")


def ensure_stream(v: WordStream | FiniteWord | str) -> WordStream:
    if isinstance(v, WordStream):
        return v
    return WordStream.from_finite(v if isinstance(v, FiniteWord) else FiniteWord(v))


@dataclass(frozen=True)
class HeightProfile:
    """(l, h(l)) for l = 1..L, stored as the height column only."""

    heights: tuple[int, ...]

    def __post_init__(self):
        prev = 0
        for h in self.heights:
            if h - prev not in (0, 1):
                raise InputError("height increments must be 0 or 1")
            prev = h

    def __len__(self):
        return len(self.heights)

    def __getitem__(self, l: int) -> int:
        """h(l) for 1 <= l <= L; h(0) = 0."""
        return 0 if l == 0 else self.heights[l - 1]

    def pairs(self) -> list[tuple[int, int]]:
        return [(i + 1, h) for i, h in enumerate(self.heights)]


def height_profile(v: WordStream, L: int) -> HeightProfile:
    if L < 1:
        raise InputError("L must be positive")
    return HeightProfile(tuple(ensure_stream(v).heights(L)))


def ceil_multiples(oracle: AlphaOracle, L: int) -> list[int]:
    """[ceil(l*alpha) for l in 0..L], computed exactly and incrementally."""
    from .sturmian import floor_multiples  # local import avoids a cycle

    fl = floor_multiples(oracle, L)
    if oracle.is_rational:
        q = oracle.value
        return [-((-l * q.numerator) // q.denominator) for l in range(L + 1)]
    return [0] + [f + 1 for f in fl[1:]]


def relative_height(v: WordStream, l: int, oracle: AlphaOracle) -> int:
    """n_l = h(l) - ceil(l alpha)."""
    if l < 1:
        raise InputError("l must be positive")
    return sum(ensure_stream(v).prefix_bytes(l)) - alpha_ceil(oracle, l)


def relative_heights(v: WordStream, L: int, oracle: AlphaOracle) -> list[int]:
    """[n_1, ..., n_L]."""
    hs = ensure_stream(v).heights(L)
    cs = ceil_multiples(oracle, L)
    return [h - c for h, c in zip(hs, cs[1:])]


@dataclass(frozen=True)
class DominationResult:
    holds: bool
    first_violation: int | None = None
    endpoints_equal: bool | None = None

    def __bool__(self):
        return self.holds


def dominates(upper: WordStream | str, lower: WordStream | str, L: int,
              lift_certificate: bool = False) -> DominationResult:
    """Pointwise h_upper(l) >= h_lower(l) for l <= L; with ``lift_certificate``
    the heights at L must also agree, which is exactly when ``lower`` turns
    into ``upper`` by successive 01 -> 10 swaps."""
    hu = ensure_stream(upper).heights(L)
    hl = ensure_stream(lower).heights(L)
    for i, (a, b) in enumerate(zip(hu, hl)):
        if a < b:
            return DominationResult(False, i + 1, hu[-1] == hl[-1])
    equal = hu[-1] == hl[-1]
    if lift_certificate and not equal:
        return DominationResult(False, L, False)
    return DominationResult(True, None, equal)


@dataclass(frozen=True)
class EllFound:
    value: int
    certified_up_to: int


def default_guard(scan_limit: int) -> int:
    return scan_limit // 4


def ell_j_from_heights(n: Sequence[int], j: int, scan_limit: int, guard: int = 0) -> EllFound | None:
    """Window-certified last position with relative height j.

    ``n[l-1]`` is n_l.  Returns the largest l* <= scan_limit with n_l* = j
    and n_l > j on (l*, scan_limit], or None when no such l* exists or when
    l* lies within ``guard`` positions of the window end (a run of ones at
    the end lifts n_l through several levels that a later run of zeros
    could revisit).
    """
    for l in range(scan_limit, 0, -1):
        x = n[l - 1]
        if x == j:
            return EllFound(l, scan_limit) if l <= scan_limit - guard else None
        if x < j:
            return None
    return None


def ell_j(v: WordStream, oracle: AlphaOracle, j: int, scan_limit: int, guard: int | None = None) -> EllFound:
    if scan_limit < 1:
        raise InputError("scan_limit must be positive")
    if j < 0:
        raise InputError("j must be non-negative")
    guard = default_guard(scan_limit) if guard is None else guard
    got = ell_j_from_heights(relative_heights(v, scan_limit, oracle), j, scan_limit, guard)
    if got is None:
        raise Unresolved(f"l_{j} not certified within a window of {scan_limit}")
    return got


def ell_sequence(v: WordStream, oracle: AlphaOracle, scan_limit: int, guard: int | None = None) -> list[int]:
    """All l_j (j = 0, 1, ...) that the window certifies, in order."""
    guard = default_guard(scan_limit) if guard is None else guard
    n = relative_heights(v, scan_limit, oracle)
    out, j = [], 0
    while True:
        got = ell_j_from_heights(n, j, scan_limit, guard)
        if got is None:
            return out
        out.append(got.value)
        j += 1


def associated_word(v: WordStream, oracle: AlphaOracle, scan_limit: int, guard: int | None = None) -> WordStream:
    """1c_v: the Sturmian word 1c_alpha with a 1 at every index l_j.

    Digits are served lazily up to the last certified l_j; asking beyond
    that raises :class:`Unresolved` because a later l_j could still land
    there.
    """
    if oracle.kind is not AlphaKind.LogRatio23:
        raise InputError("the associated word is defined for alpha = ln2/ln3")
    from .sturmian import sturmian_stream

    ells = ell_sequence(v, oracle, scan_limit, guard)
    base = sturmian_stream(oracle, "upper")
    marks = set(ells)
    # a digit i is settled when l_j > i has been certified for the next j,
    # or when every later l_j must exceed i (l_j is increasing)
    horizon = ells[-1] if ells else -1

    def digit(i: int) -> int:
        if i > horizon:
            raise Unresolved(f"digit {i} of the associated word needs l_j beyond the window {scan_limit}")
        return 1 if i in marks else base.digit(i)

    w = WordStream.from_function(digit, name=f"1c_v[{v.name}]", limit=horizon + 1)
    w.ells = ells
    w.horizon = horizon
    return w

"""Statistics and convergence diagnostics for parity words.

Covers slope series h/l, the ratio test on the positions l_j, block-height
ratios, the terms of -Phi_R(1c_alpha) at alpha = ln2/ln3 (means,
distribution, sorted order via a modular permutation), deviation bands for
Christoffel prefixes and the pseudo-trajectory cone.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import InputError, InvalidInterval
from .exactnum import AlphaOracle, Interval, RationalLike, as_rational, ln2_interval, ln3_interval
from .sturmian import Convergents, convergents, christoffel, sturmian_stream
from .words import WordStream, ceil_multiples, ell_sequence, ensure_stream

DEFAULT_MARGIN = Fraction(1, 20)

SIXTHS_LIMIT_POINTS = tuple(Fraction(x) for x in ("1/3", "1/2", "2/3", "1", "3/2", "2", "3"))
QUARTERS_LIMIT_POINTS = tuple(Fraction(x) for x in (
    "1/2", "5/8", "5/7", "3/4", "6/7", "7/8", "1", "8/7", "7/6", "4/3", "7/5", "8/5", "2"))


def _log_ratio() -> AlphaOracle:
    return AlphaOracle.log_ratio_23()


# -- slope statistics ----------------------------------------------------------


class SlopeVerdict(enum.Enum):
    Above = "above"
    Below = "below"
    Straddles = "straddles"


@dataclass(frozen=True)
class SlopeReport:
    window: int
    tail_start: int
    heights: tuple[int, ...]
    liminf_proxy: Fraction
    limsup_proxy: Fraction
    verdict: SlopeVerdict
    # enclosure of min over the tail of h/l - ln2/ln3, set for Above
    margin_above: Interval | None
    # 2^l/3^h shrinking: max of l - h*log2(3) over the last quarter is below
    # the max over the quarter before it
    decaying: bool

    def slope(self, l: int) -> Fraction:
        return Fraction(self.heights[l - 1], l)

    def series(self) -> list[tuple[int, int]]:
        """(h, l) pairs."""
        return [(h, l) for l, h in enumerate(self.heights, 1)]


def slope_stats(v: WordStream, L: int, tail_start: int | None = None) -> SlopeReport:
    """h/l over 1..L compared with ln2/ln3 on the tail [tail_start, L]
    (default the second half)."""
    if L < 4:
        raise InputError("window must be at least 4")
    start = tail_start or L // 2 + 1
    if not 1 <= start <= L:
        raise InputError("tail start must lie inside the window")
    v = ensure_stream(v)
    hs = v.heights(L)
    ceils = ceil_multiples(_log_ratio(), L)
    tail = range(start, L + 1)
    lo = min((Fraction(hs[l - 1], l) for l in tail))
    hi = max((Fraction(hs[l - 1], l) for l in tail))
    if all(hs[l - 1] > ceils[l - 1] for l in tail):
        verdict = SlopeVerdict.Above
        ratio = ln2_interval() / ln3_interval()
        above = Interval.point(lo) - ratio
    elif all(hs[l - 1] < ceils[l - 1] for l in tail):
        verdict, above = SlopeVerdict.Below, None
    else:
        verdict, above = SlopeVerdict.Straddles, None
    log3 = math.log2(3)
    q = max(L // 4, 1)
    excess = [l - hs[l - 1] * log3 for l in range(1, L + 1)]
    decaying = max(excess[-q:]) < max(excess[-2 * q:-q])
    return SlopeReport(L, start, tuple(hs), lo, hi, verdict, above, decaying)


def factor_end_slopes(log) -> list[Fraction]:
    """h/l at the end of each zero run of a constructed word (the local
    minima of the slope for zeros-first shapes)."""
    out = []
    L = H = 0
    for rec in log:
        if log.config.shape.value == "zeros-first":
            out.append(Fraction(H, L + rec.f) if L + rec.f else Fraction(0))
            L, H = L + rec.f + rec.m, H + rec.m
        else:
            L, H = L + rec.f + rec.m, H + rec.m
            out.append(Fraction(H, L))
    return out


# -- ratio criterion on l_j ----------------------------------------------------


class Verdict(enum.Enum):
    Convergent = "convergent"
    Divergent = "divergent"
    Inconclusive = "inconclusive"


@dataclass(frozen=True)
class RatioReport:
    ells: tuple[int, ...]
    ratios: tuple[Fraction, ...]
    tail_start: int
    tail_max: Fraction | None
    limit_points: tuple[Fraction, ...]
    histogram: dict[float, int]
    verdict: Verdict
    margin: Fraction
    # largest distance from a tail ratio to its nearest candidate
    max_offset: Fraction | None = None


def _nearest(x: Fraction, candidates: Sequence[Fraction]) -> Fraction:
    return min(candidates, key=lambda c: (abs(c - x), c))


def ratio_criterion(v: WordStream, scan_limit: int, *, oracle: AlphaOracle | None = None,
                    guard: int | None = None,
                    candidates: Sequence[Fraction] | None = None, margin: RationalLike = DEFAULT_MARGIN,
                    min_ratios: int = 8) -> RatioReport:
    """r_j = (l_{j+2} - l_{j+1}) / (l_{j+1} - l_j) over the positions l_j.

    The tail is the second half of the ratio list.  Convergent when every
    tail ratio is below 3 - margin; Divergent when every ratio in the last
    quarter exceeds 3 + margin; Inconclusive otherwise or when fewer than
    ``min_ratios`` ratios are available.  Limit points are the candidates
    nearest to tail ratios; without candidates a 0.01-bin histogram is
    filled instead.
    """
    margin = as_rational(margin)
    oracle = oracle or _log_ratio()
    ells = ell_sequence(ensure_stream(v), oracle, scan_limit, guard)
    ratios = tuple(Fraction(c - b, b - a) for a, b, c in zip(ells, ells[1:], ells[2:]))
    start = len(ratios) // 2
    tail = ratios[start:]
    hist: dict[float, int] = {}
    points: tuple[Fraction, ...] = ()
    offset = None
    if candidates:
        points = tuple(sorted(set(_nearest(r, candidates) for r in tail)))
        offset = max((abs(r - _nearest(r, candidates)) for r in tail), default=None)
    else:
        hist = dict(sorted(Counter(math.floor(r * 100) / 100 for r in tail).items()))
    if len(ratios) < min_ratios:
        verdict = Verdict.Inconclusive
    elif max(tail) < 3 - margin:
        verdict = Verdict.Convergent
    elif min(ratios[-max(len(ratios) // 4, 1):]) > 3 + margin:
        verdict = Verdict.Divergent
    else:
        verdict = Verdict.Inconclusive
    return RatioReport(tuple(ells), ratios, start, max(tail) if tail else None, points, hist, verdict, margin, offset)


# -- block heights of a word with replaced zeros ---------------------------------


@dataclass(frozen=True)
class HeightsReport:
    positions: tuple[int, ...]
    heights: tuple[int, ...]
    ratios: tuple[Fraction, ...]
    verdict: Verdict
    gaps: tuple[int, ...]
    # mean gap over the last quarter at least twice the mean over the first
    gaps_growing: bool


def heights_ratio_criterion(positions: Sequence[int], *, oracle: AlphaOracle | None = None,
                            margin: RationalLike = DEFAULT_MARGIN, min_blocks: int = 8) -> HeightsReport:
    """Ratio test on the heights of the blocks of 1c_alpha that end at the
    replaced zeros (0-based ``positions``, strictly increasing).

    Block j covers positions (positions[j-1], positions[j]] and its height is
    the number of ones in 1c_alpha there plus the replaced digit.
    Convergent when the tail ratios stay below 3/2 - margin, Divergent when
    they stay above 6 + margin, Inconclusive in between.
    """
    margin = as_rational(margin)
    pos = list(positions)
    if any(b <= a for a, b in zip(pos, pos[1:])) or (pos and pos[0] < 0):
        raise InputError("positions must be non-negative and strictly increasing")
    oracle = oracle or _log_ratio()
    base = sturmian_stream(oracle)
    top = pos[-1] + 1 if pos else 0
    hs = base.heights(top) if top else []

    def ones_upto(i: int) -> int:
        return hs[i] if i >= 0 else 0

    heights, prev = [], -1
    for p in pos:
        # 1c_alpha has a 0 at p; the replacement adds one
        heights.append(ones_upto(p) - ones_upto(prev) + 1)
        prev = p
    ratios = tuple(Fraction(b, a) for a, b in zip(heights, heights[1:]))
    tail = ratios[len(ratios) // 2:]
    if len(ratios) < min_blocks:
        verdict = Verdict.Inconclusive
    elif max(tail) < Fraction(3, 2) - margin:
        verdict = Verdict.Convergent
    elif min(tail) > 6 + margin:
        verdict = Verdict.Divergent
    else:
        verdict = Verdict.Inconclusive
    gaps = tuple(b - a for a, b in zip(pos, pos[1:]))
    q = max(len(gaps) // 4, 1)
    growing = len(gaps) >= 4 and sum(gaps[-q:]) * q >= 2 * sum(gaps[:q]) * q
    return HeightsReport(tuple(pos), tuple(heights), ratios, verdict, gaps, growing)


# -- terms of -Phi_R(1c_alpha) for alpha = ln2/ln3 -------------------------------


@dataclass(frozen=True)
class TermSequence:
    """t_i = 2^d_i / 3^i for i = 1..m with d_i = floor((i-1) log2 3).

    Exponents are exact.  ``values`` are doubles with relative error below
    2^-60 before rounding.
    """

    exponents: tuple[int, ...]
    values: tuple[float, ...]

    def __len__(self):
        return len(self.values)

    def exact(self, i: int) -> Fraction:
        return Fraction(1 << self.exponents[i - 1], 3 ** i)


def term_sequence(m: int) -> TermSequence:
    if m < 1:
        raise InputError("term count must be positive")
    exps, vals = [], []
    p = 1  # 3^(i-1)
    for _ in range(m):
        bl = p.bit_length()
        d = bl - 1
        exps.append(d)
        if bl <= 64:
            x = Fraction(1 << d, p)
        else:
            # 2^(bl-1) / p from the top 64 bits of p
            x = Fraction(1 << 63, p >> (bl - 64))
        vals.append(float(x) / 3)
        p *= 3
    return TermSequence(tuple(exps), tuple(vals))


@dataclass(frozen=True)
class Means:
    count: int
    arithmetic: float
    geometric: float


def means(m: int | TermSequence) -> Means:
    """Arithmetic and geometric mean of the first m terms.

    The geometric mean uses exact sums of the exponents, so
    log(mean) = (sum d * ln2 - sum i * ln3) / m is evaluated on enclosures.
    """
    ts = m if isinstance(m, TermSequence) else term_sequence(m)
    n = len(ts)
    arith = math.fsum(ts.values) / n
    sd = sum(ts.exponents)
    si = n * (n + 1) // 2
    bits = 96 + max(sd, si).bit_length()
    expo = (ln2_interval(bits) * sd - ln3_interval(bits) * si) / n
    return Means(n, arith, math.exp(float(expo.mid)))


@dataclass(frozen=True)
class DistributionCheck:
    count: int
    low: Fraction
    high: Fraction
    frequency: float
    theoretical: float


def distribution_check(m: int | TermSequence, a: RationalLike, b: RationalLike) -> DistributionCheck:
    """Share of terms in [a, b] against the density 1/(x ln 2) on [1/6, 1/3]."""
    a, b = as_rational(a), as_rational(b)
    if not (Fraction(1, 6) <= a < b <= Fraction(1, 3)):
        raise InvalidInterval(f"need 1/6 <= a < b <= 1/3, got [{a}, {b}]")
    ts = m if isinstance(m, TermSequence) else term_sequence(m)
    fa, fb = float(a), float(b)
    hits = 0
    for i, t in enumerate(ts.values, 1):
        if fa + 1e-12 < t < fb - 1e-12:
            hits += 1
        elif abs(t - fa) <= 1e-12 or abs(t - fb) <= 1e-12:
            # too close to an endpoint for the double; decide exactly
            hits += a <= ts.exact(i) <= b
    theory = (math.log(b.numerator) - math.log(b.denominator) - math.log(a.numerator)
              + math.log(a.denominator)) / math.log(2)
    return DistributionCheck(len(ts), a, b, hits / len(ts), theory)


# -- sorted order of the terms of a Christoffel prefix ----------------------------


def _cf(k: int) -> Convergents:
    if k < 2:
        raise InputError("index must be at least 2")
    return convergents(_log_ratio(), k + 2)


@dataclass(frozen=True)
class SigmaPermutation:
    k: int
    sigma: tuple[int, ...]  # sigma[i-1] = rank of x_i

    @property
    def reading_order(self) -> tuple[int, ...]:
        """Indices i listed by increasing x_i."""
        inv = [0] * len(self.sigma)
        for i, j in enumerate(self.sigma, 1):
            inv[j - 1] = i
        return tuple(inv)


def sigma_perm(k: int) -> SigmaPermutation:
    """sigma_k(i) = p_k - ((-1)^k * p_{k-1}^-1 * (i-1) mod p_k)."""
    cf = _cf(k)
    p, pp = cf.p(k), cf.p(k - 1)
    inv = pow(pp, -1, p) if p > 1 else 0
    sign = -1 if k % 2 else 1
    sigma = tuple(p - (sign * inv * (i - 1)) % p for i in range(1, p + 1))
    if sorted(sigma) != list(range(1, p + 1)):
        raise AssertionError(f"sigma_{k} is not a bijection")
    return SigmaPermutation(k, sigma)


def left_neighbor(k: int, i: int) -> int:
    """Index to the left of i in the reading order: i + (-1)^k p_{k-1} mod+ p_k."""
    cf = _cf(k)
    p, pp = cf.p(k), cf.p(k - 1)
    sign = 1 if k % 2 == 0 else -1
    return (i - 1 + sign * pp) % p + 1


@dataclass(frozen=True)
class PowerRatio:
    """2^two / 3^three."""

    two: int
    three: int

    def __lt__(self, other: "PowerRatio") -> bool:
        # 2^a/3^b < 2^c/3^d  <=>  2^(a-c) * 3^d < 3^b  (shifted to integers)
        lhs = 3 ** other.three
        rhs = 3 ** self.three
        s = self.two - other.two
        return (lhs << s if s >= 0 else lhs) < (rhs if s >= 0 else rhs << -s)

    def value(self) -> Fraction:
        return Fraction(2) ** self.two / Fraction(3) ** self.three


def christoffel_terms(k: int) -> list[PowerRatio]:
    """x_1..x_{p_k}: the terms 2^floor((i-1) log2 3) / 3^i."""
    cf = _cf(k)
    w = christoffel(cf.p(k), cf.q(k))
    return [PowerRatio(d, i) for i, d in enumerate(w.one_positions(), 1)]


def y_partition(k: int) -> list[PowerRatio]:
    """Terms of the Christoffel prefix w_k in ascending order, from the
    closed form indexed by the rank j = 1..p_k."""
    cf = _cf(k)
    p, q, pp, qp = cf.p(k), cf.q(k), cf.p(k - 1), cf.q(k - 1)
    sign = 1 if (k - 1) % 2 == 0 else -1
    out = []
    for j in range(1, p + 1):
        two = (-1 + sign * j * qp) % q
        three = (1 + sign * j * pp - 1) % p + 1
        out.append(PowerRatio(two, three))
    return out


def y_partition_bruteforce(k: int) -> list[PowerRatio]:
    """Exact comparison sort of the terms, the oracle for :func:`y_partition`."""
    return sorted(christoffel_terms(k))


def interleaving_holds(k: int, bits: int = 128) -> bool:
    """For odd k: y_j < 2^(j/p_k) / 6 < y_{j+1} for 1 <= j < p_k, decided on
    logarithm enclosures."""
    if k % 2 == 0:
        raise InputError("the interleaving is stated for odd k")
    ys = y_partition(k)
    p = len(ys)
    ln2, ln3 = ln2_interval(bits), ln3_interval(bits)
    logy = [ln2 * y.two - ln3 * y.three for y in ys]
    for j in range(1, p):
        mid = ln2 * Fraction(j, p) - ln2 - ln3
        if not (logy[j - 1].hi < mid.lo and mid.hi < logy[j].lo):
            return False
    return True


def b_factor(k: int) -> Fraction:
    """b_k = 3^p_{k-2}/2^q_{k-2} for odd k, its reciprocal for even k (k >= 2)."""
    if k < 2:
        raise InputError("b_k is defined for k >= 2")
    cf = convergents(_log_ratio(), k + 2)
    x = Fraction(3 ** cf.p(k - 2), 1 << cf.q(k - 2))
    return x if k % 2 else 1 / x


def b_identity_holds(k: int) -> bool:
    """b_k = b_{k+1}^a_k * b_{k+2}."""
    a = convergents(_log_ratio(), k + 2).a(k)
    return b_factor(k) == b_factor(k + 1) ** a * b_factor(k + 2)


def b_power_identity_holds(k: int) -> bool:
    """b_{k+1}^p_k * b_{k+2}^p_{k-1} = 2."""
    cf = convergents(_log_ratio(), k + 2)
    return b_factor(k + 1) ** cf.p(k) * b_factor(k + 2) ** cf.p(k - 1) == 2


def _iroot_bounds(n: int, w: int) -> tuple[Fraction, Fraction]:
    """Enclosure of 2^(1/n) with denominators 2^w."""
    target = 1 << (w * n + 1)
    lo, hi = 1 << w, 1 << (w + 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** n <= target:
            lo = mid
        else:
            hi = mid
    return Fraction(lo, 1 << w), Fraction(hi, 1 << w)


def riemann_bounds_hold(k: int, bits: int = 96) -> bool:
    """p(b-1)/b < ln2 < p(b-1) with b^p = 2, p = p_k."""
    p = convergents(_log_ratio(), k + 1).p(k)
    blo, bhi = _iroot_bounds(p, bits)
    ln2 = ln2_interval(bits)
    return p * (bhi - 1) / bhi < ln2.lo and ln2.hi < p * (blo - 1)


def mean_interval(bits: int = 128) -> Interval:
    """1/(6 ln 2)."""
    return (ln2_interval(bits) * 6).reciprocal()


@dataclass(frozen=True)
class MuBound:
    k: int
    p: int
    deviation: Interval
    band: tuple[Fraction, Fraction]

    @property
    def holds(self) -> bool:
        return self.band[0] < self.deviation.lo and self.deviation.hi < self.band[1]


def christoffel_mu_bound(k: int) -> MuBound:
    """-Phi_R(w_k) - p_k * mu against (0, 1/6) for odd k and (1/12, 1/4) for even k."""
    cf = _cf(k)
    p = cf.p(k)
    w = christoffel(p, cf.q(k))
    minus_phi = Fraction(w.phi, 3 ** p)
    dev = Interval.point(minus_phi) - mean_interval(128 + p.bit_length()) * p
    band = (Fraction(0), Fraction(1, 6)) if k % 2 else (Fraction(1, 12), Fraction(1, 4))
    return MuBound(k, p, dev, band)


# -- cone of the pseudo-trajectory over 1c_alpha ----------------------------------


@dataclass(frozen=True)
class ConeLimits:
    x: Fraction
    odd: list[tuple[int, int, Fraction]] = field(default_factory=list)
    even: list[tuple[int, int, Fraction]] = field(default_factory=list)

    def at(self, k: int) -> Fraction:
        for kk, _, r in self.odd + self.even:
            if kk == k:
                return r
        raise KeyError(k)


def cone_targets(bits: int = 96) -> tuple[Interval, Interval]:
    """1/(6 ln 3) and 1/(2 ln 3)."""
    ln3 = ln3_interval(bits)
    return (ln3 * 6).reciprocal(), (ln3 * 2).reciprocal()


def cone_limits(x: RationalLike, K: int) -> ConeLimits:
    """T_{u(q_k)}(x) / q_k for the prefixes u(q_k) of 1c_{ln2/ln3}, k = 1..K."""
    x = as_rational(x)
    cf = convergents(_log_ratio(), K)
    v = sturmian_stream(_log_ratio())
    out = ConeLimits(x)
    for k in range(1, min(K, len(cf) - 1) + 1):
        q = cf.q(k)
        u = v.prefix(q)
        t = Fraction(u.phi + 3 ** u.height * x, 1 << q)
        (out.odd if k % 2 else out.even).append((k, q, t / q))
    return out


@dataclass(frozen=True)
class ConeReport:
    x: Fraction
    length: int
    # smallest additive slack putting every point between the two lines
    required_slack: float
    inside: bool


def cone_check(x: RationalLike, L: int, slack: float = 1.0) -> ConeReport:
    """Does (l, T_{u(l)}(x) - x) stay between slopes 1/(6 ln 3) and 1/(2 ln 3)
    up to ``slack``?  The slack is a user choice; the required one is
    reported either way."""
    x = as_rational(x)
    lo_s, hi_s = (float(t.mid) for t in cone_targets())
    v = sturmian_stream(_log_ratio())
    y = x
    need = 0.0
    for l, b in enumerate(v.prefix_bytes(L), 1):
        y = (3 * y + 1) / 2 if b else y / 2
        val = float(y - x)
        need = max(need, lo_s * l - val, val - hi_s * l)
    return ConeReport(x, L, need, need <= slack)

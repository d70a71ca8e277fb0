import math
from fractions import Fraction

import mpmath
import pytest

from conftest import build
from conjlab.analysis import (QUARTERS_LIMIT_POINTS, SIXTHS_LIMIT_POINTS, PowerRatio, SlopeVerdict, Verdict,
                              b_factor, b_identity_holds, b_power_identity_holds, christoffel_mu_bound,
                              christoffel_terms, cone_check, cone_limits, cone_targets, distribution_check,
                              factor_end_slopes, heights_ratio_criterion, interleaving_holds, left_neighbor,
                              mean_interval, means, ratio_criterion, riemann_bounds_hold, sigma_perm,
                              slope_stats, term_sequence, y_partition, y_partition_bruteforce)
from conjlab.conjugacy import phi_estimate_at, pseudo_trajectory
from conjlab.errors import InputError, InvalidInterval
from conjlab.exactnum import AlphaOracle
from conjlab.sturmian import Shape, convergents, sturmian_stream
from conjlab.words import WordStream, associated_word

F = Fraction
LOG_RATIO = AlphaOracle.log_ratio_23()
LN2, LN3 = math.log(2), math.log(3)


# -- slopes ---------------------------------------------------------------------

def test_slope_of_identity_runs_tends_to_ln2(zeros_growing_by_one):
    v, _ = zeros_growing_by_one
    rep = slope_stats(v, 8000)
    assert rep.verdict is SlopeVerdict.Above
    assert abs(float(rep.limsup_proxy) - LN2) < 0.01
    assert rep.decaying


def test_slope_of_power_runs(power_runs_word):
    v, _ = power_runs_word
    rep = slope_stats(v, 8000)
    assert rep.verdict is SlopeVerdict.Above
    assert abs(float(rep.liminf_proxy) - 0.634) < 1e-3
    assert rep.margin_above.lo > 0


def test_slope_of_ln2_sturmian_word():
    rep = slope_stats(sturmian_stream(AlphaOracle.nat_log2()), 4000)
    assert abs(float(rep.liminf_proxy) - LN2) < 1e-3
    assert rep.series()[:3] == [(1, 1), (2, 2), (3, 3)]


def test_slope_of_log_ratio_sturmian_word_straddles_nothing():
    # 1c_alpha sits exactly on ceil(l alpha), never strictly above or below
    rep = slope_stats(sturmian_stream(LOG_RATIO), 1000)
    assert rep.verdict is SlopeVerdict.Straddles


def test_slope_below():
    rep = slope_stats(sturmian_stream(AlphaOracle.exact(F(3, 5))), 1000)
    assert rep.verdict is SlopeVerdict.Below
    assert not rep.decaying


def test_factor_end_slopes(power_runs_word):
    _, log = power_runs_word
    s = factor_end_slopes(log)
    assert s[0] == 0 and s[1] == F(2, 4)


def test_slope_stats_rejects_tiny_window():
    with pytest.raises(InputError):
        slope_stats(WordStream.periodic("1"), 2)


# -- ratio criteria -------------------------------------------------------------

@pytest.fixture(scope="module")
def sixths_ratio():
    v, _ = build("ln2/ln3", "sixths", Shape.OnesFirst, top=1)
    return ratio_criterion(v, 20000, candidates=SIXTHS_LIMIT_POINTS)


def test_sixths_ratio_limit_points(sixths_ratio):
    rep = sixths_ratio
    assert rep.ells[:6] == (8, 16, 24, 37, 51, 73)
    assert set(rep.limit_points) <= set(SIXTHS_LIMIT_POINTS)
    assert rep.max_offset < F(1, 20)
    # the tail touches 3 from above by less than the margin
    assert rep.verdict is Verdict.Inconclusive
    assert 3 < rep.tail_max < 3 + rep.margin


def test_quarters_ratio_is_convergent():
    v, _ = build("ln2/ln3", "quarters", Shape.OnesFirst, top=1)
    rep = ratio_criterion(v, 20000, candidates=QUARTERS_LIMIT_POINTS)
    assert rep.verdict is Verdict.Convergent
    assert 2 < rep.tail_max < 3
    assert max(rep.limit_points) == 2


def test_small_window_is_inconclusive():
    v, _ = build("ln2/ln3", "sixths", Shape.OnesFirst, top=1)
    rep = ratio_criterion(v, 100)
    assert rep.verdict is Verdict.Inconclusive
    assert rep.histogram


def test_heights_criterion_trivial_cases():
    base = sturmian_stream(LOG_RATIO)
    zeros = [i for i in range(3000) if base.digit(i) == 0]
    # every 40th zero: blocks of equal height
    rep = heights_ratio_criterion(zeros[::40])
    assert rep.verdict is Verdict.Convergent
    # doubling gaps: ratios near 2, between the two bounds
    picks, k = [], 1
    while k < len(zeros):
        picks.append(zeros[k])
        k *= 2
    assert heights_ratio_criterion(picks, min_blocks=4).verdict is Verdict.Inconclusive


def test_heights_criterion_on_associated_word(sixths_word):
    v, _ = sixths_word
    w = associated_word(v, LOG_RATIO, 20000)
    rep = heights_ratio_criterion(w.ells)
    assert rep.verdict is Verdict.Inconclusive
    assert rep.gaps_growing


def test_heights_criterion_rejects_unsorted():
    with pytest.raises(InputError):
        heights_ratio_criterion([5, 3])


# -- terms -------------------------------------------------------------------------

def test_term_sequence_against_mpmath():
    mpmath.mp.dps = 50
    ts = term_sequence(3000)
    assert ts.exact(1) == F(1, 3)
    for i in (1, 2, 3, 10, 100, 999, 2500, 3000):
        d = int(mpmath.floor((i - 1) * mpmath.log(3) / mpmath.log(2)))
        assert ts.exponents[i - 1] == d
        ref = mpmath.mpf(2) ** d / mpmath.mpf(3) ** i
        assert abs(ts.values[i - 1] / ref - 1) < 1e-15


def test_terms_lie_in_range():
    ts = term_sequence(5000)
    assert all(F(1, 6) < ts.exact(i) <= F(1, 3) for i in range(1, 300))
    assert all(1 / 6 < t <= 1 / 3 for t in ts.values)
    assert sum(1 for i in range(1, 300) if ts.exact(i) == F(1, 3)) == 1


def test_means_single_term():
    m = means(1)
    assert m.arithmetic == pytest.approx(1 / 3) and m.geometric == pytest.approx(1 / 3)


def test_means_against_direct_float_evaluation():
    m = means(2000)
    ts = term_sequence(2000)
    geo = math.exp(sum(math.log(t) for t in ts.values) / 2000)
    assert abs(m.geometric - geo) < 1e-12
    assert abs(m.arithmetic - sum(ts.values) / 2000) < 1e-15


def test_distribution():
    assert distribution_check(1000, F(1, 6), F(1, 3)).frequency == 1.0
    d = distribution_check(1000, F(1, 6), F(1, 4))
    assert d.theoretical == pytest.approx(0.58496, abs=1e-5)
    with pytest.raises(InvalidInterval):
        distribution_check(10, F(1, 4), F(1, 6))
    with pytest.raises(InvalidInterval):
        distribution_check(10, F(1, 10), F(1, 4))


def test_median_splits_terms_evenly():
    ts = term_sequence(20000)
    med = math.sqrt(2) / 6
    below = sum(1 for t in ts.values if t < med) / len(ts)
    assert abs(below - 0.5) < 0.01


def test_mean_interval():
    assert abs(float(mean_interval().mid) - 1 / (6 * LN2)) < 1e-15


# -- permutations and sorted terms --------------------------------------------------

def test_sigma_reading_orders():
    assert sigma_perm(4).reading_order == (4, 2, 5, 3, 1)
    assert sigma_perm(5).reading_order == (6, 11, 4, 9, 2, 7, 12, 5, 10, 3, 8, 1)


@pytest.mark.parametrize("k", range(2, 10))
def test_sigma_matches_exact_sort(k):
    order = tuple(sorted(range(1, len(christoffel_terms(k)) + 1),
                         key=lambda i: christoffel_terms(k)[i - 1].value()))
    assert sigma_perm(k).reading_order == order


@pytest.mark.parametrize("k", range(2, 10))
def test_left_neighbor_law(k):
    order = sigma_perm(k).reading_order
    for a, b in zip(order, order[1:]):
        assert left_neighbor(k, b) == a


@pytest.mark.parametrize("k", range(2, 10))
def test_y_partition_matches_bruteforce(k):
    ys = y_partition(k)
    assert ys == y_partition_bruteforce(k)
    assert ys[-1].value() == F(1, 3)
    assert all(a < b for a, b in zip(ys, ys[1:]))


def test_power_ratio_order_matches_values():
    xs = [PowerRatio(a, b) for a in range(0, 20, 3) for b in range(1, 14, 2)]
    assert sorted(xs, key=PowerRatio.value) == sorted(xs)


@pytest.mark.parametrize("k", [3, 5, 7, 9])
def test_interleaving_for_odd_k(k):
    assert interleaving_holds(k)


def test_interleaving_is_stated_for_odd_k():
    with pytest.raises(InputError):
        interleaving_holds(4)


@pytest.mark.parametrize("k", range(2, 10))
def test_b_identities(k):
    assert b_identity_holds(k)
    assert b_power_identity_holds(k)
    assert riemann_bounds_hold(k)


def test_b_factors_match_table():
    assert [b_factor(k) for k in range(2, 10)] == [
        F(2), F(3, 2), F(4, 3), F(9, 8), F(2 ** 8, 3 ** 5), F(3 ** 12, 2 ** 19), F(2 ** 65, 3 ** 41),
        F(3 ** 53, 2 ** 84)]


@pytest.mark.parametrize("k", range(2, 12))
def test_mu_bands(k):
    assert christoffel_mu_bound(k).holds


def test_mu_band_examples():
    assert christoffel_mu_bound(5).p == 12
    assert christoffel_mu_bound(6).band == (F(1, 12), F(1, 4))


# -- cone ---------------------------------------------------------------------------

def test_cone_targets():
    lo, hi = cone_targets()
    assert abs(float(lo.mid) - 1 / (6 * LN3)) < 1e-15
    assert abs(float(hi.mid) - 1 / (2 * LN3)) < 1e-15


def test_cone_limits_within_two_percent():
    c = cone_limits(0, 11)
    lo, hi = (float(t.mid) for t in cone_targets())
    assert abs(float(c.at(9)) / lo - 1) < 0.02
    assert abs(float(c.at(8)) / hi - 1) < 0.02
    assert abs(float(c.at(11)) / lo - 1) < 0.02
    assert abs(float(c.at(10)) / hi - 1) < 0.02


def test_cone_limits_forget_the_start():
    base = cone_limits(0, 11)
    for x in (-10, 20):
        c = cone_limits(x, 11)
        for k in (10, 11):
            assert abs(float(c.at(k)) / float(base.at(k)) - 1) < 0.02


def test_cone_check_reports_needed_slack():
    rep = cone_check(0, 2000, slack=5.0)
    assert rep.inside and 0 <= rep.required_slack <= 5.0
    assert not cone_check(0, 2000, slack=0.0).inside or rep.required_slack == 0


# -- orbit bounds -----------------------------------------------------------------------

def test_trajectory_of_sturmian_limit_stays_between_lower_and_upper_words():
    # for alpha = ln 2 the orbit points sit between Phi_R(0c) = 3 Phi_R(1c) + 1 and Phi_R(1c)
    v = sturmian_stream(AlphaOracle.nat_log2())
    z = phi_estimate_at(v, 1200).value
    top, bottom = float(z), 3 * float(z) + 1
    for y in pseudo_trajectory(z, v, 150):
        assert bottom - 1e-6 <= float(y) <= top + 1e-6


def test_pseudo_trajectories_merge_for_small_slopes():
    # alpha below ln2/ln3: the slope 3^h/2^l shrinks and the start is forgotten
    v = sturmian_stream(AlphaOracle.golden())
    a = pseudo_trajectory(0, v, 400)
    b = pseudo_trajectory(F(1000), v, 400)
    hs = v.heights(400)
    gaps = []
    for l in (100, 200, 400):
        slope = F(3 ** hs[l - 1], 2 ** l)
        assert b[l] - a[l] == 1000 * slope
        gaps.append(b[l] - a[l])
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_convergent_helper_consistency():
    cf = convergents(LOG_RATIO, 9)
    assert [len(christoffel_terms(k)) for k in range(2, 10)] == [cf.p(k) for k in range(2, 10)]

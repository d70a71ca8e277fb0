from fractions import Fraction

import pytest

from conjlab.errors import DenominatorNotInvertible, IncompatibleChain, InputError, NotStabilizing
from conjlab.exactnum import AlphaOracle, Residue
from conjlab.padic import (PadicExpansion, arithmetic_indices, cycle_residues_3, digits_from_residues,
                           output_3adic, padic_to_rational, phi_2adic, rational_to_padic, residues_of,
                           search_index_sequences, table1_row)
from conjlab.sturmian import convergents, sturmian_stream

F = Fraction
LOG_RATIO = AlphaOracle.log_ratio_23()

PREFIX_ROWS = [
    (1, "1", "1/2", "-1", (2,), "2"),
    (2, "11", "5/4", "-1", (2, 8), "22"),
    (3, "110", "5/8", "-5", (1, 4), "11"),
    (4, "1101", "23/16", "-23/11", (2, 2, 20), "202"),
    (5, "11011", "85/32", "-85/49", (2, 8, 17, 71), "2212"),
    (6, "110110", "85/64", "-5", (1, 4, 22, 76), "1122"),
    (7, "1101101", "319/128", "-319/115", (2, 2, 20, 74, 236), "20222"),
    (8, "11011011", "1085/256", "-1085/473", (2, 8, 17, 71, 233, 719), "221222"),
    (9, "110110110", "1085/512", "-5", (1, 4, 22, 76, 238, 724), "112222"),
    (10, "1101101101", "3767/1024", "-3767/1163", (2, 2, 20, 74, 236, 722, 2180), "2022222"),
    (11, "11011011010", "3767/2048", "-3767/139", (1, 1, 10, 37, 118, 361, 1090), "1011111"),
]


def convergent_denominators(oracle, K, parity):
    cf = convergents(oracle, K)
    return [cf.q(k) for k in range(2, len(cf)) if k % 2 == parity]


@pytest.mark.parametrize("q,p,n,want", [(-1, 2, 6, "111111"), (F(1, 3), 2, 7, "1101010"), (5, 3, 3, "210")])
def test_rational_to_padic(q, p, n, want):
    assert str(rational_to_padic(q, p, n)) == want


def test_rational_to_padic_rejects_bad_denominator():
    with pytest.raises(DenominatorNotInvertible):
        rational_to_padic(F(1, 3), 3, 4)


def test_period_detection_and_round_trip():
    for den in range(1, 400, 2):
        for num in (-7, -1, 1, 2, 5, 13):
            q = F(num, den)
            e = rational_to_padic(q, 2, 4 * den + 8)
            assert e.period is not None
            assert padic_to_rational(list(e.digits), 2, e.preperiod, e.period) == q


def test_round_trip_base_three():
    for den in (1, 2, 4, 5, 7, 11, 16, 37):
        q = F(-65, den)
        e = rational_to_padic(q, 3, 200)
        assert padic_to_rational(list(e.digits), 3, e.preperiod, e.period) == q


@pytest.mark.parametrize("chain,p,want", [((1, 3, 7), 2, [1, 1, 1]), ((2, 8, 26), 3, [2, 2, 2])])
def test_digits_from_residues(chain, p, want):
    assert digits_from_residues(chain, p) == want


def test_digits_from_incompatible_chain():
    with pytest.raises(IncompatibleChain):
        digits_from_residues((1, 2), 2)


def test_expansion_validation():
    with pytest.raises(InputError):
        PadicExpansion(2, (1, 1), (Residue(1, 2, 1), Residue(1, 2, 2)))


def test_phi_2adic_ln2_word():
    e = phi_2adic(sturmian_stream(AlphaOracle.nat_log2()), 12)
    assert e.residue_values() == [1, 3, 7, 7, 7, 39, 39, 167, 167, 679, 679, 2727]
    assert str(e) == "111001010101"
    assert e.to_csv_rows()[:2] == [(1, 2, 1), (2, 4, 3)]


def test_phi_2adic_golden_word():
    assert str(phi_2adic(sturmian_stream(AlphaOracle.golden()), 22)) == "1101111011100100011001"


def test_phi_2adic_log_ratio_word():
    want = "110111111101101001111101100100111101010100000010100000001"
    assert str(phi_2adic(sturmian_stream(LOG_RATIO), len(want))) == want


def test_phi_2adic_matches_direct_reduction():
    # oracle: -phi/3^h reduced modulo 2^l without the residue chain
    v = sturmian_stream(LOG_RATIO)
    for l in (1, 7, 64, 300):
        u = v.prefix(l)
        assert residues_of(F(-u.phi, 3 ** u.height), 2, l) == phi_2adic(v, l).residue_values()


def test_residues_agree_with_two_routes_modulo_3():
    v = sturmian_stream(LOG_RATIO)
    for l in range(1, 120):
        u = v.prefix(l)
        if u.height:
            t0 = F(u.phi, 2 ** l)
            assert residues_of(t0, 3, u.height) == cycle_residues_3(u)


def test_output_3adic_golden():
    idx = convergent_denominators(AlphaOracle.golden(), 40, 1)
    assert str(output_3adic(sturmian_stream(AlphaOracle.golden()), idx, 30)) == "101121021021202112100201211012"


def test_output_3adic_log_ratio_odd_and_even():
    v = sturmian_stream(LOG_RATIO)
    odd = output_3adic(v, convergent_denominators(LOG_RATIO, 16, 1), 30)
    assert str(odd) == "101111011011011022120100121111"
    even = output_3adic(v, convergent_denominators(LOG_RATIO, 16, 0), 30)
    assert str(even) == "221222212212212210101221120000"


def test_output_3adic_not_stabilizing():
    with pytest.raises(NotStabilizing) as err:
        output_3adic(sturmian_stream(LOG_RATIO), [1], 5)
    assert err.value.reached == 0


def test_output_3adic_rejects_unsorted_indices():
    with pytest.raises(InputError):
        output_3adic(sturmian_stream(LOG_RATIO), [8, 3], 2)


@pytest.mark.parametrize("row", PREFIX_ROWS, ids=[str(r[0]) for r in PREFIX_ROWS])
def test_prefix_rows(row):
    l, word, t0, c, res, digits = row
    got = table1_row(sturmian_stream(LOG_RATIO), l)
    assert got.cells() == [str(l), word, t0, c, "(" + ",".join(map(str, res)) + ")", digits]


def test_prefix_row_first_digit_tracks_parity():
    # 1c_alpha has no factor 00, so the first digit minus one is the parity digit
    v = sturmian_stream(LOG_RATIO)
    for l in range(1, 12):
        row = table1_row(v, l)
        assert int(row.digits[0]) - 1 == v.digit(l - 1)


def test_search_index_sequences():
    v = sturmian_stream(LOG_RATIO)
    got = search_index_sequences(v, {
        "odd": convergent_denominators(LOG_RATIO, 16, 1),
        "all": list(range(1, 200)),
    }, 20)
    by_name = {c.name: c for c in got}
    assert by_name["odd"].stable
    assert not by_name["all"].stable
    assert arithmetic_indices(3, 5, 4) == [3, 8, 13, 18]

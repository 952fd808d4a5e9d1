"""Tests for the parameter solver and its ordering primitives.

Independent oracles: the family edge has the closed form -2^(1/(ell-1));
the period-3 superstable parameter is the real root of c^3+2c^2+c+1; the
period-doubling limit is pinned by the superstable cascade (tested at
acceptance depth separately).
"""

import gmpy2
import pytest

from kneadlab.errors import (
    AdmissibilityViolation,
    RuleViolation,
    UndecidedSymbol,
)
from kneadlab.extprec import working_precision
from kneadlab.kneading import (
    KneadingMap,
    constant_map,
    cutting_times,
    feigenbaum_map,
    fibonacci_map,
    kneading_sequence_from_Q,
)
from kneadlab.orbits import UnicriticalMap
from kneadlab.solver import (
    PrecisionPolicy,
    c_min,
    parity_lex_compare,
    sign_itinerary,
    solve_parameter,
)


def period3_superstable(bits=512):
    """Real root of c^3 + 2c^2 + c + 1 (where f^3(0) = 0 for ell = 2)."""
    with working_precision(bits):
        def p(c):
            return ((c + 2) * c + 1) * c + 1

        lo, hi = gmpy2.mpfr("-1.8"), gmpy2.mpfr("-1.7")
        assert p(lo) < 0 < p(hi)
        for _ in range(bits + 8):
            m = (lo + hi) / 2
            if p(m) < 0:
                lo = m
            else:
                hi = m
        return (lo + hi) / 2


class TestCMin:
    def test_ell2_is_minus_two(self):
        with working_precision(256):
            assert abs(c_min(2, 256) + 2) < gmpy2.exp2(-200)

    def test_ell4_closed_form(self):
        with working_precision(256):
            want = -gmpy2.rootn(gmpy2.mpfr(2), 3)
            assert abs(c_min(4, 256) - want) < gmpy2.exp2(-200)

    def test_residual_small_across_ell(self):
        for ell in (2, 4, 6, 8):
            with working_precision(192):
                c = c_min(ell, 192)
                u = c**ell + c
                assert abs(u**ell + c - u) < gmpy2.exp2(-96)

    def test_odd_ell_rejected(self):
        with pytest.raises(RuleViolation):
            c_min(3, 128)


class TestSignItinerary:
    def test_cheb_symbols_and_margins(self):
        fmap = UnicriticalMap(2, gmpy2.mpfr(-2, 128), 128)
        it = sign_itinerary(fmap, 4)
        assert it.symbols == (0, 1, 1, 1)
        assert all(m == 2 for m in it.margins)
        assert all(it.decided)

    def test_superstable_orbit_undecided_where_zero(self):
        fmap = UnicriticalMap(2, gmpy2.mpfr(-1, 128), 128)
        it = sign_itinerary(fmap, 4)
        assert it.decided == (True, False, True, False)
        assert it.margins[1] == 0 and it.margins[3] == 0

    def test_near_period3_needs_precision(self):
        c = period3_superstable() + gmpy2.exp2(-40)
        it64 = sign_itinerary(UnicriticalMap(2, gmpy2.mpfr(c, 64), 64), 3)
        assert not it64.decided[2]
        it256 = sign_itinerary(UnicriticalMap(2, gmpy2.mpfr(c, 256), 256), 3)
        assert it256.decided[2]
        assert it256.symbols == (0, 1, 0)


class TestParityLexCompare:
    def test_flip_after_one_zero(self):
        r = parity_lex_compare((0, 1, 1), (0, 1, 0))
        assert r.order == -1 and r.index == 3 and r.flipped

    def test_equal_through_prefix(self):
        assert parity_lex_compare((0, 1), (0, 1, 1)).order == 0

    def test_unflipped_at_first_symbol(self):
        r = parity_lex_compare((0, 0), (1, 0))
        assert r.order == -1 and r.index == 1 and not r.flipped

    def test_undecided_raises(self):
        with pytest.raises(UndecidedSymbol):
            parity_lex_compare((0, 1, 1), (0, 1, 0), a_decided=(True, False, True))

    def test_undecided_after_difference_ignored(self):
        r = parity_lex_compare((0, 1), (1, 1), a_decided=(True, False), b_decided=(True, True))
        assert r.order == -1 and r.index == 1


class TestSolveParameter:
    def test_cheb_brackets_minus_two(self):
        res = solve_parameter(
            2, constant_map(0), 10, PrecisionPolicy(start_bits=256, target_bits=96)
        )
        with working_precision(256):
            assert res.c_lo <= -2 <= res.c_hi
            assert res.width() < gmpy2.exp2(-96)
        assert res.matched_depth == 11

    def test_fibonacci_ell2_regression(self):
        res = solve_parameter(2, fibonacci_map(2), 16, PrecisionPolicy(start_bits=128, target_bits=80))
        with working_precision(128):
            assert abs(res.midpoint() + gmpy2.mpfr("1.8705286321646448")) < gmpy2.mpfr("1e-9")

    def test_feigenbaum_window_regression(self):
        res = solve_parameter(2, feigenbaum_map(), 12, PrecisionPolicy(start_bits=256, target_bits=60))
        with working_precision(256):
            assert abs(res.midpoint() + gmpy2.mpfr("1.4011551890920506")) < gmpy2.mpfr("1e-8")

    def test_higher_precision_bracket_contained(self):
        a = solve_parameter(2, fibonacci_map(2), 10, PrecisionPolicy(start_bits=128, target_bits=80))
        b = solve_parameter(2, fibonacci_map(2), 10, PrecisionPolicy(start_bits=256, target_bits=80))
        with working_precision(256):
            assert a.c_lo <= b.c_lo and b.c_hi <= a.c_hi

    def test_feigenbaum_closest_return_squeeze(self):
        # |f^{S_K}(0)| strictly decreases in K along the cascade
        vals = []
        for K in (6, 8, 10):
            res = solve_parameter(2, feigenbaum_map(), K, PrecisionPolicy(start_bits=256, target_bits=80))
            fmap = res.fmap()
            with working_precision(256):
                v = gmpy2.mpfr(0)
                for _ in range(1 << K):
                    v = fmap.step(v)
                vals.append(abs(v))
        assert vals[0] > vals[1] > vals[2]

    def test_solved_itinerary_matches_target_prefix(self):
        res = solve_parameter(2, fibonacci_map(2), 10, PrecisionPolicy(start_bits=128, target_bits=80))
        S_K = res.matched_depth
        seq = kneading_sequence_from_Q(fibonacci_map(2), S_K)
        it = sign_itinerary(res.fmap(), S_K)
        for j in range(S_K):
            if it.decided[j]:
                assert it.symbols[j] == seq.symbol(j + 1)

    def test_inadmissible_table_rejected(self):
        bad = KneadingMap(rule="explicit", table=(0, 0, 2, 2, 4, 5, 1, 1))
        with pytest.raises(AdmissibilityViolation) as ei:
            solve_parameter(2, bad, 7)
        assert ei.value.index == 6

    def test_finite_table_brackets_prefix_window(self):
        # a finite table constrains only its own prefix; the solve must
        # return a bracket whose endpoints realize that prefix exactly
        short = KneadingMap(rule="explicit", table=(0, 0, 1, 1))
        res = solve_parameter(2, short, 3, PrecisionPolicy(start_bits=128, target_bits=80))
        S_K = cutting_times(short, 3).S(3)
        seq = kneading_sequence_from_Q(short, S_K)
        with working_precision(128):
            for c in (res.c_lo, res.c_hi):
                it = sign_itinerary(UnicriticalMap(2, c, 128), S_K)
                for j in range(S_K):
                    if it.decided[j]:
                        assert it.symbols[j] == seq.symbol(j + 1)

    def test_json_fields_are_decimal_strings(self):
        res = solve_parameter(2, fibonacci_map(2), 8, PrecisionPolicy(start_bits=128, target_bits=60))
        d = res.to_json_dict()
        assert set(d) == {"ell", "c_lo", "c_hi", "matched_depth", "precision_bits"}
        assert isinstance(d["c_lo"], str) and "e" in d["c_lo"]
        assert d["ell"] == 2 and d["precision_bits"] == 128

    def test_bad_policy_rejected(self):
        with pytest.raises(RuleViolation):
            solve_parameter(2, fibonacci_map(2), 8, PrecisionPolicy(start_bits=64, target_bits=60))

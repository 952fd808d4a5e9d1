"""Tests for extended-precision orbit computation.

Oracle values are closed forms: the ell = 2, c = -2 map conjugates to
x -> 2cos(2 arccos(x/2)), so its closest precritical points are nested
radicals and its repelling fixed point is exactly 2.
"""

import random

import gmpy2
import pytest

from kneadlab.errors import EscapeError, NoRootError, RuleViolation
from kneadlab.extprec import working_precision
from kneadlab.kneading import constant_map, cutting_times, feigenbaum_map, fibonacci_map
from kneadlab.orbits import (
    D_interval,
    DerivativeAlong,
    UnicriticalMap,
    closest_precritical,
    critical_orbit,
    derivative_along,
    detect_periodic_interval,
    iterate,
    orbit_samples,
    repelling_fixed_point,
)

BITS = 256


def cheb_map(bits=BITS):
    return UnicriticalMap(2, gmpy2.mpfr(-2, bits), bits)


def cheb_ladder(k_max=3, bits=BITS):
    S = cutting_times(constant_map(0), k_max + 1)
    return closest_precritical(cheb_map(bits), S, k_max)


def nested_radical_zetas(bits=320):
    """zeta_0..zeta_2 for the c = -2 map: -sqrt(2), -sqrt(2-sqrt(2)),
    -sqrt(2-sqrt(2+sqrt(2)))."""
    with working_precision(bits):
        two = gmpy2.mpfr(2)
        z0 = -gmpy2.sqrt(two)
        z1 = -gmpy2.sqrt(two - gmpy2.sqrt(two))
        z2 = -gmpy2.sqrt(two - gmpy2.sqrt(two + gmpy2.sqrt(two)))
        return z0, z1, z2


class TestIterate:
    def test_bounded_point(self):
        r = iterate(cheb_map(), gmpy2.mpfr("0.5"), 3)
        assert not r.escaped
        assert r.value == gmpy2.mpfr("-0.87109375")

    def test_escape_reports_step(self):
        r = iterate(cheb_map(), gmpy2.mpfr(3), 5)
        assert r.escaped
        assert r.escape_step == 1

    def test_zero_steps_is_identity(self):
        r = iterate(cheb_map(), gmpy2.mpfr("0.25"), 0)
        assert r.value == gmpy2.mpfr("0.25")
        assert not r.escaped


class TestCriticalOrbit:
    def test_cheb_orbit_values_and_signs(self):
        orbit = critical_orbit(cheb_map(), 6)
        assert [float(orbit.value(n)) for n in range(1, 7)] == [-2, 2, 2, 2, 2, 2]
        assert [orbit.sign(n) for n in range(1, 7)] == [-1, 1, 1, 1, 1, 1]

    def test_escaping_parameter_raises(self):
        fmap = UnicriticalMap(2, gmpy2.mpfr(-3, BITS), BITS)
        with pytest.raises(EscapeError) as ei:
            critical_orbit(fmap, 10)
        assert ei.value.step == 2

    def test_recompute_check(self):
        fmap = UnicriticalMap(2, gmpy2.mpfr("-1.8", BITS), BITS)
        orbit = critical_orbit(fmap, 40)
        assert orbit.recompute_check([1, 7, 19, 40])

    def test_orbit_samples_streams_requested_indices(self):
        got = orbit_samples(cheb_map(), [1, 2, 5])
        assert float(got[1]) == -2 and float(got[2]) == 2 and float(got[5]) == 2

    def test_csv_has_header_and_rows(self):
        orbit = critical_orbit(cheb_map(), 3)
        lines = orbit.to_csv().splitlines()
        assert lines[0] == "n,f_n_0,sign"
        assert lines[1].startswith("1,-2")


class TestDerivativeAlong:
    def test_hand_chain_rule(self):
        # orbit of 0.5 under x^2 - 2: 0.5, -1.75, 1.0625;
        # Df^3(0.5) = (2*0.5)(2*-1.75)(2*1.0625) = -7.4375
        d = derivative_along(cheb_map(), gmpy2.mpfr("0.5"), 3)
        assert d.sign == -1
        with working_precision(BITS):
            assert abs(gmpy2.exp(d.log_abs) - gmpy2.mpfr("7.4375")) < gmpy2.exp2(-200)
        assert d.zero_step is None

    def test_zero_factor_flagged(self):
        d = derivative_along(cheb_map(), gmpy2.mpfr(0), 3)
        assert d.sign == 0
        assert d.log_abs == gmpy2.mpfr("-inf")
        assert d.zero_step == 0

    def test_zero_steps(self):
        d = derivative_along(cheb_map(), gmpy2.mpfr("0.3"), 0)
        assert d == DerivativeAlong(1, gmpy2.mpfr(0), None)

    def test_matches_finite_differences(self):
        bits = 512
        rng = random.Random(20260823)
        h = gmpy2.mpfr(1, bits)
        for ell, c in [(2, "-2"), (2, "-1.8")]:
            fmap = UnicriticalMap(ell, gmpy2.mpfr(c, bits), bits)
            with working_precision(bits):
                step = gmpy2.exp2(-(bits // 3))
                for _ in range(5):
                    x = gmpy2.mpfr(rng.uniform(-0.9, 0.9), bits)
                    n = rng.randint(1, 30)
                    d = derivative_along(fmap, x, n)
                    if d.sign == 0:
                        continue
                    fp = iterate(fmap, x + step, n).value
                    fm = iterate(fmap, x - step, n).value
                    fd = (fp - fm) / (2 * step)
                    exact = d.sign * gmpy2.exp(d.log_abs)
                    assert abs(fd - exact) <= abs(exact) * gmpy2.mpfr("1e-6")


class TestRepellingFixedPoint:
    def test_cheb_is_exactly_two(self):
        assert repelling_fixed_point(cheb_map()) == gmpy2.mpfr(2)

    def test_is_fixed_and_repelling(self):
        fmap = UnicriticalMap(4, gmpy2.mpfr("-1.1", BITS), BITS)
        x = repelling_fixed_point(fmap)
        with working_precision(BITS):
            assert abs(fmap.step(x) - x) < gmpy2.exp2(-200)
            assert abs(fmap.dstep(x)) > 1


class TestClosestPrecritical:
    def test_matches_nested_radicals(self):
        ladder = cheb_ladder(3)
        z0, z1, z2 = nested_radical_zetas()
        with working_precision(320):
            for k, want in [(0, z0), (1, z1), (2, z2)]:
                assert abs(ladder.zeta(k) - want) < gmpy2.mpfr("1e-60")

    def test_strict_ordering_toward_zero(self):
        ladder = cheb_ladder(4)
        for k in range(1, 5):
            assert ladder.zeta(k - 1) < ladder.zeta(k) < 0

    def test_mirror_and_residuals_and_witness(self):
        ladder = cheb_ladder(3)
        for k in range(4):
            assert ladder.mirror(k) == -ladder.zeta(k)
            assert ladder.residual(k) < gmpy2.exp2(-(BITS // 2))
            assert ladder.entries[k].witness_checked

    def test_wrong_cutting_structure_raises(self):
        # c = -1.3 has orbit signs -,+,-,+,...; claiming S = (1,2,3)
        # puts equal signs at both candidate endpoints for k = 2
        fmap = UnicriticalMap(2, gmpy2.mpfr("-1.3", BITS), BITS)
        S = cutting_times(constant_map(0), 3)
        with pytest.raises(NoRootError):
            closest_precritical(fmap, S, 2)

    def test_csv_shape(self):
        ladder = cheb_ladder(2)
        lines = ladder.to_csv().splitlines()
        assert lines[0] == "k,S_k,zeta_k,residual"
        assert len(lines) == 4


class TestDInterval:
    def test_cutting_time_endpoints_follow_recursion(self):
        # at a cutting time S_k the interval is [f^{S_k}(0), f^{S_{Q(k)}}(0)]
        bits = 192
        fmap = UnicriticalMap(2, gmpy2.mpfr("-1.401155189092", bits), bits)
        Q = feigenbaum_map()
        S = cutting_times(Q, 5)
        orbit = critical_orbit(fmap, S.S(5))
        for k in range(2, 6):
            d = D_interval(orbit, S, S.S(k))
            assert d.is_cutting
            assert d.raw == (orbit.value(S.S(k)), orbit.value(S.S(Q.q(k))))

    def test_noncutting_interval_nests_in_parent(self):
        bits = 192
        fmap = UnicriticalMap(2, gmpy2.mpfr("-1.401155189092", bits), bits)
        S = cutting_times(feigenbaum_map(), 5)
        orbit = critical_orbit(fmap, S.S(5))
        for n in range(2, 33):
            d = D_interval(orbit, S, n)
            if d.is_cutting or d.beta_n < 2:
                continue
            parent = D_interval(orbit, S, d.beta_n)
            assert parent.lo <= d.lo and d.hi <= parent.hi

    def test_out_of_range_n(self):
        orbit = critical_orbit(cheb_map(), 5)
        S = cutting_times(constant_map(0), 4)
        with pytest.raises(RuleViolation):
            D_interval(orbit, S, 1)


class TestDetectPeriodicInterval:
    def test_attracting_two_cycle_found(self):
        fmap = UnicriticalMap(2, gmpy2.mpfr(-1, BITS), BITS)
        rep = detect_periodic_interval(fmap, 2)
        assert rep.verdict and not rep.inconclusive

    def test_cheb_has_no_periodic_interval(self):
        rep = detect_periodic_interval(cheb_map(), 2)
        assert not rep.verdict
        assert rep.witness and "overlap" in rep.witness

    def test_feigenbaum_parameter_renormalizes(self):
        bits = 192
        fmap = UnicriticalMap(2, gmpy2.mpfr("-1.4011551890920506", bits), bits)
        rep = detect_periodic_interval(fmap, 2, j_max=40)
        assert rep.verdict and not rep.inconclusive

"""End-to-end acceptance checks for the realization and diagnostics pipeline.

Each test exercises one headline guarantee, emits exactly one PASS/FAIL
line, and asserts the same condition it prints. Reference values come from
sources independent of the code under test: closed-form cutting-time
recurrences, a Newton-based superstable-cascade continuation for the
doubling parameter, nested radicals and the angle-doubling conjugacy on
the full-height map, and symmetric finite differences for derivatives.
"""

import random
from dataclasses import dataclass

import gmpy2
import pytest

from kneadlab.cplane import poincare_partial
from kneadlab.diagnostics import (
    branch_bound_L,
    derivative_band,
    fib_divergence_report,
    gap_kappa,
    scaling_ratios,
    verify_monotone_neighborhood,
    verify_no2cpp,
)
from kneadlab.errors import ClosestReturnViolation
from kneadlab.extprec import working_precision
from kneadlab.kneading import (
    CuttingTimes,
    KneadingMap,
    check_admissible,
    constant_map,
    cutting_times,
    feigenbaum_map,
    fibonacci_map,
)
from kneadlab.orbits import (
    OrbitTable,
    PrecriticalLadder,
    UnicriticalMap,
    closest_precritical,
    critical_orbit,
    derivative_along,
    iterate,
)
from kneadlab.solver import PrecisionPolicy, SolveResult, solve_parameter

SEED = 20260823


def _line(label, ok, detail=""):
    """Print the single verdict line for one criterion, then assert it."""
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"acceptance {label}: {status}{suffix}")
    assert ok, f"acceptance {label} failed: {detail}"


@dataclass(frozen=True)
class Realization:
    """A solved parameter bundled with the combinatorial data used to find it."""

    Q: KneadingMap
    S: CuttingTimes
    res: SolveResult
    fmap: UnicriticalMap
    ladder: PrecriticalLadder | None = None
    orbit: OrbitTable | None = None


@pytest.fixture(scope="module")
def cheb():
    Q = constant_map(0)
    res = solve_parameter(2, Q, 10, PrecisionPolicy(start_bits=256, target_bits=96))
    S = cutting_times(Q, 10)
    fmap = res.fmap()
    return Realization(Q, S, res, fmap, ladder=closest_precritical(fmap, S, 3))


@pytest.fixture(scope="module")
def fib2_deep():
    Q = fibonacci_map(2)
    res = solve_parameter(2, Q, 22, PrecisionPolicy(start_bits=512, target_bits=160))
    S = cutting_times(Q, 22)
    fmap = res.fmap()
    ladder = closest_precritical(fmap, S, 19, witness_samples=128)
    return Realization(Q, S, res, fmap, ladder, critical_orbit(fmap, S.S(10)))


@pytest.fixture(scope="module")
def fib4_deep():
    Q = fibonacci_map(2)
    res = solve_parameter(4, Q, 22, PrecisionPolicy(start_bits=256, target_bits=120))
    S = cutting_times(Q, 22)
    fmap = res.fmap()
    return Realization(Q, S, res, fmap, closest_precritical(fmap, S, 19, witness_samples=128))


@pytest.fixture(scope="module")
def fib6_deep():
    Q = fibonacci_map(2)
    res = solve_parameter(6, Q, 22, PrecisionPolicy(start_bits=256, target_bits=80))
    S = cutting_times(Q, 22)
    fmap = res.fmap()
    return Realization(Q, S, res, fmap, closest_precritical(fmap, S, 18, witness_samples=128))


@pytest.fixture(scope="module")
def fib8_deep():
    Q = fibonacci_map(2)
    res = solve_parameter(8, Q, 22, PrecisionPolicy(start_bits=256, target_bits=80))
    return Realization(Q, cutting_times(Q, 22), res, res.fmap())


@pytest.fixture(scope="module")
def feig_deep():
    Q = feigenbaum_map()
    res = solve_parameter(2, Q, 21, PrecisionPolicy(start_bits=512, target_bits=52))
    S = cutting_times(Q, 21)
    fmap = res.fmap(192)
    return Realization(Q, S, res, fmap, closest_precritical(fmap, S, 20, witness_samples=16))


@pytest.fixture(scope="module")
def random_solved():
    rng = random.Random(SEED)
    rules = [
        fibonacci_map(1),
        fibonacci_map(2),
        fibonacci_map(3),
        fibonacci_map(4),
        constant_map(0),
        constant_map(1),
        constant_map(2),
        feigenbaum_map(),
    ]
    out = []
    for _ in range(20):
        ell = rng.choice((2, 4, 6, 8))
        Q = rng.choice(rules)
        res = solve_parameter(ell, Q, 6, PrecisionPolicy(start_bits=128, target_bits=40))
        out.append((ell, Q, res))
    return out


def test_01_cutting_times_match_closed_forms():
    fib = cutting_times(fibonacci_map(2), 25)
    expected = [1, 2]
    while len(expected) < 26:
        expected.append(expected[-1] + expected[-2])
    fib_ok = list(fib.values) == expected
    dbl = cutting_times(feigenbaum_map(), 25)
    dbl_ok = list(dbl.values) == [2**k for k in range(26)]
    _line(
        "01 cutting times match closed forms",
        fib_ok and dbl_ok,
        f"S_25: fibonacci {fib.S(25)}, doubling {dbl.S(25)}",
    )


def _sample_tables(rng, count):
    """Explicit tables with non-decreasing Q; monotonicity gives termwise
    dominance of the shifted tails, so none of them can be inadmissible."""
    pools = ((0, 0, 1), (0, 1, 1), (0, 1), (0, 1, 1, 2))
    tables = []
    for i in range(count):
        tbl = []
        if i % 2 == 0:
            weights = pools[rng.randrange(len(pools))]
            q = 0
            for k in range(1, 201):
                q = min(q + rng.choice(weights), k - 1)
                tbl.append(q)
        else:
            lag = rng.randint(1, 4)
            for k in range(1, 201):
                lag = min(6, max(1, lag + rng.choice((-1, 0, 0, 1))))
                tbl.append(max(0, k - lag))
        tables.append(tuple(tbl))
    return tables


def test_02_sampled_tables_recurse_exactly_to_depth_200():
    rng = random.Random(SEED)
    problems = []
    for tbl in _sample_tables(rng, 100):
        Q = KneadingMap("explicit", table=tbl)
        rep = check_admissible(Q, 200)
        if rep.verdict == "fail":
            problems.append(f"admissibility violation at {rep.first_violation}")
            continue
        expected = [1]
        for k in range(1, 201):
            expected.append(expected[-1] + expected[tbl[k - 1]])
        if list(cutting_times(Q, 200).values) != expected:
            problems.append("recursion mismatch")
            break
    _line(
        "02 sampled explicit tables recurse exactly to depth 200",
        not problems,
        problems[0] if problems else "100 tables, all admissible, integer recursion exact",
    )


def _superstable_cascade(k_max=14, bits=320):
    """Accumulation point of the superstable period-2^k parameters of
    x^2 + c, found by Newton continuation and Aitken extrapolation.

    g_k(c) = f_c^(2^k)(0) is polynomial in c; dg/dc accumulates through
    u <- 2 x u + 1 along the orbit. This shares no code path with the
    itinerary bisection it is used to check.
    """
    with gmpy2.context(precision=bits):
        roots = [gmpy2.mpfr(-1)]
        for k in range(2, k_max + 1):
            n = 2**k
            if len(roots) >= 2:
                c = roots[-1] + (roots[-1] - roots[-2]) / gmpy2.mpfr("4.669")
            else:
                c = gmpy2.mpfr("-1.31")
            for _ in range(60):
                x = gmpy2.mpfr(0)
                u = gmpy2.mpfr(0)
                for _step in range(n):
                    u = 2 * x * u + 1
                    x = x * x + c
                if u == 0:
                    break
                step = x / u
                c = c - step
                if abs(step) < gmpy2.exp2(-(bits - 40)):
                    break
            roots.append(c)
        d1 = roots[-1] - roots[-2]
        d0 = roots[-2] - roots[-3]
        return roots[-1] - d1 * d1 / (d1 - d0)


def test_03_doubling_solve_matches_superstable_cascade(feig_deep):
    target = _superstable_cascade()
    diff = abs(feig_deep.res.midpoint() - target)
    _line(
        "03 doubling-rule solve matches the superstable cascade limit",
        diff < gmpy2.mpfr("1e-15"),
        f"|midpoint - cascade limit| = {float(diff):.3e}",
    )


def test_04_full_height_parameter_and_radical_ladder(cheb):
    with working_precision(300):
        r2 = gmpy2.sqrt(2)
        want = (-r2, -gmpy2.sqrt(2 - r2), -gmpy2.sqrt(2 - gmpy2.sqrt(2 + r2)))
    mid_err = abs(cheb.res.midpoint() + 2)
    problems = []
    if not mid_err < gmpy2.mpfr("1e-20"):
        problems.append(f"midpoint error {float(mid_err):.3e}")
    for k, w in enumerate(want):
        err = abs(cheb.ladder.zeta(k) - w)
        if not err < gmpy2.mpfr("1e-25"):
            problems.append(f"zeta_{k} error {float(err):.3e}")
    _line(
        "04 full-height solve hits -2 and the nested-radical ladder",
        not problems,
        problems[0] if problems else f"midpoint error {float(mid_err):.3e}, radicals to 1e-25",
    )


def test_05_closest_return_placement_to_depth_20(fib2_deep, fib4_deep, feig_deep):
    problems = []
    kappas = []
    for name, real in (("fib ell=2", fib2_deep), ("fib ell=4", fib4_deep), ("doubling", feig_deep)):
        try:
            rep = gap_kappa(real.fmap, real.ladder, real.S, real.Q, 21)
        except ClosestReturnViolation as exc:
            problems.append(f"{name}: {exc}")
            continue
        ks = [row[0] for row in rep.rows]
        if ks != list(range(1, 21)):
            problems.append(f"{name}: rows cover {ks[:3]}..{ks[-1:]}")
        if not rep.kappa > 0:
            problems.append(f"{name}: kappa = {float(rep.kappa)}")
        kappas.append(f"{name} kappa={float(rep.kappa):.2e}")
    _line(
        "05 closest-return placement holds for all k <= 20",
        not problems,
        "; ".join(problems or kappas),
    )


def test_06_scaling_exponent_increases_with_degree(fib4_deep, fib6_deep, fib8_deep):
    lam = {}
    problems = []
    for ell, real in ((4, fib4_deep), (6, fib6_deep), (8, fib8_deep)):
        rep = scaling_ratios(real.fmap, real.S, 20)
        lam[ell] = rep.lambda_hat
        if not 0 < rep.lambda_hat < 1:
            problems.append(f"ell={ell}: lambda_hat {float(rep.lambda_hat)}")
        if not rep.cauchy_width < gmpy2.mpfr("1e-3"):
            problems.append(f"ell={ell}: cauchy width {float(rep.cauchy_width):.2e}")
    if not lam[4] < lam[6] < lam[8]:
        problems.append("ordering violated")
    _line(
        "06 scaling exponent increases with the degree",
        not problems,
        "; ".join(problems)
        or "lambda_hat = " + ", ".join(f"{float(lam[e]):.5f}" for e in (4, 6, 8)),
    )


def test_07_ladder_derivatives_stay_in_band(fib6_deep):
    band = derivative_band(fib6_deep.fmap, fib6_deep.ladder, fib6_deep.S, 18)
    ratio = band.band_ratio
    ok = band.band_start == 9 and gmpy2.is_finite(ratio) and 1 <= ratio < 100
    _line(
        "07 ladder derivatives stay in a narrow band",
        ok,
        f"max/min over k in [9, 18] = {float(ratio):.6f}",
    )


def test_08_divergence_criterion_splits_parameter_triples():
    S = cutting_times(fibonacci_map(2), 20)
    got = []
    for sigma, lam in ((1.618, 0.9), (1.618, 0.8), (2, 0.85)):
        rep = fib_divergence_report(sigma, lam, S, 20)
        got.append((rep.diverges, rep.terms_growing))
    _line(
        "08 divergence criterion splits the parameter triples",
        got == [(True, True), (False, False), (True, False)],
        f"(diverges, terms_growing) = {got}",
    )


def _doubling_level_sum(phi, delta, n):
    """Level-n backward sum for x^2 - 2 via the conjugacy x = 2 cos(theta):
    the 2^n preimages of 2 cos(phi) are 2 cos((phi + 2 pi j) / 2^n) and the
    n-step derivative there has modulus 2^n |sin(phi)| / |sin(theta_j)|."""
    with working_precision(256):
        phi = gmpy2.mpfr(phi)
        two_pi = 2 * gmpy2.const_pi()
        count = 2**n
        base = abs(gmpy2.sin(phi))
        total = gmpy2.mpfr(0)
        for j in range(count):
            theta = (phi + two_pi * j) / count
            total += (abs(gmpy2.sin(theta)) / (count * base)) ** delta
        return total


def test_09_poincare_partials_match_angle_doubling():
    fmap = UnicriticalMap(2, gmpy2.mpfr(-2, 256), 256)
    with working_precision(256):
        bases = ((gmpy2.acos(gmpy2.mpfr(1) / 2), "z=1"), (gmpy2.mpfr(1), "z=2cos1"))
    problems = []
    worst = gmpy2.mpfr(0)
    cum = {}
    for phi, name in bases:
        with working_precision(256):
            z = 2 * gmpy2.cos(phi)
        for delta in (1, 2):
            summ = poincare_partial(fmap, z, delta, 12, prune_eps=0)
            if summ.level_sums[0] != 1:
                problems.append(f"{name} delta={delta}: level 0 is {summ.level_sums[0]}")
            for n in range(1, 13):
                want = _doubling_level_sum(phi, delta, n)
                rel = abs(summ.level_sums[n] - want) / want
                worst = max(worst, rel)
                if not rel < gmpy2.mpfr("1e-12"):
                    problems.append(f"{name} delta={delta} level {n}: rel {float(rel):.2e}")
            cum[(name, delta)] = summ.cumulative[12]
    for delta in (1, 2):
        ratio = cum[("z=1", delta)] / cum[("z=2cos1", delta)]
        if not gmpy2.mpfr("0.1") < ratio < 10:
            problems.append(f"delta={delta}: base-point ratio {float(ratio):.3f}")
    _line(
        "09 backward-orbit partial sums match the angle-doubling form",
        not problems,
        problems[0] if problems else f"worst relative gap {float(worst):.2e}",
    )


def test_10_interval_disjointness_and_monotone_branches(fib2_deep):
    n_max = fib2_deep.S.S(10)
    rep = verify_no2cpp(fib2_deep.fmap, fib2_deep.ladder, fib2_deep.orbit, fib2_deep.S, n_max)
    problems = []
    if rep.violations or rep.unresolved or rep.m0 != 0:
        problems.append(
            f"m0={rep.m0}, violations={len(rep.violations)}, unresolved={len(rep.unresolved)}"
        )
    for k in (6, 8, 10):
        m = verify_monotone_neighborhood(fib2_deep.fmap, fib2_deep.S, fib2_deep.Q, k)
        if m.skipped or m.verdict is not True:
            problems.append(f"k={k}: skipped={m.skipped}, verdict={m.verdict}")
        elif not (m.err_lo < gmpy2.mpfr("1e-20") and m.err_hi < gmpy2.mpfr("1e-20")):
            problems.append(
                f"k={k}: endpoint errors {float(m.err_lo):.2e}, {float(m.err_hi):.2e}"
            )
    _line(
        "10 tracked points stay disjoint and monotone branch images match",
        not problems,
        "; ".join(problems) or f"m0=0 through n={n_max}; branch endpoints to 1e-20",
    )


def test_11_derivatives_agree_with_finite_differences(fib2_deep):
    rng = random.Random(1120260823)
    problems = []
    worst = gmpy2.mpfr(0)
    for fmap, name in ((UnicriticalMap(2, gmpy2.mpfr(-2, 512), 512), "x^2 - 2"), (fib2_deep.fmap, "fib ell=2")):
        with working_precision(512):
            span = -fmap.c
            h = gmpy2.exp2(-80)
            for _ in range(10):
                x = gmpy2.mpfr(rng.uniform(-0.9, 0.9)) * span
                n = rng.randint(1, 30)
                d = derivative_along(fmap, x, n)
                exact = d.sign * gmpy2.exp(d.log_abs)
                fd = (iterate(fmap, x + h, n).value - iterate(fmap, x - h, n).value) / (2 * h)
                rel = abs(fd - exact) / abs(exact)
                worst = max(worst, rel)
                if not rel < gmpy2.mpfr("1e-6"):
                    problems.append(f"{name}: rel {float(rel):.2e} at n={n}")
    _line(
        "11 chain-rule derivatives agree with finite differences",
        not problems,
        problems[0] if problems else f"worst relative gap {float(worst):.2e}",
    )


def test_12_branch_derivative_bound_on_solved_samples(random_solved):
    exact = branch_bound_L(UnicriticalMap(2, gmpy2.mpfr(-2, 256), 256))
    problems = []
    if exact != 4:
        problems.append(f"full-height bound is {float(exact)}")
    for ell, Q, res in random_solved:
        fmap = UnicriticalMap(ell, gmpy2.mpfr(res.c_hi, 128), 128)
        L = branch_bound_L(fmap)
        if not L <= 2 * ell:
            problems.append(f"ell={ell} {Q.rule}: L = {float(L):.12f}")
    _line(
        "12 branch derivative bound L <= 2 ell holds on solved samples",
        not problems,
        problems[0] if problems else "bound exactly 4 at full height; 20 samples within 2 ell",
    )

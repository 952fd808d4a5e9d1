"""Quantitative no-acip diagnostics and structural verifiers for solved maps.

Every function here is pure: it consumes a solved map together with its
cutting times, critical orbit, and precritical ladder, and emits a report
dataclass with CSV and JSON verdict views. Placement of orbit points among
the precritical points is centralized in one helper shared by gap_kappa and
verify_no2cpp so the two diagnostics cannot disagree silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2

from .errors import ClosestReturnViolation, PrecisionExhausted, RuleViolation
from .extprec import to_decimal, working_precision
from .kneading import CuttingTimes, KneadingMap, check_strict_hofbauer
from .orbits import (
    D_interval,
    OrbitTable,
    PrecriticalLadder,
    UnicriticalMap,
    derivative_along,
    iterate,
    repelling_fixed_point,
)


def _verdict_json(name: str, verdict, witness) -> dict:
    return {"name": name, "verdict": verdict, "witness": witness}


# ---------------------------------------------------------------------------
# scaling ratios and growth rates


@dataclass(frozen=True)
class ScalingReport:
    """Successive critical-orbit return ratios r_k = |f^{S_{k+1}}(0)| / |f^{S_k}(0)|."""

    ratios: tuple
    lambda_hat: gmpy2.mpfr
    cauchy_width: gmpy2.mpfr
    tail_start: int
    bits: int

    def to_csv(self) -> str:
        lines = ["k,r_k"]
        for k, r in enumerate(self.ratios):
            lines.append(f"{k},{to_decimal(r, self.bits)}")
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return _verdict_json(
            "scaling_ratios",
            bool(0 < self.lambda_hat < 1),
            {
                "lambda_hat": to_decimal(self.lambda_hat, self.bits),
                "cauchy_width": to_decimal(self.cauchy_width, self.bits),
            },
        )


def scaling_ratios(fmap: UnicriticalMap, S: CuttingTimes, K: int) -> ScalingReport:
    """Return ratios r_0..r_K; lambda_hat is the average of the last K/4 of
    them, with the max-min spread of that tail as a Cauchy-width figure."""
    if K < 4 or K + 1 > S.K:
        raise RuleViolation("need cutting times through K+1 with K >= 4")
    bits = fmap.precision_bits
    with working_precision(bits):
        values = {}
        v = gmpy2.mpfr(0)
        wanted = {S.S(k) for k in range(K + 2)}
        for n in range(1, S.S(K + 1) + 1):
            v = fmap.step(v)
            if n in wanted:
                if v == 0:
                    raise RuleViolation(f"orbit value exactly zero at n={n}: superstable parameter")
                values[n] = v
        ratios = []
        for k in range(K + 1):
            ratios.append(abs(values[S.S(k + 1)]) / abs(values[S.S(k)]))
        tail_n = max(2, K // 4)
        tail = ratios[-tail_n:]
        lam = sum(tail) / len(tail)
        width = max(tail) - min(tail)
        return ScalingReport(tuple(ratios), lam, width, K + 1 - tail_n, bits)


def sigma_hat(S: CuttingTimes, K: int):
    """Growth rate of the cutting times: exp of the least-squares slope of
    log S_k over the top half of 0..K."""
    if K < 4 or K > S.K:
        raise RuleViolation("need cutting times through K with K >= 4")
    ks = list(range(K // 2, K + 1))
    with working_precision(64):
        ys = [gmpy2.log(gmpy2.mpfr(S.S(k))) for k in ks]
        n = len(ks)
        mean_x = gmpy2.mpfr(sum(ks)) / n
        mean_y = sum(ys) / n
        num = sum((k - mean_x) * (y - mean_y) for k, y in zip(ks, ys))
        den = sum((k - mean_x) ** 2 for k in ks)
        return gmpy2.exp(num / den)


# ---------------------------------------------------------------------------
# derivative band at the precritical points


@dataclass(frozen=True)
class BandReport:
    """|Df^{S_k}(zeta_k)| for k <= K with a max/min summary over the top half."""

    values: tuple
    band_min: gmpy2.mpfr
    band_max: gmpy2.mpfr
    band_start: int
    bits: int

    @property
    def band_ratio(self):
        with working_precision(self.bits):
            return self.band_max / self.band_min

    def to_csv(self) -> str:
        lines = ["k,abs_deriv"]
        for k, v in enumerate(self.values):
            lines.append(f"{k},{to_decimal(v, self.bits)}")
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return _verdict_json(
            "derivative_band",
            bool(gmpy2.is_finite(self.band_ratio)),
            {
                "band_min": to_decimal(self.band_min, self.bits),
                "band_max": to_decimal(self.band_max, self.bits),
                "band_start": self.band_start,
            },
        )


def derivative_band(
    fmap: UnicriticalMap, ladder: PrecriticalLadder, S: CuttingTimes, K: int
) -> BandReport:
    if K > ladder.k_max or K > S.K:
        raise RuleViolation("ladder or cutting times too short for K")
    bits = fmap.precision_bits
    with working_precision(bits):
        vals = []
        for k in range(K + 1):
            d = derivative_along(fmap, ladder.zeta(k), S.S(k))
            vals.append(gmpy2.exp(d.log_abs))
        top = vals[K // 2 :]
        return BandReport(tuple(vals), min(top), max(top), K // 2, bits)


# ---------------------------------------------------------------------------
# divergence criterion arithmetic


@dataclass(frozen=True)
class DivergenceReport:
    """Verdict on sigma * lambda^4 vs 1 with the partial sums of S_n lambda^{4n}."""

    sigma: float
    lam: float
    sigma_lambda4: float
    diverges: bool
    rows: tuple  # (n, S_n, term, cumulative)
    terms_growing: bool

    def to_csv(self) -> str:
        lines = ["n,S_n,term,cumulative"]
        for n, s, t, c in self.rows:
            lines.append(f"{n},{s},{t!r},{c!r}")
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return _verdict_json(
            "fib_divergence",
            self.diverges,
            {"sigma_lambda4": self.sigma_lambda4, "terms_growing": self.terms_growing},
        )


def fib_divergence_report(sigma, lam, S: CuttingTimes, N: int) -> DivergenceReport:
    """Evaluate the divergence criterion sigma * lambda^4 > 1 and tabulate
    the partial sums of S_n * lambda^{4n} for n <= N."""
    sigma = float(sigma)
    lam = float(lam)
    if not 0 < lam < 1:
        raise RuleViolation("lambda must lie in (0, 1)")
    if N > S.K:
        raise RuleViolation("cutting times too short for N")
    rows = []
    cum = 0.0
    terms = []
    for n in range(N + 1):
        term = S.S(n) * lam ** (4 * n)
        cum += term
        terms.append(term)
        rows.append((n, S.S(n), term, cum))
    growing = len(terms) >= 6 and all(b > a for a, b in zip(terms[-6:], terms[-5:]))
    crit = sigma * lam**4
    return DivergenceReport(sigma, lam, crit, crit > 1, tuple(rows), growing)


# ---------------------------------------------------------------------------
# long-branched partial sums


@dataclass(frozen=True)
class PartialSumSeries:
    name: str
    rows: tuple  # (k, S_k, term, cumulative) as mpfr terms
    total: gmpy2.mpfr
    bits: int

    def to_csv(self) -> str:
        lines = ["k,S_k,term,cumulative"]
        for k, s, t, c in self.rows:
            lines.append(f"{k},{s},{to_decimal(t, self.bits)},{to_decimal(c, self.bits)}")
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return _verdict_json(
            self.name,
            bool(self.total > 0) if self.rows else None,
            {"terms": len(self.rows), "total": to_decimal(self.total, self.bits)},
        )


def longbranched_sum(
    fmap: UnicriticalMap,
    ladder: PrecriticalLadder,
    S: CuttingTimes,
    delta,
    K: int,
    exponent_sign: int = 1,
) -> PartialSumSeries:
    """Partial sums of S_k |zeta_k - zeta_{k+1}|^{±delta} for k < K."""
    if exponent_sign not in (1, -1):
        raise RuleViolation("exponent_sign must be +1 or -1")
    bits = fmap.precision_bits
    with working_precision(bits):
        delta = gmpy2.mpfr(delta)
        if not 0 < delta <= 2:
            raise RuleViolation("delta must lie in (0, 2]")
        if K > ladder.k_max or K > S.K:
            raise RuleViolation("ladder too short for K")
        rows = []
        cum = gmpy2.mpfr(0)
        for k in range(K):
            gap = abs(ladder.zeta(k) - ladder.zeta(k + 1))
            term = S.S(k) * gap ** (exponent_sign * delta)
            cum += term
            rows.append((k, S.S(k), term, cum))
        name = "longbranched_sum_plus" if exponent_sign == 1 else "longbranched_sum_minus"
        return PartialSumSeries(name, tuple(rows), cum, bits)


# ---------------------------------------------------------------------------
# placement of points among the precritical ladder (shared helper)


@dataclass(frozen=True)
class Placement:
    """x lies strictly between zeta_{index-1} and zeta_{index} on its side.

    side is -1 for the negative half, +1 for the mirrored positive half.
    index ranges 0..k_max+1; zeta_{-1} is taken to be minus the repelling
    fixed point, and index k_max+1 means between zeta_{k_max} and 0.
    """

    side: int
    index: int


def place_among_precritical(
    ladder: PrecriticalLadder, x, x_minus, eps
) -> Placement:
    """Locate x among the +-zeta grid; x_minus is -x_plus (the left end of
    the dynamical core). Raises ClosestReturnViolation on a tie within eps
    or when x falls outside the core."""
    if x == 0:
        raise ClosestReturnViolation("orbit point exactly zero")
    side = -1 if x < 0 else 1
    y = x if x < 0 else -x
    if y <= x_minus:
        raise ClosestReturnViolation("orbit point outside the dynamical core")
    lo, hi = 0, ladder.k_max + 1
    # find smallest m with y < zeta_m; zeta_{k_max+1} plays the role of 0
    while lo < hi:
        mid = (lo + hi) // 2
        if y < ladder.zeta(mid):
            hi = mid
        else:
            lo = mid + 1
    idx = lo
    for probe in (idx - 1, idx):
        if 0 <= probe <= ladder.k_max and abs(y - ladder.zeta(probe)) <= eps:
            raise ClosestReturnViolation(
                f"placement tie within eps at zeta_{probe}; resolution exhausted"
            )
    return Placement(side, idx)


# ---------------------------------------------------------------------------
# closest-return gap


@dataclass(frozen=True)
class GapReport:
    """Per-k distance from f^{S_k}(0) to the precritical point the
    closest-return law pairs it with; kappa is the minimum."""

    rows: tuple  # (k, q, side, gap)
    kappa: gmpy2.mpfr
    bits: int

    def to_csv(self) -> str:
        lines = ["k,Q_k_plus_1,side,gap"]
        for k, q, side, gap in self.rows:
            lines.append(f"{k},{q},{side},{to_decimal(gap, self.bits)}")
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return _verdict_json(
            "gap_kappa", bool(self.kappa > 0), {"kappa": to_decimal(self.kappa, self.bits)}
        )


def gap_kappa(
    fmap: UnicriticalMap,
    ladder: PrecriticalLadder,
    S: CuttingTimes,
    Q: KneadingMap,
    K: int,
) -> GapReport:
    """Gaps |f^{S_k}(0) -+ zeta_{Q(k+1)}| for 1 <= k < K, reflected to the
    mirror point when the return lands on the positive side. The law
    placement is asserted against the shared placement helper; disagreement
    raises ClosestReturnViolation."""
    if K > S.K:
        raise RuleViolation("cutting times too short for K")
    max_q = max(Q.q(k + 1) for k in range(1, K))
    if max_q > ladder.k_max:
        raise RuleViolation("ladder too short: placements reach zeta_%d" % max_q)
    bits = fmap.precision_bits
    with working_precision(bits):
        eps = gmpy2.exp2(-(bits // 2))
        x_minus = -repelling_fixed_point(fmap)
        wanted = {S.S(k): k for k in range(1, K)}
        returns = {}
        v = gmpy2.mpfr(0)
        for n in range(1, S.S(K - 1) + 1):
            v = fmap.step(v)
            if n in wanted:
                returns[wanted[n]] = v
        rows = []
        kappa = None
        for k in range(1, K):
            q = Q.q(k + 1)
            x = returns[k]
            placed = place_among_precritical(ladder, x, x_minus, eps)
            if placed.index != q:
                raise ClosestReturnViolation(
                    f"return k={k} placed at index {placed.index}, law expects {q}"
                )
            zq = ladder.zeta(q)
            gap = abs(x - zq) if placed.side < 0 else abs(x + zq)
            rows.append((k, q, placed.side, gap))
            if kappa is None or gap < kappa:
                kappa = gap
        return GapReport(tuple(rows), kappa, bits)


# ---------------------------------------------------------------------------
# almost saddle-node cascade


@dataclass(frozen=True)
class CascadeEntry:
    N: int
    d: int
    bracketed: bool  # whether some cutting time lies in (dN, (d+2)N)
    term: gmpy2.mpfr


@dataclass(frozen=True)
class CascadeReport:
    entries: tuple
    L: gmpy2.mpfr
    total: gmpy2.mpfr
    bits: int

    def to_csv(self) -> str:
        lines = ["N,d,bracketed,term"]
        for e in self.entries:
            lines.append(f"{e.N},{e.d},{int(e.bracketed)},{to_decimal(e.term, self.bits)}")
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return _verdict_json(
            "saddle_node_cascade",
            bool(self.entries),
            {"L": to_decimal(self.L, self.bits), "total": to_decimal(self.total, self.bits)},
        )


def branch_bound_L(fmap: UnicriticalMap):
    """sup |Df| over [f(0), f^2(0)]: the derivative magnitude is monotone in
    |x|, so the sup sits at the endpoint of larger modulus."""
    with working_precision(fmap.precision_bits):
        c1 = fmap.c
        c2 = fmap.step(c1)
        m = max(abs(c1), abs(c2))
        return fmap.ell * m ** (fmap.ell - 1)


def saddle_node_cascade(
    fmap: UnicriticalMap,
    orbit: OrbitTable,
    ladder: PrecriticalLadder,
    S: CuttingTimes,
    window: int,
) -> CascadeReport:
    """Scan candidate return times N <= window. For each N whose central
    branch domain (zeta_{k-1}, -zeta_{k-1}) (with S_{k-1} < N <= S_k)
    recaptures the critical orbit, record the depth d = the largest count of
    successive returns f^{jN}(0) staying in the domain with a monotone
    trend, and the term d / (N L^{2N/(ell-1)})."""
    bits = fmap.precision_bits
    with working_precision(bits):
        L = branch_bound_L(fmap)
        entries = []
        total = gmpy2.mpfr(0)
        for N in range(1, window + 1):
            if N > S.S(S.K):
                break
            k = S.index_of_ceiling(N)
            if k is None or k - 1 > ladder.k_max:
                break
            left = ladder.zeta(k - 1) if k >= 1 else -repelling_fixed_point(fmap)
            pts = []
            j = 1
            while j * N <= orbit.N:
                y = orbit.value(j * N)
                if not left < y < -left or y == 0:
                    break
                pts.append(y)
                j += 1
            d = len(pts)
            if d == 0:
                continue
            if d >= 2:
                inc = all(b > a for a, b in zip(pts, pts[1:]))
                dec = all(b < a for a, b in zip(pts, pts[1:]))
                while d >= 2 and not (inc or dec):
                    pts.pop()
                    d -= 1
                    inc = all(b > a for a, b in zip(pts, pts[1:]))
                    dec = all(b < a for a, b in zip(pts, pts[1:]))
            bracketed = any(d * N < S.S(a) < (d + 2) * N for a in range(S.K + 1))
            expo = gmpy2.mpfr(2 * N) / (fmap.ell - 1)
            term = gmpy2.mpfr(d) / (N * L**expo)
            total += term
            entries.append(CascadeEntry(N, d, bracketed, term))
        return CascadeReport(tuple(entries), L, total, bits)


# ---------------------------------------------------------------------------
# no two closest precritical points in one interval


@dataclass(frozen=True)
class No2cppReport:
    m0: int
    violations: tuple  # (n, contained indices) for the returned m0 (empty on success)
    unresolved: tuple  # (n, m, side) boundary ties
    containment: dict  # n -> tuple of (side, m) strictly inside D_n

    def violations_at(self, m0: int):
        out = []
        for n, pts in sorted(self.containment.items()):
            kept = [p for p in pts if p[1] >= m0]
            if len(kept) > 1:
                out.append((n, tuple(kept)))
        return tuple(out)

    def verdict_json(self) -> dict:
        return _verdict_json(
            "no2cpp",
            not self.violations and not self.unresolved,
            {"m0": self.m0, "unresolved": len(self.unresolved)},
        )


def verify_no2cpp(
    fmap: UnicriticalMap,
    ladder: PrecriticalLadder,
    orbit: OrbitTable,
    S: CuttingTimes,
    n_max: int,
) -> No2cppReport:
    """For every non-cutting n <= n_max, collect the points +-zeta_m lying
    strictly inside D_n, and return the least m0 such that at most one
    tracked point (m >= m0) remains in every interval. Containment is
    derived from the shared placement helper applied to the interval
    endpoints, and cross-checked by direct comparison."""
    if n_max > orbit.N:
        raise RuleViolation("orbit too short for n_max")
    bits = fmap.precision_bits
    with working_precision(bits):
        eps = gmpy2.exp2(-(bits // 2))
        x_minus = -repelling_fixed_point(fmap)
        cutting = {S.S(k) for k in range(S.K + 1)}
        containment = {}
        unresolved = []
        for n in range(2, n_max + 1):
            if n in cutting:
                continue
            d = D_interval(orbit, S, n)
            inside = []
            ties = []
            for m in range(ladder.k_max + 1):
                for side in (-1, 1):
                    y = ladder.zeta(m) if side < 0 else -ladder.zeta(m)
                    if abs(y - d.lo) <= eps or abs(y - d.hi) <= eps:
                        ties.append((n, m, side))
                    elif d.lo < y < d.hi:
                        inside.append((side, m))
            if ties:
                unresolved.extend(ties)
            else:
                # derive the same sets from endpoint placements; the two
                # routes must agree or the diagnostics are inconsistent
                derived = _contained_from_placements(ladder, d.lo, d.hi, x_minus, eps)
                assert sorted(inside) == sorted(derived), (
                    f"containment mismatch at n={n}: direct {inside}, placed {derived}"
                )
            containment[n] = tuple(inside)
        m0 = 0
        for pts in containment.values():
            idx = sorted(m for _, m in pts)
            if len(idx) >= 2:
                m0 = max(m0, idx[-2] + 1)
        report = No2cppReport(m0, (), tuple(unresolved), containment)
        return No2cppReport(m0, report.violations_at(m0), tuple(unresolved), containment)


def _contained_from_placements(ladder: PrecriticalLadder, lo, hi, x_minus, eps):
    """Indices of +-zeta points in the open interval (lo, hi), derived from
    the placements of the endpoints rather than per-point comparisons."""
    out = []
    kmax = ladder.k_max
    # negative-side points zeta_m increase toward 0
    if lo < 0:
        p_lo = place_among_precritical(ladder, lo, x_minus, eps) if lo > x_minus else Placement(-1, 0)
        start = p_lo.index
        if hi >= 0:
            stop = kmax + 1
        else:
            stop = place_among_precritical(ladder, hi, x_minus, eps).index
        out.extend((-1, m) for m in range(start, min(stop, kmax + 1)))
    # positive-side mirrors -zeta_m decrease toward 0 as m grows
    if hi > 0:
        p_hi = place_among_precritical(ladder, hi, x_minus, eps) if -hi > x_minus else Placement(1, 0)
        start = p_hi.index
        if lo <= 0:
            stop = kmax + 1
        else:
            stop = place_among_precritical(ladder, lo, x_minus, eps).index
        out.extend((1, m) for m in range(start, min(stop, kmax + 1)))
    return out


# ---------------------------------------------------------------------------
# monotone neighborhood of c_1


@dataclass(frozen=True)
class MonotoneNbhdReport:
    k: int
    skipped: bool
    verdict: bool | None
    v_lo: gmpy2.mpfr | None
    v_hi: gmpy2.mpfr | None
    err_lo: gmpy2.mpfr | None
    err_hi: gmpy2.mpfr | None
    tol: gmpy2.mpfr | None
    reason: str = ""

    def verdict_json(self) -> dict:
        bits = 64
        witness = {"k": self.k, "skipped": self.skipped}
        if self.skipped:
            witness["reason"] = self.reason
        else:
            witness["err_lo"] = to_decimal(self.err_lo, bits)
            witness["err_hi"] = to_decimal(self.err_hi, bits)
        return _verdict_json("monotone_neighborhood", self.verdict, witness)


def verify_monotone_neighborhood(
    fmap: UnicriticalMap, S: CuttingTimes, Q: KneadingMap, k: int
) -> MonotoneNbhdReport:
    """Locate the maximal interval V around c_1 on which f^{S_k - 1} is
    monotone, and check that the image endpoints are f^{S_{Q^2(k)}}(0) and
    f^{S_{Q(k)}}(0) within 2^{-bits/4}. Applies only above the strict
    dominance threshold k_0 and when the monotone branch is compactly
    contained in the dynamical core; other k are reported as skipped."""
    hof = check_strict_hofbauer(Q, k)
    if not hof.passed or k <= hof.k0:
        return MonotoneNbhdReport(
            k, True, None, None, None, None, None, None, "below dominance threshold"
        )
    bits = fmap.precision_bits
    with working_precision(bits):
        n = S.S(k) - 1
        c1 = fmap.c
        x_plus = repelling_fixed_point(fmap)

        def dsign(x):
            return derivative_along(fmap, x, n).sign

        s0 = dsign(c1)
        if s0 == 0:
            raise PrecisionExhausted("derivative sign vanishes at c_1")

        want_a = iterate(fmap, gmpy2.mpfr(0), S.S(Q.q(Q.q(k)))).value
        want_b = iterate(fmap, gmpy2.mpfr(0), S.S(Q.q(k))).value
        # the branch width is roughly the predicted image interval shrunk
        # by the derivative at c_1; starting the march far below it keeps
        # the first probes inside the branch even at deep k
        scale = abs(want_a - want_b) * gmpy2.exp(-derivative_along(fmap, c1, n).log_abs)
        if not (gmpy2.is_finite(scale) and scale > 0):
            scale = abs(c1)

        def march(direction, h, limit):
            """Bracket the first sign flip of Df^n going out from c_1 with
            doubling steps; "core" when the probe leaves the core first,
            None when no flip occurs strictly inside `limit`."""
            prev = c1
            while True:
                cand = c1 + direction * h
                if limit is not None and abs(cand - c1) >= limit:
                    return None
                if not -x_plus < cand < x_plus:
                    return "core"
                if dsign(cand) != s0:
                    return prev, cand
                prev = cand
                h *= 2

        def refine(bracket):
            good, bad = bracket
            for _ in range(bits):
                mid = (good + bad) / 2
                if mid == good or mid == bad:
                    break
                if dsign(mid) == s0:
                    good = mid
                else:
                    bad = mid
            return (good + bad) / 2

        endpoints = []
        for direction in (-1, 1):
            hit = march(direction, scale * gmpy2.exp2(-20), None)
            if hit == "core":
                # branch runs to the core boundary: the image-endpoint
                # law only constrains compactly contained branches
                return MonotoneNbhdReport(
                    k, True, None, None, None, None, None, None,
                    "monotone branch reaches the core boundary",
                )
            x = refine(hit)
            # re-march below the found break at finer resolution: doubling
            # can step over a nearer break, which this walks back to
            for _ in range(8):
                limit = abs(x - c1)
                again = march(direction, limit * gmpy2.exp2(-12), limit * (1 - gmpy2.exp2(-8)))
                if again is None or again == "core":
                    break
                x = refine(again)
            endpoints.append(x)
        v_lo, v_hi = endpoints
        img = sorted([iterate(fmap, v_lo, n).value, iterate(fmap, v_hi, n).value])
        want = sorted([want_a, want_b])
        tol = gmpy2.exp2(-(bits // 4))
        err_lo = abs(img[0] - want[0])
        err_hi = abs(img[1] - want[1])
        verdict = bool(err_lo < tol and err_hi < tol)
        return MonotoneNbhdReport(k, False, verdict, v_lo, v_hi, err_lo, err_hi, tol)


# ---------------------------------------------------------------------------
# report assembly


@dataclass
class DiagnosticsReport:
    """One solved map's diagnostics, assembled for serialization."""

    scaling: ScalingReport
    sigma: gmpy2.mpfr
    band: BandReport
    divergence: DivergenceReport | None
    partial_sums: tuple
    gap: GapReport
    verdicts: tuple = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "sigma_hat": to_decimal(self.sigma, 64),
            "scaling": self.scaling.verdict_json(),
            "derivative_band": self.band.verdict_json(),
            "divergence": self.divergence.verdict_json() if self.divergence else None,
            "partial_sums": [p.verdict_json() for p in self.partial_sums],
            "gap": self.gap.verdict_json(),
            "verdicts": list(self.verdicts),
        }


def assemble_report(
    fmap: UnicriticalMap,
    Q: KneadingMap,
    S: CuttingTimes,
    ladder: PrecriticalLadder,
    orbit: OrbitTable,
    K: int,
    delta="1",
) -> DiagnosticsReport:
    scal = scaling_ratios(fmap, S, min(K, S.K - 1))
    sig = sigma_hat(S, min(K, S.K))
    band_K = min(K, ladder.k_max)
    band = derivative_band(fmap, ladder, S, band_K)
    # the divergence criterion is stated for contraction rates below 1;
    # when the measured tail average is not, the criterion is not evaluated
    div = None
    if 0 < scal.lambda_hat < 1:
        div = fib_divergence_report(sig, scal.lambda_hat, S, min(K, S.K))
    sums = (
        longbranched_sum(fmap, ladder, S, delta, band_K, 1),
        longbranched_sum(fmap, ladder, S, delta, band_K, -1),
    )
    gap = gap_kappa(fmap, ladder, S, Q, band_K)
    no2 = verify_no2cpp(fmap, ladder, orbit, S, min(orbit.N, S.S(min(6, S.K))))
    verdicts = (no2.verdict_json(),)
    return DiagnosticsReport(scal, sig, band, div, sums, gap, verdicts)

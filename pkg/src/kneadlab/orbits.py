"""Orbit engine for x -> x^ell + c on the real line.

All values are MPFR at the precision carried by the map. Orbits are exact
to working precision; every op that bisects or marches is capped and checks
its residuals rather than trusting convergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import gmpy2

from .errors import EscapeError, NoRootError, PrecisionExhausted, RuleViolation, WitnessFailure
from .extprec import escape_radius, working_precision
from .kneading import CuttingTimes


@dataclass(frozen=True)
class UnicriticalMap:
    """x -> x^ell + c with even ell >= 2 and real c <= 0.

    The kneading machinery assumes c < 0 (the critical orbit must leave
    0); c = 0 is admitted for the complex-plane operations, where the
    pure power map is the basic closed-form case.
    """

    ell: int
    c: gmpy2.mpfr
    precision_bits: int

    def __post_init__(self):
        if self.ell < 2 or self.ell % 2:
            raise RuleViolation(f"ell must be even and >= 2, got {self.ell}")
        if not gmpy2.is_finite(self.c) or self.c > 0:
            raise RuleViolation(f"c must be finite and <= 0, got {self.c}")
        if self.precision_bits < 24:
            raise RuleViolation("precision_bits must be >= 24")

    @staticmethod
    def from_str(ell: int, c: str, bits: int) -> "UnicriticalMap":
        return UnicriticalMap(ell, gmpy2.mpfr(c, bits), bits)

    def step(self, x):
        if self.ell == 2:
            return x * x + self.c
        return x**self.ell + self.c

    def dstep(self, x):
        """Df(x) = ell * x^(ell-1)."""
        if self.ell == 2:
            return 2 * x
        return self.ell * x ** (self.ell - 1)

    def with_precision(self, bits: int) -> "UnicriticalMap":
        return UnicriticalMap(self.ell, gmpy2.mpfr(self.c, bits), bits)


class IterateResult(NamedTuple):
    value: gmpy2.mpfr
    escaped: bool
    escape_step: int | None


def iterate(fmap: UnicriticalMap, x, n: int) -> IterateResult:
    """f^n(x); escape past the provable radius is flagged, not raised."""
    if n < 0:
        raise RuleViolation("n must be >= 0")
    with working_precision(fmap.precision_bits):
        v = gmpy2.mpfr(x)
        R = escape_radius(fmap.c)
        for j in range(1, n + 1):
            v = fmap.step(v)
            if abs(v) > R:
                return IterateResult(v, True, j)
        return IterateResult(v, False, None)


@dataclass(frozen=True)
class OrbitTable:
    """Critical orbit values v_n = f^n(0) for 1 <= n <= N, with signs."""

    fmap: UnicriticalMap
    values: tuple
    signs: tuple

    @property
    def N(self) -> int:
        return len(self.values)

    def value(self, n: int):
        if not 1 <= n <= self.N:
            raise RuleViolation(f"orbit index {n} out of range 1..{self.N}")
        return self.values[n - 1]

    def sign(self, n: int) -> int:
        if not 1 <= n <= self.N:
            raise RuleViolation(f"orbit index {n} out of range 1..{self.N}")
        return self.signs[n - 1]

    def margin(self, n: int):
        return abs(self.value(n))

    def recompute_check(self, indices, factor: int = 2) -> bool:
        """Spot-check: recompute at `factor`x precision; values must agree to
        roughly the original precision."""
        hi = critical_orbit(self.fmap.with_precision(self.fmap.precision_bits * factor), self.N)
        with working_precision(self.fmap.precision_bits * factor):
            # orbit error is amplified by the accumulated derivative, so the
            # spot-check budget is half the mantissa, matching the sign
            # decision threshold used elsewhere
            tol = gmpy2.exp2(-(self.fmap.precision_bits // 2))
            for n in indices:
                if abs(hi.value(n) - self.value(n)) > tol * max(abs(hi.value(n)), gmpy2.mpfr(1)):
                    return False
        return True

    def to_csv(self, bits: int | None = None) -> str:
        from .extprec import to_decimal

        bits = bits or self.fmap.precision_bits
        lines = ["n,f_n_0,sign"]
        for n in range(1, self.N + 1):
            lines.append(f"{n},{to_decimal(self.value(n), bits)},{self.sign(n)}")
        return "\n".join(lines) + "\n"


def critical_orbit(fmap: UnicriticalMap, N: int) -> OrbitTable:
    """Orbit of the critical point; raises EscapeError if it leaves the
    bounded window (the map is then outside the family)."""
    if N < 1:
        raise RuleViolation("N must be >= 1")
    with working_precision(fmap.precision_bits):
        R = escape_radius(fmap.c)
        vals = []
        signs = []
        v = gmpy2.mpfr(0)
        for n in range(1, N + 1):
            v = fmap.step(v)
            if abs(v) > R:
                raise EscapeError(f"critical orbit escaped at step {n}", step=n)
            vals.append(v)
            signs.append(gmpy2.sign(v))
        return OrbitTable(fmap, tuple(vals), tuple(signs))


def orbit_samples(fmap: UnicriticalMap, indices) -> dict:
    """{n: f^n(0)} for the requested indices, streaming (O(1) memory)."""
    wanted = sorted(set(int(n) for n in indices))
    if not wanted or wanted[0] < 1:
        raise RuleViolation("indices must be >= 1")
    out = {}
    with working_precision(fmap.precision_bits):
        R = escape_radius(fmap.c)
        v = gmpy2.mpfr(0)
        top = wanted[-1]
        it = iter(wanted)
        nxt = next(it)
        for n in range(1, top + 1):
            v = fmap.step(v)
            if abs(v) > R:
                raise EscapeError(f"critical orbit escaped at step {n}", step=n)
            if n == nxt:
                out[n] = v
                nxt = next(it, None)
        return out


class DerivativeAlong(NamedTuple):
    sign: int
    log_abs: gmpy2.mpfr
    zero_step: int | None


def derivative_along(fmap: UnicriticalMap, x, n: int) -> DerivativeAlong:
    """Sign and log of |Df^n(x)|, accumulated in log space.

    If some f^j(x), j < n, is exactly 0 the derivative is exactly 0; this is
    reported via zero_step and log_abs = -inf rather than an exception.
    """
    if n < 0:
        raise RuleViolation("n must be >= 0")
    from .extprec import LogAbsProduct

    with working_precision(fmap.precision_bits):
        v = gmpy2.mpfr(x)
        acc = LogAbsProduct()
        sign = 1
        zero_step = None
        for j in range(n):
            if v == 0:
                zero_step = j
                acc.zero = True
                break
            d = fmap.dstep(v)
            # ell even: Df(v) has the sign of v
            if v < 0:
                sign = -sign
            acc.mul(d)
            v = fmap.step(v)
        if acc.zero:
            return DerivativeAlong(0, gmpy2.mpfr("-inf"), zero_step)
        return DerivativeAlong(sign, acc.log(), None)


def repelling_fixed_point(fmap: UnicriticalMap):
    """Largest positive solution of x^ell + c = x (the core's edge point)."""
    with working_precision(fmap.precision_bits):
        ell, c = fmap.ell, fmap.c
        # h(x) = x^ell + c - x has its positive-side minimum at (1/ell)^(1/(ell-1))
        turn = gmpy2.rootn(gmpy2.mpfr(1) / ell, ell - 1)
        hi = escape_radius(c)
        h = lambda x: x**ell + c - x
        if not (h(turn) < 0 < h(hi)):
            raise NoRootError("no repelling fixed point bracket (map outside family?)")
        lo = turn
        for _ in range(fmap.precision_bits + 4):
            mid = (lo + hi) / 2
            hm = h(mid)
            if hm == 0:
                return mid
            if hm < 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


@dataclass(frozen=True)
class LadderEntry:
    k: int
    S_k: int
    zeta: gmpy2.mpfr
    residual: gmpy2.mpfr
    witness_checked: bool


@dataclass(frozen=True)
class PrecriticalLadder:
    """Closest precritical points zeta_0 > ... ordered toward 0.

    zeta_k is the unique zero of f^(S_k) in (zeta_{k-1}, 0); its mirror point
    is -zeta_k. Build checks: strict ordering, residual below eps_root, and a
    dyadic-grid witness that f^(S_k) has no sign change strictly between
    zeta_{k-1} and zeta_k.
    """

    fmap: UnicriticalMap
    entries: tuple
    eps_root: gmpy2.mpfr
    witness_samples: int

    @property
    def k_max(self) -> int:
        return self.entries[-1].k

    def zeta(self, k: int):
        if not 0 <= k <= self.k_max:
            raise RuleViolation(f"ladder index {k} out of range 0..{self.k_max}")
        return self.entries[k].zeta

    def mirror(self, k: int):
        return -self.zeta(k)

    def residual(self, k: int):
        return self.entries[k].residual

    def to_csv(self, bits: int | None = None) -> str:
        from .extprec import to_decimal

        bits = bits or self.fmap.precision_bits
        lines = ["k,S_k,zeta_k,residual"]
        for e in self.entries:
            lines.append(f"{e.k},{e.S_k},{to_decimal(e.zeta, bits)},{to_decimal(e.residual, bits)}")
        return "\n".join(lines) + "\n"


def _eval_with_derivative(fmap: UnicriticalMap, x, n: int):
    """(f^n(x), Df^n(x)) in one pass; MPFR exponent range absorbs the size."""
    v = gmpy2.mpfr(x)
    d = gmpy2.mpfr(1)
    for _ in range(n):
        d *= fmap.dstep(v)
        v = fmap.step(v)
    return v, d


def _eval_fn(fmap: UnicriticalMap, x, n: int):
    v = gmpy2.mpfr(x)
    for _ in range(n):
        v = fmap.step(v)
    return v


def closest_precritical(
    fmap: UnicriticalMap,
    S: CuttingTimes,
    k_max: int,
    eps_root=None,
    witness_samples: int = 1024,
) -> PrecriticalLadder:
    """Ladder of closest precritical points for k = 0..k_max.

    Root isolation per rung: the endpoint signs of f^(S_k) on
    (zeta_{k-1}, 0) come from the critical orbit identities
    f^(S_k)(zeta_{k-1}) = f^(S_Q(k))(0) and f^(S_k)(0-); bisection on the
    bracket (capped at precision_bits iterations, with a guarded Newton
    polish once the bracket is narrow) then refines the zero. Equal endpoint
    signs raise NoRootError; a residual above eps_root raises
    PrecisionExhausted.
    """
    if k_max < 0:
        raise RuleViolation("k_max must be >= 0")
    if S.K < k_max:
        raise RuleViolation(f"cutting times to K = {S.K} cannot support k_max = {k_max}")
    bits = fmap.precision_bits
    with working_precision(bits):
        if eps_root is None:
            eps_root = gmpy2.exp2(-(bits // 2))
        else:
            eps_root = gmpy2.mpfr(eps_root)
        Q = S.source
        orbit_signs = {}
        need = {S.S(k) for k in range(0, k_max + 1)} | {S.S(Q.q(k)) for k in range(1, k_max + 1)}
        samples = orbit_samples(fmap, need)
        for n, v in samples.items():
            orbit_signs[n] = gmpy2.sign(v)

        zeta0 = -gmpy2.rootn(-fmap.c, fmap.ell)
        res0 = abs(fmap.step(zeta0))
        entries = [LadderEntry(0, 1, zeta0, res0, True)]
        width_floor = gmpy2.exp2(-(bits - 2))

        for k in range(1, k_max + 1):
            n = S.S(k)
            sign_left = orbit_signs[S.S(Q.q(k))]
            sign_right = orbit_signs[n]
            if sign_left == 0 or sign_right == 0:
                raise PrecisionExhausted(f"orbit value at a cutting time is exactly 0 near rung {k}")
            if sign_left == sign_right:
                raise NoRootError(f"no sign change of f^{n} on (zeta_{k - 1}, 0)")
            lo = entries[-1].zeta
            hi = gmpy2.mpfr(0)
            x = (lo + hi) / 2
            newton_from = 24
            val = None
            for i in range(bits):
                if i >= newton_from:
                    val, der = _eval_with_derivative(fmap, x, n)
                else:
                    val = _eval_fn(fmap, x, n)
                    der = None
                if val == 0:
                    lo = hi = x
                    break
                if gmpy2.sign(val) == sign_left:
                    lo = x
                else:
                    hi = x
                if hi - lo < width_floor:
                    break
                nxt = None
                if der is not None and der != 0:
                    cand = x - val / der
                    if lo < cand < hi:
                        nxt = cand
                if nxt is None:
                    nxt = (lo + hi) / 2
                if nxt == x:
                    break
                x = nxt
            zeta = (lo + hi) / 2
            residual = abs(_eval_fn(fmap, zeta, n))
            if not residual < eps_root:
                raise PrecisionExhausted(
                    f"rung {k}: residual {float(residual):.3e} above eps_root at {bits} bits"
                )
            if not entries[-1].zeta < zeta < 0:
                raise NoRootError(f"rung {k}: ordering zeta_{k - 1} < zeta_{k} < 0 broken")
            witness_ok = True
            if witness_samples > 0:
                prev = entries[-1].zeta
                gap = zeta - prev
                stepw = gap / (witness_samples + 1)
                for i in range(1, witness_samples + 1):
                    xs = prev + stepw * i
                    sv = _eval_fn(fmap, xs, n)
                    if gmpy2.sign(sv) != sign_left and sv != 0:
                        raise WitnessFailure(
                            f"rung {k}: sign change strictly between zeta_{k - 1} and zeta_{k}"
                        )
            entries.append(LadderEntry(k, n, zeta, residual, witness_ok))
        return PrecriticalLadder(fmap, tuple(entries), eps_root, witness_samples)


@dataclass(frozen=True)
class DInterval:
    """Window at time n: endpoints (f^n(0), f^(beta(n))(0)), kept as given
    plus sorted."""

    n: int
    beta_n: int
    is_cutting: bool
    raw: tuple
    lo: gmpy2.mpfr
    hi: gmpy2.mpfr

    def width(self):
        return self.hi - self.lo

    def contains(self, x, open_interval: bool = True) -> bool:
        if open_interval:
            return self.lo < x < self.hi
        return self.lo <= x <= self.hi


def D_interval(orbit: OrbitTable, S: CuttingTimes, n: int) -> DInterval:
    b = S.beta(n)
    a = orbit.value(n)
    z = orbit.value(b.value)
    lo, hi = (a, z) if a <= z else (z, a)
    return DInterval(n, b.value, b.is_cutting, (a, z), lo, hi)


@dataclass(frozen=True)
class PeriodicIntervalReport:
    verdict: bool
    inconclusive: bool
    period: int
    hull: tuple
    images_in_hull: bool
    disjoint: bool
    witness: str


def detect_periodic_interval(
    fmap: UnicriticalMap,
    period: int,
    j_max: int = 64,
    samples: int = 257,
) -> PeriodicIntervalReport:
    """Sampled test for an f^period-invariant interval around the critical
    point with pairwise disjoint images.

    The candidate interval I is the hull of {f^(j*period)(0) : 0 <= j <= j_max}
    (0 included). Verdict true requires the sampled image of I under f^period
    to stay in I (within tolerance) and the hulls of the period phases to
    have pairwise disjoint interiors. If the hull has not settled between
    j_max/2 and j_max the result is flagged inconclusive.
    """
    if period < 1:
        raise RuleViolation("period must be >= 1")
    if j_max < 4:
        raise RuleViolation("j_max must be >= 4")
    bits = fmap.precision_bits
    with working_precision(bits):
        N = period * j_max
        orb = critical_orbit(fmap, N)
        zero = gmpy2.mpfr(0)

        def phase_hull(i: int, jm: int):
            pts = [zero] if i == 0 else []
            pts += [orb.value(j * period + i) for j in range(0 if i else 1, jm + 1) if 1 <= j * period + i <= N]
            return min(pts), max(pts)

        h_lo, h_hi = phase_hull(0, j_max)
        half_lo, half_hi = phase_hull(0, j_max // 2)
        width = h_hi - h_lo
        settle_tol = gmpy2.exp2(-(bits // 4)) * max(width, gmpy2.mpfr(1))
        settled = abs(h_lo - half_lo) <= settle_tol and abs(h_hi - half_hi) <= settle_tol

        tol = gmpy2.exp2(-(bits // 4)) * max(width, gmpy2.mpfr(1))
        grid = [h_lo + (width * t) / (samples - 1) for t in range(samples)]
        if h_lo < 0 < h_hi:
            grid.append(zero)
        img_lo = img_hi = None
        for x in grid:
            y = _eval_fn(fmap, x, period)
            img_lo = y if img_lo is None else min(img_lo, y)
            img_hi = y if img_hi is None else max(img_hi, y)
        contained = img_lo >= h_lo - tol and img_hi <= h_hi + tol

        hulls = [(h_lo, h_hi)] + [phase_hull(i, j_max) for i in range(1, period)]
        order = sorted(range(period), key=lambda i: hulls[i][0])
        disjoint = True
        witness = ""
        for a, b in zip(order, order[1:]):
            if hulls[a][1] > hulls[b][0] + tol:
                disjoint = False
                witness = f"phases {a} and {b} overlap"
                break
        verdict = bool(contained and disjoint)
        if not contained and not witness:
            witness = "sampled image leaves the hull"
        return PeriodicIntervalReport(
            verdict,
            not settled,
            period,
            (h_lo, h_hi),
            bool(contained),
            bool(disjoint),
            witness,
        )

"""Realizing prescribed kneading data as a parameter c.

The solver bisects in c, ordering candidate parameters against the target
symbol sequence with the parity-adjusted lexicographic order. The order
direction is calibrated from two probe parameters at run time, never
hard-coded. Precision starts at policy.start_bits and doubles whenever a
sign falls below the decision margin, up to policy.max_bits.

A solve succeeds only when the final bracket satisfies both halves of the
contract: width below 2^-target_bits, and both endpoint itineraries matching
the target through S_K wherever their symbols are decided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import gmpy2

from .errors import (
    AdmissibilityViolation,
    KneadlabError,
    PrecisionExhausted,
    RuleViolation,
    UndecidedSymbol,
    WindowExhausted,
)
from .extprec import escape_radius, to_decimal, working_precision
from .kneading import KneadingMap, _SequenceBuilder, check_admissible, cutting_times
from .orbits import UnicriticalMap


@dataclass(frozen=True)
class PrecisionPolicy:
    """Controls working precision and termination of a solve."""

    start_bits: int = 128
    max_bits: int = 4096
    target_bits: int = 80
    window_cap: int | None = None

    def __post_init__(self):
        if self.start_bits < 24 or self.max_bits < self.start_bits:
            raise RuleViolation("bad precision policy bounds")
        if self.target_bits < 8:
            raise RuleViolation("target_bits must be >= 8")

    def cap_for(self, S_K: int) -> int:
        if self.window_cap is not None:
            return self.window_cap
        return max(8 * S_K, 65536)


def c_min(ell: int, bits: int):
    """Left edge of the bounded-orbit window: the c where f^2(0) is fixed
    under f. Found by bisection on g(c) = f^3(0) - f^2(0); the residual is
    checked against 2^-(bits/2)."""
    if ell < 2 or ell % 2:
        raise RuleViolation("ell must be even and >= 2")
    with working_precision(bits):
        def g(c):
            u = c**ell + c
            return u**ell + c - u

        lo = gmpy2.mpfr(-3)
        hi = gmpy2.mpfr(-1) / 16
        glo, ghi = g(lo), g(hi)
        assert glo > 0 > ghi, "family-edge bracket must straddle the root"
        for _ in range(bits + 4):
            mid = (lo + hi) / 2
            gm = g(mid)
            if gm == 0:
                lo = hi = mid
                break
            if gm > 0:
                lo = mid
            else:
                hi = mid
        c = (lo + hi) / 2
        assert abs(g(c)) < gmpy2.exp2(-(bits // 2)), "family-edge residual out of tolerance"
        return c


@dataclass(frozen=True)
class SignItinerary:
    """Signs of the critical orbit with decision margins.

    symbols[j] is 0 when f^(j+1)(0) < 0 and 1 otherwise; a symbol whose
    margin |f^(j+1)(0)| is at or below the threshold 2^-(bits/2) is flagged
    undecided (decided[j] = False) but still reported.
    """

    symbols: tuple
    margins: tuple
    decided: tuple
    threshold: gmpy2.mpfr


def sign_itinerary(fmap: UnicriticalMap, n: int) -> SignItinerary:
    if n < 1:
        raise RuleViolation("n must be >= 1")
    bits = fmap.precision_bits
    with working_precision(bits):
        threshold = gmpy2.exp2(-(bits // 2))
        v = gmpy2.mpfr(0)
        syms, margins, dec = [], [], []
        for _ in range(n):
            v = fmap.step(v)
            m = abs(v)
            syms.append(0 if v < 0 else 1)
            margins.append(m)
            dec.append(bool(m > threshold))
        return SignItinerary(tuple(syms), tuple(margins), tuple(dec), threshold)


class CompareResult(NamedTuple):
    order: int  # -1, 0, +1
    index: int | None  # first differing position (1-based), None if equal
    flipped: bool


def parity_lex_compare(a, b, a_decided=None, b_decided=None) -> CompareResult:
    """Order two symbol sequences; the comparison at the first differing
    index n is reversed when the count of 0-symbols before n is odd.

    Raises UndecidedSymbol if an undecided symbol occurs at or before the
    first difference. Sequences equal through the common length compare 0.
    """
    zeros = 0
    m = min(len(a), len(b))
    for i in range(m):
        if (a_decided is not None and not a_decided[i]) or (
            b_decided is not None and not b_decided[i]
        ):
            raise UndecidedSymbol(f"undecided symbol at index {i + 1}", index=i + 1)
        if a[i] != b[i]:
            base = 1 if a[i] > b[i] else -1
            flipped = bool(zeros % 2)
            return CompareResult(-base if flipped else base, i + 1, flipped)
        if a[i] == 0:
            zeros += 1
    return CompareResult(0, None, False)


@dataclass(frozen=True)
class SolveResult:
    ell: int
    c_lo: gmpy2.mpfr
    c_hi: gmpy2.mpfr
    matched_depth: int
    precision_bits: int
    iterations: int

    def midpoint(self):
        with working_precision(self.precision_bits):
            return (self.c_lo + self.c_hi) / 2

    def width(self):
        with working_precision(self.precision_bits):
            return self.c_hi - self.c_lo

    def fmap(self, bits: int | None = None) -> UnicriticalMap:
        bits = bits or self.precision_bits
        return UnicriticalMap(self.ell, gmpy2.mpfr(self.midpoint(), bits), bits)

    def to_json_dict(self) -> dict:
        return {
            "ell": self.ell,
            "c_lo": to_decimal(self.c_lo, self.precision_bits),
            "c_hi": to_decimal(self.c_hi, self.precision_bits),
            "matched_depth": self.matched_depth,
            "precision_bits": self.precision_bits,
        }


class _Escalate(Exception):
    """Internal: retry the solve at doubled precision."""

    def __init__(self, reason, index=None):
        self.reason = reason
        self.index = index


class _Target:
    """Lazily extended target symbols for a rule. A finite explicit table
    defines symbols only through its last cutting time; `limit` carries
    that horizon (None for unbounded rules). The solver treats candidates
    matching through the horizon as inside the target window, since a
    finite prefix is realized by a whole parameter interval."""

    def __init__(self, Q: KneadingMap):
        self._b = _SequenceBuilder(Q)
        self.limit = None
        if Q.k_max is not None:
            while self._b.k < Q.k_max:
                self._b.extend_to(len(self._b.symbols) + 1)
            self.limit = self._b.S[-1]

    def symbol(self, n: int) -> int:
        try:
            return self._b.symbol(n)
        except RuleViolation as e:
            raise WindowExhausted(str(e)) from e


def _step(ell, c, v):
    if ell == 2:
        return v * v + c
    return v**ell + c


def _compare_side(ell, c, target: _Target, threshold, cap: int, direction: int) -> int:
    """Parameter-space side of candidate c against the target itinerary.

    Returns -1 (c below the solution), +1 (above), 0 (symbols matched
    through the whole window cap). Escape of the candidate orbit means c is
    below the bounded family window, hence below every realizable target.
    """
    v = gmpy2.mpfr(0)
    R = escape_radius(c)
    zeros = 0
    for n in range(1, cap + 1):
        v = _step(ell, c, v)
        av = abs(v)
        if av > R:
            return -1
        if av <= threshold:
            if v == 0:
                raise _Escalate("exact-zero", index=n)
            raise UndecidedSymbol(f"margin below threshold at step {n}", index=n)
        sym = 0 if v < 0 else 1
        t = target.symbol(n)
        if sym != t:
            base = 1 if sym > t else -1
            if zeros % 2:
                base = -base
            return base * direction
        if sym == 0:
            zeros += 1
    return 0


def _first_mismatch(ell, c, target: _Target, threshold, upto: int) -> int | None:
    """First index <= upto where a decided symbol of c's itinerary differs
    from the target; undecided symbols are skipped."""
    v = gmpy2.mpfr(0)
    R = escape_radius(c)
    for n in range(1, upto + 1):
        v = _step(ell, c, v)
        if abs(v) <= threshold:
            continue
        if not gmpy2.is_finite(v):
            sym = 1
        else:
            sym = 0 if v < 0 else 1
        if sym != target.symbol(n):
            return n
        if abs(v) > R:
            # escaped: tail is positive forever; finish against the target
            for nn in range(n + 1, upto + 1):
                if target.symbol(nn) == 0:
                    return nn
            return None
    return None


def _calibrate_direction(ell, edge, hi, threshold, cap=65536) -> int:
    """+1 when the itinerary order increases with c, -1 when it decreases.

    Probes just inside both ends of the initial bracket and compares their
    itineraries in the parity order.
    """
    p_lo = edge + abs(edge) / 1024
    p_hi = hi
    a = gmpy2.mpfr(0)
    b = gmpy2.mpfr(0)
    Ra = escape_radius(p_lo)
    Rb = escape_radius(p_hi)
    zeros = 0
    for n in range(1, cap + 1):
        a = _step(ell, p_lo, a)
        b = _step(ell, p_hi, b)
        if abs(a) <= threshold or abs(b) <= threshold:
            raise UndecidedSymbol(f"calibration probe margin too small at step {n}", index=n)
        sa = 0 if a < 0 else 1
        sb = 0 if b < 0 else 1
        if sa != sb:
            base = 1 if sa > sb else -1
            if zeros % 2:
                base = -base
            # base is the itinerary order of probe_lo vs probe_hi;
            # probe_lo sits at smaller c
            return -1 if base > 0 else 1
        if sa == 0:
            zeros += 1
        if abs(a) > Ra and abs(b) > Rb:
            break
    raise KneadlabError("calibration probes share an itinerary; cannot orient the order")


def solve_parameter(
    ell: int,
    Q: KneadingMap,
    K: int,
    policy: PrecisionPolicy = PrecisionPolicy(),
) -> SolveResult:
    """Bracket the parameter whose kneading data matches Q through S_K.

    Returns a SolveResult whose endpoints both realize the target symbol
    prefix (wherever decided) with bracket width below 2^-target_bits.
    Raises AdmissibilityViolation when the prefix is not realizable (the
    bracket collapses with a persistent mismatch) and PrecisionExhausted
    when the precision cap is hit. For a finite explicit table the bracket
    realizes the full table prefix; symbols past the table are
    unconstrained. Uniqueness of the bracketed parameter is not certified.
    """
    if K < 3:
        raise RuleViolation("K must be >= 3")
    if policy.start_bits < policy.target_bits + 32:
        raise RuleViolation("start_bits must exceed target_bits by at least 32")
    adm = check_admissible(Q, K)
    if adm.verdict == "fail":
        raise AdmissibilityViolation(
            f"target kneading map inadmissible at k={adm.first_violation[0]}",
            index=adm.first_violation[0],
        )
    S = cutting_times(Q, K)
    S_K = S.S(K)
    cap = policy.cap_for(S_K)

    bits = policy.start_bits
    last_mismatch = None
    while True:
        try:
            return _solve_at_bits(ell, Q, K, S_K, cap, bits, policy)
        except (_Escalate, UndecidedSymbol) as e:
            if isinstance(e, _Escalate):
                last_mismatch = e.index if e.reason == "verify" else last_mismatch
            if bits >= policy.max_bits:
                if isinstance(e, _Escalate) and e.reason == "verify":
                    raise AdmissibilityViolation(
                        f"target prefix unreachable; first mismatch at index {e.index}",
                        index=e.index,
                    ) from None
                raise PrecisionExhausted(
                    f"undecided symbol persists at the {policy.max_bits}-bit cap"
                ) from None
            bits = min(2 * bits, policy.max_bits)


def _solve_at_bits(ell, Q, K, S_K, cap, bits, policy) -> SolveResult:
    with working_precision(bits):
        target = _Target(Q)
        if target.limit is not None:
            # finite table: symbols past the horizon are unconstrained, so
            # matching through it counts as inside the target window
            cap = min(cap, target.limit)
        threshold = gmpy2.exp2(-(bits // 2))
        # fixed-precision initial bracket keeps the bisection midpoint
        # lattice identical across precision escalations, so a re-solve at
        # higher precision shrinks within the earlier bracket
        edge = gmpy2.mpfr(c_min(ell, 64), bits)
        lo = edge - gmpy2.exp2(-32)
        hi = -gmpy2.exp2(-20)
        direction = _calibrate_direction(ell, edge, hi, threshold)

        w_target = gmpy2.exp2(-policy.target_bits)
        width_floor = gmpy2.exp2(-(bits - 8))
        iterations = 0
        iter_cap = 16 * max(policy.target_bits, bits) + 256
        interior = None  # a point whose symbols matched through the whole cap

        def bisect_until(w):
            nonlocal lo, hi, iterations, interior
            while hi - lo > w:
                if iterations > iter_cap:
                    raise KneadlabError("bisection stalled; iteration cap hit")
                m = (lo + hi) / 2
                try:
                    side = _compare_side(ell, m, target, threshold, cap, direction)
                except _Escalate as e:
                    if e.reason != "exact-zero":
                        raise
                    # dyadic superstable hit: nudge the probe, keep the bracket
                    m = m + (hi - lo) / 1024
                    side = _compare_side(ell, m, target, threshold, cap, direction)
                iterations += 1
                if side == 0:
                    interior = m
                    half = w_target / 2
                    lo = max(lo, m - half)
                    hi = min(hi, m + half)
                    return
                if side < 0:
                    lo = m
                else:
                    hi = m
                assert lo < hi, "bracket inverted; order calibration violated"

        bisect_until(w_target)
        while True:
            mlo = _first_mismatch(ell, lo, target, threshold, S_K)
            mhi = _first_mismatch(ell, hi, target, threshold, S_K)
            if mlo is None and mhi is None:
                break
            if hi - lo <= width_floor:
                raise _Escalate("verify", index=mlo if mlo is not None else mhi)
            if interior is not None:
                # pull failing endpoints toward the known-good point
                if mlo is not None:
                    lo = (lo + interior) / 2
                if mhi is not None:
                    hi = (hi + interior) / 2
            else:
                bisect_until(max(width_floor, (hi - lo) / gmpy2.exp2(16)))

        return SolveResult(ell, lo, hi, S_K, bits, iterations)

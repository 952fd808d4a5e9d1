"""Kneading-map combinatorics.

A kneading map Q assigns to each index k >= 1 an index Q(k) < k. The cutting
times S_k it generates follow

    S_0 = 1,   S_k = S_{k-1} + S_{Q(k)}

and every statement downstream (orbit intervals, admissibility, growth
checks) is phrased in terms of Q and S. Everything in this module is exact
integer arithmetic.

Conventions:
  * Q(0) = 0, so Q(Q(k)) is defined for every k >= 1.
  * "constant(q)" means the ramp Q(k) = max(0, min(q, k-1)); a literally
    constant positive table would break Q(k) < k at small k.
  * eventually-periodic rules use the fibonacci ramp max(0, k-2) below k0
    and extend by Q(k0 + i + m*p) = table[i] + m*p.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import RuleViolation

_RULES = ("explicit", "fibonacci", "feigenbaum", "constant", "eventually-periodic")


@dataclass(frozen=True)
class KneadingMap:
    """A kneading-map rule; evaluate with q(k).

    rule: one of "explicit", "fibonacci", "feigenbaum", "constant",
          "eventually-periodic".
    table: explicit values Q(1..len) for "explicit", the periodic block for
           "eventually-periodic", unused otherwise.
    n: lag for "fibonacci" (Q(k) = max(0, k-n)); n=1 reproduces "feigenbaum".
    value: cap for "constant" (serialized under the JSON key "q").
    k0, p: start index and period for "eventually-periodic".
    """

    rule: str
    table: tuple[int, ...] = ()
    n: int = 2
    value: int = 0
    k0: int = 1
    p: int = 1

    def __post_init__(self):
        if self.rule not in _RULES:
            raise RuleViolation(f"unknown rule {self.rule!r}")
        if self.rule == "explicit":
            if not self.table:
                raise RuleViolation("explicit rule needs a non-empty table")
            for i, v in enumerate(self.table, start=1):
                if not 0 <= v < i:
                    raise RuleViolation(f"Q({i}) = {v} violates 0 <= Q(k) < k")
        elif self.rule == "fibonacci":
            if self.n < 1:
                raise RuleViolation("fibonacci lag must be >= 1")
        elif self.rule == "constant":
            if self.value < 0:
                raise RuleViolation("constant value must be >= 0")
        elif self.rule == "eventually-periodic":
            if self.k0 < 1 or self.p < 1 or len(self.table) != self.p:
                raise RuleViolation("eventually-periodic needs k0 >= 1, p >= 1, table of length p")
            for i, v in enumerate(self.table):
                if not 0 <= v < self.k0 + i:
                    raise RuleViolation(f"periodic value Q({self.k0 + i}) = {v} violates Q(k) < k")

    @property
    def k_max(self) -> int | None:
        """Largest k at which the rule is defined (None = unbounded)."""
        if self.rule == "explicit":
            return len(self.table)
        return None

    def q(self, k: int) -> int:
        if k < 0:
            raise RuleViolation(f"Q undefined for k = {k}")
        if k == 0:
            return 0
        if self.rule == "explicit":
            if k > len(self.table):
                raise RuleViolation(f"explicit table of length {len(self.table)} queried at k = {k}")
            return self.table[k - 1]
        if self.rule == "fibonacci":
            return max(0, k - self.n)
        if self.rule == "feigenbaum":
            return k - 1
        if self.rule == "constant":
            return max(0, min(self.value, k - 1))
        # eventually-periodic
        if k < self.k0:
            return max(0, k - 2)
        i = k - self.k0
        return self.table[i % self.p] + (i // self.p) * self.p

    def to_json_dict(self) -> dict:
        d: dict = {"rule": self.rule}
        if self.rule == "explicit":
            d["table"] = list(self.table)
        elif self.rule == "fibonacci":
            d["n"] = self.n
        elif self.rule == "constant":
            d["q"] = self.value
        elif self.rule == "eventually-periodic":
            d.update({"k0": self.k0, "p": self.p, "table": list(self.table)})
        return d

    @staticmethod
    def from_json_dict(d: dict) -> "KneadingMap":
        rule = d.get("rule")
        if rule == "explicit":
            return KneadingMap("explicit", table=tuple(int(v) for v in d["table"]))
        if rule == "fibonacci":
            return KneadingMap("fibonacci", n=int(d.get("n", 2)))
        if rule == "feigenbaum":
            return KneadingMap("feigenbaum")
        if rule == "constant":
            return KneadingMap("constant", value=int(d.get("q", 0)))
        if rule == "eventually-periodic":
            return KneadingMap(
                "eventually-periodic",
                k0=int(d["k0"]),
                p=int(d["p"]),
                table=tuple(int(v) for v in d["table"]),
            )
        raise RuleViolation(f"unknown rule {rule!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def from_json(s: str) -> "KneadingMap":
        return KneadingMap.from_json_dict(json.loads(s))


def fibonacci_map(n: int = 2) -> KneadingMap:
    return KneadingMap("fibonacci", n=n)


def feigenbaum_map() -> KneadingMap:
    return KneadingMap("feigenbaum")


def constant_map(q: int = 0) -> KneadingMap:
    return KneadingMap("constant", value=q)


class BetaResult(NamedTuple):
    value: int
    is_cutting: bool


@dataclass(frozen=True)
class CuttingTimes:
    """S_0..S_K for a kneading map, plus lookup helpers."""

    values: tuple[int, ...]
    source: KneadingMap

    def __post_init__(self):
        if not self.values or self.values[0] != 1:
            raise RuleViolation("cutting times must start at S_0 = 1")

    @property
    def K(self) -> int:
        return len(self.values) - 1

    def S(self, k: int) -> int:
        if not 0 <= k <= self.K:
            raise RuleViolation(f"S_{k} not computed (K = {self.K})")
        return self.values[k]

    def index_of(self, n: int) -> int | None:
        """k with S_k = n, or None if n is not a cutting time in range."""
        k = self._bisect(n)
        if k >= 0 and self.values[k] == n:
            return k
        return None

    def index_of_ceiling(self, n: int) -> int | None:
        """Smallest k with S_k >= n (so S_{k-1} < n <= S_k), or None when n
        exceeds every computed cutting time."""
        if n > self.values[-1]:
            return None
        k = self._bisect(n)
        if k >= 0 and self.values[k] == n:
            return k
        return k + 1

    def _bisect(self, n: int) -> int:
        """Largest k with S_k <= n, or -1."""
        lo, hi = 0, len(self.values) - 1
        if n < self.values[0]:
            return -1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.values[mid] <= n:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def beta(self, n: int) -> BetaResult:
        """n minus the largest cutting time strictly below n.

        Defined for n >= 2 (there is no cutting time below 1). The flag
        reports whether n itself is a cutting time.
        """
        if n < 2:
            raise RuleViolation("beta defined for n >= 2")
        if n > self.values[-1]:
            raise RuleViolation(f"beta({n}) needs cutting times beyond S_{self.K} = {self.values[-1]}")
        k = self._bisect(n - 1)
        if k < 0:
            raise RuleViolation(f"no cutting time below {n}")
        return BetaResult(n - self.values[k], self.index_of(n) is not None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "S_k", "Q_k"])
        for k, s in enumerate(self.values):
            w.writerow([k, s, "" if k == 0 else self.source.q(k)])
        return buf.getvalue()


def cutting_times(Q: KneadingMap, K: int) -> CuttingTimes:
    """Generate S_0..S_K from the recursion S_k = S_{k-1} + S_{Q(k)}."""
    if K < 0:
        raise RuleViolation("K must be >= 0")
    if Q.k_max is not None and K > Q.k_max:
        raise RuleViolation(f"rule defined to k = {Q.k_max}, requested K = {K}")
    S = [1]
    for k in range(1, K + 1):
        qk = Q.q(k)
        if qk >= k:
            raise RuleViolation(f"Q({k}) = {qk} violates Q(k) < k")
        S.append(S[k - 1] + S[qk])
    return CuttingTimes(tuple(S), Q)


@dataclass(frozen=True)
class AdmissibilityReport:
    verdict: str  # "pass" | "fail" | "undecided"
    first_violation: tuple[int, int] | None = None  # (k, j)
    undecided_k: int | None = None
    window: int = 64

    def __bool__(self) -> bool:
        return self.verdict == "pass"


def check_admissible(Q: KneadingMap, K: int, window: int = 64) -> AdmissibilityReport:
    """Shifted-sequence dominance test for realizability.

    For each k <= K the tail {Q(k+j)}_{j>=1} must dominate
    {Q(Q(Q(k))+j)}_{j>=1} lexicographically. Each comparison looks at most
    `window` entries ahead; if the two tails agree through the whole window
    the verdict is "undecided" rather than "pass".
    """
    if K < 1:
        raise RuleViolation("K must be >= 1")
    limit = Q.k_max
    undecided: int | None = None
    for k in range(1, K + 1):
        base = Q.q(Q.q(k))
        decided = False
        for j in range(1, window + 1):
            if limit is not None and (k + j > limit or base + j > limit):
                # table ran out with the prefixes still equal: treat as the
                # window ending here
                break
            a = Q.q(k + j)
            b = Q.q(base + j)
            if a > b:
                decided = True
                break
            if a < b:
                return AdmissibilityReport("fail", first_violation=(k, j), window=window)
        if not decided and undecided is None:
            undecided = k
    if undecided is not None:
        return AdmissibilityReport("undecided", undecided_k=undecided, window=window)
    return AdmissibilityReport("pass", window=window)


@dataclass(frozen=True)
class StrictDominanceReport:
    passed: bool
    k0: int | None
    largest_violation: int | None

    def __bool__(self) -> bool:
        return self.passed


def check_strict_hofbauer(Q: KneadingMap, K: int) -> StrictDominanceReport:
    """Least k0 with Q(k+1) > Q(Q(Q(k))+1) for every k0 < k <= K.

    Fails (with the largest violating k) when k = K itself violates, since
    then no k0 < K can work on this range.
    """
    if K < 1:
        raise RuleViolation("K must be >= 1")
    violations = [
        k for k in range(1, K + 1) if Q.q(k + 1) <= Q.q(Q.q(Q.q(k)) + 1)
    ]
    if not violations:
        return StrictDominanceReport(True, 0, None)
    worst = max(violations)
    if worst >= K:
        return StrictDominanceReport(False, None, worst)
    return StrictDominanceReport(True, worst, None)


@dataclass(frozen=True)
class BoundedLagReport:
    n_max: int
    growing: bool


def check_fibonacci_like(Q: KneadingMap, K: int) -> BoundedLagReport:
    """Largest lag k - Q(k) over 1 <= k <= K, flagged if still growing.

    "Growing" means the maximum over the full range exceeds the maximum over
    the first half, i.e. the bound has not stabilized by K.
    """
    if K < 2:
        raise RuleViolation("K must be >= 2")
    lags = [k - Q.q(k) for k in range(1, K + 1)]
    full = max(lags)
    half = max(lags[: max(1, K // 2)])
    return BoundedLagReport(full, growing=full > half)


def check_feigenbaum_periodic(Q: KneadingMap, K: int) -> tuple[int, int] | None:
    """Least (k0, p), lexicographically, with Q(k0) = k0 - 1,
    Q(k) >= k0 - 1 for k0 <= k <= K, and Q(k+p) = Q(k) + p for
    k0 <= k <= K - p. None if no witness exists in range."""
    if K < 3:
        raise RuleViolation("K must be >= 3")
    for k0 in range(1, K - 1):
        if Q.q(k0) != k0 - 1:
            continue
        if any(Q.q(k) < k0 - 1 for k in range(k0, K + 1)):
            continue
        for p in range(1, (K - k0) // 2 + 1):
            if all(Q.q(k + p) == Q.q(k) + p for k in range(k0, K - p + 1)):
                return (k0, p)
    return None


def check_renormalizable(Q: KneadingMap, K: int, strict: bool = True) -> list[int]:
    """Indices k0 whose tail behavior signals a periodic restrictive interval.

    strict (default): k0 >= 2, Q(k0) = k0 - 1 and Q(k) >= k0 for k0 < k <= K.
    The non-strict variant relaxes the tail bound to Q(k) >= k0 - 1 and allows
    k0 = 1; it admits degenerate cases (e.g. Q == 0), which is why it is not
    the default.
    """
    if K < 2:
        raise RuleViolation("K must be >= 2")
    out = []
    lo = 2 if strict else 1
    bound = (lambda k0: k0) if strict else (lambda k0: k0 - 1)
    for k0 in range(lo, K + 1):
        if Q.q(k0) != k0 - 1:
            continue
        if all(Q.q(k) >= bound(k0) for k in range(k0 + 1, K + 1)):
            out.append(k0)
    return out


@dataclass
class _SequenceBuilder:
    """Incrementally extends the symbol sequence generated by Q.

    Block k (indices S_{k-1}+1 .. S_k, 1-based) copies symbols 1..S_{Q(k)}
    with the last one flipped; seeded by symbol(1) = 0. Extension never
    rewrites existing symbols, so prefixes are stable by construction.
    """

    Q: KneadingMap
    symbols: list[int] = field(default_factory=lambda: [0])
    S: list[int] = field(default_factory=lambda: [1])
    k: int = 0

    def extend_to(self, length: int) -> None:
        while len(self.symbols) < length:
            self.k += 1
            if self.Q.k_max is not None and self.k > self.Q.k_max:
                raise RuleViolation(
                    f"rule defined to k = {self.Q.k_max}; cannot extend symbols past S = {self.S[-1]}"
                )
            qk = self.Q.q(self.k)
            block = self.symbols[: self.S[qk]]
            block[-1] ^= 1
            self.symbols.extend(block)
            self.S.append(self.S[-1] + self.S[qk])

    def symbol(self, n: int) -> int:
        """1-based symbol e_n."""
        self.extend_to(n)
        return self.symbols[n - 1]


@dataclass(frozen=True)
class KneadingSequence:
    """Symbols e_1..e_N (0 = negative side, 1 = non-negative side)."""

    symbols: tuple[int, ...]
    source: KneadingMap

    def __len__(self) -> int:
        return len(self.symbols)

    def symbol(self, n: int) -> int:
        if not 1 <= n <= len(self.symbols):
            raise RuleViolation(f"symbol index {n} out of range 1..{len(self.symbols)}")
        return self.symbols[n - 1]


def kneading_sequence_from_Q(Q: KneadingMap, length: int) -> KneadingSequence:
    """Symbol sequence of the critical orbit realizing Q, to `length`."""
    if length < 1:
        raise RuleViolation("length must be >= 1")
    b = _SequenceBuilder(Q)
    b.extend_to(length)
    return KneadingSequence(tuple(b.symbols[:length]), Q)

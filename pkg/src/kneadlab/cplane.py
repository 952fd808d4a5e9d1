"""Complex-plane computations for z -> z^ell + c.

Preimage trees with deterministic root-index paths, truncated
backward-orbit (Poincare-type) series with pruning accounting, the Green
function of the escape basin, the quartic distortion bound, and
wake-angle arithmetic. All complex work runs at the same extended
precision as the real engine: derivative products along deep trees lose
tens of bits, so double precision is not enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2

from .errors import CriticalCollision, PostcriticalBasePoint, RuleViolation
from .extprec import escape_radius, to_decimal, working_precision
from .orbits import UnicriticalMap

__all__ = [
    "PreimageLeaf",
    "PreimageTree",
    "PoincareSummary",
    "GreenResult",
    "WakeAngles",
    "preimages",
    "poincare_partial",
    "green",
    "koebe_bound",
    "wake_angles",
    "sector_check",
]


def as_complex(z, bits: int) -> gmpy2.mpc:
    """Normalize str/number/pair input into an mpc at the given precision."""
    with working_precision(bits):
        if isinstance(z, (gmpy2.mpc, complex)):
            return gmpy2.mpc(z)
        if isinstance(z, (tuple, list)):
            if len(z) != 2:
                raise RuleViolation("complex input pair must have two entries")
            return gmpy2.mpc(gmpy2.mpfr(z[0], bits), gmpy2.mpfr(z[1], bits))
        return gmpy2.mpc(gmpy2.mpfr(z, bits))


def _path_digit(j: int, ell: int) -> str:
    # root indices are single digits for ell <= 10; separate them otherwise
    return str(j) if ell <= 10 else f".{j}"


# ---------------------------------------------------------------------------
# preimage trees


@dataclass(frozen=True)
class PreimageLeaf:
    """One depth-n preimage y with f^n(y) = z.

    path records the root index chosen at each pullback step (base-ell
    string, most recent step last); log_deriv is log|Df^n(y)|.
    """

    path: str
    value: gmpy2.mpc
    log_deriv: gmpy2.mpfr


@dataclass(frozen=True)
class PreimageTree:
    z: gmpy2.mpc
    depth: int
    leaves: tuple
    pruned_mass_bound: gmpy2.mpfr
    bits: int

    def to_csv(self) -> str:
        lines = ["path,re,im,log_deriv"]
        for leaf in self.leaves:
            lines.append(
                "{},{},{},{}".format(
                    leaf.path or "-",
                    to_decimal(leaf.value.real, self.bits),
                    to_decimal(leaf.value.imag, self.bits),
                    to_decimal(leaf.log_deriv, self.bits),
                )
            )
        return "\n".join(lines) + "\n"


def _pull_back_level(fmap, frontier, prune_eps, delta, min_deriv, levels_left):
    """One pullback step for every frontier node, in path order.

    Returns (children, pruned_bound_increment). A node whose value equals
    the second critical value c (so z - c = 0) makes every child collide
    with the critical point; that is a structural error carrying the path.
    """
    ell = fmap.ell
    c = fmap.c
    out = []
    pruned = gmpy2.mpfr(0)
    two_pi = 2 * gmpy2.const_pi()
    for path, value, logd in frontier:
        w = value - c
        if w == 0:
            raise CriticalCollision(
                f"branch value equals the critical value; preimage is the "
                f"critical point (path {path or 'root'})",
                path=path,
            )
        r = gmpy2.rootn(abs(w), ell)
        phi = gmpy2.phase(w)
        # one derivative factor ell * |y|^(ell-1) shared by all ell roots
        log_factor = gmpy2.log(ell) + (ell - 1) * gmpy2.log(r)
        child_logd = logd + log_factor
        real_node = w.imag == 0
        half_turns = 1 if (real_node and w.real < 0) else 0
        for j in range(ell):
            y = None
            if real_node:
                # root angle is pi (half_turns + 2j) / ell: when it is an
                # exact multiple of pi/2 the root snaps onto an axis, so
                # real chains keep producing exact real values and
                # critical collisions are detected reliably
                quarters = 2 * (half_turns + 2 * j)
                if quarters % ell == 0:
                    unit = ((quarters // ell) % 4 + 4) % 4
                    y = (
                        gmpy2.mpc(r, 0),
                        gmpy2.mpc(0, r),
                        gmpy2.mpc(-r, 0),
                        gmpy2.mpc(0, -r),
                    )[unit]
            if y is None:
                y = r * gmpy2.exp(gmpy2.mpc(0, (phi + two_pi * j) / ell))
            if prune_eps > 0:
                weight = gmpy2.exp(-delta * child_logd)
                if weight < prune_eps:
                    ratio = ell * min_deriv ** (-delta)
                    bound = gmpy2.mpfr(0)
                    acc = weight
                    for _ in range(levels_left):
                        bound += acc
                        acc *= ratio
                    pruned += bound
                    continue
            out.append((path + _path_digit(j, ell), y, child_logd))
    return out, pruned


def preimages(
    fmap: UnicriticalMap,
    z,
    depth: int,
    prune_eps=0,
    delta="1",
    min_deriv=None,
) -> PreimageTree:
    """Enumerate the depth-n preimage tree of z with accumulated log|Df^n|.

    Leaves come back sorted by root-index path, so output is deterministic.
    With prune_eps > 0, subtrees whose current weight |Df^m|^-delta falls
    below the threshold are discarded and their possible remaining mass is
    bounded using min_deriv, a caller-supplied lower bound on |Df| near the
    Julia set. Raises CriticalCollision when a branch hits the critical
    point exactly.
    """
    if depth < 0:
        raise RuleViolation("depth must be >= 0")
    bits = fmap.precision_bits
    with working_precision(bits):
        z = as_complex(z, bits)
        delta = gmpy2.mpfr(delta)
        prune_eps = gmpy2.mpfr(prune_eps)
        if prune_eps > 0 and min_deriv is None:
            raise RuleViolation("pruning needs a min_deriv lower bound")
        if min_deriv is not None:
            min_deriv = gmpy2.mpfr(min_deriv)
            if not min_deriv > 0:
                raise RuleViolation("min_deriv must be positive")
        frontier = [("", z, gmpy2.mpfr(0))]
        pruned_total = gmpy2.mpfr(0)
        for level in range(depth):
            frontier, pruned = _pull_back_level(
                fmap, frontier, prune_eps, delta, min_deriv, depth - level
            )
            pruned_total += pruned
        leaves = tuple(PreimageLeaf(p, v, d) for p, v, d in frontier)
        return PreimageTree(z, depth, leaves, pruned_total, bits)


# ---------------------------------------------------------------------------
# truncated backward-orbit series


@dataclass(frozen=True)
class PoincareSummary:
    """Per-level sums sum_{f^n(y)=z} |Df^n(y)|^-delta for n <= depth.

    cumulative[n] is the partial series through level n; pruned_through[n]
    bounds the mass discarded by pruning up to that level, and
    pruned_mass_bound is the final figure.
    """

    z: gmpy2.mpc
    delta: gmpy2.mpfr
    depth: int
    counts: tuple
    level_sums: tuple
    cumulative: tuple
    pruned_through: tuple
    pruned_mass_bound: gmpy2.mpfr
    bits: int

    def to_csv(self) -> str:
        lines = ["level,count,level_sum,cumulative,pruned_bound"]
        for n in range(self.depth + 1):
            lines.append(
                "{},{},{},{},{}".format(
                    n,
                    self.counts[n],
                    to_decimal(self.level_sums[n], self.bits),
                    to_decimal(self.cumulative[n], self.bits),
                    to_decimal(self.pruned_through[n], self.bits),
                )
            )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "z": [to_decimal(self.z.real, self.bits), to_decimal(self.z.imag, self.bits)],
            "delta": to_decimal(self.delta, self.bits),
            "depth": self.depth,
            "counts": list(self.counts),
            "level_sums": [to_decimal(v, self.bits) for v in self.level_sums],
            "cumulative": [to_decimal(v, self.bits) for v in self.cumulative],
            "pruned_mass_bound": to_decimal(self.pruned_mass_bound, self.bits),
        }


def _check_base_point(fmap: UnicriticalMap, z, depth: int) -> None:
    """Reject z lying on the forward critical orbit within `depth` steps.

    The critical orbit of a real map is real, so complex z passes unless
    its imaginary part is zero and its real part hits an orbit value
    exactly.
    """
    if z.imag != 0:
        return
    x = z.real
    v = gmpy2.mpfr(0)
    R = escape_radius(fmap.c)
    for n in range(1, depth + 1):
        v = fmap.step(v)
        if v == x:
            raise PostcriticalBasePoint(
                f"base point equals f^{n}(0); backward orbit would hit the "
                f"critical point"
            )
        if abs(v) > R:
            break


def poincare_partial(
    fmap: UnicriticalMap,
    z,
    delta,
    depth: int,
    prune_eps=0,
    min_deriv=None,
) -> PoincareSummary:
    """Truncate the backward-orbit series at `depth` levels.

    Level n sums |Df^n(y)|^-delta over the ell^n preimages f^n(y) = z;
    level 0 contributes exactly 1. The base point must stay off the
    forward critical orbit through `depth` steps, which also rules out
    in-tree critical collisions to that depth.
    """
    if depth < 0:
        raise RuleViolation("depth must be >= 0")
    bits = fmap.precision_bits
    with working_precision(bits):
        z = as_complex(z, bits)
        delta = gmpy2.mpfr(delta)
        prune_eps = gmpy2.mpfr(prune_eps)
        if prune_eps > 0 and min_deriv is None:
            raise RuleViolation("pruning needs a min_deriv lower bound")
        if min_deriv is not None:
            min_deriv = gmpy2.mpfr(min_deriv)
            if not min_deriv > 0:
                raise RuleViolation("min_deriv must be positive")
        _check_base_point(fmap, z, depth)

        counts = [1]
        level_sums = [gmpy2.mpfr(1)]
        cumulative = [gmpy2.mpfr(1)]
        pruned_through = [gmpy2.mpfr(0)]
        pruned_total = gmpy2.mpfr(0)
        frontier = [("", z, gmpy2.mpfr(0))]
        for level in range(1, depth + 1):
            frontier, pruned = _pull_back_level(
                fmap, frontier, prune_eps, delta, min_deriv, depth - level + 1
            )
            pruned_total += pruned
            s = gmpy2.mpfr(0)
            for _, _, logd in frontier:
                s += gmpy2.exp(-delta * logd)
            counts.append(len(frontier))
            level_sums.append(s)
            cumulative.append(cumulative[-1] + s)
            pruned_through.append(pruned_total)
        return PoincareSummary(
            z,
            delta,
            depth,
            tuple(counts),
            tuple(level_sums),
            tuple(cumulative),
            tuple(pruned_through),
            pruned_total,
            bits,
        )


# ---------------------------------------------------------------------------
# Green function of the escape basin


@dataclass(frozen=True)
class GreenResult:
    """Escape-rate potential at z: lim log|f^n(z)| / ell^n.

    A bounded orbit through the cutoff reports value 0 with the
    bounded_through_cutoff flag set; tail_bound caps the truncation error
    of an escaping evaluation.
    """

    value: gmpy2.mpfr
    escaped: bool
    steps: int
    tail_bound: gmpy2.mpfr
    bounded_through_cutoff: bool


def green(fmap: UnicriticalMap, z, tol="1e-30", max_steps: int = 4096) -> GreenResult:
    """Evaluate the escape potential by iterating past the escape radius.

    Past |w| > R the per-step defect |log|f(w)| - ell log|w|| is at most
    log(1 + |c| / (|w|^ell - |c|)), and successive defects shrink at least
    geometrically, so iteration stops once the summed tail drops below tol.
    """
    bits = fmap.precision_bits
    ell = fmap.ell
    with working_precision(bits):
        w = as_complex(z, bits)
        tol = gmpy2.mpfr(tol)
        if not tol > 0:
            raise RuleViolation("tol must be positive")
        c = fmap.c
        R = escape_radius(c)
        n = 0
        while abs(w) <= R:
            if n >= max_steps:
                return GreenResult(gmpy2.mpfr(0), False, n, gmpy2.mpfr(0), True)
            w = w**ell + c
            n += 1
        ell_r = gmpy2.mpfr(ell)
        while True:
            aw = abs(w)
            defect = gmpy2.log1p(abs(c) / (aw**ell - abs(c)))
            tail = defect * ell_r ** (-(n + 1)) / (1 - 1 / ell_r)
            if tail < tol or n >= max_steps:
                value = gmpy2.log(aw) * ell_r ** (-n)
                return GreenResult(value, True, n, tail, False)
            w = w**ell + c
            n += 1


# ---------------------------------------------------------------------------
# distortion bound


def koebe_bound(r):
    """Quartic distortion bound (1+r)^4 / (1-r)^4 for 0 <= r < 1."""
    with working_precision(128):
        r = gmpy2.mpfr(r)
        if not 0 <= r < 1:
            raise RuleViolation("distortion radius must satisfy 0 <= r < 1")
        return (1 + r) ** 4 / (1 - r) ** 4


# ---------------------------------------------------------------------------
# wake angles


@dataclass(frozen=True)
class WakeAngles:
    """External-angle data of the ell wakes cut by one landing-ray pair.

    alphas[k] = alpha + 2 pi k / ell and alphas_tilde[k] = -alpha +
    2 pi k / ell (reduced mod 2 pi) bound wake k; T_ell lists the ell
    symmetric angles (2k+1) pi / ell.
    """

    ell: int
    alpha: gmpy2.mpfr
    alphas: tuple
    alphas_tilde: tuple
    T_ell: tuple
    bits: int

    def to_json_dict(self) -> dict:
        return {
            "ell": self.ell,
            "alpha": to_decimal(self.alpha, self.bits),
            "alphas": [to_decimal(a, self.bits) for a in self.alphas],
            "alphas_tilde": [to_decimal(a, self.bits) for a in self.alphas_tilde],
            "T_ell": [to_decimal(a, self.bits) for a in self.T_ell],
        }


def wake_angles(ell: int, alpha="0", bits: int = 128) -> WakeAngles:
    """Angle lists for the wakes of z -> z^ell + c at ray angle alpha."""
    if ell < 2 or ell % 2:
        raise RuleViolation("ell must be even and >= 2")
    with working_precision(bits):
        alpha = gmpy2.mpfr(alpha, bits)
        two_pi = 2 * gmpy2.const_pi()
        if not 0 <= alpha < two_pi / ell:
            raise RuleViolation("alpha must lie in [0, 2 pi / ell)")

        def mod2pi(a):
            while a < 0:
                a += two_pi
            while a >= two_pi:
                a -= two_pi
            return a

        alphas = tuple(mod2pi(alpha + two_pi * k / ell) for k in range(ell))
        tilde = tuple(mod2pi(-alpha + two_pi * k / ell) for k in range(ell))
        T = tuple((2 * k + 1) * gmpy2.const_pi() / ell for k in range(ell))
        return WakeAngles(ell, alpha, alphas, tilde, T, bits)


def sector_check(ell: int, k: int) -> bool:
    """Whether wake k provably stays in the angle sector
    (2 pi / ell, (ell-1) pi / ell).

    External rays cannot cross the real axis, so at every radius the
    angles met by wake k lie in (2 pi (k-1) / ell, 2 pi k / ell]. All the
    angles involved are rational multiples of pi, so sector containment
    reduces to exact integer comparisons on the numerators: the lower end
    needs 2(k-1) >= 2 and the upper end needs 2k <= ell - 1.
    """
    if ell < 2 or ell % 2:
        raise RuleViolation("ell must be even and >= 2")
    if not 0 <= k < ell:
        raise RuleViolation(f"wake index k = {k} outside 0..{ell - 1}")
    return 2 * (k - 1) >= 2 and 2 * k <= ell - 1

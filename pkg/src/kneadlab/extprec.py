"""Extended-precision helpers on top of gmpy2/MPFR.

All numeric kernels in this package run inside an explicit precision context;
nothing relies on the process-global default. Decimal output is sized to the
working precision so round-trips do not silently lose bits.
"""

from __future__ import annotations

import math

import gmpy2


def working_precision(bits: int):
    """Context manager setting MPFR/MPC precision to `bits` for the block."""
    if bits < 8:
        raise ValueError(f"precision too small: {bits}")
    return gmpy2.context(precision=bits)


def real(value, bits: int):
    """Build an mpfr from a string/int/float at an explicit precision."""
    return gmpy2.mpfr(value, bits)


def decimal_digits(bits: int) -> int:
    # log10(2) = 0.30103...; one guard digit
    return max(8, int(bits * 0.30103) + 1)


def to_decimal(x, bits: int) -> str:
    """Deterministic scientific-notation string with bits-worth of digits.

    gmpy2's __format__ is unreliable in some builds, so the string is
    assembled from gmpy2.digits directly.
    """
    x = gmpy2.mpfr(x)
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "-inf" if x < 0 else "inf"
    if x == 0:
        return "0"
    nd = decimal_digits(bits)
    digs, exp, _ = gmpy2.digits(x, 10, nd)
    sign = ""
    if digs.startswith("-"):
        sign = "-"
        digs = digs[1:]
    mantissa = digs[0] + "." + digs[1:]
    return f"{sign}{mantissa}e{exp - 1:+03d}"


def escape_radius(c) -> gmpy2.mpfr:
    """Radius beyond which orbits of x -> x^ell + c provably escape."""
    return gmpy2.mpfr(max(gmpy2.mpfr(2), abs(gmpy2.mpfr(c)) + 2))


class LogAbsProduct:
    """Accumulates log|prod a_i| without under/overflow.

    Keeps a mantissa in a bounded range via frexp and an integer exponent;
    one log() call at the end. Tracks an exact zero separately.
    """

    __slots__ = ("mantissa", "exponent", "zero")

    def __init__(self):
        self.mantissa = gmpy2.mpfr(1)
        self.exponent = 0
        self.zero = False

    def mul(self, factor):
        if self.zero:
            return
        if factor == 0:
            self.zero = True
            return
        m = self.mantissa * abs(factor)
        e, m = gmpy2.frexp(m)
        self.exponent += e
        self.mantissa = m

    def log(self):
        """Natural log of the accumulated |product| (mpfr; -inf if zero)."""
        if self.zero:
            return gmpy2.mpfr("-inf")
        return gmpy2.log(self.mantissa) + self.exponent * gmpy2.const_log2()


def float_log(x) -> float:
    """Python float of log|x| for report-level math; -inf on zero."""
    if x == 0:
        return -math.inf
    return float(gmpy2.log(abs(gmpy2.mpfr(x))))

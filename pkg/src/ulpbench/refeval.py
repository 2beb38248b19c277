"""High-precision reference values and the ULP error of a native result.

References come from MPFR (through gmpy2) and are correctly rounded to
nearest at the policy precision.  All evaluation goes through explicit
``gmpy2.context`` objects: no process-wide rounding state is touched, so a
worker can own one context per format and reuse it for every point.

The error of a native result ``y`` against a reference ``f`` is
``|y - f| / ulp(RZ(f))``.  The denominator is obtained from the
round-to-nearest value of ``f`` and halved when that rounding climbed onto
a power of two, which is exactly where RN and RZ disagree about the binade.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import gmpy2

from .fpcore import (
    FloatFormat,
    RoundingMode,
    floor_log2,
    is_nonfinite,
    is_power_of_two,
    round_to_format,
    ulp,
)

POLICY_BITS = {"binary16": 31, "binary32": 44, "binary64": 73}

# guard bits for the pi-scaled functions before the final rounding to policy bits
_PI_GUARD = 64


class DomainError(ValueError):
    """Input lies outside the function's mathematical domain."""


class NaNResultError(ValueError):
    """The native result is NaN; never converted into a numeric error."""


class SkipReason(str, enum.Enum):
    ASYMPTOTE = "asymptote"  # reference not finite in the format (tanpi poles)
    OVERFLOW = "overflow"  # reference overflows a domain that should prevent it
    DOMAIN = "domain"  # reference undefined at x
    NATIVE_INFINITE = "native-infinite"  # native +-inf against a finite reference


def policy_bits(fmt: FloatFormat) -> int:
    return POLICY_BITS.get(fmt.name, fmt.p + 20)


def make_context(bits: int) -> gmpy2.context:
    return gmpy2.context(precision=bits, round=gmpy2.RoundToNearest)


# ---------------------------------------------------------------------------
# pi-scaled trigonometry; MPFR 4.2 has them but gmpy2 does not bind them.
# Arguments are reduced exactly (x is dyadic with at most 53 bits), folded into
# [0, 1/2] and evaluated with guard bits so cancellation never bites.


def _fold(ctx):
    # 1100 bits hold x mod 2 and 1 - r exactly for every binary64 x
    return gmpy2.context(precision=ctx.precision + _PI_GUARD), gmpy2.context(precision=1100)


def _sinpi(ctx, x):
    wide, exact = _fold(ctx)
    negative = x < 0
    r = exact.fmod(exact.abs(x), 2)
    if r >= 1:
        negative = not negative
        r = exact.sub(r, 1)
    if r > gmpy2.mpfr(0.5):
        r = exact.sub(1, r)
    if r == 0:
        y = gmpy2.mpfr(0)
    elif r == 0.5:
        y = gmpy2.mpfr(1)
    elif r <= 0.25:
        y = wide.sin(wide.mul(wide.const_pi(), r))
    else:
        y = wide.cos(wide.mul(wide.const_pi(), exact.sub(0.5, r)))
    y = ctx.plus(y)
    return ctx.minus(y) if negative else y


def _cospi(ctx, x):
    wide, exact = _fold(ctx)
    negative = False
    r = exact.fmod(exact.abs(x), 2)
    if r >= 1:
        negative = True
        r = exact.sub(r, 1)
    if r > 0.5:
        negative = not negative
        r = exact.sub(1, r)
    if r == 0:
        y = gmpy2.mpfr(1)
    elif r == 0.5:
        return gmpy2.mpfr(0)
    elif r < 0.25:
        y = wide.cos(wide.mul(wide.const_pi(), r))
    else:
        y = wide.sin(wide.mul(wide.const_pi(), exact.sub(0.5, r)))
    y = ctx.plus(y)
    return ctx.minus(y) if negative else y


def _tanpi(ctx, x):
    wide, exact = _fold(ctx)
    negative = x < 0
    r = exact.fmod(exact.abs(x), 1)
    if r > 0.5:
        negative = not negative
        r = exact.sub(1, r)
    if r == 0:
        y = gmpy2.mpfr(0)
    elif r == 0.5:
        y = gmpy2.inf()
    elif r == 0.25:
        y = gmpy2.mpfr(1)
    elif r < 0.25:
        y = wide.tan(wide.mul(wide.const_pi(), r))
    else:
        y = wide.div(1, wide.tan(wide.mul(wide.const_pi(), exact.sub(0.5, r))))
    y = ctx.plus(y)
    return ctx.minus(y) if negative else y


_MPFR_NAMES = {
    "acos": "acos",
    "acosh": "acosh",
    "asin": "asin",
    "asinh": "asinh",
    "atan": "atan",
    "atanh": "atanh",
    "cbrt": "cbrt",
    "cos": "cos",
    "cosh": "cosh",
    "exp": "exp",
    "exp10": "exp10",
    "exp2": "exp2",
    "log": "log",
    "log10": "log10",
    "log1p": "log1p",
    "log2": "log2",
    "sin": "sin",
    "sinh": "sinh",
    "sqrt": "sqrt",
    "tan": "tan",
    "tanh": "tanh",
}
_CUSTOM = {"sinpi": _sinpi, "cospi": _cospi, "tanpi": _tanpi}

REFERENCE_IDS = tuple(sorted(list(_MPFR_NAMES) + list(_CUSTOM)))


def evaluate_in(ctx: gmpy2.context, func_id: str, x: float):
    """Reference f(x) rounded to nearest at ``ctx.precision`` bits."""
    xm = gmpy2.mpfr(x, 53)
    if func_id in _CUSTOM:
        y = _CUSTOM[func_id](ctx, xm)
    else:
        try:
            y = getattr(ctx, _MPFR_NAMES[func_id])(xm)
        except KeyError:
            raise ValueError(f"unknown reference function {func_id!r}") from None
    if gmpy2.is_nan(y):
        raise DomainError(f"{func_id}({x!r}) is outside the mathematical domain")
    return y


def reference_eval(func_id: str, x: float, bits: int):
    """Correctly rounded (RN) reference value of ``func_id`` at ``x``."""
    return evaluate_in(make_context(bits), func_id, x)


# ---------------------------------------------------------------------------
# error metric


def check_no_overflow(ref_value, fmt: FloatFormat) -> bool:
    """True iff truncating ``ref_value`` to p bits stays within f_max.

    Truncation with an unbounded exponent exceeds f_max exactly when
    |ref| >= 2^(emax+1); references between f_max and that bound truncate
    back onto f_max.
    """
    if is_nonfinite(ref_value):
        return False
    if ref_value == 0:
        return True
    return floor_log2(ref_value) <= fmt.emax


def ulp_rz_of_reference(ref_value, fmt: FloatFormat) -> float:
    """ulp(RZ(ref_value)) without ever rounding toward zero."""
    if not check_no_overflow(ref_value, fmt):
        raise OverflowError(f"reference {ref_value} overflows {fmt.name} under RZ")
    rn = round_to_format(ref_value, fmt, RoundingMode.RN)
    if math.isinf(rn):
        # RN went past f_max (conceptually onto 2^(emax+1)); RZ sits on f_max
        return ulp(fmt.f_max, fmt)
    u = ulp(rn, fmt)
    # sign-aware comparison: abs() on an mpfr would round through the global context
    climbed = rn > ref_value if rn > 0 else rn < ref_value
    if rn != 0 and climbed and is_power_of_two(rn):
        if fmt.emin + 1 <= floor_log2(rn) <= fmt.emax:
            u /= 2
    return u


def ulp_error(native_out: float, ref_value, fmt: FloatFormat, ctx: gmpy2.context | None = None) -> float:
    """|native_out - ref_value| / ulp(RZ(ref_value)) as a float.

    The subtraction is carried out at the reference precision (``ctx``, or
    the reference's own precision); the division by a power of two is exact.
    """
    if math.isnan(native_out):
        raise NaNResultError("native result is NaN")
    if math.isinf(native_out):
        return math.inf
    denom = ulp_rz_of_reference(ref_value, fmt)
    if ctx is None:
        ctx = make_context(max(getattr(ref_value, "precision", 0), 53))
    diff = ctx.abs(ctx.sub(gmpy2.mpfr(native_out, 53), ref_value))
    return float(ctx.div(diff, gmpy2.mpfr(denom, 53)))


@dataclass
class ErrorRecord:
    x: float
    native_out: float
    ref_value: object | None = None
    err_ulps: float | None = None
    skipped: SkipReason | None = None
    nan_failure: bool = False

    @property
    def measured(self) -> bool:
        return self.err_ulps is not None


def reference_decimal(ref_value) -> str:
    """Shortest decimal that parses back (RN) to ``ref_value`` at its own precision."""
    from decimal import Context, ROUND_HALF_EVEN

    from .fpcore import _exact_decimal, _plain

    if is_nonfinite(ref_value):
        return str(ref_value)
    if ref_value == 0:
        return "0.0"
    bits = ref_value.precision
    n, d = ref_value.as_integer_ratio()
    exact = _exact_decimal(int(n), int(d))
    for digits in range(1, bits):
        s = Context(prec=digits, rounding=ROUND_HALF_EVEN).plus(exact)
        text = _plain(s)
        if gmpy2.mpfr(text, bits) == ref_value:
            return text
    return _plain(exact)

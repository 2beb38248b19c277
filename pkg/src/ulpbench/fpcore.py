"""Binary floating-point formats, exact rounding, ULPs and ordered enumeration.

Every format handled here is a subset of binary64, so "format values" are
plain Python floats (or float64 arrays).  High-precision inputs to
:func:`round_to_format` and :func:`ulp` may be anything exposing
``as_integer_ratio`` (int, float, Fraction, gmpy2.mpfr, gmpy2.mpq).

Rank space collapses -0 and +0 into one rank, so a format has
``2 * max_code + 1`` ranks while :attr:`FloatFormat.finite_count` counts
finite *encodings* (both zeros), as IEEE tables do.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class RoundingMode(str, enum.Enum):
    RN = "RN"  # nearest, ties to even
    RU = "RU"  # toward +inf
    RD = "RD"  # toward -inf
    RZ = "RZ"  # toward zero


@dataclass(frozen=True)
class FloatFormat:
    """A binary format F<emin, emax, p>."""

    name: str
    emin: int
    emax: int
    p: int
    total_width: int | None = None

    def __post_init__(self):
        if self.emin != 1 - self.emax:
            raise ValueError(f"{self.name}: emin must equal 1 - emax")
        if self.p < 2:
            raise ValueError(f"{self.name}: precision must be at least 2")
        if self.p > 53 or self.emax > 1023:
            raise ValueError(f"{self.name}: formats wider than binary64 are not supported")
        if self.total_width is not None:
            exp_bits = self.total_width - self.p
            if exp_bits < 2 or (1 << exp_bits) - 2 != self.emax - self.emin + 1:
                raise ValueError(f"{self.name}: total_width inconsistent with emin/emax/p")

    @property
    def s_min(self) -> float:
        return math.ldexp(1.0, self.emin - self.p + 1)

    @property
    def f_min(self) -> float:
        return math.ldexp(1.0, self.emin)

    @property
    def f_max(self) -> float:
        return math.ldexp((1 << self.p) - 1, self.emax - self.p + 1)

    @property
    def u(self) -> float:
        return math.ldexp(1.0, -self.p)

    @property
    def max_code(self) -> int:
        """Magnitude code of f_max (the unsigned encoding without sign bit)."""
        return ((self.emax - self.emin + 2) << (self.p - 1)) - 1

    @property
    def finite_count(self) -> int:
        """Number of finite encodings, counting -0 and +0 separately."""
        return 2 * (self.max_code + 1)

    @property
    def rank_count(self) -> int:
        return 2 * self.max_code + 1

    @property
    def hex_digits(self) -> int:
        if self.total_width is None:
            raise ValueError(f"{self.name} has no interchange encoding width")
        return self.total_width // 4


BINARY16 = FloatFormat("binary16", -14, 15, 11, 16)
BFLOAT16 = FloatFormat("bfloat16", -126, 127, 8, 16)
BINARY32 = FloatFormat("binary32", -126, 127, 24, 32)
BINARY64 = FloatFormat("binary64", -1022, 1023, 53, 64)

FORMATS = {f.name: f for f in (BINARY16, BFLOAT16, BINARY32, BINARY64)}

NUMPY_DTYPES = {"binary16": np.float16, "binary32": np.float32, "binary64": np.float64}


def get_format(name: str) -> FloatFormat:
    try:
        return FORMATS[name]
    except KeyError:
        raise ValueError(f"unknown format {name!r}") from None


# ---------------------------------------------------------------------------
# exact helpers


def _ratio(x) -> tuple[int, int]:
    if isinstance(x, Fraction):
        return x.numerator, x.denominator
    n, d = x.as_integer_ratio()
    return int(n), int(d)


def _floor_log2(n: int, d: int) -> int:
    """floor(log2(n/d)) for positive integers n, d."""
    e = n.bit_length() - d.bit_length()
    if e >= 0:
        if n < (d << e):
            e -= 1
    elif (n << -e) < d:
        e -= 1
    return e


def floor_log2(x) -> int:
    """Exact floor(log2|x|) of a nonzero finite extended real."""
    n, d = _ratio(x)
    if n == 0:
        raise ValueError("floor_log2 of zero")
    return _floor_log2(abs(n), d)


def is_nonfinite(x) -> bool:
    """True for +-inf/NaN of any supported real type (mpfr beyond binary64 range is finite)."""
    if isinstance(x, (int, Fraction)):
        return False
    if isinstance(x, float):
        return not math.isfinite(x)
    method = getattr(x, "is_finite", None)
    if method is not None:
        return not method()
    try:
        return not math.isfinite(x)
    except OverflowError:
        return False


# ---------------------------------------------------------------------------
# rounding and ULP


def round_to_format(x, fmt: FloatFormat, mode: RoundingMode = RoundingMode.RN) -> float:
    """Round an extended real to ``fmt`` under ``mode``.

    Correct for the value ``x`` actually carries; a reference approximated to
    q bits is only mode-correct relative to that approximation.
    """
    mode = RoundingMode(mode)
    if is_nonfinite(x):
        return float(x)
    n, d = _ratio(x)
    if n == 0:
        return math.copysign(0.0, float(x)) if isinstance(x, float) else 0.0
    negative = n < 0
    n = abs(n)
    q = max(_floor_log2(n, d), fmt.emin) - fmt.p + 1
    if q >= 0:
        m, r = divmod(n, d << q)
        half = d << q
    else:
        m, r = divmod(n << -q, d)
        half = d
    if r:
        if mode is RoundingMode.RN:
            twice = 2 * r
            if twice > half or (twice == half and m & 1):
                m += 1
        elif mode is RoundingMode.RU and not negative:
            m += 1
        elif mode is RoundingMode.RD and negative:
            m += 1
    away = (
        mode is RoundingMode.RN
        or (mode is RoundingMode.RU and not negative)
        or (mode is RoundingMode.RD and negative)
    )
    top = fmt.emax - fmt.p + 1
    if q > top or (q == top and m >= (1 << fmt.p)):
        mag = math.inf if away else fmt.f_max
    else:
        mag = math.ldexp(m, q)
    return -mag if negative else mag


def ulp(x, fmt: FloatFormat) -> float:
    """ULP of an extended real in ``fmt``: 2^(max(emin, floor(log2|x|)) - p + 1)."""
    if is_nonfinite(x):
        raise ValueError("ulp of a non-finite value")
    n, d = _ratio(x)
    if n == 0:
        return fmt.s_min
    return math.ldexp(1.0, max(fmt.emin, _floor_log2(abs(n), d)) - fmt.p + 1)


def is_power_of_two(x: float) -> bool:
    m, _ = math.frexp(abs(x))
    return m == 0.5


# ---------------------------------------------------------------------------
# codes, ranks, neighbours


def magnitude_code(x: float, fmt: FloatFormat) -> int:
    """Unsigned encoding (exponent field and trailing significand) of |x|."""
    a = abs(x)
    if not math.isfinite(a) or a > fmt.f_max:
        raise ValueError(f"{x!r} is not a finite {fmt.name} value")
    if a == 0.0:
        return 0
    m, e = math.frexp(a)
    exponent = e - 1
    if exponent < fmt.emin:
        code = a / fmt.s_min
        if code != int(code):
            raise ValueError(f"{x!r} is not representable in {fmt.name}")
        return int(code)
    sig = math.ldexp(m, fmt.p)
    if sig != int(sig):
        raise ValueError(f"{x!r} is not representable in {fmt.name}")
    return ((exponent - fmt.emin + 1) << (fmt.p - 1)) | (int(sig) - (1 << (fmt.p - 1)))


def value_of_code(code: int, fmt: FloatFormat) -> float:
    efield = code >> (fmt.p - 1)
    frac = code & ((1 << (fmt.p - 1)) - 1)
    if efield == 0:
        return math.ldexp(frac, fmt.emin - fmt.p + 1)
    return math.ldexp(frac | (1 << (fmt.p - 1)), efield + fmt.emin - fmt.p)


def rank(x: float, fmt: FloatFormat) -> int:
    """Order-preserving index of a finite format value in [0, rank_count)."""
    code = magnitude_code(x, fmt)
    return fmt.max_code + (-code if x < 0 else code)


def unrank(i: int, fmt: FloatFormat) -> float:
    if not 0 <= i < fmt.rank_count:
        raise IndexError(f"rank {i} outside [0, {fmt.rank_count}) for {fmt.name}")
    signed = i - fmt.max_code
    v = value_of_code(abs(signed), fmt)
    return -v if signed < 0 else v


def next_up(x: float, fmt: FloatFormat) -> float:
    """Smallest format value above ``x``; +inf past f_max."""
    if not math.isfinite(x):
        raise ValueError("next_up of a non-finite value")
    r = rank(x, fmt) + 1
    return math.inf if r == fmt.rank_count else unrank(r, fmt)


def next_down(x: float, fmt: FloatFormat) -> float:
    if not math.isfinite(x):
        raise ValueError("next_down of a non-finite value")
    r = rank(x, fmt) - 1
    return -math.inf if r < 0 else unrank(r, fmt)


def signed_codes(values: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    """Vectorised rank - max_code for an array of finite format values."""
    values = np.asarray(values, dtype=np.float64)
    a = np.abs(values)
    m, e = np.frexp(a)
    exponent = e.astype(np.int64) - 1
    sub = (exponent < fmt.emin) | (a == 0)
    sig = np.where(
        sub,
        np.ldexp(a, -(fmt.emin - fmt.p + 1)),
        np.ldexp(m, fmt.p) - (1 << (fmt.p - 1)),
    ).astype(np.int64)
    efield = np.where(sub | (a == 0), 0, exponent - fmt.emin + 1)
    code = (efield << (fmt.p - 1)) | sig
    return np.where(values < 0, -code, code)


def decode_signed_codes(signed: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    """Vectorised inverse of :func:`signed_codes` (float64 result)."""
    signed = np.asarray(signed, dtype=np.int64)
    mag = np.abs(signed)
    efield = mag >> (fmt.p - 1)
    frac = mag & ((1 << (fmt.p - 1)) - 1)
    sig = np.where(efield > 0, frac | (1 << (fmt.p - 1)), frac)
    exp = np.maximum(efield, 1) + (fmt.emin - fmt.p)
    vals = np.ldexp(sig.astype(np.float64), exp.astype(np.int32))
    return np.where(signed < 0, -vals, vals)


def ranks_to_values(start: int, stride: int, count: int, fmt: FloatFormat) -> np.ndarray:
    """Values at ranks start, start+stride, ... (count of them).

    Offsets are built in batches small enough that int64 never overflows,
    which matters for binary64 where the rank range exceeds 2^63.
    """
    out = np.empty(count, dtype=np.float64)
    batch = max(1, min(count, (1 << 62) // max(stride, 1)))
    done = 0
    while done < count:
        n = min(batch, count - done)
        base = start + done * stride - fmt.max_code
        signed = np.int64(base) + np.arange(n, dtype=np.int64) * np.int64(stride)
        out[done : done + n] = decode_signed_codes(signed, fmt)
        done += n
    return out


def all_finite_values(fmt: FloatFormat) -> np.ndarray:
    """Every finite value in rank order (one zero).  Small formats only."""
    if fmt.rank_count > 1 << 26:
        raise ValueError(f"refusing to materialise {fmt.rank_count} values of {fmt.name}")
    return decode_signed_codes(np.arange(-fmt.max_code, fmt.max_code + 1, dtype=np.int64), fmt)


# ---------------------------------------------------------------------------
# interchange encodings (uppercase hex)

_HEX = re.compile(r"^[0-9A-Fa-f]+$")


def encode_bits(x: float, fmt: FloatFormat) -> int:
    w = fmt.total_width
    if w is None:
        raise ValueError(f"{fmt.name} has no interchange encoding width")
    sign = 1 if math.copysign(1.0, x) < 0 else 0
    if math.isnan(x):
        return (fmt.max_code + 1) | (1 << (fmt.p - 2))
    if math.isinf(x):
        code = fmt.max_code + 1
    else:
        code = magnitude_code(x, fmt)
    return (sign << (w - 1)) | code


def decode_bits(bits: int, fmt: FloatFormat) -> float:
    w = fmt.total_width
    if w is None:
        raise ValueError(f"{fmt.name} has no interchange encoding width")
    if not 0 <= bits < (1 << w):
        raise ValueError(f"{bits:#x} does not fit in {w} bits")
    sign = -1.0 if bits >> (w - 1) else 1.0
    code = bits & ((1 << (w - 1)) - 1)
    if code > fmt.max_code:
        return sign * math.inf if code == fmt.max_code + 1 else math.nan
    return math.copysign(value_of_code(code, fmt), sign)


def encode_hex(x: float, fmt: FloatFormat) -> str:
    return f"{encode_bits(x, fmt):0{fmt.hex_digits}X}"


def decode_hex(s: str, fmt: FloatFormat) -> float:
    s = s.strip()
    if s[:2] in ("0x", "0X"):
        s = s[2:]
    if len(s) != fmt.hex_digits or not _HEX.match(s):
        raise ValueError(f"malformed {fmt.name} hex encoding {s!r}")
    return decode_bits(int(s, 16), fmt)


def count_finite_encodings(fmt: FloatFormat) -> int:
    """Count finite values by decoding every bit pattern (16-bit formats)."""
    if fmt.total_width is None or fmt.total_width > 16:
        raise ValueError("enumeration is only offered for 16-bit formats")
    return sum(1 for b in range(1 << fmt.total_width) if math.isfinite(decode_bits(b, fmt)))


# ---------------------------------------------------------------------------
# decimal rendering


def _exact_decimal(n: int, d: int):
    from decimal import Decimal

    k = d.bit_length() - 1
    if d != 1 << k:
        raise ValueError("only dyadic values have exact decimal expansions")
    return Decimal(n * 5**k).scaleb(-k)


def shortest_decimal(x: float, fmt: FloatFormat) -> str:
    """Shortest decimal string that rounds (RN) back to the format value ``x``."""
    if not math.isfinite(x):
        return repr(x)
    if x == 0:
        return "-0.0" if math.copysign(1.0, x) < 0 else "0.0"
    from decimal import Context, ROUND_HALF_EVEN

    exact = _exact_decimal(*_ratio(x))
    for digits in range(1, 40):
        s = Context(prec=digits, rounding=ROUND_HALF_EVEN).plus(exact)
        if round_to_format(Fraction(s), fmt, RoundingMode.RN) == x:
            return _plain(s)
    raise AssertionError("no round-tripping decimal found")  # pragma: no cover


def _plain(d) -> str:
    """Render a Decimal like Python's float repr (plain for moderate exponents)."""
    exp = d.adjusted()
    if -5 <= exp < 17:
        s = format(d, "f")
        return s if "." in s else s + ".0"
    mant = format(d.scaleb(-exp), "f")
    if "." not in mant:
        mant += ".0"
    return f"{mant}e{exp:+03d}"


def parse_decimal(s: str, fmt: FloatFormat) -> float:
    """Parse a decimal string and round it (RN) into ``fmt``."""
    s = s.strip()
    if s.lower() in ("inf", "+inf", "-inf", "nan"):
        return float(s)
    return round_to_format(Fraction(s), fmt, RoundingMode.RN)

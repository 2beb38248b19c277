"""The functions under test, their exact input domains and special inputs.

binary16 and binary32 domains are the published tables, written out
verbatim except for one binary32 exp10 endpoint that overflows.  Any other format (binary64 in particular) gets its domain derived
from the same formulas the tables follow: exp-like functions take
[RU(log_b(s_min)), RD(log_b(f_max))], tanh stops before the result rounds to
1, cosh/sinh stop at RD(acosh(f_max)) / RD(asinh(f_max)).
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import gmpy2

from . import native
from .fpcore import (
    BINARY16,
    BINARY32,
    BINARY64,
    FloatFormat,
    RoundingMode,
    decode_hex,
    get_format,
    next_down,
    next_up,
    rank,
    round_to_format,
)
from .refeval import DomainError, check_no_overflow, make_context, policy_bits, reference_eval

log = logging.getLogger(__name__)

FUNCTION_NAMES = (
    "acos", "acosh", "asin", "asinh", "atan", "atanh", "cbrt", "cos",
    "cosh", "exp", "exp10", "exp2", "log", "log10", "log1p", "log2",
    "sin", "sinh", "sqrt", "tan", "tanh", "cospi", "sinpi", "tanpi",
)  # fmt: skip

REGISTRY_FORMATS = (BINARY16, BINARY32, BINARY64)

# precision used when deriving domain endpoints; far beyond any rounding ambiguity
_DERIVE_BITS = 256


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def rank_range(self, fmt: FloatFormat) -> tuple[int, int]:
        """Half-open rank range [lo, hi) covered by the interval."""
        return rank(self.lo, fmt), rank(self.hi, fmt) + 1

    def size(self, fmt: FloatFormat) -> int:
        lo, hi = self.rank_range(fmt)
        return hi - lo


_TABLES = {
    "binary16": {
        "cosh": (-11.78125, 11.78125),
        "exp": (-16.625, 11.0859375),
        "exp10": (-7.22265625, 4.8125),
        "exp2": (-24.0, 15.9921875),
        "sinh": (-11.78125, 11.78125),
        "tanh": (-4.50390625, 4.50390625),
    },
    "binary32": {
        "cosh": (-89.415985107421875, 89.415985107421875),
        "exp": (-103.27892303466796875, 88.72283172607421875),
        # the published upper bound 38.531841278076171875 is one ulp too high:
        # 10**x >= 2**128 there, so even RZ overflows
        "exp10": (-44.853466033935546875, 38.53183746337890625),
        "exp2": (-149.0, 127.99999237060546875),
        "sinh": (-89.415985107421875, 89.415985107421875),
        "tanh": (-9.01091289520263671875, 9.01091289520263671875),
    },
}

# symbolic entries: "fmax", "smin", "up(-1)" (nextfloat), "down(1)" (prevfloat)
_STRUCTURAL = {
    "acos": ("-1", "1"),
    "asin": ("-1", "1"),
    "acosh": ("1", "fmax"),
    "atanh": ("up(-1)", "down(1)"),
    "log1p": ("up(-1)", "fmax"),
    "log": ("smin", "fmax"),
    "log10": ("smin", "fmax"),
    "log2": ("smin", "fmax"),
    "sqrt": ("0", "fmax"),
}


def _symbol(sym: str, fmt: FloatFormat) -> float:
    if sym == "fmax":
        return fmt.f_max
    if sym == "-fmax":
        return -fmt.f_max
    if sym == "smin":
        return fmt.s_min
    if sym.startswith("up("):
        return next_up(float(sym[3:-1]), fmt)
    if sym.startswith("down("):
        return next_down(float(sym[5:-1]), fmt)
    return float(sym)


# ---------------------------------------------------------------------------
# derivations


def derive_exp_like_domain(fmt: FloatFormat, base: str | int = "e") -> Interval:
    """[RU(log_base(s_min)), RD(log_base(f_max))] in ``fmt``."""
    ctx = make_context(_DERIVE_BITS)
    logs = {"e": ctx.log, "2": ctx.log2, "10": ctx.log10}
    try:
        logb = logs[str(base)]
    except KeyError:
        raise ValueError(f"base must be e, 2 or 10, not {base!r}") from None
    lo = round_to_format(logb(gmpy2.mpfr(fmt.s_min, 53)), fmt, RoundingMode.RU)
    hi = round_to_format(logb(gmpy2.mpfr(fmt.f_max, 53)), fmt, RoundingMode.RD)
    return Interval(lo, hi)


def derive_tanh_domain(fmt: FloatFormat) -> Interval:
    """Largest |x| with RN(tanh(x)) < 1, from tanh(x) = 1 - u/2 <=> x = log((4-u)/u)/2."""
    ctx = make_context(_DERIVE_BITS)
    u = gmpy2.mpfr(fmt.u, 53)
    x = ctx.mul(ctx.log(ctx.div(ctx.sub(4, u), u)), 0.5)
    hi = round_to_format(x, fmt, RoundingMode.RZ)
    if hi == x:
        hi = next_down(hi, fmt)
    return Interval(-hi, hi)


def derive_hyperbolic_domain(fmt: FloatFormat, name: str = "cosh") -> Interval:
    """[-RD(acosh(f_max)), RD(acosh(f_max))] for cosh; asinh for sinh."""
    ctx = make_context(_DERIVE_BITS)
    inverse = {"cosh": ctx.acosh, "sinh": ctx.asinh}[name]
    hi = round_to_format(inverse(gmpy2.mpfr(fmt.f_max, 53)), fmt, RoundingMode.RD)
    return Interval(-hi, hi)


def _derived(name: str, fmt: FloatFormat) -> Interval:
    if name in ("exp", "exp2", "exp10"):
        return derive_exp_like_domain(fmt, {"exp": "e", "exp2": "2", "exp10": "10"}[name])
    if name == "tanh":
        return derive_tanh_domain(fmt)
    return derive_hyperbolic_domain(fmt, name)


@functools.lru_cache(maxsize=None)
def domain_of(name: str, fmt: FloatFormat) -> Interval:
    if name not in FUNCTION_NAMES:
        raise KeyError(f"unknown function {name!r}")
    if name in _STRUCTURAL:
        lo, hi = _STRUCTURAL[name]
        return Interval(_symbol(lo, fmt), _symbol(hi, fmt))
    if name in ("exp", "exp2", "exp10", "tanh", "cosh", "sinh"):
        table = _TABLES.get(fmt.name)
        if table is not None:
            return Interval(*table[name])
        return _derived(name, fmt)
    return Interval(-fmt.f_max, fmt.f_max)


# ---------------------------------------------------------------------------
# special inputs


def _worstcase_dir() -> Path:
    return Path(str(resources.files("ulpbench") / "worstcases"))


def load_points(path: Path, fmt: FloatFormat, domain: Interval) -> tuple[list[float], list[str]]:
    """Parse a worst-case file; returns (points inside domain, warnings for dropped ones)."""
    points, warnings = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        x = decode_hex(line, fmt)
        if not math.isfinite(x) or x not in domain:
            warnings.append(f"{Path(path).name}:{lineno}: {line} outside [{domain.lo!r}, {domain.hi!r}], dropped")
            continue
        if x not in points:
            points.append(x)
    return points, warnings


@functools.lru_cache(maxsize=None)
def _special(name: str, fmt: FloatFormat, directory: str) -> tuple[tuple[float, ...], tuple[str, ...]]:
    path = Path(directory) / f"{name}.{fmt.name}.txt"
    if not path.exists():
        return (), ()
    points, warnings = load_points(path, fmt, domain_of(name, fmt))
    for w in warnings:
        log.warning(w)
    return tuple(sorted(points, key=lambda v: rank(v, fmt))), tuple(warnings)


def special_points(name: str, fmt: FloatFormat, directory: str | Path | None = None) -> list[float]:
    """Curated hard inputs for ``name`` in ``fmt``, restricted to its domain."""
    if name not in FUNCTION_NAMES:
        raise KeyError(f"unknown function {name!r}")
    return list(_special(name, fmt, str(directory or _worstcase_dir()))[0])


def special_point_warnings(name: str, fmt: FloatFormat, directory: str | Path | None = None) -> list[str]:
    return list(_special(name, fmt, str(directory or _worstcase_dir()))[1])


# ---------------------------------------------------------------------------
# function specs


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    reference_id: str
    has_asymptotes: bool = False
    formats: tuple[str, ...] = field(default=tuple(f.name for f in REGISTRY_FORMATS))

    def domain(self, fmt: FloatFormat) -> Interval:
        return domain_of(self.name, fmt)

    def special_points(self, fmt: FloatFormat) -> list[float]:
        return special_points(self.name, fmt)

    def native(self, fmt: FloatFormat, xs):
        return native.evaluate(self.name, fmt, xs)

    def binding(self, fmt: FloatFormat) -> str:
        return native.binding(self.name, fmt)


REGISTRY: dict[str, FunctionSpec] = {
    name: FunctionSpec(name, name, has_asymptotes=(name in ("tan", "tanpi"))) for name in FUNCTION_NAMES
}


def get_function(name: str) -> FunctionSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}") from None


def select(names: list[str] | None = None) -> list[FunctionSpec]:
    """Registry entries in registry order, optionally restricted to ``names``."""
    if not names:
        return list(REGISTRY.values())
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise KeyError(f"unknown function(s): {', '.join(unknown)}")
    wanted = set(names)
    return [spec for spec in REGISTRY.values() if spec.name in wanted]


def check_domain_endpoints(formats=REGISTRY_FORMATS) -> list[str]:
    """Evaluate every reference at both domain endpoints; report overflows or domain errors."""
    problems = []
    for fmt in formats:
        bits = policy_bits(fmt)
        for name in FUNCTION_NAMES:
            dom = domain_of(name, fmt)
            for x in (dom.lo, dom.hi):
                try:
                    ref = reference_eval(name, x, bits)
                except DomainError as exc:
                    problems.append(f"{name} {fmt.name}: {exc}")
                    continue
                if not check_no_overflow(ref, fmt):
                    problems.append(f"{name} {fmt.name}: reference at endpoint {x!r} overflows")
    return problems


__all__ = [
    "FUNCTION_NAMES",
    "REGISTRY",
    "REGISTRY_FORMATS",
    "FunctionSpec",
    "Interval",
    "check_domain_endpoints",
    "derive_exp_like_domain",
    "derive_hyperbolic_domain",
    "derive_tanh_domain",
    "domain_of",
    "get_format",
    "get_function",
    "load_points",
    "select",
    "special_points",
]

"""Vectorised error kernels that agree bit for bit with the scalar MPFR path.

Only square root has one.  For a format whose reference precision q is
below 53 bits, the reference RN_q(sqrt(x)) is obtained from the binary64
square root s = RN_53(sqrt(x)) by a second rounding to q bits.  Double
rounding can only go wrong when s lies exactly on a q-bit midpoint; those
inputs are flagged and left to the scalar path.  The difference between
the native result (p bits) and the reference (q bits) is exact in
binary64, and so is the division by the power-of-two ulp, so the error
equals the one the scalar path computes at q bits.
"""

from __future__ import annotations

import numpy as np

from .fpcore import FloatFormat
from .refeval import policy_bits

_MANT = 52


def has_kernel(name: str, fmt: FloatFormat) -> bool:
    return name == "sqrt" and fmt.name in ("binary16", "binary32") and policy_bits(fmt) < 53


def _round_bits(s: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """RN_q of positive normal binary64 values; also a mask of exact q-bit midpoints."""
    drop = 53 - q
    half = np.uint64(1 << (drop - 1))
    low = np.uint64((1 << drop) - 1)
    bits = s.view(np.uint64)
    tail = bits & low
    tie = tail == half
    up = (bits + half) & ~low  # carries into the exponent when needed
    down = bits & ~low
    rounded = np.where(tail > half, up, down)
    return rounded.view(np.float64), tie


def sqrt_errors(xs: np.ndarray, ys: np.ndarray, fmt: FloatFormat) -> tuple[np.ndarray, np.ndarray]:
    """(errors, needs_scalar) for non-negative format inputs ``xs`` and native outputs ``ys``."""
    q = policy_bits(fmt)
    s = np.sqrt(xs)
    pos = s > 0
    ref, tie = _round_bits(np.where(pos, s, 1.0), q)
    ref = np.where(pos, ref, 0.0)
    # ulp(RZ(ref)): RZ keeps the binade, so ulp follows from the exponent of ref
    _, e = np.frexp(np.where(pos, ref, 1.0))
    ulp = np.ldexp(1.0, np.maximum(e - 1, fmt.emin) - (fmt.p - 1))
    err = np.abs(ys - ref) / ulp
    needs_scalar = (tie & pos) | ~np.isfinite(ys)
    return err, needs_scalar

"""Bindings to the host platform's math functions (the code under test).

numpy ufuncs are used wherever numpy ships a loop for the format.  exp10 is
taken from the C math library.  sinpi/cospi/tanpi come from libm when it
exports them (glibc >= 2.41); otherwise a composite with exact argument
reduction in binary64 followed by one rounding to the target format is used,
and :func:`convention` says so.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import functools

import numpy as np

from .fpcore import NUMPY_DTYPES, FloatFormat

UFUNCS = {
    "acos": np.arccos,
    "acosh": np.arccosh,
    "asin": np.arcsin,
    "asinh": np.arcsinh,
    "atan": np.arctan,
    "atanh": np.arctanh,
    "cbrt": np.cbrt,
    "cos": np.cos,
    "cosh": np.cosh,
    "exp": np.exp,
    "exp2": np.exp2,
    "log": np.log,
    "log10": np.log10,
    "log1p": np.log1p,
    "log2": np.log2,
    "sin": np.sin,
    "sinh": np.sinh,
    "sqrt": np.sqrt,
    "tan": np.tan,
    "tanh": np.tanh,
}

LIBM_FUNCTIONS = ("exp10", "sinpi", "cospi", "tanpi")


@functools.lru_cache(maxsize=None)
def _libm():
    path = ctypes.util.find_library("m")
    return ctypes.CDLL(path) if path else None


@functools.lru_cache(maxsize=None)
def _libm_symbol(name: str, single: bool):
    lib = _libm()
    sym = name + ("f" if single else "")
    if lib is None or not hasattr(lib, sym):
        return None
    fn = getattr(lib, sym)
    ctype = ctypes.c_float if single else ctypes.c_double
    fn.restype = ctype
    fn.argtypes = [ctype]
    return fn


def _apply_scalar(fn, xs: np.ndarray, dtype) -> np.ndarray:
    out = np.fromiter((fn(v) for v in xs.tolist()), dtype=np.float64, count=len(xs))
    return out.astype(dtype)


# -- composite pi-scaled trigonometry (binary64 kernel, exact reduction) --


def _sinpi64(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    r = np.fmod(a, 2.0)
    s = np.where(r >= 1.0, -1.0, 1.0)
    r = np.where(r >= 1.0, r - 1.0, r)
    r = np.where(r > 0.5, 1.0 - r, r)
    y = np.where(r <= 0.25, np.sin(np.pi * r), np.cos(np.pi * (0.5 - r)))
    return np.where(x < 0, -s * y, s * y)


def _cospi64(x: np.ndarray) -> np.ndarray:
    r = np.fmod(np.abs(x), 2.0)
    s = np.where(r >= 1.0, -1.0, 1.0)
    r = np.where(r >= 1.0, r - 1.0, r)
    s = np.where(r > 0.5, -s, s)
    r = np.where(r > 0.5, 1.0 - r, r)
    y = np.where(r < 0.25, np.cos(np.pi * r), np.sin(np.pi * (0.5 - r)))
    return s * y


def _tanpi64(x: np.ndarray) -> np.ndarray:
    r = np.fmod(np.abs(x), 1.0)
    s = np.where(r > 0.5, -1.0, 1.0)
    r = np.where(r > 0.5, 1.0 - r, r)
    y = np.where(r <= 0.25, np.tan(np.pi * r), 1.0 / np.tan(np.pi * (0.5 - r)))
    y = np.where(r == 0.25, 1.0, y)
    return np.where(x < 0, -s * y, s * y)


_COMPOSITES = {"sinpi": _sinpi64, "cospi": _cospi64, "tanpi": _tanpi64}


def binding(name: str, fmt: FloatFormat) -> str:
    """Short description of what implements ``name`` in ``fmt``."""
    if name in UFUNCS:
        return f"numpy.{UFUNCS[name].__name__}"
    single = fmt.name != "binary64"
    if _libm_symbol(name, single) is not None:
        via = "promoted to binary32, " if fmt.name == "binary16" else ""
        return f"{via}libm {name}{'f' if single else ''}"
    if name in _COMPOSITES:
        return "composite (exact reduction, binary64 kernel)"
    raise KeyError(name)


def evaluate(name: str, fmt: FloatFormat, xs: np.ndarray) -> np.ndarray:
    """Evaluate the platform's ``name`` on format values; returns float64."""
    dtype = NUMPY_DTYPES[fmt.name]
    xs = np.asarray(xs, dtype=np.float64)
    with np.errstate(all="ignore"):
        if name in UFUNCS:
            return UFUNCS[name](xs.astype(dtype)).astype(np.float64)
        single = fmt.name != "binary64"
        fn = _libm_symbol(name, single)
        if fn is not None:
            out = _apply_scalar(fn, xs, np.float32 if single else np.float64)
        elif name in _COMPOSITES:
            out = _COMPOSITES[name](xs)
        else:
            raise KeyError(name)
        return out.astype(dtype).astype(np.float64)


def evaluate_scalar(name: str, fmt: FloatFormat, x: float) -> float:
    return float(evaluate(name, fmt, np.array([x]))[0])


def convention() -> str:
    """One-line description recorded in report headers."""
    parts = [f"numpy {np.__version__} ufuncs (native loops per format)"]
    lib = ctypes.util.find_library("m") or "none"
    parts.append(f"libm {lib} for exp10")
    missing = [n for n in _COMPOSITES if _libm_symbol(n, False) is None]
    if missing:
        parts.append(f"composite {'/'.join(missing)} (libm lacks them)")
    parts.append("binary16 libm calls promote to binary32 and round RN back")
    return "; ".join(parts)


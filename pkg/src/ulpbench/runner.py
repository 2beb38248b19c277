"""Run accuracy tests: calibrate, plan, fan chunks out to workers, reduce.

Workers are separate processes (the reference evaluation is CPU bound and
holds the GIL).  A chunk task carries only names and integers; each worker
rebuilds its own MPFR context, so nothing but immutable module state is
shared.  Partial results merge associatively with a deterministic argmax
rule (largest error, then smallest input rank), so neither worker count nor
completion order can change a result.
"""

from __future__ import annotations

import functools
import math
import multiprocessing
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, TextIO

import numpy as np

from . import fastpath, native
from .fpcore import FloatFormat, get_format, rank, ranks_to_values
from .refeval import (
    DomainError,
    ErrorRecord,
    SkipReason,
    check_no_overflow,
    evaluate_in,
    make_context,
    policy_bits,
    reference_decimal,
    ulp_error,
)
from .registry import FunctionSpec, get_function, select, special_point_warnings
from .search import Strategy, budget_to_count, calibration_plan, plan

if TYPE_CHECKING:
    from .cli import TestConfigEntry

BATCH = 4096
KERNEL_BATCH = 1 << 20

_SKIP_TEXT = {
    SkipReason.ASYMPTOTE: "reference not finite in the format (asymptote)",
    SkipReason.OVERFLOW: "reference overflows the format inside the domain (domain table bug)",
    SkipReason.DOMAIN: "reference undefined (outside mathematical domain)",
    SkipReason.NATIVE_INFINITE: "native result infinite against a finite reference",
}


@dataclass
class FunctionResult:
    name: str
    max_err_ulps: float | None = None
    argmax_input: float | None = None
    argmax_output: float | None = None
    argmax_ref: str | None = None
    tests_run: int = 0
    skipped: int = 0
    nan_failures: int = 0
    warnings: list[str] = field(default_factory=list)
    error: str | None = None
    # timing, excluded from determinism comparisons
    t_ns: float | None = None
    sweep_seconds: float | None = None
    planned: int = 0

    @property
    def ok(self) -> bool:
        return self.error is None and self.max_err_ulps is not None


# ---------------------------------------------------------------------------
# per-point measurement


def measure(ctx, spec: FunctionSpec, fmt: FloatFormat, x: float, y: float) -> ErrorRecord:
    try:
        ref = evaluate_in(ctx, spec.reference_id, x)
    except DomainError:
        return ErrorRecord(x, y, skipped=SkipReason.DOMAIN)
    if not check_no_overflow(ref, fmt):
        reason = SkipReason.ASYMPTOTE if spec.has_asymptotes else SkipReason.OVERFLOW
        return ErrorRecord(x, y, ref, skipped=reason)
    if math.isnan(y):
        return ErrorRecord(x, y, ref, nan_failure=True)
    if math.isinf(y):
        return ErrorRecord(x, y, ref, skipped=SkipReason.NATIVE_INFINITE)
    return ErrorRecord(x, y, ref, ulp_error(y, ref, fmt, ctx))


def test_point(spec: FunctionSpec | str, x: float, fmt: FloatFormat, bits: int | None = None) -> ErrorRecord:
    """Measure one input end to end (native call, reference, error)."""
    if isinstance(spec, str):
        spec = get_function(spec)
    ctx = make_context(bits or policy_bits(fmt))
    y = native.evaluate_scalar(spec.name, fmt, x)
    return measure(ctx, spec, fmt, x, y)


# test_point is not a pytest test
test_point.__test__ = False


# ---------------------------------------------------------------------------
# reduction


@dataclass
class Partial:
    """Mergeable summary of a stream of ErrorRecords."""

    err: float = -1.0
    rank: int = -1
    x: float | None = None
    y: float | None = None
    ref: object | None = None
    tests: int = 0
    # category -> [count, smallest rank, input at that rank]
    skips: dict = field(default_factory=dict)
    nans: list | None = None

    def add(self, rec: ErrorRecord, r: int) -> None:
        self.tests += 1
        if rec.nan_failure:
            self.nans = _tally(self.nans, 1, r, rec.x)
        elif rec.skipped is not None:
            self.skips[rec.skipped] = _tally(self.skips.get(rec.skipped), 1, r, rec.x)
        elif rec.err_ulps > self.err or (rec.err_ulps == self.err and r < self.rank):
            self.err, self.rank, self.x, self.y, self.ref = rec.err_ulps, r, rec.x, rec.native_out, rec.ref_value

    def merge(self, other: Partial) -> Partial:
        out = Partial(tests=self.tests + other.tests)
        best = self
        if other.err > self.err or (other.err == self.err and other.err >= 0 and other.rank < self.rank):
            best = other
        out.err, out.rank, out.x, out.y, out.ref = best.err, best.rank, best.x, best.y, best.ref
        out.skips = dict(self.skips)
        for k, v in other.skips.items():
            out.skips[k] = _tally(out.skips.get(k), *v)
        out.nans = self.nans
        if other.nans is not None:
            out.nans = _tally(out.nans, *other.nans)
        return out


def _tally(cur, count, r, x):
    if cur is None:
        return [count, r, x]
    if r < cur[1]:
        return [cur[0] + count, r, x]
    return [cur[0] + count, cur[1], cur[2]]


def finalize(name: str, part: Partial, fmt: FloatFormat) -> FunctionResult:
    res = FunctionResult(name=name, tests_run=part.tests)
    res.skipped = sum(v[0] for v in part.skips.values())
    res.nan_failures = part.nans[0] if part.nans else 0
    for reason in SkipReason:
        if reason in part.skips:
            count, _, x = part.skips[reason]
            res.warnings.append(f"{reason.value}: {count} input(s) skipped, {_SKIP_TEXT[reason]}; first at x={x!r}")
    if part.nans:
        res.warnings.append(f"nan: {part.nans[0]} input(s) returned NaN for a finite reference; first at x={part.nans[2]!r}")
    if part.err >= 0:
        res.max_err_ulps = part.err
        res.argmax_input = part.x
        res.argmax_output = part.y
        res.argmax_ref = reference_decimal(part.ref)
    else:
        res.error = "no measurable points"
    return res


def reduce_max(records: Iterable[ErrorRecord], fmt: FloatFormat, name: str = "") -> FunctionResult:
    """Reduce records to a FunctionResult (max error, ties to the smallest input rank)."""
    part = Partial()
    for rec in records:
        part.add(rec, rank(rec.x, fmt))
    return finalize(name, part, fmt)


# ---------------------------------------------------------------------------
# worker tasks (top level so they pickle)


def run_chunk(name: str, fmt_name: str, rank_lo: int, stride: int, count: int, bits: int) -> Partial:
    fmt = get_format(fmt_name)
    spec = get_function(name)
    ctx = make_context(bits)
    if bits == policy_bits(fmt) and fastpath.has_kernel(name, fmt):
        return _run_chunk_kernel(ctx, spec, fmt, rank_lo, stride, count)
    part = Partial()
    done = 0
    while done < count:
        n = min(BATCH, count - done)
        start = rank_lo + done * stride
        xs = ranks_to_values(start, stride, n, fmt)
        ys = spec.native(fmt, xs)
        for i, (x, y) in enumerate(zip(xs.tolist(), ys.tolist())):
            part.add(measure(ctx, spec, fmt, x, y), start + i * stride)
        done += n
    return part


def _run_chunk_kernel(ctx, spec, fmt, rank_lo, stride, count) -> Partial:
    part = Partial()
    done = 0
    while done < count:
        n = min(KERNEL_BATCH, count - done)
        start = rank_lo + done * stride
        xs = ranks_to_values(start, stride, n, fmt)
        ys = spec.native(fmt, xs)
        err, scalar = fastpath.sqrt_errors(xs, ys, fmt)
        for i in np.flatnonzero(scalar).tolist():
            part.add(measure(ctx, spec, fmt, xs[i], ys[i]), start + i * stride)
        err[scalar] = -1.0
        part.tests += n - int(scalar.sum())
        i = int(np.argmax(err))  # first maximum, so the smallest rank in this batch
        if err[i] > part.err:
            rec = measure(ctx, spec, fmt, float(xs[i]), float(ys[i]))
            part.tests -= 1
            part.add(rec, start + i * stride)
        done += n
    return part


def run_points(name: str, fmt_name: str, points: list[float], bits: int) -> Partial:
    fmt = get_format(fmt_name)
    spec = get_function(name)
    ctx = make_context(bits)
    part = Partial()
    ys = spec.native(fmt, np.asarray(points, dtype=np.float64))
    for x, y in zip(points, ys.tolist()):
        part.add(measure(ctx, spec, fmt, x, y), rank(x, fmt))
    return part


class WorkerPool:
    """P workers; P == 1 runs in-process."""

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.workers = workers
        self._executor = None
        if workers > 1:
            self._executor = ProcessPoolExecutor(workers, mp_context=multiprocessing.get_context("fork"))

    def starmap(self, fn: Callable, argslist: list[tuple]) -> list:
        if self._executor is None:
            return [fn(*args) for args in argslist]
        futures = [self._executor.submit(fn, *args) for args in argslist]
        return [f.result() for f in futures]

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _chunk_args(spec, fmt, sp, bits):
    return [(spec.name, fmt.name, c.rank_lo, c.stride, c.count, bits) for c in sp.chunks]


def calibrate(spec: FunctionSpec, fmt: FloatFormat, pool: WorkerPool, points: int | None = None) -> float:
    """Average cost in ns of testing one point, as seen by one worker."""
    from .search import CALIBRATION_POINTS

    points = points or CALIBRATION_POINTS
    bits = policy_bits(fmt)
    while True:
        sp = calibration_plan(spec.domain(fmt), fmt, pool.workers, points)
        t0 = time.perf_counter_ns()
        pool.starmap(run_chunk, _chunk_args(spec, fmt, sp, bits))
        wall = time.perf_counter_ns() - t0
        if wall > 0 or points >= 100 * CALIBRATION_POINTS:
            return max(wall, 1) * pool.workers / sp.visited
        points *= 10


def run_function(
    spec: FunctionSpec,
    fmt: FloatFormat,
    strategy: Strategy | str,
    pool: WorkerPool,
    *,
    inject_special: bool = True,
) -> FunctionResult:
    strategy = Strategy(strategy)
    bits = policy_bits(fmt)
    domain = spec.domain(fmt)
    t_ns = None if strategy is Strategy.EXHAUSTIVE else calibrate(spec, fmt, pool)
    n = budget_to_count(strategy, t_ns, domain.size(fmt), pool.workers)
    sp = plan(domain, fmt, n, pool.workers)

    t0 = time.perf_counter()
    partials = pool.starmap(run_chunk, _chunk_args(spec, fmt, sp, bits))
    sweep = time.perf_counter() - t0

    warnings = []
    if inject_special:
        extra = [x for x in spec.special_points(fmt) if not sp.covers(rank(x, fmt))]
        if extra:
            partials.append(run_points(spec.name, fmt.name, extra, bits))
        warnings = special_point_warnings(spec.name, fmt)
    total = functools.reduce(Partial.merge, partials, Partial())
    res = finalize(spec.name, total, fmt)
    res.warnings.extend(warnings)
    res.t_ns, res.sweep_seconds, res.planned = t_ns, sweep, sp.visited
    return res


@dataclass
class EntryRun:
    entry: "TestConfigEntry"
    workers: int
    results: list[FunctionResult]
    warnings: list[str]
    started: float
    elapsed: float


def run_config_entry(
    entry: "TestConfigEntry",
    workers: int = 1,
    functions: list[str] | None = None,
    progress: TextIO | None = sys.stderr,
) -> EntryRun:
    """Test every selected function for one config entry, in registry order."""
    fmt = get_format(entry.format)
    strategy = Strategy(entry.search)
    warnings = []
    if entry.rounding != "RN":
        warnings.append(
            f"rounding {entry.rounding} is a placeholder: platform functions only exist "
            "for the default mode, RN error semantics used"
        )
    started = time.time()
    t0 = time.perf_counter()
    results = []
    with WorkerPool(workers) as pool:
        for spec in select(functions):
            f0 = time.perf_counter()
            try:
                res = run_function(spec, fmt, strategy, pool)
            except Exception as exc:  # isolate one function's failure from the rest
                res = FunctionResult(name=spec.name, error=f"{type(exc).__name__}: {exc}")
            results.append(res)
            if progress is not None:
                if res.max_err_ulps is not None:
                    msg = f"max {res.max_err_ulps:.5g} ULP over {res.tests_run} inputs"
                else:
                    msg = f"FAILED ({res.error})"
                print(f"[{entry.test_name}] {spec.name}: {msg} ({time.perf_counter() - f0:.1f}s)", file=progress, flush=True)
    return EntryRun(entry, workers, results, warnings, started, time.perf_counter() - t0)

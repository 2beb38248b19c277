"""Input-space search: time budgets and fixed-stride plans over rank space."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .fpcore import FloatFormat
from .registry import Interval

CALIBRATION_POINTS = 100_000


class Strategy(str, enum.Enum):
    SECONDS = "seconds"
    MINUTES = "minutes"
    HOURS = "hours"
    DAYS = "days"
    EXHAUSTIVE = "exhaustive"

    @property
    def budget_seconds(self) -> int | None:
        return _BUDGET_SECONDS.get(self)


_BUDGET_SECONDS = {
    Strategy.SECONDS: 1,
    Strategy.MINUTES: 60,
    Strategy.HOURS: 3600,
    Strategy.DAYS: 24 * 3600,
}


@dataclass(frozen=True)
class Chunk:
    """Ranks rank_lo, rank_lo + stride, ... (count of them), all below rank_hi."""

    rank_lo: int
    rank_hi: int
    stride: int
    count: int

    def __contains__(self, r: int) -> bool:
        if not self.rank_lo <= r < self.rank_hi:
            return False
        k, rem = divmod(r - self.rank_lo, self.stride)
        return rem == 0 and k < self.count


@dataclass
class SearchPlan:
    n: int
    workers: int
    chunks: list[Chunk]
    t_ns: float | None = None
    extra_points: list[float] = field(default_factory=list)

    @property
    def visited(self) -> int:
        return sum(c.count for c in self.chunks)

    def covers(self, r: int) -> bool:
        return any(r in c for c in self.chunks)


def budget_to_count(strategy: Strategy | str, t_ns: float | None, domain_size: int, workers: int = 1) -> int:
    """Per-worker test count N for ``strategy``.

    Budgeted strategies give floor(seconds * 1e9 / t); exhaustive gives each
    worker its share of the domain.  The plan clamps N to the chunk size.
    """
    strategy = Strategy(strategy)
    if strategy is Strategy.EXHAUSTIVE:
        return max(1, -(-domain_size // workers))
    if t_ns is None or not t_ns > 0:
        raise ValueError("a positive per-point cost is required for budgeted strategies")
    return max(1, math.floor(strategy.budget_seconds * 10**9 / t_ns))


def plan(domain: Interval, fmt: FloatFormat, n: int, workers: int) -> SearchPlan:
    """Split the domain's rank range into ``workers`` contiguous chunks.

    Chunk sizes differ by at most one; each chunk is walked from its first
    rank with stride max(1, size // n), visiting min(n, size) points.
    """
    if n < 1 or workers < 1:
        raise ValueError("n and workers must be at least 1")
    lo, hi = domain.rank_range(fmt)
    size = hi - lo
    if size <= 0:
        raise ValueError("empty domain")
    base, extra = divmod(size, workers)
    chunks = []
    start = lo
    for i in range(workers):
        csize = base + (1 if i < extra else 0)
        if csize == 0:
            continue
        stride = max(1, csize // n)
        chunks.append(Chunk(start, start + csize, stride, min(n, csize)))
        start += csize
    return SearchPlan(n=n, workers=workers, chunks=chunks)


def calibration_plan(domain: Interval, fmt: FloatFormat, workers: int, points: int = CALIBRATION_POINTS) -> SearchPlan:
    """Plan visiting ``points`` inputs (or the whole domain if smaller), spread over workers."""
    target = min(points, domain.size(fmt))
    sp = plan(domain, fmt, max(1, -(-target // workers)), workers)
    excess = sp.visited - target
    chunks = list(sp.chunks)
    for i in range(len(chunks) - 1, -1, -1):
        if excess <= 0:
            break
        c = chunks[i]
        chunks[i] = Chunk(c.rank_lo, c.rank_hi, c.stride, c.count - 1)
        excess -= 1
    sp.chunks = [c for c in chunks if c.count > 0]
    return sp


def calibrate(func: str, fmt: FloatFormat, workers: int = 1, points: int = CALIBRATION_POINTS) -> float:
    """Average single-point cost t in ns: wall time x workers / points visited."""
    from .registry import get_function
    from .runner import WorkerPool, calibrate as _calibrate

    with WorkerPool(workers) as pool:
        return _calibrate(get_function(func), fmt, pool, points)

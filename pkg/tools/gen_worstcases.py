"""Regenerate src/ulpbench/worstcases/<func>.<format>.txt.

For each function and format, inputs are ranked by how close the exact
result lies to a rounding midpoint of the format (the hardest cases for
round-to-nearest).  binary16 is scanned exhaustively; binary32 and binary64
use a fixed-stride sample of the domain, so their lists are hard cases
found by this scan, not proven worst cases.

    python3 tools/gen_worstcases.py [--keep 8] [--samples 65536]
"""

from __future__ import annotations

import argparse
import heapq
from pathlib import Path

import gmpy2

from ulpbench.fpcore import BINARY16, BINARY32, BINARY64, encode_hex, ranks_to_values, ulp
from ulpbench.refeval import DomainError, check_no_overflow, evaluate_in, make_context
from ulpbench.registry import FUNCTION_NAMES, domain_of

OUT = Path(__file__).resolve().parent.parent / "src" / "ulpbench" / "worstcases"


def midpoint_distance(ctx, ref, fmt) -> float | None:
    """Distance of ref from the nearest RN midpoint, in ulps of the format."""
    if ref == 0 or not check_no_overflow(ref, fmt):
        return None
    u = ulp(float(ref), fmt)
    scaled = ctx.div(ref, gmpy2.mpfr(u, 53))
    frac = ctx.sub(scaled, ctx.floor(scaled))
    return abs(float(frac) - 0.5)


def scan(name, fmt, samples):
    lo, hi = domain_of(name, fmt).rank_range(fmt)
    size = hi - lo
    stride = max(1, size // samples)
    xs = ranks_to_values(lo, stride, min(samples, size), fmt).tolist()
    ctx = make_context(2 * fmt.p + 40)
    heap = []
    for x in xs:
        try:
            ref = evaluate_in(ctx, name, x)
        except DomainError:
            continue
        d = midpoint_distance(ctx, ref, fmt)
        if d is not None:
            heap.append((d, x))
    return heap


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--keep", type=int, default=8)
    ap.add_argument("--samples", type=int, default=65536)
    args = ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    for fmt in (BINARY16, BINARY32, BINARY64):
        samples = fmt.rank_count if fmt is BINARY16 else args.samples
        how = "exhaustive scan" if fmt is BINARY16 else f"fixed-stride sample of {samples} inputs"
        for name in FUNCTION_NAMES:
            best = heapq.nsmallest(args.keep, scan(name, fmt, samples))
            lines = [f"# {name} {fmt.name}: inputs whose result lies closest to a rounding midpoint ({how})"]
            lines += [f"{encode_hex(x, fmt)}  # x={x!r} distance={d:.3e} ulp" for d, x in best]
            (OUT / f"{name}.{fmt.name}.txt").write_text("\n".join(lines) + "\n")
            print(fmt.name, name, len(best))


if __name__ == "__main__":
    main()

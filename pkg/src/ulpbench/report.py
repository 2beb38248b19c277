"""Decimal and hexadecimal result tables, one row per tested function.

File layout (decimal)::

    # key: value                 metadata, one per line
    Function ULPs Input Output MPFR Tests
    exp 0.50002 1.46875 4.344 4.343801994 63487
    ...
    # detail exp err=0.5000216... skipped=0 nan_failures=0
    # warning exp: ...
    # timing exp t_ns=... sweep_s=...

The ``MPFR`` column holds the reference value; the name is kept so the
files diff cleanly against older result sets.  Timing and other volatile
lines are tagged so :func:`report_body` can strip them for comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .fpcore import FloatFormat, encode_hex, get_format, parse_decimal, shortest_decimal
from .runner import FunctionResult

DECIMAL_HEADER = "Function ULPs Input Output MPFR Tests"
HEX_HEADER = "Function ULPs Input Output"
DEFAULT_OUTPUT_DIR = "outputs"

# metadata keys whose values change from run to run
VOLATILE_KEYS = ("timestamp", "workers", "elapsed_s", "calibration")
_VOLATILE_PREFIXES = tuple(f"# {k}:" for k in VOLATILE_KEYS) + ("# timing ",)

_MISSING = "-"


@dataclass
class RunReport:
    test_name: str
    metadata: dict[str, str]
    rows: list[FunctionResult] = field(default_factory=list)

    @property
    def format(self) -> FloatFormat:
        return get_format(self.metadata["format"])


def format_ulps(err: float | None) -> str:
    """Five significant digits, without trailing zeros (0.5 stays ``0.5``)."""
    if err is None:
        return _MISSING
    if math.isinf(err):
        return "Inf"
    return f"{err:.5g}"


def _dec(x: float | None, fmt: FloatFormat) -> str:
    return _MISSING if x is None else shortest_decimal(x, fmt)


def _hex(x: float | None, fmt: FloatFormat) -> str:
    return _MISSING if x is None else encode_hex(x, fmt)


def _prepare(directory: str | Path | None) -> Path:
    path = Path(directory if directory is not None else DEFAULT_OUTPUT_DIR)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _metadata_lines(report: RunReport) -> list[str]:
    lines = [f"# test: {report.test_name}"]
    for key, value in report.metadata.items():
        text = str(value).replace("\n", " ")
        lines.append(f"# {key}: {text}")
    return lines


def render_decimal(report: RunReport) -> str:
    fmt = report.format
    lines = _metadata_lines(report)
    lines.append(DECIMAL_HEADER)
    for r in report.rows:
        lines.append(
            " ".join(
                (
                    r.name,
                    format_ulps(r.max_err_ulps),
                    _dec(r.argmax_input, fmt),
                    _dec(r.argmax_output, fmt),
                    r.argmax_ref or _MISSING,
                    str(r.tests_run),
                )
            )
        )
    for r in report.rows:
        err = _MISSING if r.max_err_ulps is None else repr(r.max_err_ulps)
        lines.append(f"# detail {r.name} err={err} skipped={r.skipped} nan_failures={r.nan_failures}")
    for r in report.rows:
        for w in r.warnings:
            lines.append(f"# warning {r.name}: {w}")
        if r.error:
            lines.append(f"# error {r.name}: {r.error}")
    for r in report.rows:
        t = _MISSING if r.t_ns is None else f"{r.t_ns:.1f}"
        s = _MISSING if r.sweep_seconds is None else f"{r.sweep_seconds:.3f}"
        lines.append(f"# timing {r.name} t_ns={t} sweep_s={s} planned={r.planned}")
    return "\n".join(lines) + "\n"


def render_hex(report: RunReport) -> str:
    fmt = report.format
    lines = _metadata_lines(report)
    lines.append(HEX_HEADER)
    for r in report.rows:
        lines.append(f"{r.name} {format_ulps(r.max_err_ulps)} {_hex(r.argmax_input, fmt)} {_hex(r.argmax_output, fmt)}")
    return "\n".join(lines) + "\n"


def write_decimal_report(report: RunReport, directory: str | Path | None = None) -> Path:
    path = _prepare(directory) / f"{report.test_name}.txt"
    path.write_text(render_decimal(report), encoding="utf-8")
    return path


def write_hex_report(report: RunReport, directory: str | Path | None = None) -> Path:
    path = _prepare(directory) / f"HEX_{report.test_name}.txt"
    path.write_text(render_hex(report), encoding="utf-8")
    return path


def write_reports(report: RunReport, directory: str | Path | None = None) -> tuple[Path, Path]:
    return write_decimal_report(report, directory), write_hex_report(report, directory)


def report_body(text: str) -> str:
    """Report text without run-dependent lines (timestamps, worker count, timings)."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith(_VOLATILE_PREFIXES))


# ---------------------------------------------------------------------------
# parsing back


def _table(text: str, header: str) -> tuple[dict[str, str], list[list[str]], list[str]]:
    meta, rows, comments = {}, [], []
    seen_header = False
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if not seen_header and ": " in body:
                key, value = body.split(": ", 1)
                meta[key] = value
            else:
                comments.append(body)
        elif line.strip() == header:
            seen_header = True
        elif line.strip():
            rows.append(line.split())
    if not seen_header:
        raise ValueError(f"missing header line {header!r}")
    return meta, rows, comments


def _float_or_none(s: str, fmt: FloatFormat) -> float | None:
    return None if s == _MISSING else parse_decimal(s, fmt)


def parse_decimal_report(path_or_text: str | Path) -> RunReport:
    """Rebuild a RunReport from a decimal report file (or its text)."""
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else str(path_or_text)
    meta, rows, comments = _table(text, DECIMAL_HEADER)
    test_name = meta.pop("test")
    fmt = get_format(meta["format"])
    results = {}
    order = []
    for cols in rows:
        if len(cols) != 6:
            raise ValueError(f"malformed row {' '.join(cols)!r}")
        name, _, x, y, ref, tests = cols
        results[name] = FunctionResult(
            name=name,
            argmax_input=_float_or_none(x, fmt),
            argmax_output=_float_or_none(y, fmt),
            argmax_ref=None if ref == _MISSING else ref,
            tests_run=int(tests),
        )
        order.append(name)
    for c in comments:
        kind, _, rest = c.partition(" ")
        if kind == "detail":
            name, *fields = rest.split()
            kv = dict(f.split("=", 1) for f in fields)
            r = results[name]
            r.max_err_ulps = None if kv["err"] == _MISSING else float(kv["err"])
            r.skipped = int(kv["skipped"])
            r.nan_failures = int(kv["nan_failures"])
        elif kind in ("warning", "error"):
            name, _, msg = rest.partition(": ")
            if kind == "warning":
                results[name].warnings.append(msg)
            else:
                results[name].error = msg
        elif kind == "timing":
            name, *fields = rest.split()
            kv = dict(f.split("=", 1) for f in fields)
            r = results[name]
            r.t_ns = None if kv["t_ns"] == _MISSING else float(kv["t_ns"])
            r.sweep_seconds = None if kv["sweep_s"] == _MISSING else float(kv["sweep_s"])
            r.planned = int(kv["planned"])
    return RunReport(test_name, meta, [results[n] for n in order])


def parse_hex_report(path_or_text: str | Path) -> tuple[dict[str, str], list[list[str]]]:
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else str(path_or_text)
    meta, rows, _ = _table(text, HEX_HEADER)
    return meta, rows

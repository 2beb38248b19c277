"""Command line entry point: ``ulpbench -t <T> [--config config.json]``.

The config file is a JSON object mapping each test name to its settings::

    {
      "test-binary16RN-exhaustive-nofastmath": {
        "format": "binary16", "rounding": "RN", "fastmath": 0, "search": "exhaustive"
      }
    }

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__, native
from .fpcore import RoundingMode, get_format
from .refeval import policy_bits
from .registry import FUNCTION_NAMES, REGISTRY_FORMATS
from .report import DEFAULT_OUTPUT_DIR, RunReport, write_reports
from .runner import EntryRun, run_config_entry
from .search import CALIBRATION_POINTS, Strategy

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

FIELDS = ("format", "rounding", "fastmath", "search")
_FORMATS = tuple(f.name for f in REGISTRY_FORMATS)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TestConfigEntry:
    test_name: str
    format: str
    rounding: str
    fastmath: int
    search: str


TestConfigEntry.__test__ = False  # not a pytest class


def _check(key: str, field: str, value, allowed) -> None:
    if value not in allowed:
        choices = ", ".join(map(str, allowed))
        raise ConfigError(f"entry {key!r}: field {field!r} has invalid value {value!r} (expected one of {choices})")


def validate_entry(key: str, body) -> TestConfigEntry:
    if not isinstance(body, dict):
        raise ConfigError(f"entry {key!r}: expected an object, got {type(body).__name__}")
    for f in FIELDS:
        if f not in body:
            raise ConfigError(f"entry {key!r}: missing field {f!r}")
    extra = sorted(set(body) - set(FIELDS))
    if extra:
        raise ConfigError(f"entry {key!r}: unknown field {extra[0]!r}")
    _check(key, "format", body["format"], _FORMATS)
    _check(key, "rounding", body["rounding"], [m.value for m in RoundingMode])
    fastmath = body["fastmath"]
    if isinstance(fastmath, bool) or fastmath not in (0, 1):
        raise ConfigError(f"entry {key!r}: field 'fastmath' has invalid value {fastmath!r} (expected 0 or 1)")
    _check(key, "search", body["search"], [s.value for s in Strategy])
    return TestConfigEntry(key, body["format"], body["rounding"], int(fastmath), body["search"])


def parse_config(path: str | Path) -> list[TestConfigEntry]:
    """Validated entries in file order; the whole file is rejected on the first bad entry."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object of test entries")
    return [validate_entry(key, body) for key, body in data.items()]


def parse_threads(value: str) -> int:
    if value == "auto":
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return n


def parse_functions(value: str) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [n for n in names if n not in FUNCTION_NAMES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown function(s): {', '.join(unknown)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ulpbench", description="Measure worst-case ULP errors of the platform math functions.")
    p.add_argument("-t", "--threads", type=parse_threads, default=1, help="worker processes (integer or 'auto')")
    p.add_argument("--config", default="config.json", help="JSON test descriptor (default: config.json)")
    p.add_argument("--outputs", default=DEFAULT_OUTPUT_DIR, help="report directory (default: outputs)")
    p.add_argument("--functions", type=parse_functions, default=None, help="comma-separated subset of functions")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def build_report(run: EntryRun) -> RunReport:
    entry = run.entry
    calibrated = [f"{r.name}={r.t_ns:.1f}" for r in run.results if r.t_ns is not None]
    meta = {
        "format": entry.format,
        "rounding": entry.rounding,
        "fastmath": str(entry.fastmath),
        "search": entry.search,
        "workers": str(run.workers),
        "reference": f"MPFR via gmpy2, RN at {policy_bits(get_format(entry.format))} bits (MPFR column)",
        "reference_digits": "shortest decimal that rounds back at the reference precision",
        "platform": f"{platform.system()} {platform.machine()}, Python {platform.python_version()}",
        "convention": native.convention(),
        "budget": "calibration of up to %d points runs before, and outside, the time budget" % CALIBRATION_POINTS,
        "calibration": "ns/point " + (" ".join(calibrated) if calibrated else "n/a (exhaustive)"),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(run.started)),
        "elapsed_s": f"{run.elapsed:.1f}",
    }
    if entry.fastmath:
        meta["fastmath_note"] = "no fast-math variants are bound on this platform; flag recorded only"
    for i, w in enumerate(run.warnings):
        meta[f"warning{i}" if i else "warning"] = w
    return RunReport(entry.test_name, meta, run.results)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        entries = parse_config(args.config)
    except ConfigError as exc:
        print(f"ulpbench: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not entries:
        print("ulpbench: nothing to do", file=sys.stderr)
        return EXIT_OK

    status = EXIT_OK
    for entry in entries:
        try:
            run = run_config_entry(entry, args.threads, args.functions)
            for w in run.warnings:
                print(f"ulpbench: WARNING [{entry.test_name}] {w}", file=sys.stderr)
            dec, hexf = write_reports(build_report(run), args.outputs)
            failed = [r.name for r in run.results if r.error]
            if failed:
                print(f"ulpbench: [{entry.test_name}] no result for: {', '.join(failed)}", file=sys.stderr)
                status = EXIT_RUNTIME
            print(f"{dec}\n{hexf}")
        except Exception as exc:
            print(f"ulpbench: [{entry.test_name}] failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            status = EXIT_RUNTIME
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

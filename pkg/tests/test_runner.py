import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ulpbench import fastpath, native, runner
from ulpbench.cli import TestConfigEntry
from ulpbench.fpcore import BINARY16, BINARY32, BINARY64, all_finite_values, unrank
from ulpbench.refeval import ErrorRecord, SkipReason, evaluate_in, make_context, ulp_error
from ulpbench.registry import domain_of, get_function
from ulpbench.runner import Partial, WorkerPool, reduce_max, run_config_entry, run_function, test_point

FIELDS = ("name", "max_err_ulps", "argmax_input", "argmax_output", "argmax_ref", "tests_run", "skipped", "nan_failures", "warnings", "error")


def result_fields(r):
    return tuple(getattr(r, f) for f in FIELDS)


def entry(fmt="binary16", search="exhaustive", rounding="RN", name="t"):
    return TestConfigEntry(name, fmt, rounding, 0, search)


# --- single points --------------------------------------------------------


def test_point_sqrt_exact():
    rec = test_point("sqrt", 4.0, BINARY16)
    assert rec.native_out == 2.0 and rec.err_ulps == 0.0 and rec.skipped is None


def test_point_tanpi_asymptote():
    rec = test_point("tanpi", 0.5, BINARY16)
    assert rec.skipped is SkipReason.ASYMPTOTE and rec.err_ulps is None


def test_point_exp_binary32_rerun_oracle():
    rng = np.random.default_rng(4)
    dom = domain_of("exp", BINARY32)
    xs = rng.uniform(dom.lo, dom.hi, 100).astype(np.float32).astype(np.float64)
    ctx = make_context(44)
    for x in xs.tolist():
        got = test_point("exp", x, BINARY32).err_ulps
        y = float(np.exp(np.float32(x)))
        assert got == ulp_error(y, evaluate_in(ctx, "exp", x), BINARY32, ctx)


# --- reduction ------------------------------------------------------------


def test_reduce_single_record():
    r = reduce_max([ErrorRecord(1.0, 1.0, ref_value=make_context(31).exp(0), err_ulps=0.25)], BINARY16, "f")
    assert (r.max_err_ulps, r.argmax_input, r.tests_run) == (0.25, 1.0, 1)


def test_reduce_tie_goes_to_smaller_rank():
    x5, x9 = unrank(5, BINARY16), unrank(9, BINARY16)
    ref = make_context(31).exp(0)
    a = ErrorRecord(x9, x9, ref, 0.5)
    b = ErrorRecord(x5, x5, ref, 0.5)
    assert reduce_max([a, b], BINARY16).argmax_input == x5
    assert reduce_max([b, a], BINARY16).argmax_input == x5


def test_reduce_all_skipped():
    r = reduce_max([ErrorRecord(0.5, math.inf, skipped=SkipReason.ASYMPTOTE)], BINARY16, "tanpi")
    assert r.error == "no measurable points" and r.tests_run == 1 and r.skipped == 1


records_st = st.lists(
    st.tuples(
        st.integers(0, BINARY16.rank_count - 1),
        st.one_of(st.floats(0, 4, allow_nan=False), st.sampled_from([0.5, 1.0, None, "nan"])),
    ),
    min_size=1,
    max_size=60,
)


def _partial(items):
    part = Partial()
    for r, err in items:
        if err is None:
            part.add(ErrorRecord(float(r), 0.0, skipped=SkipReason.DOMAIN), r)
        elif err == "nan":
            part.add(ErrorRecord(float(r), math.nan, nan_failure=True), r)
        else:
            part.add(ErrorRecord(float(r), 0.0, err_ulps=err), r)
    return part


def _state(p):
    return (p.err, p.rank if p.err >= 0 else None, p.tests, p.skips, p.nans)


@settings(max_examples=200, deadline=None)
@given(records_st, st.randoms(use_true_random=False))
def test_merge_equals_concatenated_stream(items, rnd):
    whole = _partial(items)
    shuffled = list(items)
    cuts = sorted(rnd.sample(range(len(items) + 1), k=min(3, len(items) + 1)))
    parts = [_partial(shuffled[a:b]) for a, b in zip([0] + cuts, cuts + [len(items)])]
    rnd.shuffle(parts)
    merged = Partial()
    for p in parts:
        merged = merged.merge(p) if rnd.random() < 0.5 else p.merge(merged)
    assert _state(merged) == _state(whole)


# --- sqrt kernel ----------------------------------------------------------


def test_sqrt_kernel_matches_scalar_path_binary16_exhaustive():
    spec = get_function("sqrt")
    xs = all_finite_values(BINARY16)
    xs = xs[xs >= 0]
    ys = spec.native(BINARY16, xs)
    err, scalar = fastpath.sqrt_errors(xs, ys, BINARY16)
    ctx = make_context(31)
    slow = [runner.measure(ctx, spec, BINARY16, x, y).err_ulps for x, y in zip(xs.tolist(), ys.tolist())]
    assert np.array_equal(err[~scalar], np.array(slow)[~scalar])


def test_sqrt_kernel_matches_scalar_path_binary32_sample():
    spec = get_function("sqrt")
    rng = np.random.default_rng(9)
    xs = rng.integers(0, 0x7F800000, 20000, dtype=np.uint32).view(np.float32).astype(np.float64)
    ys = spec.native(BINARY32, xs)
    err, scalar = fastpath.sqrt_errors(xs, ys, BINARY32)
    ctx = make_context(44)
    for i in np.flatnonzero(~scalar)[:20000].tolist():
        assert err[i] == runner.measure(ctx, spec, BINARY32, xs[i], ys[i]).err_ulps
    assert fastpath.has_kernel("sqrt", BINARY32) and not fastpath.has_kernel("exp", BINARY32)


def test_kernel_chunk_equals_scalar_chunk():
    lo, hi = domain_of("sqrt", BINARY32).rank_range(BINARY32)
    args = ("sqrt", "binary32", lo + 1_000_003, 997, 3000)
    fast = runner.run_chunk(*args, 44)
    slow = runner.run_chunk(*args, 45)  # any non-policy precision takes the scalar route
    assert fast.tests == slow.tests == 3000
    assert abs(fast.err - slow.err) < 1e-6


# --- whole functions ------------------------------------------------------


def test_exhaustive_sqrt_binary16():
    with WorkerPool(1) as pool:
        r = run_function(get_function("sqrt"), BINARY16, "exhaustive", pool)
    assert r.tests_run == 31744
    assert 0 <= r.max_err_ulps <= 0.5 + 1e-5
    assert r.argmax_input in domain_of("sqrt", BINARY16)


@pytest.mark.parametrize("name", ["tanpi", "exp", "log1p"])
def test_worker_count_independence(name):
    results = []
    for p in (1, 2, 8):
        with WorkerPool(p) as pool:
            results.append(result_fields(run_function(get_function(name), BINARY16, "exhaustive", pool)))
    assert results[0] == results[1] == results[2]


def test_tanpi_warning_once_and_skips_counted():
    with WorkerPool(1) as pool:
        r = run_function(get_function("tanpi"), BINARY16, "exhaustive", pool)
    assert r.tests_run == BINARY16.rank_count
    assert r.skipped == 2048
    assert sum("asymptote" in w for w in r.warnings) == 1


def test_budgeted_not_above_exhaustive(monkeypatch):
    monkeypatch.setattr(runner, "calibrate", lambda *a, **k: 1e9 / 5000)  # N = 5000 per worker
    with WorkerPool(1) as pool:
        ex = run_function(get_function("exp"), BINARY16, "exhaustive", pool)
        sec = run_function(get_function("exp"), BINARY16, "seconds", pool)
    assert sec.max_err_ulps <= ex.max_err_ulps
    extra = get_function("exp").special_points(BINARY16)
    assert 5000 <= sec.tests_run <= 5000 + len(extra)


def test_special_points_are_injected(monkeypatch, tmp_path):
    (tmp_path / "exp.binary64.txt").write_text("3FF8000000000000\n")  # 1.5
    from ulpbench import registry

    monkeypatch.setattr(registry, "_worstcase_dir", lambda: tmp_path)
    monkeypatch.setattr(runner, "calibrate", lambda *a, **k: 1e9 / 10)
    with WorkerPool(1) as pool:
        r = run_function(get_function("exp"), BINARY64, "seconds", pool)
    assert r.tests_run == 11 and r.planned == 10


def test_nan_results_are_a_failure_category(monkeypatch):
    real = native.evaluate

    def fake(name, fmt, xs):
        out = real(name, fmt, xs)
        out[np.asarray(xs) == 1.0] = np.nan
        return out

    monkeypatch.setattr(native, "evaluate", fake)
    with WorkerPool(1) as pool:
        r = run_function(get_function("exp"), BINARY16, "exhaustive", pool)
    assert r.nan_failures == 1 and r.skipped == 0
    assert r.tests_run == domain_of("exp", BINARY16).size(BINARY16)
    assert any(w.startswith("nan:") for w in r.warnings)


def test_native_infinity_is_skipped_with_warning(monkeypatch):
    real = native.evaluate

    def fake(name, fmt, xs):
        out = real(name, fmt, xs)
        out[np.asarray(xs) == 2.0] = np.inf
        return out

    monkeypatch.setattr(native, "evaluate", fake)
    with WorkerPool(1) as pool:
        r = run_function(get_function("cbrt"), BINARY16, "exhaustive", pool)
    assert r.skipped == 1 and any("native-infinite" in w for w in r.warnings)


def test_run_config_entry_isolates_failures(monkeypatch):
    real = native.evaluate

    def fake(name, fmt, xs):
        if name == "atan":
            raise RuntimeError("boom")
        return real(name, fmt, xs)

    monkeypatch.setattr(native, "evaluate", fake)
    err = io.StringIO()
    run = run_config_entry(entry(), 1, ["acosh", "atan", "sqrt"], progress=err)
    names = [r.name for r in run.results]
    assert names == ["acosh", "atan", "sqrt"]
    assert run.results[1].error and "boom" in run.results[1].error
    assert run.results[0].ok and run.results[2].ok
    assert len(err.getvalue().splitlines()) == 3


def test_run_config_entry_placeholder_rounding():
    run = run_config_entry(entry(rounding="RD"), 1, ["sqrt"], progress=None)
    assert any("placeholder" in w for w in run.warnings)
    assert run.results[0].max_err_ulps <= 0.5 + 1e-5

import math
import random

import gmpy2
import mpmath
import numpy as np
import pytest

from ulpbench.fpcore import BFLOAT16, BINARY16, BINARY32, BINARY64, RoundingMode, next_up, round_to_format, ulp
from ulpbench.refeval import (
    REFERENCE_IDS,
    DomainError,
    NaNResultError,
    check_no_overflow,
    evaluate_in,
    make_context,
    policy_bits,
    reference_decimal,
    reference_eval,
    ulp_error,
    ulp_rz_of_reference,
)
from ulpbench.registry import domain_of


def mp(value, bits=200):
    return gmpy2.mpfr(value, bits)


def test_policy_bits():
    assert [policy_bits(f) for f in (BINARY16, BINARY32, BINARY64)] == [31, 44, 73]
    for f in (BINARY16, BINARY32, BINARY64, BFLOAT16):
        assert policy_bits(f) >= f.p + 20


def test_reference_worked_example():
    ref = reference_eval("exp", 1.46875, 30)
    assert ref.precision == 30
    assert round_to_format(ref, BFLOAT16, RoundingMode.RZ) == 4.34375


def test_reference_exact_and_domain():
    assert reference_eval("sqrt", 1.0, 44) == 1
    with pytest.raises(DomainError):
        reference_eval("log", -1.0, 44)
    with pytest.raises(DomainError):
        reference_eval("acosh", 0.5, 31)
    with pytest.raises(ValueError):
        reference_eval("gamma", 1.0, 31)


def test_reference_sin_against_200_bits():
    x = float(np.float32(0.5))
    r44 = reference_eval("sin", x, 44)
    r200 = reference_eval("sin", x, 200)
    ctx = make_context(300)
    rel = abs(ctx.div(ctx.sub(r44, r200), r200))
    assert rel <= gmpy2.mpfr(2) ** -44


@pytest.mark.parametrize("name", ["sinpi", "cospi", "tanpi"])
def test_pi_functions_against_mpmath(name):
    rng = random.Random(name)
    xs = [0.25, 0.75, 1.0 / 3, 2.0**-30, 12345.678, 1e15 + 0.5, -7.125, 3.0 - 2.0**-50]
    xs += [rng.uniform(-8, 8) for _ in range(200)] + [rng.uniform(-1e12, 1e12) for _ in range(50)]
    oracle = {"sinpi": mpmath.sinpi, "cospi": mpmath.cospi, "tanpi": lambda t: mpmath.sinpi(t) / mpmath.cospi(t)}[name]
    with mpmath.workprec(400):
        for x in xs:
            if name == "tanpi" and mpmath.cospi(x) == 0:
                assert gmpy2.is_infinite(reference_eval(name, x, 73))
                continue
            got = reference_eval(name, x, 73)
            want = oracle(mpmath.mpf(x))
            if want == 0:
                assert got == 0
                continue
            rel = abs((mpmath.mpf(got) - want) / want)
            assert rel <= mpmath.mpf(2) ** -72, (x, got, want)


def test_pi_functions_exact_values():
    assert reference_eval("sinpi", 1.0, 31) == 0
    assert reference_eval("sinpi", 0.5, 31) == 1
    assert reference_eval("sinpi", -1.5, 31) == 1
    assert reference_eval("cospi", 1.0, 31) == -1
    assert reference_eval("cospi", 0.5, 31) == 0
    assert reference_eval("tanpi", 0.25, 31) == 1
    assert reference_eval("tanpi", -0.75, 31) == 1
    assert gmpy2.is_infinite(reference_eval("tanpi", 0.5, 31))


def test_reference_ids_cover_registry():
    assert len(REFERENCE_IDS) == 24


# --- ulp of the RZ reference ---------------------------------------------


def test_ulp_rz_examples():
    assert ulp_rz_of_reference(mp(2) - mp(2) ** -30, BINARY16) == 2.0**-10
    assert ulp_rz_of_reference(mp(1.5), BINARY16) == 2.0**-10
    assert ulp_rz_of_reference(mp(-2) + mp(2) ** -30, BINARY16) == 2.0**-10
    assert ulp_rz_of_reference(mp(0), BINARY16) == 2.0**-24
    # RN overflows to infinity, RZ sits on f_max
    assert ulp_rz_of_reference(mp(65520), BINARY16) == 32.0
    with pytest.raises(OverflowError):
        ulp_rz_of_reference(mp(2 * 65504.0), BINARY16)


@pytest.mark.parametrize("fmt", [BINARY16, BINARY32, BINARY64, BFLOAT16])
def test_ulp_rz_matches_direct_rz(fmt):
    rng = random.Random(fmt.name)
    for _ in range(5000):
        e = rng.randint(fmt.emin - fmt.p - 2, fmt.emax)
        if rng.random() < 0.5:
            # just below a power of two, where the halving rule matters
            x = mp(2) ** (e + 1) - mp(2) ** (e + 1 - fmt.p - rng.randint(1, 30))
        else:
            x = gmpy2.mul(mp(rng.getrandbits(120) | 1 << 119), mp(2) ** (e - 119))
        x = x if rng.random() < 0.5 else -x
        if not check_no_overflow(x, fmt):
            continue
        direct = ulp(round_to_format(x, fmt, RoundingMode.RZ), fmt)
        assert ulp_rz_of_reference(x, fmt) == direct


# --- error metric ---------------------------------------------------------


def test_ulp_error_identity_and_one_ulp():
    ref = reference_eval("sqrt", 4.0, 31)
    assert ulp_error(2.0, ref, BINARY16) == 0.0
    assert ulp_error(next_up(2.0, BINARY16), ref, BINARY16) == 1.0
    ref = mp(1.5, 31)
    assert ulp_error(1.5, ref, BINARY16) == 0.0
    assert ulp_error(next_up(1.5, BINARY16), ref, BINARY16) == 1.0


def test_ulp_error_zero_iff_equal():
    ref = reference_eval("exp", 0.5, 31)
    y = round_to_format(ref, BINARY16, RoundingMode.RN)
    assert ulp_error(y, ref, BINARY16) > 0
    assert ulp_error(float(ref), mp(float(ref), 31), BINARY64) == 0


def test_ulp_error_nan_and_inf():
    ref = reference_eval("exp", 1.0, 31)
    with pytest.raises(NaNResultError):
        ulp_error(math.nan, ref, BINARY16)
    assert ulp_error(math.inf, ref, BINARY16) == math.inf


def test_ulp_error_policy_vs_200_bits_binary16_exp():
    rng = random.Random(1)
    dom = domain_of("exp", BINARY16)
    ctx31, ctx200 = make_context(31), make_context(200)
    for _ in range(1000):
        x = float(np.float16(rng.uniform(dom.lo, dom.hi)))
        y = float(np.exp(np.float16(x)))
        e31 = ulp_error(y, evaluate_in(ctx31, "exp", x), BINARY16, ctx31)
        e200 = ulp_error(y, evaluate_in(ctx200, "exp", x), BINARY16, ctx200)
        assert abs(e31 - e200) < 1e-6


def test_error_insensitive_to_extra_precision():
    rng = random.Random(2)
    for fmt, dt in ((BINARY32, np.float32), (BINARY64, np.float64)):
        lo, hi = make_context(policy_bits(fmt)), make_context(fmt.p + 60)
        for _ in range(300):
            x = float(dt(rng.uniform(-20, 20)))
            y = float(np.sin(dt(x)))
            a = ulp_error(y, evaluate_in(lo, "sin", x), fmt, lo)
            b = ulp_error(y, evaluate_in(hi, "sin", x), fmt, hi)
            assert abs(a - b) < 1e-6


def test_check_no_overflow_examples():
    fmax = 65504.0
    assert check_no_overflow(mp(fmax) + mp(0.4) * 32, BINARY16)
    assert not check_no_overflow(mp(2 * fmax), BINARY16)
    assert not check_no_overflow(gmpy2.inf(), BINARY16)
    assert check_no_overflow(mp(0), BINARY16)


def test_exp_binary16_domain_never_overflows():
    dom = domain_of("exp", BINARY16)
    v = np.arange(1 << 16, dtype=np.uint16).view(np.float16).astype(np.float64)
    v = v[np.isfinite(v) & (v >= dom.lo) & (v <= dom.hi)]
    ctx = make_context(31)
    assert all(check_no_overflow(evaluate_in(ctx, "exp", x), BINARY16) for x in v.tolist())


def test_reference_decimal_round_trips():
    for x in (0.1, 1.46875, 3.0, 1e-300, 7e300):
        for bits in (31, 44, 73):
            ref = reference_eval("exp", math.log(x) if x > 1e-200 else -690.0, bits)
            s = reference_decimal(ref)
            assert gmpy2.mpfr(s, bits) == ref
    assert reference_decimal(reference_eval("exp", 1.46875, 31)) == "4.343801994"

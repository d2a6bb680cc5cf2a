import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from summatoria.arith_functions import (
    BIG_OMEGA, G_STAR, LOG, LOG_PHI, MOBIUS, OMEGA, RECIPROCAL, SQUAREFREE, UNIT, FunctionSpec, Kind,
    SpecError, constant, log_of, pointwise, power_k,
)
from summatoria.asymptotic_models import (
    MODEL_NAMES, PreconditionError, abel_prime_sum_estimate, additive_mean_model, build_model,
    chebyshev_model, delange_condition, density_limit_model, euler_maclaurin_decreasing,
    euler_maclaurin_model, euler_maclaurin_nondecreasing, kubilius_main_term, kubilius_model,
    normal_order_mean_model, normal_order_model, power_sum_model, prime_count_model,
    strongly_additive_mean, wirsing_mean_value, wirsing_model, zero_model,
)
from summatoria.sieve_core import primes_up_to

SIX_OVER_PI2 = 6 / math.pi**2
ONE_MINUS_INV_P = FunctionSpec(
    "one_minus_inv_p", Kind.STRONGLY_MULTIPLICATIVE,
    prime_power_rule=lambda p, a: 1.0 - 1.0 / np.asarray(p, dtype=float) + 0.0 * np.asarray(a),
    range_hint=(0.0, 1.0),
)


def test_strongly_additive_mean_examples():
    assert strongly_additive_mean(OMEGA, 10) == pytest.approx(1 / 2 + 1 / 3 + 1 / 5 + 1 / 7)
    expected = math.log(2) / 3 + math.log(4) / 5 + math.log(6) / 7
    assert strongly_additive_mean(LOG_PHI, 10) == pytest.approx(expected)
    assert strongly_additive_mean(OMEGA, 1) == 0.0
    # Omega and omega agree on primes
    assert strongly_additive_mean(BIG_OMEGA, 1000) == strongly_additive_mean(OMEGA, 1000)
    with pytest.raises(SpecError):
        strongly_additive_mean(MOBIUS, 10)


def test_additive_mean_models():
    m = additive_mean_model("omega")
    assert m.main(15) == pytest.approx(15 * math.log(math.log(15)))
    assert additive_mean_model("log_phi").main(10) == pytest.approx(10 * math.log(10))
    bo = additive_mean_model("big_omega")
    assert bo.n_floor == 3 and math.isfinite(bo.main(3)) and bo.main(3) > 0
    with pytest.raises(PreconditionError):
        bo.check_domain(2)
    assert all(additive_mean_model(x).claimed_exponent == 1.0 for x in ("omega", "big_omega", "log_phi"))
    with pytest.raises(KeyError):
        additive_mean_model("mobius")


@pytest.mark.parametrize("prime_bound", [10**3, 10**4, 10**5, 10**6])
def test_wirsing_unit_is_exactly_one(prime_bound):
    assert abs(wirsing_mean_value(UNIT, prime_bound).limit - 1.0) <= 1e-12


def test_wirsing_mobius_diverges():
    res = wirsing_mean_value(MOBIUS, 10**5)
    assert res.diverged and res.limit == 0.0
    limit, diverged = res
    assert (limit, diverged) == (0.0, True)


def test_wirsing_squarefree():
    res = wirsing_mean_value(SQUAREFREE, 10**5)
    assert not res.diverged
    assert abs(res.limit - SIX_OVER_PI2) <= 1e-3
    # truncation at P leaves prod_{p > P}(1 - 1/p^2)^-1, about 1/(P ln P)
    assert abs(res.limit - SIX_OVER_PI2) <= 2 / (10**5 * math.log(10**5))


def test_wirsing_preconditions():
    with pytest.raises(PreconditionError):
        wirsing_mean_value(UNIT, 999)
    with pytest.raises(PreconditionError):
        wirsing_mean_value(UNIT, 10**3, power_bound=10)
    big = FunctionSpec("two", Kind.STRONGLY_MULTIPLICATIVE,
                       prime_power_rule=lambda p, a: 2.0 + 0.0 * np.asarray(p))
    with pytest.raises(PreconditionError):
        wirsing_mean_value(big, 10**3)
    with pytest.raises(SpecError):
        wirsing_mean_value(OMEGA, 10**3)


def test_delange_condition():
    assert tuple(delange_condition(UNIT, 10**4)) == (0.0, True)
    res = delange_condition(MOBIUS, 10**6)
    primes = primes_up_to(10**6)
    assert res.partial_sum == pytest.approx(2 * math.fsum((1.0 / primes).tolist()), rel=1e-12)
    assert not res.converged
    res = delange_condition(ONE_MINUS_INV_P, 10**6)
    assert res.converged
    assert res.partial_sum == pytest.approx(math.fsum((1.0 / primes**2.0).tolist()), rel=1e-12)
    assert res.partial_sum < 0.4523  # prime zeta P(2) = 0.45224...


def test_kubilius():
    for n in (20, 10**4, 10**9):
        assert kubilius_main_term(UNIT, 1, n, 10**4) == pytest.approx(n, rel=1e-9)
    for kappa in (0, -1):
        assert kubilius_main_term(SQUAREFREE, kappa, 100) == 0.0
    with pytest.raises(PreconditionError):
        kubilius_main_term(UNIT, 1.5, 100)
    with pytest.raises(PreconditionError):
        kubilius_main_term(UNIT, 1, 19)


def test_kubilius_matches_wirsing_at_kappa_one():
    w = wirsing_mean_value(SQUAREFREE, 10**5).limit
    k = kubilius_main_term(SQUAREFREE, 1, 10**6, 10**5) / 10**6
    assert k == pytest.approx(w, rel=1e-9)


def test_kubilius_half():
    # kappa = 1/2 with g = unit: n (ln n)^(-1/2) / Gamma(1/2) * prod (1-1/p)^(1/2) / (1-1/p)
    n, P = 10**6, 10**4
    primes = primes_up_to(P).astype(float)
    prod = math.exp(math.fsum((-0.5 * np.log1p(-1 / primes)).tolist()))
    expected = n / math.sqrt(math.log(n)) / math.sqrt(math.pi) * prod
    assert kubilius_main_term(UNIT, 0.5, n, P) == pytest.approx(expected, rel=1e-12)


def test_gamma_sanity():
    assert math.gamma(1) == 1 and math.gamma(2) == 1
    assert math.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_euler_maclaurin_examples():
    assert euler_maclaurin_decreasing(RECIPROCAL, 10**3)[0] == pytest.approx(math.log(1e3), rel=1e-9)
    inv_sq = pointwise("inv_sq", lambda t: 1 / np.asarray(t, dtype=float) ** 2)
    assert euler_maclaurin_decreasing(inv_sq, 10**3) == (pytest.approx(0.999, rel=1e-9), 1.0)
    assert euler_maclaurin_decreasing(RECIPROCAL, 1) == (0.0, 1.0)
    main, env = euler_maclaurin_nondecreasing(power_k(2), 10)
    assert main == pytest.approx(333.0) and env == 100.0 and abs(385 - main) <= env
    main, env = euler_maclaurin_nondecreasing(power_k(1), 10)
    assert main == pytest.approx(49.5) and env == 10 and abs(55 - main) <= env
    main, env = euler_maclaurin_nondecreasing(constant(1.0), 5)
    assert main == pytest.approx(4.0) and env == 1.0
    with pytest.raises(PreconditionError):
        euler_maclaurin_decreasing(power_k(1), 100)
    with pytest.raises(PreconditionError):
        euler_maclaurin_nondecreasing(RECIPROCAL, 100)
    assert euler_maclaurin_model(RECIPROCAL).envelope(10**6) == 1.0


def test_power_sum_and_density_models():
    m = power_sum_model(1)
    assert m.main(100) == 5000 and m.envelope(100) == 100 and abs(5050 - m.main(100)) <= 100
    assert power_sum_model(2).main(10) == pytest.approx(1000 / 3)
    m3 = power_sum_model(3)
    assert m3.main(1) == 0.25 and m3.envelope(1) == 1 and m3.claimed_exponent == 3
    with pytest.raises(PreconditionError):
        power_sum_model(0)
    d = density_limit_model(SIX_OVER_PI2)
    assert d.strict_decay and d.main(10**6) == pytest.approx(SIX_OVER_PI2 * 10**6)
    assert zero_model().main(10**6) == 0.0
    assert density_limit_model(1).main(7) - 7 == 0


def test_abel_estimates():
    est = abel_prime_sum_estimate(LOG, None, 10**6)
    assert not est.finite_difference
    # main = n - int_2^n dt/ln t, and that integral is li(n) - li(2)
    assert 10**6 - est.main == pytest.approx(78626.5039956821, rel=1e-8)
    small = abel_prime_sum_estimate(LOG, None, 3)
    assert math.isfinite(small.main) and small.envelope > 0
    for c in (1.0, 2.5):
        e = abel_prime_sum_estimate(constant(c), None, 10**5)
        assert e.main == pytest.approx(c * 10**5 / math.log(10**5), rel=1e-12)
    with pytest.raises(PreconditionError):
        abel_prime_sum_estimate(LOG, None, 2)


def test_abel_finite_difference_fallback():
    bare = pointwise("bare_log", lambda t: np.log(np.asarray(t, dtype=float)))
    with pytest.warns(UserWarning):
        fd = abel_prime_sum_estimate(bare, None, 10**5)
    exact = abel_prime_sum_estimate(LOG, None, 10**5)
    assert fd.finite_difference
    assert fd.main == pytest.approx(exact.main, rel=1e-7)


def test_normal_order_mean_model():
    e_spec = FunctionSpec("e_pow", Kind.STRONGLY_MULTIPLICATIVE,
                          prime_power_rule=lambda p, a: math.e + 0.0 * np.asarray(p) * np.asarray(a))
    assert normal_order_mean_model(log_of(e_spec), 10) == pytest.approx(math.exp(1.1761904761904762))
    assert normal_order_mean_model(log_of(UNIT), 10**4) == 1.0
    # g*: the prediction grows like C ln n
    vals = [normal_order_mean_model(log_of(G_STAR), n) / math.log(n) for n in (10**5, 10**6, 10**7)]
    assert max(vals) / min(vals) < 1.05
    with pytest.raises(PreconditionError):
        normal_order_mean_model(log_of(G_STAR), 2)


MODEL_TEXTS = [
    ("additive_mean:omega", None), ("density:0.5", None), ("zero", None), ("power_sum:2", None),
    ("euler_maclaurin", "reciprocal"), ("euler_maclaurin:power_2", None), ("chebyshev", None),
    ("prime_count", None), ("abel:log", None), ("abel:one", None), ("normal_order", None),
    ("wirsing:squarefree", None), ("kubilius:0.5:unit", None),
]


@pytest.mark.parametrize("text,function", MODEL_TEXTS)
def test_envelopes_positive_and_finite(text, function):
    m = build_model(text, function, prime_bound=10**4)
    for n in sorted({max(m.n_floor, 3), 20, 1000, 10**5}):
        if n < m.n_floor:
            continue
        assert math.isfinite(m.main(n))
        assert m.envelope(n) > 0 and math.isfinite(m.envelope(n))


def test_build_model_names():
    assert build_model("density:0.607927").name == "density:0.607927"
    assert build_model("kubilius:1:unit", prime_bound=10**4).main(10**4) == pytest.approx(10**4)
    assert build_model("wirsing", "unit", prime_bound=10**4).main(10) == pytest.approx(10.0)
    assert "limit=" in wirsing_model(SQUAREFREE, 10**4).notes[0]
    assert chebyshev_model().envelope(100) == pytest.approx(100 / math.log(100))
    assert prime_count_model().main(100) == pytest.approx(100 / math.log(100))
    assert normal_order_model().name == "normal_order:g_star"
    assert kubilius_model(UNIT, 1).n_floor == 20
    with pytest.raises(KeyError):
        build_model("nonsense")
    assert len(MODEL_NAMES) >= 10

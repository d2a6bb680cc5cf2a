"""Desk-scale acceptance run (n <= 10**7), one check per criterion.

Runs under pytest (a summary block lists every criterion) or directly with
``python tests/test_acceptance.py``.
"""

import math
import sys
from functools import lru_cache

import pytest

from summatoria.arith_functions import (
    BIG_OMEGA, G_STAR, LOG, LOG_PHI, MOBIUS, OMEGA, RECIPROCAL, SQUAREFREE, UNIT, constant, power_k,
)
from summatoria.asymptotic_models import (
    abel_prime_sum_estimate, kubilius_main_term, wirsing_mean_value,
)
from summatoria.io import series_csv
from summatoria.sieve_core import build_block, simple_sieve
from summatoria.summatory import (
    PRIME_INDICATOR, compute_many, geometric_grid, prime_summand,
)
from summatoria.validation import fit_error_exponent, stabilization_check

pytestmark = pytest.mark.slow

N_MAX = 10**7
SIX_OVER_PI2 = 0.607927  # digits of 6/pi^2


@lru_cache(maxsize=None)
def run(workers):
    """Every series the criteria need, from two sieve passes."""
    grid = geometric_grid(N_MAX)
    main = compute_many(
        [OMEGA, BIG_OMEGA, LOG_PHI, RECIPROCAL, G_STAR, SQUAREFREE, MOBIUS,
         prime_summand(RECIPROCAL, "prime_reciprocal"),
         prime_summand(LOG, "theta"), PRIME_INDICATOR],
        grid, workers=workers,
    )
    powers = compute_many([power_k(k) for k in (1, 2, 3)], geometric_grid(10**6, 100), workers=workers)
    return {s.function_name: s for s in main + powers}


def _from(series, lo):
    return [(n, v) for n, v in zip(series.grid, series.values) if n >= lo]


# --- oracles -------------------------------------------------------------------

def trial_division(m):
    out, p = [], 2
    while p * p <= m:
        a = 0
        while m % p == 0:
            m //= p
            a += 1
        if a:
            out.append((p, a))
        p += 1
    if m > 1:
        out.append((m, 1))
    return out


def oracle_values(m):
    f = trial_division(m)
    mu = 0 if any(a > 1 for _, a in f) else (-1) ** len(f)
    phi = sum(1 for k in range(1, m + 1) if math.gcd(k, m) == 1)
    return mu, len(f), sum(a for _, a in f), phi


# --- criteria --------------------------------------------------------------------

def check_1():
    M = 10**4
    block = build_block(1, M + 1, simple_sieve(100))
    bad = []
    for m in range(1, M + 1):
        i = m - 1
        got = (int(block.mu[i]), int(block.omega[i]), int(block.big_omega[i]), int(block.phi[i]))
        if got != oracle_values(m):
            bad.append(m)
    return not bad, f"{M} integers, {len(bad)} mismatches"


def check_2():
    d = run(1)
    parts, ok = [], True
    for name in ("omega", "big_omega"):
        s = d[name]
        r = [(v - n * math.log(math.log(n))) / n for n, v in zip(s.grid, s.values)]
        st = stabilization_check(r, 5)
        bounded = max(abs(x) for x in r) <= 3
        ok &= st.spread <= 0.02 and bounded
        parts.append(f"{name} const~{st.estimate:.4f} spread={st.spread:.4f} max|r|={max(map(abs, r)):.3f}")
    return ok, "; ".join(parts)


def check_3():
    s = run(1)["log_phi"]
    r = [(v - n * math.log(n)) / n for n, v in zip(s.grid, s.values)]
    st = stabilization_check(r, 5)
    return st.spread <= 0.02 and st.estimate < 0, f"const~{st.estimate:.6f} spread={st.spread:.2e}"


def check_4():
    vals = [v - math.log(math.log(n)) for n, v in _from(run(1)["prime_reciprocal"], 10**4)]
    spread = max(vals) - min(vals)
    return spread <= 0.01, f"const~{vals[-1]:.6f} spread={spread:.2e} over 1e4..1e7"


def check_5():
    q = run(1)["squarefree"].value_at(N_MAX)
    dev = abs(q / N_MAX - SIX_OVER_PI2)
    return dev <= 1e-3, f"Q(1e7)={q}, |Q/n - 0.607927|={dev:.2e}"


def check_6():
    pts = _from(run(1)["mobius"], 10**5)
    ratios = [abs(v) / n for n, v in pts]
    ok = max(ratios) <= 0.01 and ratios[-1] < ratios[0]
    return ok, f"max|M|/n={max(ratios):.2e}, at 1e5 {ratios[0]:.2e}, at 1e7 {ratios[-1]:.2e}"


def check_7():
    vals = [v - math.log(n) for n, v in _from(run(1)["reciprocal"], 10**4)]
    spread = max(vals) - min(vals)
    return spread <= 1e-3, f"const~{vals[-1]:.8f} spread={spread:.2e}"


def check_8():
    d = run(1)
    worst = 0.0
    for k in (1, 2, 3):
        for n, v in zip(d[f"power_{k}"].grid, d[f"power_{k}"].values):
            worst = max(worst, abs(v - n ** (k + 1) / (k + 1)) / n**k)
    return worst <= 1.1, f"max |S - n^(k+1)/(k+1)|/n^k = {worst:.6f}"


def check_9():
    s = run(1)["theta"]
    worst = max(abs(v - n) * math.log(n) / n for n, v in _from(s, 10**4))
    last = s.value_at(N_MAX) / N_MAX
    return worst <= 1.0 and 0.95 <= last <= 1.0, f"max|theta-n|ln n/n={worst:.4f}, theta(1e7)/1e7={last:.6f}"


def check_10():
    n = 10**6
    est = abel_prime_sum_estimate(LOG, None, n)
    theta = run(1)["theta"].value_at(n)
    ok = abs(theta - est.main) <= est.envelope
    one = abel_prime_sum_estimate(constant(1.0), lambda t: 0.0, n)
    ok &= math.isclose(one.main, n / math.log(n), rel_tol=1e-9)
    pi = run(1)["prime_count"]
    errs = [abs(pi.value_at(x) - x / math.log(x)) * math.log(x) ** 2 / x for x in (10**5, 10**6, 10**7)]
    ok &= max(errs) <= 3
    return ok, (f"|theta-main|={abs(theta - est.main):.1f} <= env={est.envelope:.1f}; "
                f"pi errors {', '.join(f'{e:.3f}' for e in errs)}")


def check_11():
    unit = [wirsing_mean_value(UNIT, pb).limit for pb in (10**3, 10**4, 10**5)]
    mu = wirsing_mean_value(MOBIUS, 10**5)
    sq = wirsing_mean_value(SQUAREFREE, 10**5).limit
    ok = all(abs(u - 1.0) <= 1e-12 for u in unit)
    ok &= mu.diverged and mu.limit == 0.0
    ok &= abs(sq - 6 / math.pi**2) <= 1e-3
    return ok, f"unit={unit}, mobius diverged={mu.diverged} value={mu.limit}, squarefree={sq:.10f}"


def check_12():
    ns = (20, 1000, 10**7)
    rel = max(abs(kubilius_main_term(UNIT, 1, n, 10**5) - n) / n for n in ns)
    zeros = [kubilius_main_term(UNIT, k, n) for k in (0, -1) for n in ns]
    return rel <= 1e-9 and all(z == 0 for z in zeros), f"max rel err (kappa=1)={rel:.2e}, kappa 0/-1 -> {set(zeros)}"


def check_13():
    pts = _from(run(1)["g_star"], 10**4)
    vals = [v / n / math.log(n) for n, v in pts]
    c = stabilization_check(vals, 5, tol=math.inf).estimate
    inside = all(c / b <= v <= c * b for (n, _), v in zip(pts, vals)
                 for b in [math.exp(math.log(math.log(n)) ** 0.6)])
    step = vals[-1] / vals[-2]
    return inside and 0.9 <= step <= 1.1, f"C~{c:.4f}, range [{min(vals):.4f}, {max(vals):.4f}], last step {step:.4f}"


def check_14():
    grid = geometric_grid(10**7)
    errs = []
    for a in (0.25, 0.5, 1.0):
        fit = fit_error_exponent(grid, [float(n) ** a for n in grid])
        errs.append(abs(fit.alpha - a))
    return max(errs) <= 1e-6, f"max |alpha_fit - alpha| = {max(errs):.2e}"


def check_15():
    one, four = run(1), run(4)
    differ = [k for k in one if series_csv(one[k]) != series_csv(four[k])]
    return not differ and one.keys() == four.keys(), f"{len(one)} series compared, differing: {differ or 'none'}"


CRITERIA = [
    (1, "sieve vs trial division, m <= 1e4", check_1),
    (2, "sum omega, sum Omega = n ln ln n + O(n)", check_2),
    (3, "sum ln phi = n ln n + O(n), negative constant", check_3),
    (4, "sum 1/p = ln ln n + O(1)", check_4),
    (5, "squarefree density 6/pi^2", check_5),
    (6, "M(n) = o(n)", check_6),
    (7, "harmonic sum = ln n + O(1)", check_7),
    (8, "power sums n^(k+1)/(k+1) + O(n^k)", check_8),
    (9, "theta(n) = n + O(n/ln n)", check_9),
    (10, "partial-summation estimates for theta and pi", check_10),
    (11, "Wirsing products: unit, mobius, squarefree", check_11),
    (12, "Kubilius main term, kappa in {1, 0, -1}", check_12),
    (13, "g* mean inside exp((ln ln n)^0.6) band", check_13),
    (14, "exponent fitter recovers n^alpha", check_14),
    (15, "workers 1 vs 4 byte-identical CSV", check_15),
]


@pytest.mark.parametrize("number,label,check", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, label, check, record_criterion):
    ok, detail = check()
    record_criterion(number, label, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, label, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {label}: {detail}", flush=True)
    sys.exit(1 if failed else 0)

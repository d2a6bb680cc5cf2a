"""Main terms and error envelopes for summatory functions.

An :class:`AsymptoticModel` pairs ``main(n)`` with ``envelope(n)``: the claim
being modelled is ``S(n) = main(n) + O(envelope(n))`` (or ``o(envelope)``
when ``strict_decay`` is set).  The mean-value theorems for multiplicative
functions (Wirsing, Delange, Kubilius) are evaluated as truncated Euler
products over the primes up to a bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .arith_functions import (
    G_STAR,
    FunctionSpec,
    Kind,
    SpecError,
    constant,
    get_function,
    log_of,
    strongly_additive_shadow,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, integrate
from .sieve_core import primes_up_to

# working exponent 1/2 + eps for the e^{O((ln ln n)^{1/2+eps})} envelope
NORMAL_ORDER_EPS = 0.1
# quadrature tolerance floor when f' comes from central differences
FD_REL_TOL = 1e-6


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class AsymptoticModel:
    name: str
    main: Callable[[int], float]
    envelope: Callable[[int], float]
    claimed_exponent: float | None = None
    provenance: str = ""
    n_floor: int = 1
    strict_decay: bool = False
    notes: tuple = field(default_factory=tuple)

    def check_domain(self, n: int) -> None:
        if n < self.n_floor:
            raise PreconditionError(f"model {self.name} is defined for n >= {self.n_floor}, got {n}")


def _loglog(n):
    return math.log(math.log(n))


# --- strongly additive mean values -----------------------------------------

def _prime_values(spec: FunctionSpec, primes: np.ndarray, alpha=1) -> np.ndarray:
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(
            np.asarray(spec.prime_power_rule(primes, np.full_like(primes, alpha)), dtype=float),
            primes.shape,
        )
    if not np.all(np.isfinite(vals)):
        p = int(primes[np.flatnonzero(~np.isfinite(vals))[0]])
        raise PreconditionError(f"{spec.name}: non-finite value at p={p}, alpha={alpha}")
    return vals


def strongly_additive_mean(spec: FunctionSpec, n: int) -> float:
    """A_n = sum_{p <= n} f(p) / p.

    An additive spec is replaced by its strongly additive shadow (same values
    at primes).
    """
    if not spec.kind.is_additive:
        raise SpecError(f"{spec.name}: expected an additive spec, got {spec.kind.value}")
    spec = strongly_additive_shadow(spec)
    if n < 2:
        return 0.0
    primes = primes_up_to(int(n))
    vals = _prime_values(spec, primes)
    return math.fsum((vals / primes).tolist())


def additive_mean_model(name: str) -> AsymptoticModel:
    """n ln n + O(n) for log_phi; n ln ln n + O(n) for omega and big_omega."""
    if name == "log_phi":
        return AsymptoticModel(
            "additive_mean:log_phi", lambda n: n * math.log(n), lambda n: float(n),
            claimed_exponent=1.0, provenance="sum ln phi(m) = n ln n + O(n)", n_floor=2,
        )
    if name in ("omega", "big_omega"):
        return AsymptoticModel(
            f"additive_mean:{name}", lambda n: n * _loglog(n), lambda n: float(n),
            claimed_exponent=1.0, provenance="sum omega(m), sum Omega(m) = n ln ln n + O(n)",
            n_floor=3,
        )
    raise KeyError(f"no additive mean model for {name!r}")


# --- multiplicative mean values ----------------------------------------------

@dataclass(frozen=True)
class MeanValueResult:
    limit: float
    diverged: bool
    partial_sums: dict
    tail_bound: float
    prime_bound: int

    def __iter__(self):
        return iter((self.limit, self.diverged))


@dataclass(frozen=True)
class DelangeResult:
    partial_sum: float
    converged: bool
    partial_sums: dict

    def __iter__(self):
        return iter((self.partial_sum, self.converged))


def _power_table(spec: FunctionSpec, primes: np.ndarray, power_bound: int) -> tuple[np.ndarray, int]:
    """g(p^v) for v = 1..V as a (V, len(primes)) array.

    V is at least power_bound and large enough that 2**-V is below double
    precision, so the geometric tails of bounded g vanish in rounding.
    """
    depth = max(power_bound, 60)
    rows = [_prime_values(spec, primes, v) for v in range(1, depth + 1)]
    return np.vstack(rows), depth


def _require_bounded(spec: FunctionSpec, table: np.ndarray, primes: np.ndarray) -> None:
    if spec.range_hint is not None:
        lo, hi = spec.range_hint
        if lo < -1 or hi > 1:
            raise PreconditionError(f"{spec.name}: range hint {spec.range_hint} exceeds |g| <= 1")
    bad = np.abs(table) > 1.0 + 1e-15
    if bad.any():
        v, i = np.argwhere(bad)[0]
        raise PreconditionError(
            f"{spec.name}: |g(p^v)| > 1 at p={int(primes[i])}, v={int(v) + 1}"
        )


def _divergence_checkpoints(prime_bound: int) -> list[int]:
    pts = [10**k for k in range(3, 19) if 10**k <= prime_bound]
    if not pts or pts[-1] != prime_bound:
        pts.append(prime_bound)
    if len(pts) < 2:
        pts.insert(0, 100)
    return pts


def _delange_partials(g_at_p: np.ndarray, primes: np.ndarray, prime_bound: int):
    terms = (1.0 - g_at_p) / primes
    checkpoints = _divergence_checkpoints(prime_bound)
    partial = {}
    for P in checkpoints:
        k = int(np.searchsorted(primes, P, side="right"))
        partial[P] = math.fsum(terms[:k].tolist())
    last, prev = checkpoints[-1], checkpoints[-2]
    growth = partial[last] - partial[prev]
    diverging = growth > 0.5 * (_loglog(last) - _loglog(prev))
    return partial, diverging


def wirsing_mean_value(spec: FunctionSpec, prime_bound: int = 10**6, power_bound: int = 40) -> MeanValueResult:
    """lim (1/n) sum g(m) = prod_p (1 - 1/p) sum_{v>=0} g(p^v)/p^v for real |g| <= 1.

    The product is truncated at ``prime_bound``.  If the partial sums of
    (1 - g(p))/p still grow at a ln ln rate at the largest checkpoint the
    product is classified as divergent and the limit is 0.
    """
    if not spec.kind.is_multiplicative:
        raise SpecError(f"{spec.name}: Wirsing's theorem needs a multiplicative spec")
    if prime_bound < 1000 or power_bound < 20:
        raise PreconditionError("need prime_bound >= 1000 and power_bound >= 20")
    primes = primes_up_to(prime_bound)
    table, depth = _power_table(spec, primes, power_bound)
    _require_bounded(spec, table, primes)

    x = 1.0 / primes.astype(float)
    # (1 - x) * sum_v a_v x^v - 1 = sum_{v>=1} (a_v - a_{v-1}) x^v with a_0 = 1
    prev = np.vstack([np.ones_like(x), table[:-1]])
    powers = x[None, :] ** np.arange(1, depth + 1)[:, None]
    excess = ((table - prev) * powers)[::-1].sum(axis=0)
    # the dropped term -a_V x^(V+1) is below 2**-61
    partial, diverging = _delange_partials(table[0], primes, prime_bound)

    if np.any(excess <= -1.0):
        return MeanValueResult(0.0, False, partial, 0.0, prime_bound)
    logs = np.log1p(excess)
    if diverging:
        return MeanValueResult(0.0, True, partial, math.inf, prime_bound)
    value = math.exp(math.fsum(logs.tolist()))
    last_decade = primes > prime_bound / 10
    tail = abs(math.fsum(logs[last_decade].tolist()))
    return MeanValueResult(value, False, partial, tail, prime_bound)


def delange_condition(spec: FunctionSpec, prime_bound: int = 10**6) -> DelangeResult:
    """Partial sum of (1 - g(p))/p over p <= prime_bound and a convergence verdict."""
    if spec.kind is Kind.POINTWISE:
        raise SpecError(f"{spec.name}: Delange's condition needs a multiplicative spec")
    primes = primes_up_to(prime_bound)
    g = _prime_values(spec, primes)
    _require_bounded(spec, g[None, :], primes)
    partial, diverging = _delange_partials(g, primes, prime_bound)
    return DelangeResult(partial[max(partial)], not diverging, partial)


def kubilius_main_term(spec: FunctionSpec, kappa: float, n: int, prime_bound: int = 10**6,
                       power_bound: int = 40) -> float:
    """n (ln n)^(kappa-1) / Gamma(kappa) * prod_p (1-1/p)^kappa (1 + sum_a g(p^a)/p^a)."""
    if abs(kappa) > 1:
        raise PreconditionError(f"|kappa| must be <= 1, got {kappa}")
    if n < 20:
        raise PreconditionError(f"Kubilius' estimate holds for n >= 20, got {n}")
    if kappa in (0, -1):
        return 0.0
    if not spec.kind.is_multiplicative:
        raise SpecError(f"{spec.name}: Kubilius' theorem needs a multiplicative spec")
    primes = primes_up_to(prime_bound)
    table, depth = _power_table(spec, primes, power_bound)
    _require_bounded(spec, table, primes)
    x = 1.0 / primes.astype(float)
    powers = x[None, :] ** np.arange(1, depth + 1)[:, None]
    series = (table * powers)[::-1].sum(axis=0)
    if np.any(series <= -1.0):
        return 0.0
    logs = kappa * np.log1p(-x) + np.log1p(series)
    product = math.exp(math.fsum(logs.tolist()))
    return n * math.log(n) ** (kappa - 1) / math.gamma(kappa) * product


# --- smooth sums (Euler-Maclaurin type) --------------------------------------

def _real_rule(spec: FunctionSpec) -> Callable[[float], float]:
    if spec.kind is not Kind.POINTWISE:
        raise SpecError(f"{spec.name}: needs a pointwise spec with a real extension")
    rule = spec.pointwise_rule
    return lambda t: float(rule(t))


def _sample_points(a: float, b: float, k: int = 64) -> np.ndarray:
    return np.exp(np.linspace(math.log(a), math.log(b), k))


def check_monotone(spec: FunctionSpec, a: float, b: float, strict_decrease: bool) -> None:
    f = _real_rule(spec)
    vals = [f(t) for t in _sample_points(a, b)]
    diffs = np.diff(vals)
    if strict_decrease and not np.all(diffs < 0):
        raise PreconditionError(f"{spec.name} is not strictly decreasing on [{a}, {b}]")
    if not strict_decrease and not np.all(diffs >= 0):
        raise PreconditionError(f"{spec.name} is not non-decreasing on [{a}, {b}]")


def euler_maclaurin_decreasing(spec: FunctionSpec, n: int, q: QuadratureConfig = DEFAULT_QUADRATURE) -> tuple[float, float]:
    """(integral of f over [1, n], 1.0) for f strictly decreasing to 0."""
    if n <= 1:
        return 0.0, 1.0
    check_monotone(spec, 1.0, float(n), strict_decrease=True)
    return integrate(_real_rule(spec), 1.0, float(n), q), 1.0


def euler_maclaurin_nondecreasing(spec: FunctionSpec, n: int, q: QuadratureConfig = DEFAULT_QUADRATURE) -> tuple[float, float]:
    """(integral of f over [1, n], f(n)) for non-decreasing f."""
    f = _real_rule(spec)
    if n <= 1:
        return 0.0, abs(f(1.0))
    check_monotone(spec, 1.0, float(n), strict_decrease=False)
    return integrate(f, 1.0, float(n), q), abs(f(float(n)))


def euler_maclaurin_model(spec: FunctionSpec, q: QuadratureConfig = DEFAULT_QUADRATURE) -> AsymptoticModel:
    """Integral main term; envelope 1 or f(n) depending on monotonicity."""
    f = _real_rule(spec)
    decreasing = f(2.0) < f(1.0)
    if decreasing:
        return AsymptoticModel(
            f"euler_maclaurin:{spec.name}",
            lambda n: euler_maclaurin_decreasing(spec, n, q)[0], lambda n: 1.0,
            claimed_exponent=0.0, provenance="decreasing f -> 0: S(n) = int_1^n f + O(1)",
        )
    return AsymptoticModel(
        f"euler_maclaurin:{spec.name}",
        lambda n: euler_maclaurin_nondecreasing(spec, n, q)[0],
        lambda n: euler_maclaurin_nondecreasing(spec, n, q)[1],
        provenance="non-decreasing f: S(n) = int_1^n f + O(f(n))",
    )


def power_sum_model(k: float) -> AsymptoticModel:
    if not k > 0:
        raise PreconditionError(f"k must be positive, got {k}")
    k = float(k)
    return AsymptoticModel(
        f"power_sum:{k:g}", lambda n: n ** (k + 1) / (k + 1), lambda n: float(n) ** k,
        claimed_exponent=k, provenance="sum m^k = n^(k+1)/(k+1) + O(n^k)",
    )


def density_limit_model(d_star: float) -> AsymptoticModel:
    """S(n) = d* n + o(n)."""
    d_star = float(d_star)
    if not math.isfinite(d_star):
        raise PreconditionError("density must be finite")
    return AsymptoticModel(
        f"density:{d_star:g}", lambda n: d_star * n, lambda n: float(n),
        claimed_exponent=1.0, provenance="S(n) = d* n + o(n)", strict_decay=True,
    )


# --- sums over primes ----------------------------------------------------------

@dataclass(frozen=True)
class AbelEstimate:
    main: float
    envelope: float
    finite_difference: bool = False

    def __iter__(self):
        return iter((self.main, self.envelope))


def _finite_difference(f):
    def df(t):
        h = max(1e-6, 1e-8 * t)
        return (f(t + h) - f(t - h)) / (2 * h)
    return df


def abel_prime_sum_estimate(spec: FunctionSpec, f_prime=None, n: int = 10**6,
                            q: QuadratureConfig = DEFAULT_QUADRATURE) -> AbelEstimate:
    """Prime-sum estimate from partial summation against pi(t) ~ t/ln t.

    main     = n f(n)/ln n - int_2^n t f'(t)/ln t dt
    envelope = n |f(n)|/ln^2 n + int_2^n t |f'(t)|/ln^2 t dt
    """
    if n < 3:
        raise PreconditionError(f"need n >= 3, got {n}")
    f = _real_rule(spec)
    fd = False
    if f_prime is None:
        f_prime = spec.derivative
    if f_prime is None:
        warnings.warn(f"{spec.name}: no derivative supplied, using central differences", stacklevel=2)
        f_prime = _finite_difference(f)
        fd = True
        # difference quotients carry ~1e-10 relative noise, which a 1e-9
        # adaptive tolerance keeps chasing down to max_depth
        q = QuadratureConfig(max(q.rel_tol, FD_REL_TOL), q.abs_tol, q.max_depth)
    dfun = lambda t: float(f_prime(t))  # noqa: E731
    n = float(n)
    ln = math.log(n)
    fn = f(n)
    main = n * fn / ln - integrate(lambda t: t * dfun(t) / math.log(t), 2.0, n, q)
    env = n * abs(fn) / ln**2 + integrate(lambda t: t * abs(dfun(t)) / math.log(t) ** 2, 2.0, n, q)
    return AbelEstimate(main, env, fd)


def abel_model(spec: FunctionSpec, q: QuadratureConfig = DEFAULT_QUADRATURE) -> AsymptoticModel:
    cache = {}

    def est(n):
        if n not in cache:
            cache[n] = abel_prime_sum_estimate(spec, None, n, q)
        return cache[n]

    return AsymptoticModel(
        f"abel:{spec.name}", lambda n: est(n).main, lambda n: est(n).envelope,
        provenance="partial summation against pi(t) = t/ln t + O(t/ln^2 t)", n_floor=3,
    )


def chebyshev_model() -> AsymptoticModel:
    return AsymptoticModel(
        "chebyshev", lambda n: float(n), lambda n: n / math.log(n),
        claimed_exponent=1.0, provenance="theta(n) = n + O(n/ln n)", n_floor=2,
    )


def prime_count_model() -> AsymptoticModel:
    return AsymptoticModel(
        "prime_count", lambda n: n / math.log(n), lambda n: n / math.log(n) ** 2,
        claimed_exponent=1.0, provenance="pi(n) = n/ln n + O(n/ln^2 n)", n_floor=2,
    )


# --- multiplicative functions with normal order ------------------------------

def normal_order_mean_model(additive_log_spec: FunctionSpec, n: int) -> float:
    """exp(E[f, n]) for f = ln g, with E from the strongly additive mean of f."""
    if n < 3:
        raise PreconditionError(f"need n >= 3, got {n}")
    return math.exp(strongly_additive_mean(additive_log_spec, n))


def normal_order_model(g: FunctionSpec = G_STAR, eps: float = NORMAL_ORDER_EPS) -> AsymptoticModel:
    """S(n) ~ n exp(E[ln g, n]) within a factor exp((ln ln n)^(1/2 + eps))."""
    f = log_of(g)
    cache = {}

    def main(n):
        if n not in cache:
            cache[n] = n * normal_order_mean_model(f, n)
        return cache[n]

    return AsymptoticModel(
        f"normal_order:{g.name}", main,
        lambda n: main(n) * math.expm1(_loglog(n) ** (0.5 + eps)),
        provenance="(1/n) sum g = exp(E[f,n] + O(b(n) sqrt(D[f,n])))(1 + o(1))", n_floor=3,
    )


def wirsing_model(spec: FunctionSpec, prime_bound=10**6, power_bound=40) -> AsymptoticModel:
    res = wirsing_mean_value(spec, prime_bound, power_bound)
    model = density_limit_model(res.limit)
    return AsymptoticModel(
        f"wirsing:{spec.name}", model.main, model.envelope, 1.0,
        "S(n) = n prod_p (1-1/p) sum_v g(p^v)/p^v + o(n)", strict_decay=True,
        notes=(f"limit={res.limit!r}", f"diverged={res.diverged}", f"tail_bound={res.tail_bound!r}"),
    )


def kubilius_model(spec: FunctionSpec, kappa: float, prime_bound=10**5, power_bound=40) -> AsymptoticModel:
    # B is not estimated; the envelope carries B = 1
    cache = {}

    def main(n):
        if n not in cache:
            cache[n] = kubilius_main_term(spec, kappa, n, prime_bound, power_bound)
        return cache[n]

    return AsymptoticModel(
        f"kubilius:{kappa:g}:{spec.name}", main,
        lambda n: n * math.sqrt(_loglog(n) / math.log(n)),
        provenance="Kubilius main term + B n sqrt(ln ln n / ln n)", n_floor=20,
    )


def zero_model() -> AsymptoticModel:
    return density_limit_model(0.0)


MODEL_NAMES = (
    "additive_mean:<log_phi|omega|big_omega>",
    "density:<d>",
    "power_sum:<k>",
    "euler_maclaurin[:<function>]",
    "chebyshev",
    "prime_count",
    "abel[:<function>]",
    "normal_order[:<function>]",
    "wirsing[:<function>]",
    "kubilius:<kappa>[:<function>]",
)


def build_model(text: str, function: str | None = None, prime_bound: int = 10**6,
                power_bound: int = 40, q: QuadratureConfig = DEFAULT_QUADRATURE) -> AsymptoticModel:
    """Parse a model name such as ``density:0.607927`` or ``kubilius:1:unit``."""
    head, _, rest = text.partition(":")
    fn = lambda default: get_function(rest or function or default)  # noqa: E731
    if head == "additive_mean":
        return additive_mean_model(rest or function)
    if head == "density":
        return density_limit_model(float(rest))
    if head == "zero":
        return zero_model()
    if head == "power_sum":
        return power_sum_model(float(rest))
    if head == "euler_maclaurin":
        return euler_maclaurin_model(fn("reciprocal"), q)
    if head == "chebyshev":
        return chebyshev_model()
    if head == "prime_count":
        return prime_count_model()
    if head == "abel":
        name = rest or function or "log"
        spec = constant(1.0) if name in ("one", "prime_count") else get_function(name)
        return abel_model(spec, q)
    if head == "normal_order":
        return normal_order_model(fn("g_star"))
    if head == "wirsing":
        return wirsing_model(fn("unit"), prime_bound, power_bound)
    if head == "kubilius":
        kappa, _, fname = rest.partition(":")
        return kubilius_model(get_function(fname or function or "unit"), float(kappa),
                              min(prime_bound, 10**5), power_bound)
    raise KeyError(f"unknown model {text!r}; known: {', '.join(MODEL_NAMES)}")


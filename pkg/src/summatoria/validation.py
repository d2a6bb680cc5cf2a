"""Residual analysis of exact summatory series against asymptotic models.

For a series S on a grid and a model (main, envelope) the residual is
R(n) = S(n) - main(n).  A model is judged consistent when |R|/envelope
stays below ``ratio_cap`` on the upper half of the grid and the
least-squares slope of log|R| against log n does not exceed the claimed
exponent by more than ``exponent_slack``.  These are engineering checks
with documented thresholds, not proofs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .arith_functions import FunctionSpec, evaluate_block
from .asymptotic_models import AsymptoticModel
from .sieve_core import DEFAULT_BLOCK_SIZE, base_primes_for, block_ranges, build_block, primes_up_to
from .summatory import SummatorySeries, stream_sums, summand

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ValidationPolicy:
    ratio_cap: float = 3.0
    exponent_slack: float = 0.15
    stability_tol: float = 0.02
    k: int = 5
    class_s_cap: float = 10.0
    epsilon: float = 0.5
    min_points: int = 6
    min_r_squared: float = 0.5


DEFAULT_POLICY = ValidationPolicy()


@dataclass(frozen=True)
class ExponentFit:
    alpha: float | None
    r_squared: float | None
    points: int
    dropped_zeros: int
    exact_match: bool = False


@dataclass(frozen=True)
class Stabilization:
    estimate: float
    spread: float
    stable: bool


@dataclass(frozen=True)
class ValidationReport:
    function_name: str
    model_name: str
    grid: tuple
    values: tuple
    mains: tuple
    envelopes: tuple
    residuals: tuple
    ratios: tuple
    ratio_min: float
    ratio_max: float
    ratio_last: float
    fit: ExponentFit | None
    stabilization: Stabilization | None
    verdict: str
    reasons: tuple = ()
    policy: ValidationPolicy = field(default=DEFAULT_POLICY)

    @property
    def fitted_exponent(self):
        return None if self.fit is None else self.fit.alpha


def fit_error_exponent(grid, residuals) -> ExponentFit:
    """OLS slope of log|R| against log n over the upper half of the grid.

    Checkpoints with R = 0 are dropped and counted.  If every residual in
    the window is zero the result is flagged as an exact match with no fit.
    """
    if len(grid) != len(residuals):
        raise ValueError("grid and residuals differ in length")
    if len(grid) < 6:
        raise ValueError(f"need at least 6 points to fit, got {len(grid)}")
    h = len(grid) // 2
    n = np.asarray(grid[h:], dtype=float)
    r = np.abs(np.asarray(residuals[h:], dtype=float))
    nz = r > 0
    dropped = int((~nz).sum())
    if nz.sum() == 0:
        return ExponentFit(None, None, 0, dropped, exact_match=True)
    if nz.sum() < 2:
        return ExponentFit(None, None, int(nz.sum()), dropped)
    x = np.log(n[nz])
    y = np.log(r[nz])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    alpha = float(((x - xm) * (y - ym)).sum()) / sxx
    resid = y - (ym + alpha * (x - xm))
    syy = float(((y - ym) ** 2).sum())
    r2 = 1.0 if syy == 0 else 1.0 - float((resid**2).sum()) / syy
    return ExponentFit(alpha, r2, int(nz.sum()), dropped)


def stabilization_check(values, k: int = 5, tol: float = DEFAULT_POLICY.stability_tol) -> Stabilization:
    """Mean and spread (max - min) of the last k values; stable iff spread <= tol * max(1, |mean|)."""
    if k < 3:
        raise ValueError("k must be >= 3")
    if len(values) < k:
        raise ValueError(f"need at least k={k} values, got {len(values)}")
    tail = [float(v) for v in values[-k:]]
    est = math.fsum(tail) / k
    spread = max(tail) - min(tail)
    return Stabilization(est, spread, spread <= tol * max(1.0, abs(est)))


def validate(series: SummatorySeries, model: AsymptoticModel,
             policy: ValidationPolicy = DEFAULT_POLICY) -> ValidationReport:
    grid = tuple(int(n) for n in series.grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("validate needs a strictly increasing grid")
    for n in grid:
        model.check_domain(n)

    mains = tuple(float(model.main(n)) for n in grid)
    envs = tuple(float(model.envelope(n)) for n in grid)
    if any(not e > 0 for e in envs):
        raise ValueError(f"{model.name}: envelope must be positive on the grid")
    residuals = tuple(float(s - m) if isinstance(s, float) else _int_residual(s, m)
                      for s, m in zip(series.values, mains))
    ratios = tuple(abs(r) / e for r, e in zip(residuals, envs))
    signed = [r / e for r, e in zip(residuals, envs)]
    h = len(grid) // 2
    upper = ratios[h:]

    reasons = []
    fit = None
    stab = None
    if len(grid) >= policy.k:
        stab = stabilization_check(signed, policy.k, policy.stability_tol)

    if len(grid) < policy.min_points:
        verdict = INCONCLUSIVE
        reasons.append(f"only {len(grid)} checkpoints (< {policy.min_points})")
    else:
        fit = fit_error_exponent(grid, residuals)
        verdict = _decide(fit, upper, residuals[h:], model, policy, reasons)

    return ValidationReport(
        series.function_name, model.name, grid, tuple(series.values), mains, envs,
        residuals, ratios, min(ratios), max(ratios), ratios[-1], fit, stab, verdict,
        tuple(reasons), policy,
    )


def _int_residual(s, m: float) -> float:
    # exact integer minus float main term, rounded once
    return float(Fraction(s) - Fraction(m))


def _sign_changes(residuals) -> int:
    signs = [r > 0 for r in residuals if r != 0]
    return sum(a != b for a, b in zip(signs, signs[1:]))


def _decide(fit, upper, residuals_upper, model, policy, reasons) -> str:
    max_upper = max(upper)
    if fit.exact_match:
        reasons.append("residuals vanish on the fit window")
        return CONSISTENT
    cap_ok = max_upper <= policy.ratio_cap
    if not cap_ok:
        reasons.append(f"max |R|/envelope on upper half = {max_upper:.6g} > {policy.ratio_cap}")

    # a poor log-fit only disqualifies the slope when it comes from sign changes;
    # a residual settling to a constant also fits poorly but has a usable slope
    unreliable = fit.alpha is None or (
        fit.r_squared < policy.min_r_squared and _sign_changes(residuals_upper) > 0
    )
    exp_ok = True
    if not unreliable and model.claimed_exponent is not None:
        exp_ok = fit.alpha <= model.claimed_exponent + policy.exponent_slack
        if not exp_ok:
            reasons.append(
                f"fitted exponent {fit.alpha:.4f} > claimed {model.claimed_exponent} + {policy.exponent_slack}"
            )

    if model.strict_decay:
        decays = upper[-1] < upper[0]
        if not decays:
            reasons.append("|R|/envelope does not decrease over the upper half")
        if unreliable:
            reasons.append("log-fit unreliable (sign changes); decided by ratio decay")
        return CONSISTENT if cap_ok and decays and exp_ok else INCONSISTENT

    if unreliable:
        reasons.append("log-fit unreliable: residuals change sign and R^2 is below threshold")
        return INCONSISTENT if not cap_ok else INCONCLUSIVE
    return CONSISTENT if cap_ok and exp_ok else INCONSISTENT


# --- class S and normal order --------------------------------------------------

@dataclass(frozen=True)
class ClassSResult:
    max_ratio: float
    passed: bool
    worst_m: int


def class_s_check(spec: FunctionSpec, n: int, sample: int = 1000,
                  cap: float = DEFAULT_POLICY.class_s_cap) -> ClassSResult:
    """max |f(m)|/ln m over the last ``sample`` integers <= n and all prime powers <= n."""
    if not spec.kind.is_additive:
        raise ValueError(f"{spec.name}: class S check needs an additive spec")
    if n < 1000 or sample < 1000:
        raise ValueError("need n >= 1000 and sample >= 1000")
    lo = max(2, n - sample + 1)
    base = base_primes_for(n)
    best, worst = 0.0, 2
    for a, b in block_ranges(lo, n + 1):
        block = build_block(a, b, base)
        r = np.abs(evaluate_block(spec, block)) / np.log(block.m.astype(float))
        i = int(np.argmax(r))
        if r[i] > best:
            best, worst = float(r[i]), a + i

    primes = primes_up_to(n)
    alpha = 1
    pk = primes.copy()
    while len(pk):
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(spec.prime_power_rule(primes[: len(pk)], alpha), dtype=float), pk.shape)
        r = np.abs(vals) / np.log(pk.astype(float))
        i = int(np.argmax(r))
        if r[i] > best:
            best, worst = float(r[i]), int(pk[i])
        alpha += 1
        keep = pk <= n // primes[: len(pk)]
        pk = (pk * primes[: len(pk)])[keep]
    return ClassSResult(best, best <= cap, worst)


@dataclass(frozen=True)
class NormalOrderResult:
    n: int
    mean: float
    fraction_within: float
    absolute_band: bool


def normal_order_check(spec: FunctionSpec, n: int, epsilon: float = DEFAULT_POLICY.epsilon,
                       zero_tol: float = 1e-2, block_size: int = DEFAULT_BLOCK_SIZE) -> NormalOrderResult:
    """Fraction of m <= n with |f(m) - E[f, n]| <= epsilon |E[f, n]|.

    When the mean is negligible against the root-mean-square of f (as for
    the Moebius function) a relative band is meaningless; the check then
    uses the absolute band |f(m) - E| <= epsilon and says so.
    """
    if n < 1000:
        raise ValueError(f"need n >= 1000, got {n}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    s = summand(spec)
    sq = type(s)(s.name + "^2", lambda block: np.square(s.values(block)), False)
    (s1,), (s2,) = stream_sums([s, sq], [n], block_size=block_size)
    mean = s1 / n
    rms = math.sqrt(max(s2 / n, 0.0))
    absolute = abs(mean) <= zero_tol * max(1.0, rms)
    band = epsilon if absolute else epsilon * abs(mean)
    base = base_primes_for(n)
    inside = 0
    for a, b in block_ranges(1, n + 1, block_size):
        vals = s.values(build_block(a, b, base))
        inside += int(np.count_nonzero(np.abs(vals - mean) <= band))
    return NormalOrderResult(n, mean, inside / n, absolute)


def normal_order_profile(spec: FunctionSpec, grid, epsilon: float = DEFAULT_POLICY.epsilon):
    """normal_order_check at each grid point.

    Returns (results, rising) where ``rising`` compares the last fraction
    with the first.  For integer-valued f the fraction moves in steps as
    band edges cross integers, so it need not rise at every checkpoint.
    """
    results = [normal_order_check(spec, int(n), epsilon) for n in grid]
    return results, results[-1].fraction_within > results[0].fraction_within


# --- serialisation ---------------------------------------------------------------

REPORT_COLUMNS = ("n", "S", "main", "residual", "envelope", "ratio")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def report_rows(report: ValidationReport):
    yield REPORT_COLUMNS
    for row in zip(report.grid, report.values, report.mains, report.residuals,
                   report.envelopes, report.ratios):
        yield tuple(_fmt(v) for v in row)


def report_csv(report: ValidationReport) -> str:
    return "".join(",".join(r) + "\n" for r in report_rows(report))


def format_report(report: ValidationReport) -> str:
    p = report.policy
    fit = report.fit
    lines = [
        f"function: {report.function_name}",
        f"model: {report.model_name}",
        f"checkpoints: {len(report.grid)} ({report.grid[0]} .. {report.grid[-1]})",
        f"ratio |R|/envelope: min={report.ratio_min!r} max={report.ratio_max!r} last={report.ratio_last!r}",
    ]
    if fit is None:
        lines.append("fitted exponent: n/a")
    elif fit.exact_match:
        lines.append("fitted exponent: exact match (all residuals zero)")
    else:
        lines.append(f"fitted exponent: {fit.alpha!r} (r^2={fit.r_squared!r}, points={fit.points}, "
                     f"zero residuals dropped={fit.dropped_zeros})")
    if report.stabilization is not None:
        s = report.stabilization
        lines.append(f"R/envelope over last {p.k}: estimate={s.estimate!r} spread={s.spread!r} "
                     f"stable={s.stable}")
    lines.append(f"policy: ratio_cap={p.ratio_cap} exponent_slack={p.exponent_slack} "
                 f"stability_tol={p.stability_tol} k={p.k}")
    for r in report.reasons:
        lines.append(f"note: {r}")
    lines.append(f"verdict: {report.verdict}")
    return "\n".join(lines) + "\n"

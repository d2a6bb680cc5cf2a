"""Arithmetic functions defined by prime-power rules, plus the built-in registry.

A prime-power rule is a callable ``rule(p, alpha)`` that must accept numpy
arrays as well as scalars (it is broadcast over whole sieve blocks).  The
same holds for pointwise rules ``rule(t)``, which additionally must accept
real ``t`` so that quadrature can integrate them.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .sieve_core import Factorization, SieveBlock, simple_sieve


class Kind(enum.Enum):
    ADDITIVE = "additive"
    STRONGLY_ADDITIVE = "strongly_additive"
    MULTIPLICATIVE = "multiplicative"
    STRONGLY_MULTIPLICATIVE = "strongly_multiplicative"
    POINTWISE = "pointwise"

    @property
    def is_additive(self):
        return self in (Kind.ADDITIVE, Kind.STRONGLY_ADDITIVE)

    @property
    def is_multiplicative(self):
        return self in (Kind.MULTIPLICATIVE, Kind.STRONGLY_MULTIPLICATIVE)

    @property
    def is_strong(self):
        return self in (Kind.STRONGLY_ADDITIVE, Kind.STRONGLY_MULTIPLICATIVE)


class EvaluationError(ArithmeticError):
    """A rule produced a non-finite value."""

    def __init__(self, message, m=None, prime_power=None):
        super().__init__(message)
        self.m = m
        self.prime_power = prime_power


class SpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """An arithmetic function.

    ``range_hint`` is an optional (lo, hi) bound on the values, used by the
    Wirsing/Delange applicability checks.  ``block_rule`` is an optional
    fast path computing the values for a whole :class:`SieveBlock` from its
    precomputed columns; when present it must agree with the prime-power
    rule.  ``derivative`` is the derivative of a pointwise rule's real
    extension.
    """

    name: str
    kind: Kind
    prime_power_rule: Callable | None = None
    pointwise_rule: Callable | None = None
    range_hint: tuple[float, float] | None = None
    integer_valued: bool = False
    block_rule: Callable[[SieveBlock], np.ndarray] | None = None
    derivative: Callable | None = None

    def __post_init__(self):
        if self.kind is Kind.POINTWISE:
            if self.pointwise_rule is None or self.prime_power_rule is not None:
                raise SpecError(f"{self.name}: pointwise spec needs exactly a pointwise_rule")
        elif self.prime_power_rule is None or self.pointwise_rule is not None:
            raise SpecError(f"{self.name}: {self.kind.value} spec needs exactly a prime_power_rule")

    def __repr__(self):
        return f"FunctionSpec({self.name!r}, {self.kind.value})"

    def rule_value(self, p, alpha) -> float:
        try:
            v = float(np.asarray(self.prime_power_rule(p, alpha), dtype=float))
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationError(f"{self.name}: rule failed at {p}^{alpha}: {exc}",
                                  prime_power=(p, alpha)) from exc
        if not math.isfinite(v):
            raise EvaluationError(
                f"{self.name}: non-finite value {v} at p^alpha = {p}^{alpha}",
                prime_power=(p, alpha),
            )
        return v


def evaluate(spec: FunctionSpec, fact: Factorization) -> float:
    """Value of an additive or multiplicative spec at ``fact.m``."""
    if spec.kind is Kind.POINTWISE:
        raise SpecError(f"{spec.name} is pointwise; use evaluate_pointwise")
    if spec.kind.is_additive:
        return math.fsum(spec.rule_value(p, a) for p, a in fact.factors)
    out = 1.0
    for p, a in fact.factors:
        out *= spec.rule_value(p, a)
    return out


def evaluate_pointwise(spec: FunctionSpec, m) -> float:
    if spec.kind is not Kind.POINTWISE:
        raise SpecError(f"{spec.name} is not pointwise")
    if m < 1:
        raise SpecError(f"pointwise functions are defined for m >= 1, got {m}")
    try:
        v = float(spec.pointwise_rule(m))
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"{spec.name}: rule failed at m={m}: {exc}", m=m) from exc
    if not math.isfinite(v):
        raise EvaluationError(f"{spec.name}: non-finite value at m={m}", m=m)
    return v


def _broadcast(values, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(values, dtype=float), shape)


def _call_rule(spec, p, alpha, m):
    try:
        return _broadcast(spec.prime_power_rule(p, alpha), np.broadcast(p, alpha).shape)
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"{spec.name}: rule failed near m={m}: {exc}", m=m) from exc


def _generic_block_values(spec: FunctionSpec, block: SieveBlock) -> np.ndarray:
    lo, hi = block.lo, block.hi
    size = hi - lo
    additive = spec.kind.is_additive
    out = np.zeros(size) if additive else np.ones(size)

    for p in block.base_primes.tolist():
        start = -lo % p
        if start >= size:
            continue
        first_quotient = (lo + start) // p
        count = len(range(start, size, p))
        alpha = np.ones(count, dtype=np.int64)
        pk = p * p
        step = p
        while pk <= hi - 1:
            # index j of the p-multiples is divisible by pk iff first_quotient + j = 0 mod step
            j0 = -first_quotient % step
            if j0 >= count:
                break
            alpha[j0::step] += 1
            pk *= p
            step *= p
        top = int(alpha.max())
        table = _call_rule(spec, p, np.arange(1, top + 1), lo + start)
        vals = table[alpha - 1]
        if additive:
            out[start::p] += vals
        else:
            out[start::p] *= vals

    big = block.cofactor > 1
    if big.any():
        q = block.cofactor[big]
        vals = _call_rule(spec, q, np.ones_like(q), lo + int(np.flatnonzero(big)[0]))
        if additive:
            out[big] += vals
        else:
            out[big] *= vals
    return out


def evaluate_block(spec: FunctionSpec, block: SieveBlock) -> np.ndarray:
    """Values of ``spec`` at every ``m`` in the block, as float64."""
    if spec.block_rule is not None:
        out = np.asarray(spec.block_rule(block), dtype=float)
    elif spec.kind is Kind.POINTWISE:
        with np.errstate(all="ignore"):
            out = _broadcast(spec.pointwise_rule(block.m.astype(float)), (len(block),))
    else:
        with np.errstate(all="ignore"):
            out = _generic_block_values(spec, block)
    bad = ~np.isfinite(out)
    if bad.any():
        m = block.lo + int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"{spec.name}: non-finite value at m={m}", m=m)
    return out


def strongly_additive_shadow(spec: FunctionSpec) -> FunctionSpec:
    """The strongly additive function agreeing with ``spec`` on primes."""
    if spec.kind is Kind.STRONGLY_ADDITIVE:
        return spec
    if spec.kind is not Kind.ADDITIVE:
        raise SpecError(f"{spec.name}: shadow needs an additive spec, got {spec.kind.value}")
    rule = spec.prime_power_rule
    return FunctionSpec(
        name=f"{spec.name}_shadow",
        kind=Kind.STRONGLY_ADDITIVE,
        prime_power_rule=lambda p, a: _broadcast(rule(p, 1), np.broadcast(p, a).shape),
        integer_valued=spec.integer_valued,
    )


def log_of(spec: FunctionSpec) -> FunctionSpec:
    """Additive function ln(g) of a positive multiplicative g."""
    if not spec.kind.is_multiplicative:
        raise SpecError(f"{spec.name}: log bridge needs a multiplicative spec")
    rule = spec.prime_power_rule
    kind = Kind.STRONGLY_ADDITIVE if spec.kind is Kind.STRONGLY_MULTIPLICATIVE else Kind.ADDITIVE
    return FunctionSpec(
        name=f"log_{spec.name}",
        kind=kind,
        prime_power_rule=lambda p, a: np.log(np.asarray(rule(p, a), dtype=float)),
    )


def check_invariants(spec: FunctionSpec, prime_bound: int = 100, max_alpha: int = 5) -> None:
    """Raise SpecError if a strong kind varies in alpha or a rule is non-finite."""
    if spec.kind is Kind.POINTWISE:
        for m in range(1, prime_bound + 1):
            evaluate_pointwise(spec, m)
        return
    for p in simple_sieve(prime_bound).tolist():
        base = spec.rule_value(p, 1)
        for a in range(2, max_alpha + 1):
            v = spec.rule_value(p, a)
            if spec.kind.is_strong and v != base:
                raise SpecError(f"{spec.name}: strong kind but rule({p},{a}) != rule({p},1)")
        if spec.range_hint is not None:
            lo, hi = spec.range_hint
            for a in range(1, max_alpha + 1):
                v = spec.rule_value(p, a)
                if not lo <= v <= hi:
                    raise SpecError(f"{spec.name}: rule({p},{a})={v} outside range hint {spec.range_hint}")


# --- built-ins -------------------------------------------------------------

def _omega_block(block):
    return block.omega


def _big_omega_block(block):
    return block.big_omega


def _mu_block(block):
    return block.mu


def _squarefree_block(block):
    return (block.mu != 0).astype(np.int8)


def _unit_block(block):
    return np.ones(len(block), dtype=np.int8)


def _log_phi_block(block):
    return np.log(block.phi.astype(float))


OMEGA = FunctionSpec(
    "omega", Kind.STRONGLY_ADDITIVE,
    prime_power_rule=lambda p, a: _broadcast(1.0, np.broadcast(p, a).shape),
    integer_valued=True, block_rule=_omega_block,
)
BIG_OMEGA = FunctionSpec(
    "big_omega", Kind.ADDITIVE,
    prime_power_rule=lambda p, a: np.asarray(a, dtype=float) + 0.0 * np.asarray(p, dtype=float),
    integer_valued=True, block_rule=_big_omega_block,
)
# ln phi(p^a) = (a - 1) ln p + ln(p - 1)
LOG_PHI = FunctionSpec(
    "log_phi", Kind.ADDITIVE,
    prime_power_rule=lambda p, a: (np.asarray(a) - 1) * np.log(np.asarray(p, dtype=float))
    + np.log(np.asarray(p, dtype=float) - 1.0),
    block_rule=_log_phi_block,
)
MOBIUS = FunctionSpec(
    "mobius", Kind.MULTIPLICATIVE,
    prime_power_rule=lambda p, a: np.where(np.asarray(a) == 1, -1.0, 0.0) + 0.0 * np.asarray(p),
    range_hint=(-1.0, 1.0), integer_valued=True, block_rule=_mu_block,
)
SQUAREFREE = FunctionSpec(
    "squarefree", Kind.MULTIPLICATIVE,
    prime_power_rule=lambda p, a: np.where(np.asarray(a) == 1, 1.0, 0.0) + 0.0 * np.asarray(p),
    range_hint=(0.0, 1.0), integer_valued=True, block_rule=_squarefree_block,
)
UNIT = FunctionSpec(
    "unit", Kind.STRONGLY_MULTIPLICATIVE,
    prime_power_rule=lambda p, a: _broadcast(1.0, np.broadcast(p, a).shape),
    range_hint=(1.0, 1.0), integer_valued=True, block_rule=_unit_block,
)
# g*(m) = exp(omega(m) + sum_{p|m} ln(1 - 1/p)) = prod_{p|m} e (1 - 1/p)
G_STAR = FunctionSpec(
    "g_star", Kind.STRONGLY_MULTIPLICATIVE,
    prime_power_rule=lambda p, a: math.e * (1.0 - 1.0 / np.asarray(p, dtype=float))
    + 0.0 * np.asarray(a),
)


def pointwise(name, rule, derivative=None, integer_valued=False) -> FunctionSpec:
    return FunctionSpec(
        name, Kind.POINTWISE, pointwise_rule=rule, derivative=derivative,
        integer_valued=integer_valued,
    )


RECIPROCAL = pointwise("reciprocal", lambda t: 1.0 / np.asarray(t, dtype=float),
                       derivative=lambda t: -1.0 / np.asarray(t, dtype=float) ** 2)
LOG = pointwise("log", lambda t: np.log(np.asarray(t, dtype=float)),
                derivative=lambda t: 1.0 / np.asarray(t, dtype=float))


def power_k(k: float) -> FunctionSpec:
    """m -> m**k for real k > 0, named ``power_<k>``."""
    k = float(k)
    if not k > 0 or not math.isfinite(k):
        raise SpecError(f"power_k needs k > 0, got {k}")
    label = f"{k:g}"
    return pointwise(
        f"power_{label}",
        lambda t: np.asarray(t, dtype=float) ** k,
        derivative=lambda t: k * np.asarray(t, dtype=float) ** (k - 1.0),
    )


def constant(c: float) -> FunctionSpec:
    c = float(c)
    return pointwise(
        f"constant_{c:g}",
        lambda t: _broadcast(c, np.shape(t)) + 0.0,
        derivative=lambda t: _broadcast(0.0, np.shape(t)) + 0.0,
    )


BUILTINS: dict[str, FunctionSpec] = {
    s.name: s
    for s in (OMEGA, BIG_OMEGA, LOG_PHI, MOBIUS, UNIT, RECIPROCAL, LOG, G_STAR, SQUAREFREE)
}
BUILTINS["power_k"] = power_k(2)

ALIASES = {"mu": "mobius", "mertens": "mobius", "phi_log": "log_phi"}

_POWER_RE = re.compile(r"^power_(?:k[:=])?(\d+(?:\.\d+)?(?:e[+-]?\d+)?)$")


def get_function(name: str) -> FunctionSpec:
    """Look up a built-in by name; ``power_<k>`` builds m -> m**k."""
    name = ALIASES.get(name, name)
    if name in BUILTINS and name != "power_k":
        return BUILTINS[name]
    match = _POWER_RE.match(name)
    if match:
        return power_k(float(match.group(1)))
    if name == "power_k":
        return BUILTINS["power_k"]
    raise KeyError(f"unknown function {name!r}; known: {', '.join(sorted(BUILTINS))}")


def with_name(spec: FunctionSpec, name: str) -> FunctionSpec:
    return replace(spec, name=name)

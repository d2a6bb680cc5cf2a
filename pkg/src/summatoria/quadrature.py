"""Adaptive Simpson quadrature for the integrals in the smooth-sum estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass


class QuadratureError(ArithmeticError):
    def __init__(self, message, interval):
        super().__init__(message)
        self.interval = interval


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_depth: int = 50

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 10:
            raise ValueError("max_depth must be >= 10")


DEFAULT_QUADRATURE = QuadratureConfig()


def _breakpoints(a: float, b: float) -> list[float]:
    # powers of two keep every piece within a factor 2 in t, which tames
    # integrands like 1/ln t near t = 2 and 1/t near t = 1
    pts = [a]
    k = math.floor(math.log2(a)) + 1 if a > 0 else None
    if k is not None:
        while 2.0**k < b:
            if 2.0**k > pts[-1]:
                pts.append(2.0**k)
            k += 1
    pts.append(b)
    return pts


def _simpson_piece(f, a, b, eps, max_depth):
    fa, fb = float(f(a)), float(f(b))
    m = 0.5 * (a + b)
    fm = float(f(m))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = []
    stack = [(a, b, fa, fm, fb, whole, eps, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = float(f(lm)), float(f(rm))
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total.append(left + right + delta / 15.0)
            continue
        if depth >= max_depth:
            raise QuadratureError(f"no convergence on [{a}, {b}] at depth {depth}", (a, b))
        stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
        stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
    return math.fsum(total)


def integrate(f, a: float, b: float, config: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Integral of f over [a, b] by adaptive Simpson's rule.

    The interval is first split at powers of two.  The target error is
    max(abs_tol, rel_tol * I) where I is a coarse estimate of the integral
    of |f|, distributed over the pieces in proportion to their length.
    """
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, config)
    pts = _breakpoints(a, b)
    coarse = 0.0
    for x, y in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (x + y)
        coarse += (y - x) / 6.0 * (abs(f(x)) + 4.0 * abs(f(mid)) + abs(f(y)))
    eps_total = max(config.abs_tol, config.rel_tol * coarse)
    parts = []
    for x, y in zip(pts[:-1], pts[1:]):
        eps = eps_total * (y - x) / (b - a)
        parts.append(_simpson_piece(f, x, y, max(eps, 1e-300), config.max_depth))
    return math.fsum(parts)

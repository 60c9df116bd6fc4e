"""Continued fractions and the algorithmic form of Vinogradov's lemma.

When many multiples n*alpha over [-N, N] sit near integers, alpha is close
to a rational a/q with small q; the candidate rationals are the
continued-fraction convergents, which are best approximations among all
smaller denominators.  Floats are converted to exact 53-bit dyadic
rationals before expansion so the convergent list is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circle import CirclePoint, circ_dist, point
from .errors import HypothesisFails, NoDenominatorInRange

DEFAULT_C_V = 4.0  # denominator budget: q <= C_v / delta


def convergents(alpha: CirclePoint, q_max: int) -> list[tuple[int, int]]:
    """Continued-fraction convergents (a, q) of alpha with q <= q_max,
    in increasing q.  Exact and terminating for rational alpha."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    x = alpha.value if alpha.is_exact else Fraction(alpha.value)
    out: list[tuple[int, int]] = []
    h_prev, h = 0, 1  # numerators h_{-2}, h_{-1}
    k_prev, k = 1, 0  # denominators
    num, den = x.numerator, x.denominator
    while den != 0:
        a = num // den
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > q_max:
            break
        out.append((h, k))
        num, den = den, num - a * den
    return out


def best_rational_oracle(alpha: CirclePoint, q_max: int) -> tuple[int, int]:
    """Exhaustive minimizer of circ_dist(alpha, a/q) over q <= q_max;
    ties to smallest q then smallest a; result reduced with 0 <= a < q."""
    if not 1 <= q_max <= 10**6:
        raise ValueError("q_max must be in [1, 10^6]")
    if alpha.is_exact:
        best = None
        for q in range(1, q_max + 1):
            a = _nearest_int_fraction(alpha.value * q)
            d = abs(alpha.value - Fraction(a, q))
            if best is None or d < best[0]:
                best = (d, _reduce_mod(a, q))
        return best[1]
    x = alpha.as_float()
    best = None
    for q in range(1, q_max + 1):
        a = round(x * q)
        d = abs(x - a / q)
        if best is None or d < best[0] - 1e-18:
            best = (d, _reduce_mod(a, q))
    return best[1]


def _nearest_int_fraction(f: Fraction) -> int:
    fl = f.numerator // f.denominator
    rem = f - fl
    if rem > Fraction(1, 2):
        return fl + 1
    if rem < Fraction(1, 2):
        return fl
    return fl if fl % 2 == 0 else fl + 1


def _reduce_mod(a: int, q: int) -> tuple[int, int]:
    a %= q
    g = math.gcd(a, q)
    return (a // g, q // g) if a else (0, 1)


@dataclass(frozen=True)
class RationalApprox:
    """alpha ~ a/q with gcd(a,q)=1, 0 <= a < q; err = circ_dist(alpha, a/q);
    support_count = number of n in [-N, N] with ||n alpha|| < eps."""

    a: int
    q: int
    err: float
    support_count: int


def support_count(alpha: CirclePoint, N: int, eps: float) -> int:
    """Exact count of n in [-N, N] with ||n alpha|| < eps (O(N) enumeration)."""
    n = np.arange(0, N + 1, dtype=np.float64)
    d = (n * alpha.as_float()) % 1.0
    d = np.minimum(d, 1.0 - d)
    inside = d < eps
    # ||n alpha|| is even in n; count negatives by symmetry, 0 once
    return int(2 * np.count_nonzero(inside[1:]) + (1 if inside[0] else 0))


def vinogradov_approx(
    alpha: CirclePoint, N: int, eps: float, delta: float, c_v: float = DEFAULT_C_V
) -> RationalApprox:
    """Rational approximation under the many-small-multiples hypothesis.

    Requires 0 < eps < 1/100, 100*eps < delta < 1 and delta*N > 100;
    verifies that at least delta*N integers n in [-N, N] have
    ||n alpha|| < eps, then returns the convergent with q <= c_v/delta
    closest to alpha.
    """
    if not 0 < eps < 1 / 100:
        raise ValueError(f"eps={eps} outside (0, 1/100)")
    if not 100 * eps < delta < 1:
        raise ValueError(f"delta={delta} outside (100*eps, 1)")
    if not delta * N > 100:
        raise ValueError(f"delta*N = {delta * N} must exceed 100")
    count = support_count(alpha, N, eps)
    if count < delta * N:
        raise HypothesisFails(
            f"only {count} multiples within eps, need >= delta*N = {delta * N:.1f}"
        )
    q_bound = int(c_v / delta)
    cands = [c for c in convergents(alpha, q_bound) if c[1] <= q_bound]
    if not cands:
        raise NoDenominatorInRange(f"no convergent with q <= {q_bound}")
    best = min(cands, key=lambda aq: circ_dist(alpha, point(Fraction(aq[0], aq[1]))))
    a, q = _reduce_mod(best[0], best[1])
    err = circ_dist(alpha, CirclePoint(Fraction(a, q)))
    return RationalApprox(a=a, q=q, err=err, support_count=count)

"""Phase gluing: constructing one frequency compatible with many primes.

Given pairs (p, alpha_p) whose cross relations ||p alpha_p' - p' alpha_p||
are small, a single alpha with p*alpha close to alpha_p simultaneously for
many p is built by matching lifts.  The closest lift pair is found in O(1)
by CRT rather than by enumerating all p1*p2 candidates: as (k1, k2) ranges
over residues, p2*k1 - p1*k2 covers every residue class mod p1*p2 exactly
once, so the minimal distance between lifts is ||p2 a1 - p1 a2|| / (p1 p2)
and the minimizing pair can be solved for directly.  The test suite checks
this against full enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circle import CirclePoint, circ_dist, lift_set, midpoint_short_arc, nearest_int, scale
from .errors import AmbiguousLifts, Incompatible, InsufficientPairs, NoCommonNeighbors, PreconditionViolated

DEFAULT_C_TG = 1.0 / 100.0    # contagion guard: eps < c_tg / P
DEFAULT_C2 = 1.0 / 100.0      # pair-transfer / concentration guard: eps < c2 / P^2
DEFAULT_C_CONC = 100.0        # matched-prime threshold: residual <= C_conc * eps / P


@dataclass(frozen=True)
class PhasedPrime:
    """A prime with its associated frequency."""

    p: int
    alpha: CirclePoint

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be >= 2")


def cross_residual(a: PhasedPrime, b: PhasedPrime):
    """||a.p * b.alpha - b.p * a.alpha||, the pairwise compatibility measure."""
    return circ_dist(scale(a.p, b.alpha), scale(b.p, a.alpha))


@dataclass(frozen=True)
class GlueResult:
    """A glued frequency with its measured (not asserted) residuals.

    residuals[i] = (p_i, ||p_i * alpha - alpha_i||) for each input pair;
    sources keeps the inputs so later contagion checks can re-derive the
    pairwise relations.
    """

    alpha: CirclePoint
    residuals: tuple[tuple[int, object], ...]
    sources: tuple[PhasedPrime, PhasedPrime]


def _closest_lift_pair(a: PhasedPrime, b: PhasedPrime):
    """The pair (u from lifts of a.alpha under a.p, v from lifts of b.alpha
    under b.p) minimizing circle distance, solved via CRT.

    Returns (u, v).  Raises AmbiguousLifts on an exact tie (exact mode only).
    """
    p1, p2 = a.p, b.p
    if a.alpha.is_exact and b.alpha.is_exact:
        d = (p2 * a.alpha.value - p1 * b.alpha.value) % 1
        if d == Fraction(1, 2):
            raise AmbiguousLifts(
                f"lift pairs of ({p1},{a.alpha}) and ({p2},{b.alpha}) tie at 1/(2*{p1}*{p2})"
            )
        big_d = p2 * a.alpha.value - p1 * b.alpha.value
    else:
        big_d = p2 * a.alpha.as_float() - p1 * b.alpha.as_float()
    n_star = -nearest_int(big_d)
    # need k1 in [0,p1), k2 in [0,p2) with p2*k1 - p1*k2 == n_star (mod p1*p2)
    k1 = (n_star * pow(p2, -1, p1)) % p1
    k2 = ((p2 * k1 - n_star) * pow(p1, -1, p2)) % p2
    if a.alpha.is_exact and b.alpha.is_exact:
        u = CirclePoint(Fraction(a.alpha.value + k1, p1))
        v = CirclePoint(Fraction(b.alpha.value + k2, p2))
    else:
        u = CirclePoint(((a.alpha.as_float() + k1) / p1) % 1.0)
        v = CirclePoint(((b.alpha.as_float() + k2) / p2) % 1.0)
    return u, v


def glue_pair(a: PhasedPrime, b: PhasedPrime, eps) -> GlueResult:
    """Glue two phased primes: the midpoint of the closest pair of lifts.

    Requires distinct primes and cross_residual(a, b) < eps < 1.  The
    construction guarantees residual at a.p below eps/(2*b.p) and at b.p
    below eps/(2*a.p).
    """
    if a.p == b.p:
        raise PreconditionViolated("primes must be distinct")
    if not eps < 1:
        raise PreconditionViolated(f"eps={eps} must be < 1")
    cross = cross_residual(a, b)
    if not cross < eps:
        raise Incompatible(
            f"||{a.p}*alpha_{b.p} - {b.p}*alpha_{a.p}|| = {float(cross):.6g} >= eps = {eps}"
        )
    u, v = _closest_lift_pair(a, b)
    if circ_dist(u, v) == 0:
        alpha = u
    else:
        alpha = midpoint_short_arc(u, v)
    residuals = (
        (a.p, circ_dist(scale(a.p, alpha), a.alpha)),
        (b.p, circ_dist(scale(b.p, alpha), b.alpha)),
    )
    return GlueResult(alpha=alpha, residuals=residuals, sources=(a, b))


def contagion_residual(glued: GlueResult, c: PhasedPrime, P: float, eps,
                       c_tg: float = DEFAULT_C_TG):
    """||c.p * glued.alpha - c.alpha|| after checking the three-prime
    hypotheses: c distinct from the glued primes, all pairwise cross
    relations <= eps, and eps < c_tg / P."""
    a, b = glued.sources
    if c.p in (a.p, b.p):
        raise PreconditionViolated("third prime must differ from the glued pair")
    if not eps < c_tg / P:
        raise PreconditionViolated(f"eps={eps} not below c_tg/P = {c_tg / P:.3g}")
    for s in (a, b):
        if cross_residual(s, c) > eps:
            raise PreconditionViolated(
                f"pairwise relation between {s.p} and {c.p} exceeds eps"
            )
    return circ_dist(scale(c.p, glued.alpha), c.alpha)


def pair_transfer_residual(p1: PhasedPrime, p2: PhasedPrime,
                           q1: PhasedPrime, q2: PhasedPrime,
                           eps, P: float, c2: float = DEFAULT_C2):
    """||p1 alpha_{p2} - p2 alpha_{p1}|| after checking the two-pair
    hypotheses: four distinct primes, the four cross relations with the
    q pair all <= eps, and eps < c2 / P^2."""
    prs = (p1, p2, q1, q2)
    if len({s.p for s in prs}) != 4:
        raise PreconditionViolated("need four distinct primes")
    if not eps < c2 / (P * P):
        raise PreconditionViolated(f"eps={eps} not below c2/P^2 = {c2 / (P * P):.3g}")
    for s in (p1, p2):
        for t in (q1, q2):
            if cross_residual(s, t) > eps:
                raise PreconditionViolated(
                    f"cross relation between {s.p} and {t.p} exceeds eps"
                )
    return cross_residual(p1, p2)


def concentrate(S: list[PhasedPrime], eps, P: float, pair_threshold: float,
                c2: float = DEFAULT_C2, c_conc: float = DEFAULT_C_CONC,
                enforce_guard: bool = True):
    """Concentrate a compatible family onto one frequency.

    Builds the compatibility graph on S (edge when the cross relation is
    < eps), requires at least pair_threshold * |S|^2 unordered edges, finds
    the prime pair sharing the most common neighbours (ties to smallest
    (p1, p2)), validates one common-neighbour pair by pair transfer, glues
    the chosen primes, and returns (alpha, matched) where matched lists the
    primes of S whose residual ||p alpha - alpha_p|| is <= c_conc * eps / P.
    """
    ps = [s.p for s in S]
    if len(set(ps)) != len(ps):
        raise PreconditionViolated("primes of S must be distinct")
    if enforce_guard and not eps < c2 / (P * P):
        raise PreconditionViolated(f"eps={eps} not below c2/P^2 = {c2 / (P * P):.3g}")
    n = len(S)
    adj = _compatibility_matrix(S, eps)
    edges = int(np.count_nonzero(np.triu(adj, 1)))
    if edges < pair_threshold * n * n:
        raise InsufficientPairs(
            f"{edges} compatible pairs < threshold {pair_threshold} * |S|^2 = {pair_threshold * n * n:.1f}"
        )
    # common-neighbour counts for every pair at once; ties -> smallest (p1, p2).
    # A pair is usable if it has two shared neighbours (pair transfer derives
    # its compatibility) or is itself an edge (no transfer needed).
    shared_counts = adj.astype(np.int32) @ adj.astype(np.int32)
    parr = np.asarray(ps, dtype=np.int64)
    iu, ju = np.triu_indices(n, 1)
    counts = shared_counts[iu, ju]
    usable = (counts >= 2) | adj[iu, ju]
    if not np.any(usable):
        raise NoCommonNeighbors(
            "no pair is directly compatible or shares 2 compatible neighbours"
        )
    counts = np.where(usable, counts, -1)
    ties = np.flatnonzero(counts == counts.max())
    lo = np.minimum(parr[iu[ties]], parr[ju[ties]])
    hi = np.maximum(parr[iu[ties]], parr[ju[ties]])
    k = ties[np.lexsort((hi, lo))[0]]
    i, j = int(iu[k]), int(ju[k])
    if parr[i] > parr[j]:
        i, j = j, i
    shared = [k for k in range(n) if adj[i][k] and adj[j][k]]
    if len(shared) >= 2 and enforce_guard:
        transfer = pair_transfer_residual(S[i], S[j], S[shared[0]], S[shared[1]], eps, P, c2=c2)
    else:
        transfer = cross_residual(S[i], S[j])
    glue_eps = max(eps, float(transfer) * (1 + 1e-12) + 1e-300)
    glued = glue_pair(S[i], S[j], glue_eps)
    limit = c_conc * eps / P
    matched = [s.p for s in S
               if circ_dist(scale(s.p, glued.alpha), s.alpha) <= limit]
    return glued.alpha, matched


def _compatibility_matrix(S: list[PhasedPrime], eps) -> "np.ndarray":
    """Boolean adjacency: edge when the cross relation is strictly below eps.

    Float inputs vectorize; any exact input falls back to exact arithmetic.
    """
    n = len(S)
    if all(not s.alpha.is_exact for s in S):
        alphas = np.array([s.alpha.value for s in S], dtype=np.float64)
        parr = np.array([s.p for s in S], dtype=np.float64)
        # cross[i, j] = p_i * alpha_j - p_j * alpha_i mod 1
        cross = (np.outer(parr, alphas) - np.outer(alphas, parr)) % 1.0
        cross = np.minimum(cross, 1.0 - cross)
        adj = cross < eps
        np.fill_diagonal(adj, False)
        return adj
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if cross_residual(S[i], S[j]) < eps:
                adj[i, j] = adj[j, i] = True
    return adj

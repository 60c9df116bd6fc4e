"""The scale-lifting pipeline: from short-interval peaks to a global
modulation model.

Levels: level 1 is the base configuration of interval starts x in [X, 2X]
with their peak frequencies (separation H); level 0 sits one prime scale
below (separation H/P); each lift step combines two adjacent levels into a
configuration two levels above the lower one (separation multiplied by P,
scale multiplied by P).  A link always connects a lower entry to a higher
entry through one prime p, with

    |p * pos_low - pos_high|   small against the higher separation, and
    ||p * alpha_high - alpha_low||  small against 1/(lower separation),

so frequencies refine (divide by p) as scales grow.  Composing links down
the tower relates top frequencies to the original peaks through products
of primes, which Vinogradov's lemma converts into a rational-plus-drift
model alpha_z ~ a/Q + T/z.

All of the paper-style thresholds are named constants on PipelineParams
with defaults calibrated on planted instances; run reports print them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import expsum, gluing, multfn
from .approx import support_count, vinogradov_approx
from .circle import CirclePoint, circ_dist, point, scale, signed_gap
from .errors import (
    ConfigError,
    DensityCollapse,
    HypothesisFails,
    NoAnchor,
    NoDenominatorInRange,
    NoQualifyingScale,
    PreconditionViolated,
    StageError,
    TooManyTuples,
    VinogradovFailed,
)
from .multfn import MultFnSpec
from .primes import primes_in

LOG = math.log


@dataclass(frozen=True)
class PipelineParams:
    """Inputs plus every named threshold of the pipeline."""

    X: int
    delta_exp: float
    eta: float
    epsilon: float
    seed: int = 0

    oversample: int = 8
    # the pipeline needs the peak *location* to ~1e-8 (frequency errors are
    # multiplied by p when projected down a scale), so it refines much
    # harder than the 1%-magnitude contract requires
    refine_iters: int = 24
    c_q: float = 0.1              # qualifying primes: count >= c_q * P/log P
    c_base: float = 0.01          # density floor for the level-0 configuration
    c_lift: float = 0.02          # quadruple floor: c_lift * (P/log P)^2 per grid point
    density_floor: float = 0.002  # density floor at lifted levels
    cluster_sep_c: float = 4.0    # frequency clustering separation, times P/H
    link_pos_c: float = 4.0       # link position residual bound (normalized)
    link_phase_c: float = 4.0     # link phase residual bound (normalized)
    c_tg: float = 0.01
    # concentration guard constant; the lemma wants an order-1 constant and
    # the first lift's genuine frequency spread (~4*T*H*P/X^2) sits just
    # inside eps < c2/P^2 only for c2 ~ 1 at desk scales where H/P^2 is small
    c2: float = 1.0
    c_conc: float = 100.0
    pair_threshold: float = 0.2
    c_v: float = 4.0
    c_p2: float = 2.0             # lift guard: H > c_p2 * P^2
    c_ver: float = 4.0            # verification tolerance, times 1/H
    n_verify_windows: int = 50
    max_lifts: int | None = None
    kt_cap: int = 8

    @property
    def H(self) -> int:
        # guard against pow landing just below an integer (e.g. 1000^(2/3))
        return int(self.X**self.delta_exp * (1 + 1e-12) + 1e-9)

    def validate(self) -> None:
        if not 0 < self.delta_exp < 1:
            raise ConfigError("delta must be in (0,1)")
        if not 0 < self.eta <= 1:
            raise ConfigError("eta must be in (0,1]")
        H = self.H
        if H < 10:
            raise ConfigError(f"H = {H} < 10")
        if self.X < 4 * H:
            raise ConfigError(f"X = {self.X} < 4H = {4 * H}")
        if H**(self.epsilon**2) < 3:
            raise ConfigError("epsilon too small: H^(eps^2) < 3 leaves no prime range")

    def constants_ledger(self) -> dict:
        return {
            "c_q": self.c_q, "c_base": self.c_base, "c_lift": self.c_lift,
            "density_floor": self.density_floor, "cluster_sep_c": self.cluster_sep_c,
            "link_pos_c": self.link_pos_c, "link_phase_c": self.link_phase_c,
            "c_tg": self.c_tg, "c2": self.c2, "c_conc": self.c_conc,
            "pair_threshold": self.pair_threshold, "c_v": self.c_v,
            "c_p2": self.c_p2, "c_ver": self.c_ver,
            "oversample": self.oversample, "refine_iters": self.refine_iters,
        }


@dataclass(frozen=True)
class Configuration:
    """Separated (position, frequency) pairs on a scale interval."""

    level: int
    lo: float
    hi: float
    separation: float
    entries: tuple[tuple[int, CirclePoint], ...]
    c: float
    meta: dict = field(default_factory=dict)

    def check_invariants(self) -> None:
        positions = [x for x, _ in self.entries]
        # integer positions can sit floor(separation) apart when the
        # separation itself is fractional (level 0 uses H/P)
        need = max(1, math.floor(self.separation))
        for u, v in zip(positions, positions[1:]):
            if v - u < need:
                raise DensityCollapse(
                    f"level {self.level}: positions {u}, {v} closer than separation"
                )
        for x in positions:
            if not self.lo - self.separation <= x <= self.hi + self.separation:
                raise DensityCollapse(f"level {self.level}: {x} outside scale interval")


@dataclass(frozen=True)
class LinkRecord:
    """A prime (or prime-product) relation between adjacent configurations.

    target_pos ~ p * source_pos; residuals are stored normalized:
    pos_residual in units of the higher separation, phase_residual in units
    of 1/(lower separation).
    """

    p: int
    source: int
    target: int
    pos_residual: float
    phase_residual: float


@dataclass(frozen=True)
class CompositeLink(LinkRecord):
    """A product link from the top configuration down to the base level;
    carries the base position so product positions q*x can be rebuilt."""

    source_pos: int = 0


@dataclass(frozen=True)
class ModulationModel:
    """alpha_z ~ a/Q + T/anchor, plus the per-entry products needed to
    check the model against the base configuration."""

    a: int
    Q: int
    T: float
    anchor: int
    quality: float
    entry_products: dict = field(default_factory=dict)


# -- stage 1: the base configuration -------------------------------------------


def build_J1(g: MultFnSpec, params: PipelineParams) -> Configuration:
    """Scan H-separated windows of [X, 2X]; keep peaks >= eta*H/2.

    The condition-(A) gate is PASSED when the mean sup magnitude over all
    scanned windows is >= eta*H; the result's meta carries the verdict.
    """
    params.validate()
    X, H = params.X, params.H
    xs = list(range(X, 2 * X - H + 1, H))
    entries = []
    mags = []
    for x in xs:
        values = expsum.window_values(g, x, H)
        alpha, mag = expsum.sup_of_values(values, params.oversample, params.refine_iters)
        mags.append(mag)
        if mag >= params.eta * H / 2:
            entries.append((x, alpha))
    mean_mag = float(np.mean(mags)) if mags else 0.0
    gate = mean_mag >= params.eta * H
    c0 = len(entries) * H / X
    return Configuration(
        level=1, lo=X, hi=2 * X, separation=float(H),
        entries=tuple(entries), c=c0,
        meta={
            "gate": gate,
            "mean_ratio": mean_mag / H,
            "eta": params.eta,
            "windows": len(xs),
        },
    )


def _require_gate(J1: Configuration) -> None:
    if not J1.meta.get("gate", False):
        raise PreconditionViolated("condition-(A) gate FAILED; pipeline refuses to continue")


# -- stage 2: prime scale selection --------------------------------------------


def _dyadic_blocks(params: PipelineParams) -> list[int]:
    H = params.H
    P0 = int(H**(params.epsilon**2))
    Pmax = H**params.epsilon
    blocks = []
    P = P0
    while P <= Pmax:
        blocks.append(P)
        P *= 2
    return blocks


def select_prime_scale(g: MultFnSpec, J1: Configuration, params: PipelineParams):
    """Pick the dyadic block [P, 2P] whose primes keep the dilated sums
    large for the most entries; returns (P, [(entry_idx, primes)]).

    A prime p qualifies for (x, alpha) when |(p/H) * sum over multiples of
    p in (x, x+H] of g(n) e(alpha n)| >= eta/4; an entry qualifies in a
    block when at least c_q * P/log P of the block's primes qualify.
    """
    if not J1.entries:
        raise PreconditionViolated("empty base configuration")
    H, eta = params.H, params.eta
    blocks = _dyadic_blocks(params)
    if not blocks:
        raise NoQualifyingScale("no dyadic block between H^(eps^2) and H^eps")

    windows = []
    for x, alpha in J1.entries:
        values = expsum.window_values(g, x, H)
        windows.append((x, expsum.phased_window(values, x, alpha)))

    best = None  # (score, P, qualified)
    for P in blocks:
        ps = primes_in(P, 2 * P)
        if not ps:
            continue
        need = params.c_q * P / LOG(P)
        qualified = []
        for idx, (x, w) in enumerate(windows):
            good = []
            for p in ps:
                first = (x // p + 1) * p  # first multiple of p above x
                s = np.sum(w[first - x - 1 :: p]) if first <= x + H else 0.0
                if abs(s) * p / H >= eta / 4:
                    good.append(p)
            if len(good) >= need:
                qualified.append((idx, tuple(good)))
        score = len(qualified) / len(windows)
        if best is None or score >= best[0]:  # ties -> larger block
            best = (score, P, qualified)
    score, P, qualified = best
    if not qualified:
        raise NoQualifyingScale("every dyadic block fails for every entry")
    return P, qualified


# -- stage 3: one scale down ----------------------------------------------------


def _cluster_frequencies(cands: list[tuple[float, int, int]], sep: float):
    """Greedy majority clustering of candidate frequencies.

    cands: (freq_float, payload...) records; returns (winner_freq_index,
    member_indices) for the cluster with the most supporters; deterministic
    ties by smallest frequency.
    """
    m = len(cands)
    freqs = np.array([c[0] for c in cands])
    d = np.abs(freqs[:, None] - freqs[None, :]) % 1.0
    d = np.minimum(d, 1.0 - d)
    close = d < sep
    counts = close.sum(axis=1)
    order = np.lexsort((freqs, -counts))
    win = int(order[0])
    members = np.flatnonzero(close[win]).tolist()
    return win, members


def build_J0(g: MultFnSpec, J1: Configuration, P: int, qualified, params: PipelineParams):
    """Project qualified entries one prime scale down: candidate points
    (x + H/2)/p snapped to an (H/P)-separated grid on [X/(2P), 2X/P], each
    carrying candidate frequency p*alpha_x; per grid point the frequency
    with the most support survives (pigeonhole), as do its links."""
    _require_gate(J1)
    X, H = params.X, params.H
    lo = X / (2 * P)
    hi = 2 * X / P
    sep = H / P
    nbins = int((hi - lo) / sep) + 1
    by_bin: dict[int, list] = {}
    for entry_idx, ps in qualified:
        x, alpha_x = J1.entries[entry_idx]
        for p in ps:
            y_mid = (x + H / 2) / p
            b = int((y_mid - lo) // sep)
            if not 0 <= b < nbins:
                continue
            cand = scale(p, alpha_x)
            by_bin.setdefault(b, []).append((cand.as_float(), entry_idx, p, cand))
    cluster_sep = params.cluster_sep_c * P / H
    entries = []
    links = []
    for b in sorted(by_bin):
        cands = by_bin[b]
        win, members = _cluster_frequencies([(c[0],) for c in cands], cluster_sep)
        alpha_y = cands[win][3]
        y_rep = int(round(lo + (b + 0.5) * sep))
        src = len(entries)
        entries.append((y_rep, alpha_y))
        for mi in members:
            _, entry_idx, p, cand = cands[mi]
            x, alpha_x = J1.entries[entry_idx]
            links.append(
                LinkRecord(
                    p=p, source=src, target=entry_idx,
                    pos_residual=abs(p * y_rep - x) / J1.separation,
                    phase_residual=float(circ_dist(cand, alpha_y)) * sep,
                )
            )
    c = len(entries) * sep / (hi - lo)
    if c < params.c_base:
        raise DensityCollapse(f"J0 density {c:.4f} below floor {params.c_base}")
    J0 = Configuration(
        level=0, lo=lo, hi=hi, separation=sep,
        entries=tuple(entries), c=c, meta={"P": P},
    )
    J0.check_invariants()
    return J0, links


# -- stage 4: one lift ----------------------------------------------------------


def lift_step(J_low: Configuration, J_high: Configuration, links: list[LinkRecord],
              P: int, params: PipelineParams):
    """One application of the lifting proposition.

    Links (from J_high entries down to J_low entries) sharing a low entry
    are paired into quintuples (x, y1, y2, p1, p2); each ordered pair
    proposes a top point near p2*y1 with the inverted prime; proposals are
    snapped to a separation*P^2 grid, thin grid points are discarded, and
    the surviving families are concentrated onto one frequency per point.

    Returns (new configuration two levels above J_low, links from it down
    to J_high).  Failures at individual grid points are tolerated and
    recorded; a global density shortfall raises DensityCollapse.
    """
    if not params.H > params.c_p2 * P * P:
        raise PreconditionViolated(f"H = {params.H} not above c_p2 * P^2 = {params.c_p2 * P * P}")
    ok_links = [
        l for l in links
        if l.pos_residual <= params.link_pos_c and l.phase_residual <= params.link_phase_c
    ]
    by_source: dict[int, list[LinkRecord]] = {}
    for l in ok_links:
        by_source.setdefault(l.source, []).append(l)

    sep_new = J_low.separation * P * P
    lo_new = J_low.lo * P * P
    hi_new = J_low.hi * 4 * P * P
    nbins = int((hi_new - lo_new) / sep_new) + 1

    quad_count: dict[int, int] = {}
    members: dict[int, dict[tuple[int, int], int]] = {}
    max_link_res: dict[int, float] = {}
    raw_phase_unit = 1.0 / J_low.separation  # phase residuals were stored * sep_low
    any_quintuple = False
    for x_idx, ls in by_source.items():
        if len(ls) < 2:
            continue
        for l1 in ls:
            for l2 in ls:
                if l1.p == l2.p:
                    continue
                any_quintuple = True
                y1_pos = J_high.entries[l1.target][0]
                z_cand = l2.p * y1_pos
                b = int((z_cand - lo_new) // sep_new)
                if not 0 <= b < nbins:
                    continue
                quad_count[b] = quad_count.get(b, 0) + 1
                mem = members.setdefault(b, {})
                mem[(l2.p, l1.target)] = mem.get((l2.p, l1.target), 0) + 1
                mem[(l1.p, l2.target)] = mem.get((l1.p, l2.target), 0) + 1
                r = max(l1.phase_residual, l2.phase_residual) * raw_phase_unit
                max_link_res[b] = max(max_link_res.get(b, 0.0), r)
    if not any_quintuple:
        raise DensityCollapse("no quintuple with two distinct primes exists")

    threshold = params.c_lift * (P / LOG(P)) ** 2
    cluster_tol = params.link_phase_c / J_high.separation
    entries = []
    new_links = []
    failures = []
    for b in sorted(quad_count):
        if quad_count[b] < threshold:
            continue
        fam = _family_for_bin(members[b], J_high, cluster_tol)
        if len(fam) < 2:
            failures.append((b, "family too small"))
            continue
        eps_z = 2.0 * max_link_res[b] * (1 + 1e-9) + 1e-15
        try:
            alpha_z, _ = gluing.concentrate(
                [gluing.PhasedPrime(p, a) for p, a in fam],
                eps=eps_z, P=float(P), pair_threshold=0.0,
                c2=params.c2, c_conc=params.c_conc,
            )
        except Exception as e:  # tolerated per grid point
            failures.append((b, f"{type(e).__name__}: {e}"))
            continue
        z_rep = int(round(lo_new + (b + 0.5) * sep_new))
        limit = params.c_conc * eps_z / P
        src = len(entries)
        got_link = False
        for (p, t) in sorted(members[b]):
            y_pos, alpha_y = J_high.entries[t]
            phase_raw = circ_dist(scale(p, alpha_z), alpha_y)
            if phase_raw > limit:
                continue
            pos_raw = abs(p * y_pos - z_rep)
            if pos_raw > params.link_pos_c * sep_new:
                continue
            got_link = True
            new_links.append(
                LinkRecord(
                    p=p, source=t, target=src,
                    pos_residual=pos_raw / sep_new,
                    phase_residual=float(phase_raw) * J_high.separation,
                )
            )
        if got_link:
            entries.append((z_rep, alpha_z))
        else:
            new_links = [l for l in new_links if l.target != src]
            failures.append((b, "no member matched the concentrated frequency"))
    c = len(entries) * sep_new / (hi_new - lo_new)
    if c < params.density_floor:
        raise DensityCollapse(
            f"lift to level {J_high.level + 1}: density {c:.5f} below floor "
            f"{params.density_floor} ({len(failures)} grid-point failures)"
        )
    new = Configuration(
        level=J_high.level + 1, lo=lo_new, hi=hi_new, separation=sep_new,
        entries=tuple(entries), c=c,
        meta={"failures": len(failures), "quadruple_threshold": threshold},
    )
    new.check_invariants()
    return new, new_links


def _family_for_bin(mem: dict[tuple[int, int], int], J_high: Configuration, tol: float):
    """One (prime, frequency) pair per prime: per prime, cluster the
    frequencies of its member targets and keep the best-supported one."""
    by_p: dict[int, list[tuple[float, int, CirclePoint]]] = {}
    for (p, t), cnt in sorted(mem.items()):
        alpha = J_high.entries[t][1]
        by_p.setdefault(p, []).append((alpha.as_float(), cnt, alpha))
    fam = []
    for p, cands in sorted(by_p.items()):
        if len(cands) == 1:
            fam.append((p, cands[0][2]))
            continue
        freqs = np.array([c[0] for c in cands])
        w = np.array([c[1] for c in cands])
        d = np.abs(freqs[:, None] - freqs[None, :]) % 1.0
        d = np.minimum(d, 1.0 - d)
        support = ((d < tol) * w[None, :]).sum(axis=1)
        order = np.lexsort((freqs, -support))
        fam.append((p, cands[int(order[0])][2]))
    return fam


# -- stage 5: the full recursion ------------------------------------------------


@dataclass(frozen=True)
class RecursionResult:
    top: Configuration
    composite_links: tuple[LinkRecord, ...]
    kt: int
    P: int
    configs: tuple[Configuration, ...]
    linksets: tuple[tuple[LinkRecord, ...], ...]
    J1: Configuration


def lift_count(P: int, X: int, H: int) -> int:
    """Smallest positive k with P^k / (log P)^(k+1) > X/H, plus one."""
    k = 1
    while P**k / LOG(P) ** (k + 1) <= X / H:
        k += 1
        if k > 64:
            raise ConfigError("P/log P <= 1: lifting cannot terminate")
    return k + 1


def compose_links(linksets: list[list[LinkRecord]], configs: list[Configuration],
                  H: float) -> list[LinkRecord]:
    """Compose per-level links into product links from the top configuration
    down to the base level.

    linksets[i] connects configs[i+1] (higher) down to configs[i]; residuals
    of the composites are recomputed from raw data (positions and
    frequencies), normalized by the top separation and the base 1/H.
    Duplicate (top entry, product) pairs keep only their first (smallest
    base index) association.
    """
    top = configs[-1]
    base = configs[0]
    # chains: (top idx, current lower idx, product); many paths through the
    # link DAG produce the same triple, so dedupe per hop
    chains = {(l.target, l.source, l.p) for l in linksets[-1]}
    for linkset in reversed(linksets[:-1]):
        by_high: dict[int, list[LinkRecord]] = {}
        for l in linkset:
            by_high.setdefault(l.target, []).append(l)
        nxt = set()
        for top_idx, mid_idx, prod in chains:
            for l in by_high.get(mid_idx, ()):
                nxt.add((top_idx, l.source, prod * l.p))
        chains = nxt
    # one base entry per (top entry, product): keep the best-fitting chain
    seen: dict[tuple[int, int], tuple[float, int]] = {}
    for top_idx, base_idx, prod in sorted(chains, key=lambda c: (c[0], c[2], c[1])):
        z_pos = top.entries[top_idx][0]
        x_pos = base.entries[base_idx][0]
        miss = abs(prod * x_pos - z_pos)
        key = (top_idx, prod)
        if key not in seen or (miss, base_idx) < seen[key]:
            seen[key] = (miss, base_idx)
    seen = {key: v[1] for key, v in seen.items()}
    out = []
    for (top_idx, prod), base_idx in sorted(seen.items()):
        z_pos, alpha_z = top.entries[top_idx]
        x_pos, alpha_x = base.entries[base_idx]
        out.append(
            CompositeLink(
                p=prod, source=base_idx, target=top_idx,
                pos_residual=abs(prod * x_pos - z_pos) / top.separation,
                phase_residual=float(circ_dist(scale(prod, alpha_z), alpha_x)) * H,
                source_pos=x_pos,
            )
        )
    return out


def run_recursion(g: MultFnSpec, params: PipelineParams) -> RecursionResult:
    """build_J1 -> select_prime_scale -> build_J0 -> lift_step x kt,
    then compose links from the top configuration down to the base."""

    def stage(name, fn, *args):
        try:
            return fn(*args)
        except Exception as e:
            raise StageError(name, e) from e

    J1 = stage("j1", build_J1, g, params)
    stage("j1", _require_gate, J1)
    P, qualified = stage("scale", select_prime_scale, g, J1, params)
    J0, links10 = stage("j0", build_J0, g, J1, P, qualified, params)
    kt = lift_count(P, params.X, params.H)
    flagged = False
    if params.max_lifts is not None and params.max_lifts < kt:
        kt = params.max_lifts
        flagged = True
    if kt > params.kt_cap:
        raise StageError("lift", ConfigError(f"kt = {kt} exceeds cap {params.kt_cap}"))

    configs = [J0, J1]
    linksets = [links10]
    low, high, links = J0, J1, links10
    for step in range(kt):
        new, new_links = stage(f"lift{step + 1}", lift_step, low, high, links, P, params)
        configs.append(new)
        linksets.append(new_links)
        low, high, links = high, new, new_links
    # composite chain: top -> ... -> level 1 (skip the bootstrap level 0)
    composite = stage(
        "compose", compose_links, linksets[1:], configs[1:], float(params.H)
    )
    top = replace(configs[-1], meta={**configs[-1].meta, "P": P, "kt": kt,
                                     "kt_overridden": flagged})
    return RecursionResult(
        top=top, composite_links=tuple(composite), kt=kt, P=P,
        configs=tuple(configs), linksets=tuple(tuple(ls) for ls in linksets), J1=J1,
    )


# -- prime product counting ------------------------------------------------------


def count_close_products(P: int, k: int, N: int, Q: int, bound_const: float = 1.0,
                         hypothesis_slack: float = 10.0) -> int:
    """Exact count of ordered 2k-tuples of primes from [P, 2P] whose two
    k-fold products differ by at most bound_const * P^k / N and are
    congruent mod Q.  Meet-in-the-middle on the sorted product list.

    The hypothesis P^(k-1) >~ N is enforced up to hypothesis_slack (the
    implicit constant of the estimate)."""
    if k < 1 or P < 3 or N < 3:
        raise ValueError("need k >= 1, P >= 3, N >= 3")
    if P ** (k - 1) * hypothesis_slack * bound_const < N:
        raise ValueError(
            f"P^(k-1) = {P**(k-1)} too small against N = {N} (slack {hypothesis_slack})"
        )
    ps = primes_in(P, 2 * P)
    if not ps:
        return 0
    if len(ps) ** k > 10**9:
        raise TooManyTuples(f"{len(ps)}^{k} k-tuples exceed the enumeration budget")
    prods = np.array([1], dtype=np.int64)
    for _ in range(k):
        prods = (prods[:, None] * np.array(ps, dtype=np.int64)[None, :]).ravel()
    prods.sort()
    tol = bound_const * P**k / N
    lo_idx = np.searchsorted(prods, prods - tol, side="left")
    hi_idx = np.searchsorted(prods, prods + tol, side="right")
    if Q == 1:
        return int(np.sum(hi_idx - lo_idx))
    total = 0
    residues = prods % Q
    for i in range(len(prods)):
        window = residues[lo_idx[i] : hi_idx[i]]
        total += int(np.count_nonzero(window == residues[i]))
    return total


# -- stage 6: modulation recovery -------------------------------------------------


def recover_modulation(top: Configuration, links, params: PipelineParams) -> ModulationModel:
    """Turn composite product links into a model alpha_z ~ a/Q + T/anchor.

    The top entry with the most product links is analyzed: product
    differences for its best-connected base source witness ||d * alpha_z||
    being small, so Vinogradov's lemma yields (a, Q).  Anchor cells
    partition the product positions q*x; the cell with the most distinct
    base sources is selected, a congruent product pair with maximal gap
    certifies the refined drift bound, and T = (alpha_z - a/Q) * anchor.
    """
    links = list(links)
    if not links:
        raise NoAnchor("no composite links")
    P = top.meta.get("P", 0)
    kt = top.meta.get("kt", 1)
    by_target: dict[int, list[CompositeLink]] = {}
    for l in links:
        by_target.setdefault(l.target, []).append(l)
    z_idx = min(by_target, key=lambda t: (-len(by_target[t]), t))
    links_z = by_target[z_idx]
    z_pos, alpha_z = top.entries[z_idx]

    by_source: dict[int, list[int]] = {}
    for l in links_z:
        by_source.setdefault(l.source, []).append(l.p)
    x_star = min(by_source, key=lambda s: (-len(by_source[s]), s))
    prods = sorted(set(by_source[x_star]))
    diffs = [q - prods[0] for q in prods[1:]]

    zero = CirclePoint(Fraction(0, 1))
    if diffs:
        max_dres = max(float(circ_dist(scale(d, alpha_z), zero)) for d in diffs)
        max_d = max(diffs)
    else:
        max_dres, max_d = 0.0, 0
    eps_v = min(max(2.0 * max_dres * (1 + 1e-6), 1e-9), 0.0099)
    N = max(max_d, 1000)
    s = support_count(alpha_z, N, eps_v)
    delta = min(0.9 * s / N, 0.99)
    if delta <= 100 * eps_v or delta * N <= 100:
        raise VinogradovFailed(f"support fraction {s}/{N} too small for eps = {eps_v:.3g}")
    try:
        ra = vinogradov_approx(alpha_z, N=N, eps=eps_v, delta=delta, c_v=params.c_v)
    except (HypothesisFails, NoDenominatorInRange) as e:
        raise VinogradovFailed(str(e)) from e
    a, Q = ra.a, ra.q
    aQ = CirclePoint(Fraction(a, Q))

    # anchor cells partition the product positions q*x around z
    positions = [l.p * l.source_pos for l in links_z]
    r_cells = max(1, round(LOG(P) ** kt)) if P and P > 1 else 1
    p_lo, p_hi = min(positions), max(positions)
    cell_w = max((p_hi - p_lo) / r_cells, 1.0)
    cells: dict[int, dict] = {}
    for l, qx in zip(links_z, positions):
        ci = min(int((qx - p_lo) / cell_w), r_cells - 1)
        cell = cells.setdefault(ci, {"sources": set(), "prods": []})
        cell["sources"].add(l.source)
        cell["prods"].append(l.p)
    best_cell = min(cells, key=lambda ci: (-len(cells[ci]["sources"]), ci))
    if all(len(c["prods"]) < 2 for c in cells.values()):
        raise NoAnchor("every anchor cell carries fewer than 2 products")
    anchor = int(round(p_lo + (best_cell + 0.5) * cell_w))

    # drift-bound certificate from a congruent pair with maximal gap
    by_res: dict[int, list[int]] = {}
    for q in cells[best_cell]["prods"]:
        by_res.setdefault(q % Q, []).append(q)
    refined_bound = None
    for res, qs in sorted(by_res.items()):
        if len(qs) >= 2:
            d = max(qs) - min(qs)
            if d > 0:
                gap = abs(float(signed_gap(scale(d, alpha_z), scale(d, aQ))))
                bound = gap / d
                if refined_bound is None or bound < refined_bound:
                    refined_bound = bound

    beta = signed_gap(alpha_z, aQ)
    T = float(beta * anchor)
    quality = min(1.0, len(by_source) * params.H / params.X)
    entry_products = {src: min(ps) for src, ps in by_source.items()}
    return ModulationModel(
        a=a, Q=Q, T=T, anchor=anchor, quality=quality,
        entry_products={
            "per_entry": entry_products,
            "top_index": z_idx,
            "refined_drift_bound": refined_bound,
            "vinogradov": {"eps": eps_v, "delta": delta, "N": N,
                           "support": ra.support_count, "err": float(ra.err)},
        },
    )


# -- stage 7: model verification ---------------------------------------------------


@dataclass(frozen=True)
class VerifyReport:
    """Distributions from the two model checks: per-entry phase agreement
    and per-window correlation against the modulated Taylor phase."""

    phase_fraction: float
    phase_checked: int
    window_correlations: tuple[float, ...]
    window_fraction_09: float
    h_star: int


def verify_model(g: MultFnSpec, J1: Configuration, model: ModulationModel,
                 params: PipelineParams) -> VerifyReport:
    """(i) fraction of linked base entries with alpha_x within c_ver/H of
    q*a/Q + T/x; (ii) normalized window correlations against
    e(a'n/Q + T(n-y)/y), maximized over residue tilts a'."""
    H, X = params.H, params.X
    per_entry: dict = model.entry_products.get("per_entry", {})
    tol = params.c_ver / H
    good = 0
    for src, q in sorted(per_entry.items()):
        x, alpha_x = J1.entries[src]
        predicted = point((((q % model.Q) * model.a % model.Q) / model.Q + model.T / x) % 1.0)
        if circ_dist(alpha_x, predicted) <= tol:
            good += 1
    phase_fraction = good / len(per_entry) if per_entry else 0.0

    h_star = max(16, int(params.epsilon * H))
    rng = np.random.default_rng(params.seed)
    corrs = []
    n_win = params.n_verify_windows
    for _ in range(n_win):
        y = int(rng.integers(X, 2 * X - h_star))
        vals = multfn.eval_range(g, y + 1, h_star)
        n = np.arange(y + 1, y + h_star + 1, dtype=np.float64)
        drift = model.T * (n - y) / y
        best = 0.0
        for a_tilt in range(model.Q):
            angles = (a_tilt * (np.arange(y + 1, y + h_star + 1) % model.Q)) / model.Q + drift
            corr = abs(np.sum(vals * np.exp(2j * math.pi * angles))) / h_star
            best = max(best, float(corr))
        corrs.append(best)
    corrs_t = tuple(corrs)
    frac09 = float(np.mean([c >= 0.9 for c in corrs])) if corrs else 0.0
    return VerifyReport(
        phase_fraction=phase_fraction,
        phase_checked=len(per_entry),
        window_correlations=corrs_t,
        window_fraction_09=frac09,
        h_star=h_star,
    )

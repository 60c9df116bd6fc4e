"""Acceptance suite: one test per criterion, each printing a PASS line with
its headline numbers.  Tolerances are pinned here, not configured."""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from freqlift.approx import vinogradov_approx
from freqlift.circle import CirclePoint, circ_dist, point, scale
from freqlift.expsum import exceptional_prime_mass, detect_peaks, sup_of_values, window_values
from freqlift.gluing import PhasedPrime, concentrate, cross_residual, glue_pair
from freqlift.lifting import (
    PipelineParams,
    count_close_products,
    recover_modulation,
    run_recursion,
    verify_model,
)
from freqlift.multfn import (
    archimedean_twist,
    dirichlet_character,
    eval_range,
    liouville,
    product,
)
from freqlift.pretend import pretentious_distance, theorem1_check
from freqlift.primes import mertens_sum, primes_in

from oracles import dense_grid_sup, exhaustive_glue


def report(name: str, elapsed: float, detail: str) -> None:
    print(f"ACCEPTANCE {name}: PASS in {elapsed:.1f}s  ({detail})")


# -- 1. gluing lemma suite ---------------------------------------------------------


def test_criterion_1_glue_pair_suite():
    t0 = time.time()
    rng = np.random.default_rng(101)
    primes = primes_in(3, 1000)
    pairs = rng.integers(0, len(primes), size=(11_000, 2))
    checked = 0
    # residual bound on 10^4 seeded float instances; per-frequency noise
    # below eps/4 and scaled so the cross relation stays below eps
    for i, j in pairs:
        if checked >= 10_000 or i == j:
            continue
        p1, p2 = primes[int(i)], primes[int(j)]
        alpha = point(float(rng.random()))
        eps = 10.0 ** rng.uniform(-8, -2)
        a = PhasedPrime(p1, point((scale(p1, alpha).as_float()
                                   + float(rng.uniform(-eps, eps)) / (4 * p2)) % 1.0))
        b = PhasedPrime(p2, point((scale(p2, alpha).as_float()
                                   + float(rng.uniform(-eps, eps)) / (4 * p1)) % 1.0))
        if not cross_residual(a, b) < eps:
            continue
        res = glue_pair(a, b, eps)
        rd = dict(res.residuals)
        assert rd[p1] < eps / (2 * p2)
        assert rd[p2] < eps / (2 * p1)
        checked += 1
    assert checked == 10_000
    # exact-mode agreement with the exhaustive lift-pair oracle
    import random as pyrandom

    prng = pyrandom.Random(202)
    small = primes_in(2, 60)
    oracle_checked = 0
    while oracle_checked < 300:
        p1, p2 = prng.sample(small, 2)
        den = prng.randrange(2, 4000)
        alpha = Fraction(prng.randrange(0, den), den)
        a1 = (p1 * alpha + Fraction(prng.randrange(-2, 3), 10**7)) % 1
        a2 = (p2 * alpha + Fraction(prng.randrange(-2, 3), 10**7)) % 1
        a = PhasedPrime(p1, CirclePoint(a1))
        b = PhasedPrime(p2, CirclePoint(a2))
        eps = cross_residual(a, b) + Fraction(1, 10**6)
        if not eps < 1:
            continue
        mid, _, ties = exhaustive_glue(p1, a1, p2, a2)
        if ties > 1:
            continue
        assert glue_pair(a, b, eps).alpha.value == mid
        oracle_checked += 1
    elapsed = time.time() - t0
    assert elapsed < 10.0
    report("1 (gluing lemma)", elapsed,
           f"{checked} residual instances, {oracle_checked} exact oracle matches")


# -- 2. concentration recovery -------------------------------------------------------


def test_criterion_2_concentration_suite():
    t0 = time.time()
    rng = np.random.default_rng(303)
    failures = 0
    pools = {P: primes_in(int(P), int(2 * P)) for P in (50.0, 500.0)}
    for trial in range(1000):
        P = 50.0 if trial % 2 == 0 else 500.0
        pool = pools[P]
        # [50, 100] holds only 10 primes, so the 20..200 family size is
        # capped by availability
        n = int(rng.integers(20, 201))
        n = min(n, len(pool))
        idx = rng.choice(len(pool), size=n, replace=False)
        eps = 0.9 / (200.0 * P * P)
        alpha = point(float(rng.random()))
        S = []
        for k in idx:
            p = pool[int(k)]
            # noise <= eps/10 at the cross-relation scale: per-prime offset /4P
            delta = float(rng.uniform(-1, 1)) * eps / (10 * 4 * P)
            S.append(PhasedPrime(p, point((scale(p, alpha).as_float() + delta) % 1.0)))
        got, matched = concentrate(S, eps=eps, P=P, pair_threshold=0.2)
        if circ_dist(got, alpha) > 10 * eps / P or len(matched) < 0.5 * n:
            failures += 1
    elapsed = time.time() - t0
    assert failures == 0
    assert elapsed < 60.0
    report("2 (concentration)", elapsed, "1000 instances, 0 failures")


# -- 3. Vinogradov suite ---------------------------------------------------------------


def test_criterion_3_vinogradov_suite():
    t0 = time.time()
    import random as pyrandom

    prng = pyrandom.Random(404)
    worst_shape = 0.0
    for _ in range(1000):
        q = prng.randrange(2, 31)
        a = prng.choice([x for x in range(1, q) if math.gcd(x, q) == 1])
        delta = 1 / (2 * q)
        N = 300 * q
        eps = 1 / (300 * q)
        theta = prng.uniform(-1, 1) * eps / (4 * N)
        alpha = point((a / q + theta) % 1.0)
        res = vinogradov_approx(alpha, N=N, eps=eps, delta=delta)
        assert (res.a, res.q) == (a, q)
        assert res.err <= 2 * abs(theta) + 1e-15
        worst_shape = max(worst_shape, float(res.err) * delta * N / eps)
    assert worst_shape <= 8.0
    # convergents contain the brute-force best rational at q_max <= 10^3
    from freqlift.approx import best_rational_oracle, convergents

    oracle_pairs = 0
    for _ in range(60):
        alpha = point(prng.random())
        convs = convergents(alpha, 1000)
        reduced = set()
        for ca, cq in convs:
            g = math.gcd(ca % cq if ca % cq else cq, cq)
            reduced.add(((ca % cq) // g, cq // g) if ca % cq else (0, 1))
        for q_max in [cq for _, cq in convs]:
            assert best_rational_oracle(alpha, q_max) in reduced
            oracle_pairs += 1
    elapsed = time.time() - t0
    assert elapsed < 30.0
    report("3 (vinogradov)", elapsed,
           f"1000 planted, shape const {worst_shape:.3f} <= 8, {oracle_pairs} oracle checks")


# -- 4. exponential-sum engine ------------------------------------------------------------


def test_criterion_4_sup_engine():
    t0 = time.time()
    rng = np.random.default_rng(505)
    from freqlift.expsum import _grid_magnitudes

    for trial in range(100):
        H = int(rng.integers(16, 513))
        if trial % 2 == 0:
            theta = float(rng.random())
            vals = np.exp(2j * np.pi * (theta * np.arange(1, H + 1)
                                        + 0.02 * rng.standard_normal(H)))
            check_freq = True
        else:
            vals = np.exp(2j * np.pi * rng.random(H))
            check_freq = False
        alpha, mag = sup_of_values(vals)
        freq_o, mag_o = dense_grid_sup(vals)
        assert mag == pytest.approx(mag_o, rel=0.01)
        if check_freq:
            d = abs(alpha.as_float() - freq_o)
            assert min(d, 1 - d) <= 1 / (2 * H)
        grid = _grid_magnitudes(vals, 8)
        assert np.mean(grid**2) == pytest.approx(H * np.mean(np.abs(vals) ** 2),
                                                 rel=1e-9)
    elapsed = time.time() - t0
    assert elapsed < 30.0
    report("4 (sup engine)", elapsed, "100 instances, 1% magnitude, Parseval 1e-9")


# -- 5. peak clustering shape --------------------------------------------------------------


def test_criterion_5_peak_clustering_shape():
    t0 = time.time()
    rng = np.random.default_rng(606)
    taus = (0.9, 0.7, 0.5, 0.3)
    worst = {tau: 0 for tau in taus}
    for trial in range(40):
        H = int(rng.integers(64, 513))
        kind = trial % 3
        if kind == 0:
            vals = np.exp(2j * np.pi * rng.random(H))  # pure phase noise
        else:
            # piecewise linear phases: `kind + 1` segments of full height
            segs = 2 * kind
            n = np.arange(1, H + 1)
            thetas = rng.random(segs)
            vals = np.empty(H, dtype=np.complex128)
            for s in range(segs):
                sl = slice(s * H // segs, (s + 1) * H // segs)
                vals[sl] = np.exp(2j * np.pi * thetas[s] * n[sl])
        from freqlift.expsum import _grid_magnitudes, _circ_dist_float

        grid = _grid_magnitudes(vals, 8)
        M = len(grid)
        for tau in taus:
            big = np.flatnonzero(grid >= tau * H)
            order = big[np.argsort(-grid[big], kind="stable")]
            reps = []
            for j in order:
                a = j / M
                if any(_circ_dist_float(a, r) < 1.0 / H for r in reps):
                    continue
                reps.append(a)
            count = len(reps)
            worst[tau] = max(worst[tau], count)
            assert count <= 4 / tau**2, (tau, count)
    elapsed = time.time() - t0
    assert elapsed < 60.0
    report("5 (peak clustering)", elapsed,
           "counts " + " ".join(f"tau={t}:{worst[t]}" for t in taus))


# -- 6. Elliott mass --------------------------------------------------------------------


def test_criterion_6_elliott_mass():
    t0 = time.time()
    vals = eval_range(liouville(), 10**6, 10**5)
    details = []
    for tau in (0.5, 0.3, 0.2):
        mass = exceptional_prime_mass(vals, 10**6, 2, 10**5, tau)
        assert mass <= 10 / tau**2, (tau, mass)
        details.append(f"tau={tau}: {mass:.3f}")
    elapsed = time.time() - t0
    assert elapsed < 60.0
    report("6 (elliott mass)", elapsed, ", ".join(details))


# -- 7. prime product counting -----------------------------------------------------------


def test_criterion_7_products():
    t0 = time.time()
    assert count_close_products(10, 1, 10, 1, bound_const=2.0) == 8
    details = ["k=1 hand case: 8"]
    for Q in (1, 3):
        n = count_close_products(50, 2, 10, Q)
        phi_q = 1 if Q == 1 else 2
        bound = 50**4 / (10 * math.log(50) ** 4) * (1 / phi_q + 1 / math.log(10))
        assert n <= 5 * bound, (Q, n, bound)
        details.append(f"k=2 Q={Q}: {n} <= {5 * bound:.0f}")
    elapsed = time.time() - t0
    assert elapsed < 120.0
    report("7 (prime products)", elapsed, ", ".join(details))


# -- 8. end-to-end planted pipeline ---------------------------------------------------------


def test_criterion_8_planted_pipeline():
    t0 = time.time()
    details = []
    for T0 in (50.0, 300.0):
        params = PipelineParams(X=10**5, delta_exp=0.6, eta=0.5, epsilon=0.45, seed=1)
        g = archimedean_twist(T0)
        res = run_recursion(g, params)
        model = recover_modulation(res.top, res.composite_links, params)
        rep = verify_model(g, res.J1, model, params)
        assert res.J1.meta["gate"] is True
        assert model.Q == 1
        # |T| recovers T0 (kernel e(alpha n) makes the signed value -T0);
        # the stated window is 5 X^2/H^2 either way
        assert abs(model.T - T0) <= 5 * params.X**2 / params.H**2
        assert abs(abs(model.T) - T0) <= 20.0
        assert rep.phase_fraction >= 0.9
        details.append(f"T0={T0:g}: T={model.T:.2f} Q=1 frac={rep.phase_fraction:.2f}")
    # mod-3 character twist
    params = PipelineParams(X=10**5, delta_exp=0.6, eta=0.5, epsilon=0.45, seed=1)
    g = product(dirichlet_character(3, 1), archimedean_twist(200.0))
    res = run_recursion(g, params)
    model = recover_modulation(res.top, res.composite_links, params)
    rep = verify_model(g, res.J1, model, params)
    assert res.J1.meta["gate"] is True
    assert model.Q % 3 == 0
    assert rep.phase_fraction >= 0.9
    details.append(f"char3*arch200: Q={model.Q} T={model.T:.2f}")
    elapsed = time.time() - t0
    assert elapsed < 600.0
    report("8 (planted pipeline)", elapsed, "; ".join(details))


# -- 9. zero-noise exact run -----------------------------------------------------------------


def test_criterion_9_exact_run():
    t0 = time.time()
    from test_lifting import build_exact_tower, exact_sixth
    from freqlift.lifting import compose_links, lift_step
    from dataclasses import replace

    params, J0, J1, links = build_exact_tower()
    lvl2, links2 = lift_step(J0, J1, links, 10, params)
    lvl3, links3 = lift_step(J1, lvl2, links2, 10, params)
    for ls in (links2, links3):
        assert all(l.pos_residual == 0.0 and l.phase_residual == 0.0 for l in ls)
    composite = compose_links([links2, links3], [J1, lvl2, lvl3], H=float(params.H))
    assert all(l.pos_residual == 0.0 and l.phase_residual == 0.0 for l in composite)
    top = replace(lvl3, meta={"P": 10, "kt": 2})
    model = recover_modulation(top, composite, params)
    assert (model.a, model.Q, model.T) == (1, 6, 0.0)
    assert model.entry_products["vinogradov"]["err"] == 0.0
    elapsed = time.time() - t0
    report("9 (exact zero-noise)", elapsed,
           "all residuals exactly 0; model (1, 6, 0.0) recovered exactly")


# -- 10. negative control ---------------------------------------------------------------------


def test_criterion_10_negative_control():
    t0 = time.time()
    params = PipelineParams(X=10**6, delta_exp=0.5, eta=0.5, epsilon=0.45, seed=1)
    gate, dist, consistent = theorem1_check(liouville(), params, 5.0)
    assert gate is False
    assert consistent is True
    res = pretentious_distance(liouville(), 100, 1)
    witness = 2 * mertens_sum(2, 100)
    assert witness == pytest.approx(3.605635, abs=1e-4)
    assert res.value_squared <= witness + 1e-12
    elapsed = time.time() - t0
    assert elapsed < 600.0
    report("10 (negative control)", elapsed,
           f"gate FAILED, consistent, witness value^2 = {witness:.6f}, "
           f"min value = {res.value:.4f}")


# -- 11. determinism ---------------------------------------------------------------------------


def test_criterion_11_determinism(tmp_path):
    t0 = time.time()
    from freqlift.cli import main
    from freqlift.records import files_equal_modulo_header

    args = ["pipeline", "--fn", "arch:T=100", "--X", "20000", "--delta", "0.6",
            "--eta", "0.5", "--epsilon", "0.45", "--seed", "7"]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(d1)]) == 0
    assert main(args + ["--out", str(d2)]) == 0
    for p in sorted(d1.iterdir()):
        q = d2 / p.name
        if p.name == "model.json":
            assert p.read_bytes() == q.read_bytes()
        else:
            assert files_equal_modulo_header(p, q), p.name
    elapsed = time.time() - t0
    report("11 (determinism)", elapsed, "reruns byte-identical modulo timestamp header")

import math
from fractions import Fraction

import numpy as np
import pytest

from freqlift.circle import CirclePoint, circ_dist, exact, point, scale
from freqlift.errors import (
    ConfigError,
    DensityCollapse,
    NoAnchor,
    PreconditionViolated,
    StageError,
    TooManyTuples,
)
from freqlift.lifting import (
    Configuration,
    LinkRecord,
    PipelineParams,
    build_J0,
    build_J1,
    compose_links,
    count_close_products,
    lift_count,
    lift_step,
    recover_modulation,
    run_recursion,
    select_prime_scale,
    verify_model,
)
from freqlift.multfn import archimedean_twist, liouville, one, parse_spec


def desk_params(**kw):
    base = dict(X=10**5, delta_exp=0.6, eta=0.5, epsilon=0.45, seed=1)
    base.update(kw)
    return PipelineParams(**base)


@pytest.fixture(scope="session")
def planted_run():
    params = PipelineParams(X=10**5, delta_exp=0.6, eta=0.5, epsilon=0.45, seed=1)
    g = archimedean_twist(300.0)
    res = run_recursion(g, params)
    model = recover_modulation(res.top, res.composite_links, params)
    report = verify_model(g, res.J1, model, params)
    return params, g, res, model, report


# -- params -------------------------------------------------------------------


def test_params_H_and_validation():
    p = desk_params()
    assert p.H == 1000
    p.validate()
    assert PipelineParams(X=1000, delta_exp=2 / 3, eta=0.5, epsilon=0.5).H == 100


def test_params_rejects_tiny_prime_range():
    with pytest.raises(ConfigError):
        desk_params(epsilon=0.05).validate()


def test_params_rejects_small_H():
    with pytest.raises(ConfigError):
        PipelineParams(X=100, delta_exp=0.2, eta=0.5, epsilon=0.5).validate()


# -- build_J1 ------------------------------------------------------------------


def test_J1_planted_gate_passes(planted_run):
    _, _, res, _, _ = planted_run
    J1 = res.J1
    assert J1.meta["gate"] is True
    assert J1.c >= 0.9
    assert J1.meta["mean_ratio"] >= 0.99


def test_J1_constant_function_all_qualify():
    params = PipelineParams(X=2 * 10**4, delta_exp=0.6, eta=1.0, epsilon=0.45)
    J1 = build_J1(one(), params)
    assert J1.meta["gate"] is True
    assert len(J1.entries) == J1.meta["windows"]
    for _, alpha in J1.entries:
        a = alpha.as_float()
        assert min(a, 1 - a) < 1 / (2 * params.H)


def test_J1_liouville_gate_fails():
    params = PipelineParams(X=10**5, delta_exp=0.6, eta=0.5, epsilon=0.45)
    J1 = build_J1(liouville(), params)
    assert J1.meta["gate"] is False
    assert J1.c < 0.05


def test_J1_frequencies_near_planted(planted_run):
    params, _, res, _, _ = planted_run
    for x, alpha in res.J1.entries[:20]:
        expect = (-300.0 / x) % 1.0
        d = abs(alpha.as_float() - expect)
        assert min(d, 1 - d) < 1 / (2 * params.H)


# -- select_prime_scale -----------------------------------------------------------


def test_scale_selection_planted(planted_run):
    params, g, res, _, _ = planted_run
    P, qualified = select_prime_scale(g, res.J1, params)
    assert P == 16  # largest dyadic block for a planted twist
    assert len(qualified) == len(res.J1.entries)
    from freqlift.primes import primes_in

    block = set(primes_in(P, 2 * P))
    for _, ps in qualified:
        assert set(ps) == block  # every prime qualifies


def test_scale_selection_empty_J1_refused():
    params = desk_params()
    empty = Configuration(level=1, lo=10**5, hi=2 * 10**5, separation=1000.0,
                          entries=(), c=0.0, meta={"gate": False})
    with pytest.raises(PreconditionViolated):
        select_prime_scale(one(), empty, params)


# -- build_J0 ----------------------------------------------------------------------


def test_J0_planted_structure(planted_run):
    params, g, res, _, _ = planted_run
    P, qualified = select_prime_scale(g, res.J1, params)
    J0, links = build_J0(g, res.J1, P, qualified, params)
    assert J0.separation == params.H / P
    assert J0.c >= 0.5
    assert links
    for l in links:
        assert l.pos_residual <= 2.0  # |py - x| < 2H
        assert l.phase_residual <= params.cluster_sep_c
    # frequencies close to the planted drift at the lower scale
    for y, alpha in J0.entries[:10]:
        expect = (-300.0 / y) % 1.0
        d = abs(alpha.as_float() - expect)
        assert min(d, 1 - d) < 4 * P / params.H


def test_J0_refuses_failed_gate():
    params = desk_params()
    J1 = Configuration(level=1, lo=10**5, hi=2 * 10**5, separation=1000.0,
                       entries=((10**5, point(0.25)),), c=0.01, meta={"gate": False})
    with pytest.raises(PreconditionViolated):
        build_J0(one(), J1, 16, [(0, (17,))], params)


# -- lift_step ----------------------------------------------------------------------


def test_lift_degenerate_single_prime_collapses():
    params = desk_params(c_p2=0.5)
    J0 = Configuration(level=0, lo=100.0, hi=10000.0, separation=20.0,
                       entries=((1000, point(0.1)), (2000, point(0.3))), c=0.5)
    J1 = Configuration(level=1, lo=1000.0, hi=50000.0, separation=200.0,
                       entries=((17000, point(0.7)), (34000, point(0.1))), c=0.5)
    links = [LinkRecord(17, 0, 0, 0.0, 0.0), LinkRecord(17, 1, 1, 0.0, 0.0)]
    with pytest.raises(DensityCollapse):
        lift_step(J0, J1, links, 16, params)


def test_lift_guard_H_vs_P2():
    params = desk_params()
    J0 = Configuration(level=0, lo=1.0, hi=10.0, separation=1.0, entries=(), c=0.0)
    with pytest.raises(PreconditionViolated):
        lift_step(J0, J0, [], 100, params)


def test_recursion_bookkeeping(planted_run):
    params, _, res, _, _ = planted_run
    # separation multiplies by exactly P per level
    for lower, upper in zip(res.configs[:-1], res.configs[1:]):
        assert upper.separation == pytest.approx(lower.separation * res.P)
        assert upper.level == lower.level + 1
    for cfg in res.configs:
        cfg.check_invariants()
    assert res.kt == lift_count(res.P, params.X, params.H)
    assert res.top.level == res.kt + 1


def test_composite_links_soundness(planted_run):
    params, _, res, _, _ = planted_run
    # products of exactly kt primes in [P, 2P]
    lo, hi = res.P**res.kt, (2 * res.P) ** res.kt
    for l in res.composite_links:
        assert lo <= l.p <= hi
        # recomputed residuals stored; phase normalized by H must stay small
        # against the accumulated triangle-inequality budget
    z_best = {}
    for l in res.composite_links:
        z_best.setdefault(l.target, []).append(l)
    best = max(z_best.values(), key=len)
    assert len(best) >= 3
    good = [l for l in best if l.phase_residual <= 4.0 and l.pos_residual <= 4.0]
    assert len(good) >= 0.5 * len(best)


def test_recovered_model_planted(planted_run):
    params, _, res, model, report = planted_run
    assert model.Q == 1 and model.a == 0
    # kernel convention e(alpha n): recovered T approximates -T0
    assert abs(model.T + 300.0) <= 20.0
    assert abs(model.T - 300.0) <= 5 * params.X**2 / params.H**2
    assert report.phase_fraction >= 0.9
    assert report.window_fraction_09 >= 0.9
    assert model.entry_products["vinogradov"]["err"] <= 1e-6


def test_verify_rejects_wrong_T(planted_run):
    params, g, res, model, _ = planted_run
    wrong = type(model)(a=model.a, Q=model.Q,
                        T=model.T + 10 * params.X**2 / params.H**2,
                        anchor=model.anchor, quality=model.quality,
                        entry_products=model.entry_products)
    report = verify_model(g, res.J1, wrong, params)
    assert report.phase_fraction <= 0.1


def test_verify_constant_function_perfect_window():
    params = PipelineParams(X=2 * 10**4, delta_exp=0.6, eta=1.0, epsilon=0.45)
    J1 = build_J1(one(), params)
    from freqlift.lifting import ModulationModel

    model = ModulationModel(a=0, Q=1, T=0.0, anchor=params.X, quality=1.0,
                            entry_products={"per_entry": {0: 1}})
    report = verify_model(one(), J1, model, params)
    assert all(c == pytest.approx(1.0) for c in report.window_correlations)


def test_recover_refuses_empty_links(planted_run):
    params, _, res, _, _ = planted_run
    with pytest.raises(NoAnchor):
        recover_modulation(res.top, [], params)


# -- prime products ------------------------------------------------------------------


def test_products_hand_case():
    assert count_close_products(10, 1, 10, 1, bound_const=2.0) == 8


def test_products_congruence_filter_diagonal_only():
    # Q = 5: products 11,13,17,19 pairwise incongruent within tolerance 2
    assert count_close_products(10, 1, 10, 5, bound_const=2.0) == 4


def test_products_symmetry_even_off_diagonal():
    from freqlift.primes import primes_in

    n_all = count_close_products(50, 2, 10, 1)
    n_diagonal = len(primes_in(50, 100)) ** 2
    assert (n_all - n_diagonal) % 2 == 0


def test_products_bound_shape():
    for Q in (1, 3):
        n = count_close_products(50, 2, 10, Q)
        phi_q = 1 if Q == 1 else 2
        bound = 50**4 / (10 * math.log(50) ** 4) * (1 / phi_q + 1 / math.log(10))
        assert n <= 5 * bound


def test_products_budget_guard():
    with pytest.raises(TooManyTuples):
        count_close_products(10**7, 2, 10**6, 1)


# -- exact zero-noise tower (relaxed guards) -------------------------------------------


def exact_sixth():
    return CirclePoint(Fraction(1, 6))


def build_exact_tower():
    """Planted exact instance: primes {7, 13, 19} (all = 1 mod 6), model
    a/Q = 1/6, T = 0, every frequency exactly 1/6, every position landing
    exactly on a bin midpoint through two lift steps."""
    params = PipelineParams(X=1000, delta_exp=2 / 3, eta=0.5, epsilon=0.5,
                            c_p2=0.5, density_floor=1e-4, c_base=1e-4)
    assert params.H == 100
    alpha = exact_sixth()
    primes = [7, 13, 19]
    ys = [1000, 21000]
    J0 = Configuration(level=0, lo=900.0, hi=22000.0, separation=20.0,
                       entries=tuple((y, alpha) for y in ys), c=0.5)
    xs = sorted(p * y for y in ys for p in primes)
    J1 = Configuration(level=1, lo=6990.0, hi=400000.0, separation=200.0,
                       entries=tuple((x, alpha) for x in xs), c=0.5)
    x_index = {x: i for i, (x, _) in enumerate(J1.entries)}
    links = []
    for yi, y in enumerate(ys):
        for p in primes:
            links.append(LinkRecord(p=p, source=yi, target=x_index[p * y],
                                    pos_residual=0.0, phase_residual=0.0))
    return params, J0, J1, links


def test_exact_zero_noise_tower_recovers_model_exactly():
    params, J0, J1, links = build_exact_tower()
    P = 10
    lvl2, links2 = lift_step(J0, J1, links, P, params)
    assert all(l.pos_residual == 0.0 and l.phase_residual == 0.0 for l in links2)
    assert all(alpha == exact_sixth() for _, alpha in lvl2.entries)
    assert [z for z, _ in lvl2.entries] == [91000, 133000, 247000,
                                            1911000, 2793000, 5187000]

    lvl3, links3 = lift_step(J1, lvl2, links2, P, params)
    assert all(l.pos_residual == 0.0 and l.phase_residual == 0.0 for l in links3)
    assert all(alpha == exact_sixth() for _, alpha in lvl3.entries)
    assert [z for z, _ in lvl3.entries] == [1729000, 36309000]

    composite = compose_links([links2, links3], [J1, lvl2, lvl3], H=float(params.H))
    assert composite
    for l in composite:
        assert l.pos_residual == 0.0
        assert l.phase_residual == 0.0

    from dataclasses import replace

    top = replace(lvl3, meta={"P": P, "kt": 2})
    model = recover_modulation(top, composite, params)
    assert (model.a, model.Q) == (1, 6)
    assert model.T == 0.0
    assert model.entry_products["vinogradov"]["err"] == 0.0
    assert model.entry_products["refined_drift_bound"] == 0.0

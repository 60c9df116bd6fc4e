"""Command-line entry point.

Subcommands: sieve, scan, peaks, glue-demo, products, pipeline, distance,
check.  A flat key=value config file (# comments) can pre-set any long
option; explicit flags win.  Exit codes: 0 success, 1 stage error (tagged
with the stage name), 2 configuration/usage errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import expsum, gluing, multfn, pretend, primes, records
from .circle import circ_dist, point, scale
from .errors import ConfigError, FreqliftError, StageError
from .lifting import (
    PipelineParams,
    RecursionResult,
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


def load_config(path: str) -> dict[str, str]:
    """Flat key = value lines; # starts a comment; unknown keys rejected
    later against the subcommand's options."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line without '=': {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(args: argparse.Namespace, sub_parser: argparse.ArgumentParser,
                  argv: list[str]) -> None:
    """Overlay config-file values onto args; explicit flags win."""
    if not getattr(args, "config", None):
        return
    cfg = load_config(args.config)
    actions = {a.dest: a for a in sub_parser._actions}
    explicit = set()
    for token in argv:
        if token.startswith("--"):
            explicit.add(token[2:].split("=", 1)[0].replace("-", "_"))
    for key, val in cfg.items():
        if key not in actions:
            raise ConfigError(f"unknown config key {key!r}")
        if key in explicit:
            continue
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            setattr(args, key, val.lower() in ("1", "true", "yes"))
        else:
            caster = action.type or str
            try:
                setattr(args, key, caster(val))
            except ValueError as e:
                raise ConfigError(f"config key {key!r}: {e}") from None


def _params_from_args(args) -> PipelineParams:
    kwargs = dict(
        X=args.X, delta_exp=args.delta, eta=args.eta,
        epsilon=args.epsilon, seed=args.seed,
    )
    if getattr(args, "workers", None):
        os.environ.setdefault("FREQLIFT_WORKERS", str(args.workers))
    if getattr(args, "max_lifts", None) is not None:
        kwargs["max_lifts"] = args.max_lifts
    params = PipelineParams(**kwargs)
    params.validate()
    return params


# -- subcommand implementations --------------------------------------------------


def cmd_sieve(args) -> int:
    if args.lo is None or args.hi is None:
        raise ConfigError("--lo and --hi are required (flag or config file)")
    for p in primes.primes_in(args.lo, args.hi):
        print(p)
    return 0


def cmd_scan(args) -> int:
    g = multfn.parse_spec(args.fn)
    X = args.X
    H = int(X**args.delta * (1 + 1e-12) + 1e-9)
    if H < 4 or X < 2 * H:
        raise ConfigError(f"window H = {H} too large or too small for X = {X}")
    rows = []
    for x in range(X, 2 * X - H + 1, H):
        alpha, mag = expsum.sup_expsum(g, x, H)
        rows.append((x, alpha.as_float(), mag / H))
    if args.out:
        records.write_csv(Path(args.out), ["x", "alpha", "ratio"], rows)
    else:
        print("x,alpha,ratio")
        for x, a, r in rows:
            print(f"{x},{a!r},{r!r}")
    return 0


def cmd_peaks(args) -> int:
    g = multfn.parse_spec(args.fn)
    rep = expsum.detect_peaks(g, args.x, args.H, args.tau, oversample=args.oversample)
    print(f"# interval ({rep.x}, {rep.x + rep.H}] threshold {rep.threshold} "
          f"separation {rep.separation!r}")
    print("alpha,magnitude")
    for alpha, mag in rep.peaks:
        print(f"{alpha.as_float()!r},{mag!r}")
    return 0


def cmd_glue_demo(args) -> int:
    alpha = point(args.planted_alpha)
    ps = [int(s) for s in args.primes.split(",")]
    import numpy as np

    rng = np.random.default_rng(args.seed)
    S = []
    for p in ps:
        noisy = (scale(p, alpha).as_float()
                 + float(rng.uniform(-args.noise, args.noise))) % 1.0
        S.append(gluing.PhasedPrime(p, point(noisy)))
    P = float(min(ps))
    got, matched = gluing.concentrate(S, eps=args.eps, P=P,
                                      pair_threshold=args.pair_threshold)
    print(f"planted alpha = {alpha.as_float()!r}")
    print(f"recovered alpha = {got.as_float()!r}")
    print(f"matched primes = {matched}")
    print("p,residual")
    for s in S:
        r = float(circ_dist(scale(s.p, got), s.alpha))
        print(f"{s.p},{r!r}")
    return 0


def cmd_products(args) -> int:
    n = count_close_products(args.P, args.k, args.N, args.Q, args.bound_const)
    phi_q = sum(1 for a in range(1, args.Q + 1) if math.gcd(a, args.Q) == 1) if args.Q > 1 else 1
    bound = (args.P ** (2 * args.k) / (args.N * math.log(args.P) ** (2 * args.k))
             * (1 / phi_q + 1 / math.log(args.N)))
    print(f"count = {n}")
    print(f"reference bound = {bound!r}")
    print(f"ratio = {n / bound!r}")
    return 0


def cmd_distance(args) -> int:
    g = multfn.parse_spec(args.fn)
    res = pretend.pretentious_distance(g, args.T, args.Q)
    print(f"value = {res.value!r}")
    print(f"value_squared = {res.value_squared!r}")
    print(f"argmin_t = {res.argmin_t!r}")
    print(f"argmin_character = q={res.argmin_character[0]},k={res.argmin_character[1]}")
    print(f"prime_cutoff = {res.prime_cutoff}")
    print(f"t_grid_step = {res.t_grid_step!r}")
    if args.terms:
        import numpy as np

        ps = np.asarray(primes.primes_in(2, int(args.T)), dtype=np.int64)
        chi = multfn.build_character(*res.argmin_character)
        gw = multfn.prime_values(g, ps) * chi.values_for(ps)
        vals = (1.0 - (gw * np.exp(1j * res.argmin_t * np.log(ps.astype(float)))).real) / ps
        print("p,term")
        for p, v in zip(ps, vals):
            print(f"{p},{v!r}")
    return 0


def _pipeline_stages(g, params, outdir: Path, resume: bool):
    """Run (or reload) each stage, writing files as we go."""
    import json

    if not resume:
        (outdir / "params.json").write_text(json.dumps(
            {"schema": "freqlift/params", "version": records.SCHEMA_VERSION,
             "fn": multfn.format_spec(g), "X": params.X, "delta": params.delta_exp,
             "eta": params.eta, "epsilon": params.epsilon, "seed": params.seed,
             "max_lifts": params.max_lifts}, sort_keys=True) + "\n")

    def have(name):
        return resume and (outdir / name).exists()

    # stage: base configuration
    if have("config_j1.jsonl"):
        J1 = records.read_configuration(outdir / "config_j1.jsonl")
    else:
        J1 = build_J1(g, params)
        records.write_configuration(outdir / "config_j1.jsonl", J1)
    if not J1.meta.get("gate", False):
        raise StageError("j1", ConfigError(
            f"condition-(A) gate FAILED (mean ratio {J1.meta.get('mean_ratio', 0):.4f} "
            f"< eta = {params.eta})"))

    # stage: prime scale
    if have("scale.json"):
        doc = json.loads((outdir / "scale.json").read_text())
        P = doc["P"]
        qualified = [(q[0], tuple(q[1])) for q in doc["qualified"]]
    else:
        P, qualified = select_prime_scale(g, J1, params)
        (outdir / "scale.json").write_text(json.dumps(
            {"schema": "freqlift/scale", "version": records.SCHEMA_VERSION,
             "P": P, "qualified": [[i, list(ps)] for i, ps in qualified]},
            sort_keys=True) + "\n")

    # stage: level-0 configuration
    if have("config_level0.jsonl") and have("links_1_0.jsonl"):
        J0 = records.read_configuration(outdir / "config_level0.jsonl")
        links10 = records.read_links(outdir / "links_1_0.jsonl")
    else:
        J0, links10 = build_J0(g, J1, P, qualified, params)
        records.write_configuration(outdir / "config_level0.jsonl", J0)
        records.write_links(outdir / "links_1_0.jsonl", links10)

    kt = lift_count(P, params.X, params.H)
    if params.max_lifts is not None:
        kt = min(kt, params.max_lifts)
    configs = [J0, J1]
    linksets = [links10]
    low, high, links = J0, J1, links10
    for step in range(kt):
        lvl = high.level + 1
        cfg_name = f"config_level{lvl}.jsonl"
        lnk_name = f"links_{lvl}_{high.level}.jsonl"
        if have(cfg_name) and have(lnk_name):
            new = records.read_configuration(outdir / cfg_name)
            new_links = records.read_links(outdir / lnk_name)
        else:
            try:
                new, new_links = lift_step(low, high, links, P, params)
            except FreqliftError as e:
                raise StageError(f"lift{step + 1}", e) from e
            records.write_configuration(outdir / cfg_name, new)
            records.write_links(outdir / lnk_name, new_links)
        configs.append(new)
        linksets.append(new_links)
        low, high, links = high, new, new_links

    composite = compose_links(linksets[1:], configs[1:], float(params.H))
    records.write_links(outdir / "links_composite.jsonl", composite)
    from dataclasses import replace

    top = replace(configs[-1], meta={**configs[-1].meta, "P": P, "kt": kt})
    return RecursionResult(top=top, composite_links=tuple(composite), kt=kt, P=P,
                           configs=tuple(configs),
                           linksets=tuple(tuple(ls) for ls in linksets), J1=J1)


def _finish_pipeline(g, params, outdir: Path, res: RecursionResult) -> None:
    model = recover_modulation(res.top, res.composite_links, params)
    report = verify_model(g, res.J1, model, params)
    model = type(model)(a=model.a, Q=model.Q, T=model.T, anchor=model.anchor,
                        quality=report.phase_fraction,
                        entry_products=model.entry_products)
    records.write_model(outdir / "model.json", model, extra={
        "P": res.P, "kt": res.kt, "constants": params.constants_ledger(),
        "params": {"X": params.X, "delta": params.delta_exp, "eta": params.eta,
                   "epsilon": params.epsilon, "seed": params.seed},
    })
    rows = [("phase_fraction", report.phase_fraction),
            ("phase_checked", report.phase_checked),
            ("window_fraction_09", report.window_fraction_09),
            ("h_star", report.h_star)]
    rows += [(f"window_corr_{i}", c) for i, c in enumerate(report.window_correlations)]
    records.write_csv(outdir / "report.csv", ["metric", "value"], rows)


def cmd_pipeline(args) -> int:
    import json

    if args.resume:
        outdir = Path(args.resume)
        if not outdir.is_dir():
            raise ConfigError(f"resume directory {outdir} does not exist")
        saved = json.loads((outdir / "params.json").read_text())
        g = multfn.parse_spec(saved["fn"])
        kwargs = dict(X=saved["X"], delta_exp=saved["delta"], eta=saved["eta"],
                      epsilon=saved["epsilon"], seed=saved["seed"])
        if saved.get("max_lifts") is not None:
            kwargs["max_lifts"] = saved["max_lifts"]
        params = PipelineParams(**kwargs)
        params.validate()
        resume = True
    else:
        if not args.out:
            raise ConfigError("--out (or --resume) is required")
        if args.fn is None or args.X is None or args.delta is None:
            raise ConfigError("--fn, --X and --delta are required for a fresh run")
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        g = multfn.parse_spec(args.fn)
        params = _params_from_args(args)
        resume = False
    res = _pipeline_stages(g, params, outdir, resume)
    _finish_pipeline(g, params, outdir, res)
    print(f"pipeline complete: {outdir}/model.json")
    return 0


def cmd_check(args) -> int:
    g = multfn.parse_spec(args.fn)
    params = _params_from_args(args)
    outdir = Path(args.out) if args.out else None
    hints: tuple[float, ...] = ()
    model = None
    gate_precheck = build_J1(g, params).meta.get("gate", False)
    if gate_precheck:
        if outdir:
            outdir.mkdir(parents=True, exist_ok=True)
            res = _pipeline_stages(g, params, outdir, resume=False)
        else:
            res = run_recursion(g, params)
        model = recover_modulation(res.top, res.composite_links, params)
        report = verify_model(g, res.J1, model, params)
        if outdir:
            final = type(model)(a=model.a, Q=model.Q, T=model.T, anchor=model.anchor,
                                quality=report.phase_fraction,
                                entry_products=model.entry_products)
            records.write_model(outdir / "model.json", final, extra={
                "P": res.P, "kt": res.kt, "constants": params.constants_ledger()})
        hints = (2 * math.pi * model.T,)
    gate, dist, consistent = pretend.theorem1_check(g, params, args.C, t_hints=hints)
    print(f"gate = {'PASSED' if gate else 'FAILED'}")
    if model is not None:
        print(f"model: a={model.a} Q={model.Q} T={model.T!r}")
    print(f"distance = {dist.value!r} at t = {dist.argmin_t!r}, "
          f"character q={dist.argmin_character[0]},k={dist.argmin_character[1]}")
    print(f"consistent = {consistent}")
    return 0 if consistent else 1


# -- parser ----------------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    ap = argparse.ArgumentParser(prog="freqlift", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub_map: dict[str, argparse.ArgumentParser] = {}
    _orig_add = sub.add_parser

    def add_parser(name, **kw):
        p = _orig_add(name, **kw)
        sub_map[name] = p
        return p

    sub.add_parser = add_parser

    def add_common(p, with_fn=True):
        if with_fn:
            p.add_argument("--fn", required=True, help="function spec, e.g. liouville, arch:T=300")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sieve", help="emit primes in [lo, hi], one per line")
    p.add_argument("--lo", type=int)
    p.add_argument("--hi", type=int)
    p.add_argument("--config", help="flat key=value config file")
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("scan", help="sup exponential sum per H-separated window")
    add_common(p)
    p.add_argument("--X", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.45)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("peaks", help="tau-large frequencies of one window")
    add_common(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--H", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--oversample", type=int, default=expsum.DEFAULT_OVERSAMPLE)
    p.set_defaults(func=cmd_peaks)

    p = sub.add_parser("glue-demo", help="concentrate planted noisy frequencies")
    p.add_argument("--planted-alpha", dest="planted_alpha", type=float, required=True)
    p.add_argument("--primes", required=True, help="comma-separated primes")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--pair-threshold", dest="pair_threshold", type=float, default=0.2)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_glue_demo)

    p = sub.add_parser("products", help="count near-equal congruent prime products")
    p.add_argument("--P", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--Q", type=int, default=1)
    p.add_argument("--bound-const", dest="bound_const", type=float, default=1.0)
    p.add_argument("--config", help="flat key=value config file")
    p.set_defaults(func=cmd_products)

    p = sub.add_parser("pipeline", help="full lifting pipeline with on-disk stages")
    p.add_argument("--fn", help="function spec, e.g. liouville, arch:T=300")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--X", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.45)
    p.add_argument("--out", help="output directory")
    p.add_argument("--resume", help="resume from a previous output directory")
    p.add_argument("--max-lifts", dest="max_lifts", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("distance", help="pretentious distance of a function")
    add_common(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--terms", action="store_true", help="print the per-prime terms")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("check", help="gate + pipeline + distance consistency check")
    add_common(p)
    p.add_argument("--X", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.45)
    p.add_argument("--C", type=float, default=5.0)
    p.add_argument("--out", help="optional output directory for pipeline artifacts")
    p.add_argument("--max-lifts", dest="max_lifts", type=int, default=None)
    p.set_defaults(func=cmd_check)

    return ap, sub_map


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    ap, sub_map = build_parser()
    try:
        args = ap.parse_args(argv)
        _apply_config(args, sub_map[args.command], list(argv))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except StageError as e:
        print(f"error {e}", file=sys.stderr)
        return 1
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FreqliftError as e:
        print(f"error [{args.command}] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

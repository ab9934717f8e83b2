"""Command-line front end.

Exit codes: 0 = property holds / no finding, 1 = finding (violation,
non-closeness, falsification), 2 = error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as C
from .conformance import ClosenessParams, check
from .degree import (
    DegreeError,
    binary_search_epsilon,
    binary_search_tau,
    initial_bracket,
    initial_bracket_tau,
)
from .falsify import FalsificationError, falsify, summarize
from .monitor import FormulaSyntaxError, Kind, parse, robustness
from .monitor.signal import Signal
from .reports import (
    bench_table,
    degree_timing,
    falsification_timing,
    fmt,
    write_bench,
    write_degree,
    write_falsification,
    write_json,
    write_manifest,
)
from .systems import AutomatonSystem, SimulationError, make_mutant, mutation_from_dict
from .tss import TraceError, parallel_concat, read_csv

EXIT_PASS, EXIT_FINDING, EXIT_ERROR = 0, 1, 2


# ----------------------------------------------------------------- monitor


def cmd_monitor(args) -> int:
    phi = parse(args.formula)
    traces = [read_csv(p) for p in args.traces]
    if len(traces) == 1:
        trace = traces[0]
    else:
        a, b = traces
        T = args.T if args.T is not None else float(max(a.times[-1], b.times[-1]))
        J = args.J if args.J is not None else int(max(a.jumps.max(), b.jumps.max()))
        trace = Signal.from_parallel(parallel_concat(a, b, T, J))
    r = robustness(phi, trace, args.t, kind=Kind(args.kind), norm=args.norm)
    print(fmt(r))
    return EXIT_PASS if r >= 0 else EXIT_FINDING


# ------------------------------------------------------------------- check


def cmd_check(args) -> int:
    a, b = read_csv(args.trace_a), read_csv(args.trace_b)
    T = args.T if args.T is not None else float(max(a.times[-1], b.times[-1]))
    J = args.J if args.J is not None else int(max(a.jumps.max(), b.jumps.max()))
    verdict = check(a, b, ClosenessParams(T, J, args.tau, args.eps), Kind(args.kind), norm=args.norm)
    if verdict.close:
        print("CLOSE")
    else:
        w = verdict.witness
        print(f"NOT CLOSE, witness i={w.index} (trace {w.side}, t={fmt(w.t)}, j={w.j})")
    print(f"robustness {fmt(verdict.robustness)}")
    return EXIT_PASS if verdict.close else EXIT_FINDING


# ---------------------------------------------------------------- campaigns


def _overrides(args) -> dict:
    return {"seed": args.seed, "budget": args.budget, "output": args.output}


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _setup(loaded: C.Loaded):
    cfg, base = loaded.cfg, loaded.base_dir
    model = C.build_system(cfg["systems"]["model"], base)
    impl = C.build_system(cfg["systems"]["impl"], base)
    space = C.build_space(cfg["space"], cfg["systems"]["model"], base)
    return cfg, model, impl, space, C.build_optimizer(cfg["optimizer"])


def _announce_seed(loaded: C.Loaded):
    if loaded.seed_generated:
        print(f"seed {loaded.cfg['seed']} (generated)", file=sys.stderr)


def cmd_falsify(args) -> int:
    loaded = C.load(args.config, overrides=_overrides(args))
    _announce_seed(loaded)
    cfg, model, impl, space, opt = _setup(loaded)
    objective = C.build_objective(cfg["objective"], space.horizon)
    out = _outdir(cfg)
    write_manifest(out, cfg, C.config_hash(cfg), "falsify")
    res = falsify(model, impl, objective, space, opt, cfg["budget"], cfg["seed"])
    write_falsification(out, res)
    write_json(out / "timing.json", falsification_timing(res))
    state = "FALSIFIED" if res.falsified else "NOT FALSIFIED"
    print(f"{state} after {res.tests_run} tests, best robustness {fmt(res.best_robustness)}")
    print(f"reports in {out}")
    return EXIT_FINDING if res.falsified else EXIT_PASS


def cmd_degree(args) -> int:
    loaded = C.load(args.config, overrides=_overrides(args))
    _announce_seed(loaded)
    cfg, model, impl, space, opt = _setup(loaded)
    d = C.merge(C.DEFAULTS["degree"], cfg.get("degree", {}))
    obj = cfg["objective"]
    kind = Kind(obj["kind"])
    if d["parameter"] == "eps":
        fixed = d.get("fixed", obj.get("tau"))
        search, bracket = binary_search_epsilon, initial_bracket
    else:
        fixed = d.get("fixed", obj.get("eps"))
        search, bracket = binary_search_tau, initial_bracket_tau
    if fixed is None:
        raise C.ConfigError(f"degree search over {d['parameter']} needs degree.fixed")
    out = _outdir(cfg)
    write_manifest(out, cfg, C.config_hash(cfg), "degree")
    budget, seed = cfg["budget"], cfg["seed"]
    blog = []
    if "upper" in d:
        upper = d["upper"]
        check_upper = True
    else:
        upper, blog = bracket(model, impl, fixed, d["start"], space, opt, budget, seed,
                              max_doublings=d["max_doublings"], kind=kind)
        check_upper = False
    res = search(model, impl, fixed, d["K"], upper, space, opt, budget, seed + 1000,
                 kind=kind, check_upper=check_upper, **{f"{d['parameter']}_l": d["lower"]})
    write_degree(out, res, blog)
    write_json(out / "timing.json", degree_timing(res, blog))
    lo, hi = res.interval
    print(f"{d['parameter']} in [{fmt(lo)}, {fmt(hi)}]")
    print(f"reports in {out}")
    return EXIT_PASS


def cmd_bench(args) -> int:
    loaded = C.load(args.config, campaign=True, overrides={**_overrides(args), "runs": args.runs})
    _announce_seed(loaded)
    cfg, base_dir = loaded.cfg, loaded.base_dir
    base_spec = cfg["base"]
    if base_spec["type"] != "automaton":
        raise C.ConfigError("bench campaigns need an automaton base system")
    base_aut = C.build_automaton(base_spec, base_dir)
    model = C.build_system(base_spec, base_dir)
    space = C.build_space(cfg["space"], base_spec, base_dir)
    opt = C.build_optimizer(cfg["optimizer"])
    objective = C.build_objective(cfg["objective"], space.horizon)
    out = _outdir(cfg)
    write_manifest(out, cfg, C.config_hash(cfg), "bench")
    rows, timing = [], {}
    for m in cfg["mutants"]:
        mutation = mutation_from_dict(m["mutation"])
        impl = AutomatonSystem(make_mutant(base_aut, mutation), base_spec["dt"], base_spec["method"],
                               base_spec.get("projection"))
        results = []
        for r in range(cfg["runs"]):
            results.append(falsify(model, impl, objective, space, opt, cfg["budget"],
                                   cfg["seed"] + r))
        s = summarize(results)
        rows.append({"mutant": m["name"], "magnitude": mutation.magnitude, **s})
        timing[m["name"]] = [r.wall_time for r in results]
        print(f"{m['name']}: {s['falsified']}/{s['runs']} falsified", file=sys.stderr)
    write_bench(out, rows)
    write_json(out / "timing.json", timing)
    print(bench_table(rows))
    return EXIT_PASS


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpsconf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("monitor", help="robustness of an MTL formula over a trace")
    m.add_argument("formula")
    m.add_argument("traces", nargs="+", metavar="trace.csv",
                   help="one trace, or model and implementation traces (channels yM, yI)")
    m.add_argument("--kind", choices=[k.value for k in Kind], default="spatial")
    m.add_argument("--t", type=float, default=None, help="evaluation time (default: first sample)")
    m.add_argument("--T", type=float, default=None)
    m.add_argument("--J", type=int, default=None)
    m.add_argument("--norm", type=float, default=2)
    m.set_defaults(func=cmd_monitor)

    c = sub.add_parser("check", help="(T, J, (tau, eps))-closeness of two traces")
    c.add_argument("trace_a")
    c.add_argument("trace_b")
    c.add_argument("--tau", type=float, required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--T", type=float, default=None, help="horizon (default: last timestamp)")
    c.add_argument("--J", type=int, default=None, help="jump bound (default: largest j)")
    c.add_argument("--kind", choices=[k.value for k in Kind], default="spatial")
    c.add_argument("--norm", type=float, default=2)
    c.set_defaults(func=cmd_check)

    for name, func, helptext in (
        ("falsify", cmd_falsify, "search for a violating test"),
        ("degree", cmd_degree, "bracket the conformance degree"),
        ("bench", cmd_bench, "mutant campaign with summary statistics"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config", help="JSON config file (or a run manifest)")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--budget", type=int, default=None)
        s.add_argument("--output", default=None)
        if name == "bench":
            s.add_argument("--runs", type=int, default=None)
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (C.ConfigError, TraceError, FormulaSyntaxError, SimulationError, FalsificationError,
            DegreeError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

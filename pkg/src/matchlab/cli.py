"""Command-line surface: generation, LP, pruning, simulation, benchmarks.

Every run prints a report that embeds the tool version, the fully resolved
configuration, the master seed, and the wall-clock runtime.  With the same
seed, report bodies are byte-identical up to the runtime field.  Output is a
human-readable summary by default; ``--format json`` / ``--format csv``
switch to machine form, ``--out`` redirects to a file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .bounds import (
    brute_force_opt_problem,
    h1,
    h2_grid,
    h2_min,
    h3_grid,
    h3_grid_check,
    h4_grid,
    h4_range_check,
    solve_delta_bound,
)
from .errors import MatchlabError, ValidationError
from .graphs import (
    complete_graph,
    gen_complete_uniform,
    gen_fig1_regular,
    gen_fig2_hardness,
    gen_random,
    graph_to_dict,
    read_instance,
    write_instance,
)
from .lp import LpSolution, solve_lp
from .offline import competitive_report, exact_expected_opt, mc_opt, mc_ratio_paired
from .pruning import batch_order, prune, pruned_from_dict, pruned_to_dict, regular_xy, unpruned
from .simulate import (
    estimate_event_terms,
    mc_greedy,
    order_as_listed,
    order_random,
    order_red_first,
    order_type1_first,
    q_values,
)

ENV_SEED = "MATCHLAB_SEED"

TABLE1_REFERENCE = {
    3: 0.53132, 10: 0.50862, 30: 0.50281, 100: 0.50084,
    300: 0.50029, 1000: 0.50009, 3000: 0.50002, 10000: 0.49997,
}

TABLE1_ROWS = {
    "smoke": [(3, 20_000), (10, 10_000)],
    "desk": [(3, 10_000_000), (10, 1_000_000), (30, 1_000_000), (100, 100_000)],
    "full": [(3, 30_000_000), (10, 3_000_000), (30, 3_000_000), (100, 300_000), (300, 30_000)],
}

SCALE_TRIALS = {"smoke": 500, "desk": 10_000, "full": 100_000}


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"{ENV_SEED}={env!r} is not an integer") from None
    return 0


def _emit(args, command: str, config: dict, seed: int, result: dict, started: float) -> None:
    report = {
        "tool": "matchlab",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "runtime_sec": round(time.perf_counter() - started, 6),
        "result": result,
    }
    fmt = getattr(args, "format", "human")
    if fmt == "json":
        text = json.dumps(report, sort_keys=True, indent=1) + "\n"
    elif fmt == "csv":
        text = _to_csv(result)
    else:
        text = _to_human(report)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _to_csv(result: dict) -> str:
    buf = io.StringIO()
    rows = result.get("rows")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    else:
        flat = _flatten(result)
        writer = csv.writer(buf)
        writer.writerow(flat.keys())
        writer.writerow(flat.values())
    return buf.getvalue()


def _flatten(doc: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        elif isinstance(value, list):
            out[name] = json.dumps(value)
        else:
            out[name] = value
    return out


def _to_human(report: dict) -> str:
    lines = [
        f"matchlab {report['version']} :: {report['command']}"
        f" (seed {report['seed']}, {report['runtime_sec']}s)"
    ]
    cfg = ", ".join(f"{k}={v}" for k, v in sorted(report["config"].items()))
    lines.append(f"config: {cfg}")
    result = report["result"]
    rows = result.get("rows") if isinstance(result, dict) else None
    for key, value in result.items():
        if key == "rows":
            continue
        lines.append(f"{key}: {value}")
    if rows:
        cols = list(rows[0].keys())
        widths = [max(len(str(c)), max(len(str(r[c])) for r in rows)) for c in cols]
        lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
        for r in rows:
            lines.append("  ".join(str(r[c]).ljust(w) for c, w in zip(cols, widths)))
    return "\n".join(lines) + "\n"


def _load_graph_arg(args):
    return read_instance(args.instance)


def _resolve_arrival(spec: str, g, seed: int):
    if spec == "listed":
        return order_as_listed(g.m)
    if spec == "random":
        return "random"
    if spec == "batched":
        return batch_order(g, order_as_listed(g.m))
    if spec == "red-first":
        return order_red_first(g)
    if spec == "type1-first":
        return order_type1_first(g)
    if spec == "random-fixed":
        return order_random(g.m, seed)
    raise ValidationError(f"unknown order spec {spec!r}")


def _mc_dict(est) -> dict:
    return {"mean": est.mean, "stderr": est.stderr, "trials": est.trials, "seed": est.seed}


def cmd_gen(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    if args.kind == "fig1":
        g = gen_fig1_regular(args.n, args.eps)
    elif args.kind == "fig2":
        g = gen_fig2_hardness(args.n)
    elif args.kind == "complete":
        g = gen_complete_uniform(args.n)
    elif args.kind == "random":
        g = gen_random(args.n_left, args.n_right, args.m, args.p_min, args.p_max, seed)
    else:
        raise ValidationError(f"unknown kind {args.kind!r}")
    config = {
        "kind": args.kind, "n": args.n, "eps": args.eps, "n_left": args.n_left,
        "n_right": args.n_right, "m": args.m, "p_min": args.p_min, "p_max": args.p_max,
        "instance_out": args.instance_out,
    }
    result = {"n_left": g.n_left, "n_right": g.n_right, "m": g.m}
    if args.instance_out:
        write_instance(g, args.instance_out)
        result["path"] = args.instance_out
    else:
        result["instance"] = graph_to_dict(g)
    _emit(args, "gen", config, seed, result, started)


def cmd_lp(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    g = _load_graph_arg(args)
    sol = solve_lp(g, tol=args.tol)
    config = {"instance": args.instance, "tol": args.tol}
    result = {
        "objective": sol.objective,
        "outer_iterations": sol.outer_iterations,
        "n_constraints": len(sol.generated_constraints),
        "solution": sol.to_dict(),
    }
    _emit(args, "lp", config, seed, result, started)


def cmd_prune(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    g = _load_graph_arg(args)
    if args.regular:
        x, _ = regular_xy(g, args.c)
    elif args.lp:
        with open(args.lp, encoding="utf-8") as fh:
            doc = json.load(fh)
        x = np.asarray(LpSolution.from_dict(doc).x, dtype=np.float64)
    else:
        x = solve_lp(g).x
    pg = prune(g, x, args.c)
    config = {"instance": args.instance, "lp": args.lp, "regular": args.regular, "c": args.c,
              "pruned_out": args.pruned_out}
    result = {
        "c": args.c,
        "total_x": float(np.sum(pg.x)),
        "total_y": float(np.sum(pg.y)),
        "mean_drop": float(np.mean(pg.drop_probabilities())) if pg.m else 0.0,
    }
    if args.pruned_out:
        with open(args.pruned_out, "w", encoding="utf-8") as fh:
            json.dump(pruned_to_dict(pg), fh, indent=1)
        result["path"] = args.pruned_out
    else:
        result["pruned"] = pruned_to_dict(pg)
    _emit(args, "prune", config, seed, result, started)


def _load_pruned_or_instance(args):
    if getattr(args, "pruned", None):
        with open(args.pruned, encoding="utf-8") as fh:
            return pruned_from_dict(json.load(fh))
    g = read_instance(args.instance)
    return unpruned(g, getattr(args, "c", 1.7) or 1.7)


def cmd_simulate(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    pg = _load_pruned_or_instance(args)
    order = _resolve_arrival(args.order, pg.base, seed)
    config = {
        "pruned": getattr(args, "pruned", None), "instance": getattr(args, "instance", None),
        "order": args.order, "trials": args.trials, "threads": args.threads,
        "events": args.events, "coeff_c": args.coeff_c,
    }
    if args.events:
        if order == "random":
            raise ValidationError("event estimation needs a fixed order; use --order listed/batched/random-fixed")
        est = estimate_event_terms(pg, order, args.trials, seed,
                                   coeff_c=args.coeff_c, threads=args.threads)
        result = {
            "mean": est.alg.mean,
            "stderr": est.alg.stderr,
            "trials": est.alg.trials,
            "seed": seed,
            "combined_bound": est.combined_bound,
            "bound_gap_mean": est.bound_gap_mean,
            "bound_gap_stderr": est.bound_gap_stderr,
            "terms": {
                "total_term_I": est.total_term_I,
                "total_term_II": est.total_term_II,
                "coefficient": est.coefficient,
            },
            "rows": _event_rows(pg, est),
        }
    else:
        res = mc_greedy(pg, order, args.trials, seed, threads=args.threads)
        result = {
            "mean": res.estimate.mean,
            "stderr": res.estimate.stderr,
            "trials": res.estimate.trials,
            "seed": seed,
            "per_vertex": {
                "left": [round(float(v), 9) for v in res.left_match_freq],
                "right": [round(float(v), 9) for v in res.right_match_freq],
            },
        }
    _emit(args, "simulate", config, seed, result, started)


def _event_rows(pg, est) -> list[dict]:
    rows = []
    for e in pg.base.edges:
        rows.append({
            "id": e.id, "u": e.u, "v": e.v, "p": e.p,
            "y": float(pg.y[e.id]), "x": float(pg.x[e.id]),
            "q": float(est.q[e.id]),
            "term_I": float(est.term_I[e.id]),
            "term_II": float(est.term_II[e.id]),
        })
    return rows


def cmd_opt(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    g = _load_graph_arg(args)
    config = {"instance": args.instance, "trials": args.trials, "exact": args.exact,
              "threads": args.threads}
    if args.exact:
        value = exact_expected_opt(g)
        result = {"exact": True, "mean": value, "stderr": 0.0, "trials": 0, "seed": seed}
    else:
        est = mc_opt(g, args.trials, seed, threads=args.threads)
        result = {"exact": False, **_mc_dict(est)}
    _emit(args, "opt", config, seed, result, started)


def cmd_ratio(args) -> None:
    """End-to-end pruned-greedy run: LP, prune, simulate, benchmark, ratio."""
    started = time.perf_counter()
    seed = _resolve_seed(args)
    g = _load_graph_arg(args)
    sol = solve_lp(g)
    pg = prune(g, sol.x, args.c)
    order = _resolve_arrival(args.order, g, seed)
    config = {"instance": args.instance, "c": args.c, "trials": args.trials,
              "order": args.order, "threads": args.threads, "share": args.share}
    if args.share:
        paired = mc_ratio_paired(pg, order, args.trials, seed, threads=args.threads)
        report = paired.report
        half_violations = paired.half_violations
    else:
        alg = mc_greedy(pg, order, args.trials, seed, threads=args.threads).estimate
        opt = mc_opt(g, args.trials, seed + 1, threads=args.threads)
        report = competitive_report(alg, opt)
        half_violations = None
    result = {
        "lp_objective": sol.objective,
        "alg": _mc_dict(report.alg),
        "opt": _mc_dict(report.opt),
        "ratio": report.ratio,
        "ratio_ci": list(report.ratio_ci),
    }
    if half_violations is not None:
        result["half_guarantee_violations"] = half_violations
    _emit(args, "ratio", config, seed, result, started)


def cmd_bounds(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    config = {"function": args.function, "c": args.c, "grid": args.grid,
              "coeff": args.coeff, "k": args.k, "grid_out": args.grid_out}
    fn = args.function
    if fn == "h1":
        value = h1(args.c, quad_points=args.grid or 64)
        result = {"value": value.value, "quadrature_error": value.error}
    elif fn == "h2":
        report = h2_min(args.c, grid_resolution=args.grid or 400)
        result = report.to_dict()
        if args.grid_out:
            _write_grid_csv(args.grid_out, ("s", "t", "value"), h2_grid(args.c))
    elif fn == "h3":
        report = h3_grid_check(args.c, nx=args.grid or 200, nq=args.grid or 200)
        result = report.to_dict()
        if args.grid_out:
            _write_grid_csv(args.grid_out, ("x", "q", "value"), h3_grid(args.c))
    elif fn == "h4":
        report = h4_range_check(args.c, n_points=args.grid or 10_000)
        result = report.to_dict()
        if args.grid_out:
            _write_grid_csv(args.grid_out, ("delta", "value"), h4_grid(args.c))
    elif fn == "delta":
        bound = solve_delta_bound(args.c, args.coeff)
        result = {"delta_max": bound.delta_max, "ratio": bound.ratio,
                  "linear_budget": bound.linear_budget,
                  "quad_coefficient": bound.quad_coefficient}
    elif fn == "opt_problem":
        report = brute_force_opt_problem(args.k, args.c, grid_resolution=args.grid or 12)
        result = report.to_dict()
    else:
        raise ValidationError(f"unknown bound function {fn!r}")
    _emit(args, "bounds", config, seed, result, started)


def _write_grid_csv(path: str, header, columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([float(v) for v in row])


def cmd_reproduce(args) -> None:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    config = {"target": args.target, "scale": args.scale, "n": args.n,
              "trials": args.trials, "threads": args.threads}
    if args.target == "table1":
        result = _reproduce_table1(args, seed)
    elif args.target == "fig1":
        result = _reproduce_fig1(args, seed)
    elif args.target == "fig2":
        result = _reproduce_fig2(args, seed)
    elif args.target == "bounds":
        result = _reproduce_bounds()
    else:
        raise ValidationError(f"unknown target {args.target!r}")
    _emit(args, "reproduce", config, seed, result, started)


def _reproduce_table1(args, seed: int) -> dict:
    """Greedy on K_{n,n} pruned with c=1 (y = 1 - e^{-1/n}), random order."""
    rows = []
    plan = TABLE1_ROWS[args.scale]
    if args.n:
        trials = args.trials or SCALE_TRIALS[args.scale]
        plan = [(args.n, trials)]
    for n, trials in plan:
        g = complete_graph(n, 1.0)
        pg = prune(g, np.full(g.m, 1.0 / n), 1.0)
        res = mc_greedy(pg, "random", trials, seed, threads=args.threads)
        rows.append({
            "n": n,
            "trials": trials,
            "alg_per_n": round(res.estimate.mean / n, 6),
            "stderr_per_n": round(res.estimate.stderr / n, 6),
            "reference": TABLE1_REFERENCE.get(n),
        })
    return {"rows": rows}


def _reproduce_fig1(args, seed: int) -> dict:
    n = args.n or 50
    eps = 1e-3
    trials = args.trials or SCALE_TRIALS[args.scale]
    g = gen_fig1_regular(n, eps)
    order = order_red_first(g)
    alg = mc_greedy(unpruned(g), order, trials, seed, threads=args.threads).estimate
    opt = mc_opt(g, trials, seed, threads=args.threads)
    report = competitive_report(alg, opt)
    return {
        "n": n, "eps": eps,
        "alg": _mc_dict(alg), "opt": _mc_dict(opt),
        "ratio": report.ratio, "ratio_ci": list(report.ratio_ci),
        "reference_ratio": (n + 1) / (2 * n + 1),
    }


def _reproduce_fig2(args, seed: int) -> dict:
    n = args.n or 200
    trials = args.trials or SCALE_TRIALS[args.scale]
    g = gen_fig2_hardness(n)
    order = order_type1_first(g)
    alg = mc_greedy(unpruned(g), order, trials, seed, threads=args.threads).estimate
    opt = mc_opt(g, trials, seed, threads=args.threads)
    report = competitive_report(alg, opt)
    return {
        "n": n,
        "alg_per_n": alg.mean / n, "opt_per_n": opt.mean / n,
        "alg": _mc_dict(alg), "opt": _mc_dict(opt),
        "ratio": report.ratio, "ratio_ci": list(report.ratio_ci),
        "reference_ratio": 2.0 / 3.0,
    }


def _reproduce_bounds() -> dict:
    v2 = h1(2.0)
    v1 = h1(1.0)
    rep2 = h2_min(1.7)
    rep3 = h3_grid_check(2.0)
    rep4 = h4_range_check(2.0)
    delta = solve_delta_bound(2.0, 1.98)
    return {
        "h1_at_2": v2.value,
        "h1_at_1": v1.value,
        "h2_min": rep2.min_value,
        "h2_argmin": list(rep2.argmin),
        "h3_min": rep3.min_value,
        "h3_boundary_min": rep3.extras["boundary_min"],
        "h4_min": rep4.min_value,
        "h4_at_zero": rep4.extras["value_at_zero"],
        "delta_max": delta.delta_max,
        "ratio": delta.ratio,
        "checks": {
            "h1_at_2_ge_0.532": v2.value >= 0.532,
            "h1_at_1_near_0.459": 0.457 <= v1.value <= 0.461,
            "h2_min_above_0.503": 0.503 < rep2.min_value <= 0.52,
            "h3_nonnegative": rep3.min_value >= -1e-10,
            "h4_nonnegative": rep4.min_value >= -1e-10,
            "delta_max_le_0.312": delta.delta_max <= 0.312,
            "ratio_ge_0.552": delta.ratio >= 0.552,
        },
    }


def _add_common(parser, *, seed=True, fmt=True, out=True, threads=False):
    if seed:
        parser.add_argument("--seed", type=int, default=None,
                            help=f"master seed (falls back to ${ENV_SEED}, then 0)")
    if fmt:
        parser.add_argument("--format", choices=("human", "json", "csv"), default="human")
    if out:
        parser.add_argument("--out", default=None, help="write the report to this path")
    if threads:
        parser.add_argument("--threads", type=int, default=1,
                            help="worker threads (results are independent of this)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchlab",
        description="Online stochastic bipartite matching laboratory",
    )
    parser.add_argument("--version", action="version", version=f"matchlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--kind", choices=("fig1", "fig2", "complete", "random"), required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--n-left", type=int, default=None)
    p.add_argument("--n-right", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--p-min", type=float, default=0.0)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--instance-out", default=None, help="write the instance JSON here")
    _add_common(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("lp", help="solve the subset-constraint LP")
    p.add_argument("--instance", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    _add_common(p)
    p.set_defaults(fn=cmd_lp)

    p = sub.add_parser("prune", help="prune probabilities from LP values")
    p.add_argument("--instance", required=True)
    p.add_argument("--lp", default=None, help="LP solution JSON (default: solve now)")
    p.add_argument("--regular", action="store_true",
                   help="use the regular-graph fractions x = w/c instead of an LP")
    p.add_argument("--c", type=float, default=1.7)
    p.add_argument("--pruned-out", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_prune)

    p = sub.add_parser("simulate", help="Monte Carlo greedy on a pruned instance")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pruned", default=None)
    src.add_argument("--instance", default=None, help="simulate on original probabilities")
    p.add_argument("--c", type=float, default=1.7)
    p.add_argument("--order", default="listed",
                   choices=("listed", "random", "batched", "red-first", "type1-first",
                            "random-fixed"))
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--events", action="store_true", help="collect per-edge event terms")
    p.add_argument("--coeff-c", type=float, default=None)
    _add_common(p, threads=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("opt", help="offline benchmark (expected maximum matching)")
    p.add_argument("--instance", required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--exact", action="store_true", help="exact enumeration (m <= 22)")
    _add_common(p, threads=True)
    p.set_defaults(fn=cmd_opt)

    p = sub.add_parser("ratio", help="end-to-end pruned greedy vs benchmark")
    p.add_argument("--instance", required=True)
    p.add_argument("--c", type=float, default=1.7)
    p.add_argument("--order", default="random",
                   choices=("listed", "random", "batched", "red-first", "type1-first",
                            "random-fixed"))
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--share", dest="share", action="store_true", default=True,
                   help="share realizations between greedy and the benchmark (default)")
    p.add_argument("--no-share", dest="share", action="store_false")
    _add_common(p, threads=True)
    p.set_defaults(fn=cmd_ratio)

    p = sub.add_parser("bounds", help="evaluate/verify a bound function")
    p.add_argument("--function", choices=("h1", "h2", "h3", "h4", "delta", "opt_problem"),
                   required=True)
    p.add_argument("--c", type=float, default=1.7)
    p.add_argument("--grid", type=int, default=None, help="grid resolution / quad points")
    p.add_argument("--coeff", type=float, default=1.98, help="quadratic coefficient (delta)")
    p.add_argument("--k", type=int, default=2, help="edge count (opt_problem)")
    p.add_argument("--grid-out", default=None, help="dump the evaluation grid as CSV")
    _add_common(p)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("reproduce", help="re-run a packaged experiment")
    p.add_argument("--target", choices=("table1", "fig1", "fig2", "bounds"), required=True)
    p.add_argument("--scale", choices=("smoke", "desk", "full"), default="desk")
    p.add_argument("--n", type=int, default=None, help="override the instance size")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")
    _add_common(p, threads=True)
    p.set_defaults(fn=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except MatchlabError as exc:
        print(f"matchlab: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"matchlab: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

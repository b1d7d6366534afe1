"""Acceptance suite: one test per shipped criterion, at stated tolerances.

Each criterion prints a single PASS/FAIL line (visible with ``pytest -s``;
captured output is shown on failure).  Monte Carlo checks use pinned seeds,
so runs are reproducible bit-for-bit.
"""

import math
import random
import time

import numpy as np
import pytest

import matchlab as ml
from matchlab.cli import main as cli_main
from matchlab.lp import brute_force_separate

SEED = 20240811


def _report(num: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:02d} {status}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def _timed(budget: float, started: float, label: str) -> str:
    elapsed = time.perf_counter() - started
    assert elapsed < budget, f"{label} took {elapsed:.1f}s (budget {budget}s)"
    return f"{elapsed:.1f}s"


def test_criterion_01_empirical_greedy_table(warm_kernels):
    """Greedy on K_{n,n} pruned at c=1 (y = 1-e^{-1/n}), random arrivals."""
    started = time.perf_counter()
    rows = [
        (3, 10_000_000, 0.53132, 0.001),
        (10, 1_000_000, 0.50862, 0.002),
        (30, 1_000_000, 0.50281, 0.002),
        (100, 100_000, 0.50084, 0.005),
    ]
    details = []
    ok = True
    for n, trials, reference, tol in rows:
        g = ml.complete_graph(n, 1.0)
        pg = ml.prune(g, np.full(g.m, 1.0 / n), 1.0)
        res = ml.mc_greedy(pg, "random", trials, seed=SEED, threads=4)
        per_n = res.estimate.mean / n
        ok = ok and abs(per_n - reference) <= tol
        details.append(f"n={n}: {per_n:.5f} (ref {reference}+-{tol})")
    stamp = _timed(600.0, started, "criterion 1")
    _report(1, ok, "; ".join(details) + f" [{stamp}]")


def test_criterion_02_h1_values():
    started = time.perf_counter()
    v2 = ml.h1(2.0)
    v1 = ml.h1(1.0)
    ok = (
        v2.value >= 0.532
        and 0.457 <= v1.value <= 0.461
        and v2.error <= 1e-8
        and v1.error <= 1e-8
    )
    stamp = _timed(1.0, started, "criterion 2")
    _report(2, ok, f"h1(2)={v2.value:.6f} (err {v2.error:.1e}), h1(1)={v1.value:.6f} [{stamp}]")


def test_criterion_03_h2_minimization():
    started = time.perf_counter()
    report = ml.h2_min(1.7, grid_resolution=400, refine_levels=3)
    cell_s, cell_t = report.extras["cell"]
    corner = (1 / 1.7, 1 - 1 / 1.7)
    ok = (
        0.503 < report.min_value <= 0.52
        and abs(report.argmin[0] - corner[0]) <= cell_s + 1e-12
        and abs(report.argmin[1] - corner[1]) <= cell_t + 1e-12
    )
    stamp = _timed(30.0, started, "criterion 3")
    _report(
        3, ok,
        f"min h2 = {report.min_value:.6f} at {tuple(round(a, 5) for a in report.argmin)}, "
        f"corner {tuple(round(a, 5) for a in corner)} [{stamp}]",
    )


def test_criterion_04_h3_nonnegativity():
    started = time.perf_counter()
    report = ml.h3_grid_check(2.0, nx=200, nq=200)
    ok = report.min_value >= -1e-10 and report.extras["boundary_min"] <= 1e-3
    stamp = _timed(30.0, started, "criterion 4")
    _report(
        4, ok,
        f"min h3 = {report.min_value:.3e}, boundary column min = "
        f"{report.extras['boundary_min']:.3e} [{stamp}]",
    )


def test_criterion_05_h4_nonnegativity():
    started = time.perf_counter()
    report = ml.h4_range_check(2.0, n_points=10_000)
    at_zero = report.extras["value_at_zero"]
    ok = report.min_value >= -1e-10 and abs(at_zero) <= 1e-10
    stamp = _timed(1.0, started, "criterion 5")
    _report(5, ok, f"min h4 = {report.min_value:.3e}, h4(0) = {at_zero:.3e} [{stamp}]")


def test_criterion_06_delta_bound():
    started = time.perf_counter()
    bound = ml.solve_delta_bound(2.0, 1.98)
    ok = bound.delta_max <= 0.312 and bound.ratio >= 0.552
    stamp = _timed(1.0, started, "criterion 6")
    _report(6, ok, f"delta_max = {bound.delta_max:.6f}, ratio = {bound.ratio:.6f} [{stamp}]")


def test_criterion_07_hard_instance_ratios(warm_kernels):
    started = time.perf_counter()
    trials = 10_000

    g1 = ml.gen_fig1_regular(50, 1e-3)
    alg1 = ml.mc_greedy(ml.unpruned(g1), ml.order_red_first(g1), trials,
                        seed=SEED, threads=4).estimate
    opt1 = ml.mc_opt(g1, trials, seed=SEED, threads=4)
    ratio1 = alg1.mean / opt1.mean
    target1 = 51 / 101
    ok1 = abs(ratio1 - target1) <= 0.01

    g2 = ml.gen_fig2_hardness(200)
    n = 200
    alg2 = ml.mc_greedy(ml.unpruned(g2), ml.order_type1_first(g2), trials,
                        seed=SEED, threads=4).estimate
    opt2 = ml.mc_opt(g2, trials, seed=SEED, threads=4)
    opt_per_n = opt2.mean / n
    alg_per_n = alg2.mean / n
    ratio2 = alg2.mean / opt2.mean
    ok2 = abs(opt_per_n - 1.5) <= 0.03 and alg_per_n <= 1.0 + 0.02 and ratio2 <= 2 / 3 + 0.02

    stamp = _timed(600.0, started, "criterion 7")
    _report(
        7, ok1 and ok2,
        f"regular-hard ALG/OPT = {ratio1:.5f} (target {target1:.5f}+-0.01); "
        f"hardness OPT/n = {opt_per_n:.4f}, ALG/n = {alg_per_n:.4f}, "
        f"ratio = {ratio2:.4f} <= {2/3 + 0.02:.4f} [{stamp}]",
    )


def test_criterion_08_oracle_equivalence():
    started = time.perf_counter()
    rng = random.Random(SEED)
    worst = 0.0
    cases = 0
    for _ in range(250):
        deg = rng.randint(1, 12)
        ps = [rng.choice([0.0, 1.0, rng.random()]) for _ in range(deg)]
        xs = [rng.random() * (p if rng.random() < 0.7 else 1.0) for p in ps]
        triples = list(zip(range(deg), ps, xs))
        fast = ml.separate(triples)
        slow = brute_force_separate(triples)
        worst = max(worst, abs(fast.violation - slow.violation))
        cases += 1
    ok = cases >= 200 and worst <= 1e-9
    stamp = _timed(10.0, started, "criterion 8")
    _report(8, ok, f"{cases} vertices, max violation gap = {worst:.2e} [{stamp}]")


def test_criterion_09_lp_sanity():
    started = time.perf_counter()
    rng = random.Random(SEED + 1)
    count = 0
    ok = True
    details = []
    for i in range(50):
        m = rng.randint(2, 14)
        n_l = rng.randint(2, 5)
        n_r = rng.randint(2, 5)
        g = ml.gen_random(n_l, n_r, m, 0.05, 1.0, seed=SEED + 10 * i)
        sol = ml.solve_lp(g)
        exact = ml.exact_expected_opt(g)
        if sol.objective < exact - 1e-6:
            ok = False
            details.append(f"instance {i}: lp {sol.objective} < opt {exact}")
        probs = ml.exact_match_probabilities(g)
        feas = ml.verify_feasible(g, probs, mode="bruteforce")
        if not feas.feasible:
            ok = False
            details.append(f"instance {i}: true probabilities infeasible")
        count += 1
    stamp = _timed(120.0, started, "criterion 9")
    _report(9, ok and count >= 50,
            f"{count} instances, LP >= exact OPT and exact probabilities feasible "
            + ("; ".join(details) if details else "") + f" [{stamp}]")


def test_criterion_10_first_edge_bound_dominance(warm_kernels):
    started = time.perf_counter()
    rng = random.Random(SEED + 2)
    pairs = 0
    ok = True
    worst_gap = math.inf
    for i in range(30):
        m = rng.randint(6, 40)
        n_l = rng.randint(3, 8)
        n_r = rng.randint(3, 8)
        g = ml.gen_random(n_l, n_r, m, 0.05, 0.95, seed=SEED + 100 + i)
        pg = ml.prune(g, ml.solve_lp(g).x, 1.7)
        if i % 3 == 0:
            order = ml.order_as_listed(m)
        elif i % 3 == 1:
            order = ml.order_random(m, SEED + i)
        else:
            order = ml.batch_order(g, ml.order_random(m, SEED + i))
        bound = ml.first_edge_lower_bound(pg, order)
        res = ml.mc_greedy(pg, order, 100_000, seed=SEED + i, threads=4).estimate
        gap = res.mean + 3 * res.stderr - bound
        worst_gap = min(worst_gap, gap)
        if gap < 0:
            ok = False
        pairs += 1
    stamp = _timed(600.0, started, "criterion 10")
    _report(10, ok and pairs >= 30,
            f"{pairs} instance/order pairs, min (MC+3s - bound) = {worst_gap:.4f} [{stamp}]")


def _two_regular_instances():
    """2-regular log-weight instances with every edge weight <= 0.02."""
    out = []
    n = 100
    out.append(("complete", ml.complete_graph(n, 1 - math.exp(-2.0 / n))))
    # union of 100 random perfect matchings, each edge log-weight 2/100
    rng = random.Random(SEED + 3)
    n2 = 40
    pairs = []
    p_edge = 1 - math.exp(-0.02)
    for _ in range(100):
        perm = list(range(n2))
        rng.shuffle(perm)
        pairs.extend((u, perm[u], p_edge) for u in range(n2))
    out.append(("matching-union", ml.StochasticGraph.from_pairs(n2, n2, pairs)))
    return out


def test_criterion_11_second_order_estimators(warm_kernels):
    started = time.perf_counter()
    trials = 50_000
    ok = True
    details = []
    for label, g in _two_regular_instances():
        c = 2.0
        x, _ = ml.regular_xy(g, c, tol=1e-6)
        pg = ml.prune(g, x, c)
        order = ml.order_as_listed(g.m)
        est = ml.estimate_event_terms(pg, order, trials, seed=SEED, coeff_c=c, threads=4)
        combined_ok = est.bound_gap_mean >= -3 * est.bound_gap_stderr
        rhs = 1.98 * est.delta**2
        slack = est.per_vertex_term_II - rhs + 3 * (
            est.per_vertex_term_II_stderr
            + 2 * 1.98 * np.abs(est.delta) * est.delta_stderr
        )
        vertex_ok = bool(np.all(slack >= 0))
        ok = ok and combined_ok and vertex_ok
        details.append(
            f"{label}: ALG={est.alg.mean:.3f}, combined bound={est.combined_bound:.3f}, "
            f"gap={est.bound_gap_mean:.4f}(+-{est.bound_gap_stderr:.4f}), "
            f"min vertex slack={float(np.min(slack)):.4f}"
        )
    stamp = _timed(600.0, started, "criterion 11")
    _report(11, ok, "; ".join(details) + f" [{stamp}]")


def test_criterion_12_end_to_end_guarantee(warm_kernels, tmp_path, capsys):
    started = time.perf_counter()
    rng = random.Random(SEED + 4)
    ok = True
    worst_margin = math.inf
    total_half_violations = 0
    runs = 0
    for i in range(20):
        n_l = rng.randint(6, 20)
        n_r = rng.randint(6, 20)
        m = rng.randint(30, 200)
        g = ml.gen_random(n_l, n_r, m, 0.0, 1.0, seed=SEED + 1000 + i)
        pg = ml.prune(g, ml.solve_lp(g).x, 1.7)
        orders = [
            ml.order_random(m, SEED + i),
            ml.batch_order(g, ml.order_random(m, SEED + 7 * i + 1)),
        ]
        for order in orders:
            result = ml.mc_ratio_paired(pg, order, 3000, seed=SEED + i, threads=4)
            lo, hi = result.report.ratio_ci
            halfwidth = (hi - lo) / 2
            margin = result.report.ratio - (0.503 - 3 * halfwidth)
            worst_margin = min(worst_margin, margin)
            total_half_violations += result.half_violations
            if margin < 0 or result.half_violations:
                ok = False
            runs += 1
    # exercise the CLI path end to end on one instance
    inst = tmp_path / "inst.json"
    ml.write_instance(ml.gen_random(8, 8, 60, 0.0, 1.0, seed=SEED), inst)
    code = cli_main(["ratio", "--instance", str(inst), "--c", "1.7", "--trials", "2000",
                     "--seed", str(SEED), "--format", "json", "--out",
                     str(tmp_path / "ratio.json")])
    ok = ok and code == 0
    stamp = _timed(600.0, started, "criterion 12")
    _report(
        12, ok and runs >= 20,
        f"{runs} instance/order runs, min ratio margin over 0.503-3*halfwidth = "
        f"{worst_margin:.4f}, half-guarantee violations = {total_half_violations} [{stamp}]",
    )

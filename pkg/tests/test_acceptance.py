"""Acceptance checks. Each test prints exactly one PASS/FAIL line through ``verdict``.

The benchmark-backed checks (3, 4, 5) run on instances clustered locally from
the raw TSPLIB files under benchmarks/tsplib; runs are cached per
(instance, seed, local search) so the same run is never repeated.
"""

import itertools
import statistics
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import TSPLIB_DIR, euclidean_instance, random_instance, random_tour
from oracles import product_minimum, three_opt_neighbours

from gtsp_acs.acs import (
    AcsParams,
    Ant,
    LocalSearch,
    SearchState,
    construct_all,
    global_update,
    init,
    local_update,
    run,
    select_next,
)
from gtsp_acs.cli import main
from gtsp_acs.heuristics import brute_force_optimum
from gtsp_acs.instance import Tour, check_feasible, tour_weight
from gtsp_acs.localsearch import co_optimize, improve, three_opt
from gtsp_acs.registry import BestKnownRegistry, published_reference
from gtsp_acs.tsplib import load

REGISTRY = BestKnownRegistry.default()
PUBLISHED = published_reference()

# instances reported at 100% optimal, with the best values they must reach
SPOT = {"d198": 10557, "pr226": 64007, "pr264": 29549, "lin318": 20765, "fl417": 9651, "pr439": 60099, "p654": 27428}
# every instance with m <= 89
SMALL = ["d198", "kroA200", "kroB200", "ts225", "pr226", "gil262", "pr264", "pr299", "lin318", "rd400", "fl417", "pr439", "pcb442"]

_instances: dict = {}
_runs: dict = {}


def bench_instance(raw):
    if raw not in _instances:
        _instances[raw] = load(TSPLIB_DIR / f"{raw}.tsp")
    return _instances[raw]


def time_cap(raw, ls=LocalSearch.COMPOSITE):
    """Ten times the published per-run time of the variant."""
    column = "hacs_time" if LocalSearch(ls) is LocalSearch.COMPOSITE else "hacs0_time"
    published = PUBLISHED[bench_instance(raw).name.lower()][column]
    return None if published is None else 10 * published


def bench_run(raw, seed, ls=LocalSearch.COMPOSITE):
    key = (raw, seed, LocalSearch(ls))
    if key not in _runs:
        _runs[key] = run(bench_instance(raw), AcsParams(seed=seed, local_search=ls, max_time=time_cap(raw, ls)))
    return _runs[key]


def test_criterion_1_co_matches_product_enumeration(verdict):
    rng = np.random.default_rng(1001)
    mismatches, co_seconds, count = 0, 0.0, 0
    for m in range(3, 9):
        for _ in range(40):
            inst = random_instance(rng, m, 1, 4, 1, 100)
            nodes = random_tour(rng, inst)
            start = time.perf_counter()
            out = co_optimize(inst, Tour(tuple(nodes), tour_weight(inst, nodes)))
            co_seconds += time.perf_counter() - start
            order = [inst.cluster_of[v] for v in nodes]
            mismatches += out.weight != product_minimum(inst.dist, inst.clusters, order)
            count += 1
    ok = verdict(1, mismatches == 0 and count >= 200 and co_seconds < 10,
                 f"{count} instances, {mismatches} mismatches, CO time {co_seconds:.2f} s (limit 10 s)")
    assert ok


def test_criterion_2_matches_brute_force_at_oracle_scale(verdict):
    rng = np.random.default_rng(2002)
    started = time.perf_counter()
    hits, total, misses = 0, 0, []
    for k in range(60):
        m = 3 + k % 5
        make = euclidean_instance if k % 2 else random_instance
        inst = make(rng, m, 1, 4, name=f"o{k}")
        opt = brute_force_optimum(inst).weight
        got = run(inst, AcsParams(seed=k)).weight
        hits += got == opt
        total += 1
        if got != opt:
            misses.append((k, got, opt))
    elapsed = time.perf_counter() - started
    rate = hits / total
    ok = verdict(2, rate >= 0.95 and elapsed < 120,
                 f"{hits}/{total} runs optimal ({100 * rate:.1f}%, need 95%), {elapsed:.1f} s (limit 120 s), misses {misses}")
    assert ok


@pytest.mark.parametrize("raw", list(SPOT))
def test_criterion_3_spot_instances_reach_best(raw, verdict):
    inst = bench_instance(raw)
    best = SPOT[raw]
    assert REGISTRY.get(inst.name) == best
    cap = time_cap(raw)
    runs = [bench_run(raw, seed) for seed in range(10)]
    hits = sum(r.weight == best for r in runs)
    weights = sorted(r.weight for r in runs)
    times = [r.elapsed for r in runs]
    ok = verdict(3, hits >= 8,
                 f"{inst.name}: {hits}/10 runs reach {best} (need 8), weights {weights}, "
                 f"mean time {statistics.fmean(times):.1f} s, max {max(times):.1f} s, per-run cap {cap:.1f} s")
    assert ok


def test_criterion_4_mean_error_on_small_subset(verdict):
    # The published clustered files are not available here; the instances are
    # regenerated from the raw TSPLIB files, one seed each, capped as in criterion 3.
    errors = {}
    for raw in SMALL:
        inst = bench_instance(raw)
        best = REGISTRY.get(inst.name)
        errors[inst.name] = 100 * (bench_run(raw, 0).weight - best) / best
    mean = statistics.fmean(errors.values())
    worst = max(errors, key=errors.get)
    ok = verdict(4, len(errors) == 13 and mean <= 0.5,
                 f"mean error {mean:.3f}% over {len(errors)} regenerated instances with m <= 89 (limit 0.5%), "
                 f"worst {worst} {errors[worst]:.3f}%")
    assert ok


def test_criterion_5_ablation_direction(verdict):
    rng = np.random.default_rng(5005)
    err = {LocalSearch.COMPOSITE: [], LocalSearch.THREE_OPT: []}
    hit = {LocalSearch.COMPOSITE: [], LocalSearch.THREE_OPT: []}
    for k in range(20):
        make = euclidean_instance if k % 2 else random_instance
        inst = make(rng, 8, 3, 6, name=f"a{k}")
        opt = brute_force_optimum(inst, budget=1e12).weight
        for ls in err:
            w = run(inst, AcsParams(seed=k, local_search=ls)).weight
            err[ls].append(100 * (w - opt) / opt)
            hit[ls].append(w == opt)
    for raw in SMALL:
        best = REGISTRY.get(bench_instance(raw).name)
        for ls in err:
            w = bench_run(raw, 0, ls).weight
            err[ls].append(100 * (w - best) / best)
            hit[ls].append(w <= best)
    full, reduced = LocalSearch.COMPOSITE, LocalSearch.THREE_OPT
    e_full, e_red = statistics.fmean(err[full]), statistics.fmean(err[reduced])
    h_full, h_red = 100 * statistics.fmean(hit[full]), 100 * statistics.fmean(hit[reduced])
    ok = verdict(5, e_full < e_red and h_full > h_red,
                 f"{len(err[full])} paired runs (20 random m=8, {len(SMALL)} benchmark): "
                 f"HACS error {e_full:.3f}% vs HACS0 {e_red:.3f}%, optimal {h_full:.1f}% vs {h_red:.1f}%")
    assert ok


def test_criterion_6_selection_frequencies(verdict):
    rng = np.random.default_rng(6006)
    pvalues = []
    for k in range(10):
        inst = random_instance(rng, int(rng.integers(3, 7)), 1, 4, name=f"s{k}")
        params = AcsParams()
        pher, _ = init(inst, params)
        tau = rng.uniform(0.05, 2.0, size=(inst.n, inst.n))
        pher.tau[:] = np.triu(tau, 1) + np.triu(tau, 1).T
        ant = Ant.at(inst, int(rng.integers(inst.n)))
        u = ant.current
        visited = inst.cluster_of[u]
        cands = [v for v in range(inst.n) if inst.cluster_of[v] != visited]
        a = np.array([pher.tau[u, v] * (1.0 / inst.dist[u, v]) ** 3 for v in cands])
        draws = np.array([select_next(inst, ant, pher, params, rng) for _ in range(100_000)])
        counts = np.array([(draws == v).sum() for v in cands])
        assert counts.sum() == 100_000
        pvalues.append(chisquare(counts, 100_000 * a / a.sum()).pvalue)
    ok = verdict(6, min(pvalues) > 0.01,
                 f"10 configurations x 1e5 draws, smallest chi-square p-value {min(pvalues):.4f} (need > 0.01)")
    assert ok


def test_criterion_7_update_arithmetic(verdict):
    inst = random_instance(np.random.default_rng(0), 5, 2, 2)
    params = AcsParams()
    pher, _ = init(inst, params)
    t_nn = Tour(tuple(c[0] for c in inst.clusters), 100)
    state = SearchState(best=t_nn, t_nn=t_nn)
    u, v = inst.clusters[0][0], inst.clusters[1][0]
    pher.tau[u, v] = pher.tau[v, u] = 0.1
    local_update(pher, u, v, params, inst, state)
    local = pher.tau[u, v]

    pher.tau[:] = 0.1
    global_update(pher, Tour(t_nn.nodes, 50), params)
    glob = pher.tau[u, v]

    local_ok = local == (1 - 0.03) * 0.1 + 0.03 / (10 * 100) and abs(local - 0.09703) <= 2 * np.spacing(0.09703)
    global_ok = glob == 0.6 * 0.1 + 0.4 / 50 and abs(glob - 0.068) <= 2 * np.spacing(0.068)
    ok = verdict(7, local_ok and global_ok, f"local update {float(local)!r} (expect 0.09703), global update {float(glob)!r} (expect 0.068)")
    assert ok


def _solve_output(path, seed, capsys):
    assert main(["solve", str(path), "--seed", str(seed)]) == 0
    out = capsys.readouterr().out
    return "\n".join(line for line in out.splitlines() if not line.startswith("time:"))


def test_criterion_8_determinism(verdict, tmp_path, capsys):
    from gtsp_acs.tsplib import write_gtsp

    inst = random_instance(np.random.default_rng(8008), 12, 1, 5, name="12det")
    path = tmp_path / "12det.gtsp"
    path.write_text(write_gtsp(inst))
    same_text = all(_solve_output(path, s, capsys) == _solve_output(path, s, capsys) for s in (0, 1, 2))
    d198 = TSPLIB_DIR / "d198.tsp"
    same_bench = _solve_output(d198, 3, capsys) == _solve_output(d198, 3, capsys)
    a, b = run(bench_instance("pr226"), AcsParams(seed=4)), run(bench_instance("pr226"), AcsParams(seed=4))
    same_run = a.tour.nodes == b.tour.nodes and a.iterations == b.iterations
    ok = verdict(8, same_text and same_bench and same_run,
                 f"CLI output identical on a random instance (3 seeds) {same_text}, on 40d198 {same_bench}; "
                 f"46pr226 tour and iteration count identical {same_run} ({a.iterations} iterations)")
    assert ok


def _three_opt_optimal(inst, nodes):
    w = tour_weight(inst, nodes)
    return all(tour_weight(inst, t) >= w for t in three_opt_neighbours(nodes))


def test_criterion_9_invariants_hold_during_search(verdict):
    rng = np.random.default_rng(9009)
    violations = {"pheromone": 0, "feasible": 0, "monotone": 0, "local optimum": 0}
    checks = 0
    for k in range(8):
        m = 5 + k
        make = euclidean_instance if k % 2 else random_instance
        inst = make(rng, m, 1, 4, name=f"i{k}")
        params = AcsParams(seed=k, local_search=LocalSearch.COMPOSITE if k % 2 else LocalSearch.THREE_OPT)
        pher, state = init(inst, params)
        walk = np.random.default_rng(k)
        best_seen = state.best.weight
        for _ in range(8):
            for t in construct_all(inst, pher, params, state, walk):
                check_feasible(inst, t.nodes)
                local = three_opt(inst, t)
                full = improve(inst, t)
                for out in (local, full):
                    try:
                        check_feasible(inst, out.nodes)
                    except ValueError:
                        violations["feasible"] += 1
                violations["monotone"] += not (full.weight <= local.weight <= t.weight)
                violations["local optimum"] += not _three_opt_optimal(inst, local.nodes)
                checks += 1
                if full.weight < state.best.weight:
                    state.best = full
            global_update(pher, state.best, params)
            off = ~np.eye(inst.n, dtype=bool)
            violations["pheromone"] += not (np.all(pher.tau[off] > 0) and np.array_equal(pher.tau, pher.tau.T))
            violations["monotone"] += state.best.weight > best_seen
            best_seen = state.best.weight
        result = run(inst, params)
        violations["monotone"] += any(b.best > a.best for a, b in itertools.pairwise(result.trace))
        if params.local_search is LocalSearch.THREE_OPT:
            violations["local optimum"] += not _three_opt_optimal(inst, result.tour.nodes)
    total = sum(violations.values())
    ok = verdict(9, total == 0, f"{checks} improved tours over 8 instances (m 5-12), violations {violations}")
    assert ok

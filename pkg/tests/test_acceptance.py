"""Top-level acceptance checks, one test per shipping criterion.

Criterion 7 executes the full 18-instance benchmark suite with its stock
45-second per-cell budget and therefore dominates the suite's runtime
(40+ minutes single-core).  Deselect it with ``-m "not suite"`` during
development.
"""

import csv
import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import binsampler as bs
from binsampler.cli import main as cli_main
from binsampler.instance import UniformWeights, NormalWeights
from binsampler.sampling import random_step, walk_step
from oracles import completion_prob_exact, feasible_by_filter, pauli_diagonal


def test_criterion_1_oracle_matches_brute_force():
    rng = np.random.Generator(np.random.PCG64(101))
    t0 = time.perf_counter()
    for k in range(200):
        n = int(rng.integers(1, 13))
        capacity = int(rng.integers(3, 150))
        weights = [int(w) for w in rng.integers(1, capacity + 1, size=n)]
        inst = bs.new_instance(weights, capacity)
        fast = list(bs.enumerate_feasible(inst).masks)
        slow = feasible_by_filter(weights, capacity)
        assert fast == slow, f"oracle mismatch on instance {k}: {weights} cap {capacity}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"oracle comparison took {elapsed:.1f}s (limit 10s)"
    print(f"criterion 1: 200/200 oracles exact in {elapsed:.2f}s")


def test_criterion_2_walk_sound_and_complete():
    suite = [(name, inst) for name, inst in bs.benchmark_instances() if inst.n == 10]
    assert len(suite) == 9
    t0 = time.perf_counter()
    for idx, (name, inst) in enumerate(suite):
        oracle = set(bs.enumerate_feasible(inst).masks)
        assert len(oracle) <= 500  # the full-coverage clause applies everywhere
        state = bs.SamplerState(
            found=set(), rng=np.random.Generator(np.random.PCG64(np.random.SeedSequence([2, idx])))
        )
        seen = set()
        violations = 0
        for _ in range(100_000):
            mask = walk_step(inst, state)
            if mask == 0 or bs.subset_weight(inst, mask) > inst.capacity:
                violations += 1
            seen.add(mask)
        assert violations == 0, f"{name}: {violations} infeasible walk outputs"
        coverage = len(seen & oracle) / len(oracle)
        assert seen <= oracle, f"{name}: walk produced masks outside the oracle"
        assert coverage >= 0.99
        assert seen == oracle, f"{name}: {len(oracle) - len(seen)} configurations missed"
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"walk sweep took {elapsed:.1f}s (limit 30s)"
    print(f"criterion 2: 9 instances, 0 violations, full coverage, {elapsed:.1f}s")


def test_criterion_3_random_sampling_law():
    # fixed n=8 instance; every prefix size b gets its own 10^4-trial check
    inst = bs.generate_instance(8, 100, UniformWeights(1, 100), 801)
    oracle = bs.enumerate_feasible(inst).masks
    feasible = set(oracle)
    F, n, trials = len(oracle), inst.n, 10_000
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(1)))
    worst_z = 0.0
    for b in range(F):
        found = set(oracle[:b])
        state = bs.SamplerState(found=found, rng=rng)
        p = float(bs.prob_new_random(n, F, b))
        assert p == (F - b) / 2**n
        sigma = (p * (1 - p) / trials) ** 0.5
        hits = sum(
            1
            for _ in range(trials)
            if (m := random_step(inst, state)) in feasible and m not in found
        )
        z = abs(hits / trials - p) / sigma
        worst_z = max(worst_z, z)
        assert z < 3.0, f"b={b}: frequency {hits / trials} vs p={p} is {z:.2f} sigma off"

    # completion probability: the closed-form lower bound never exceeds
    # the exact inclusion-exclusion value on exhaustively checkable sizes
    for weights, capacity in ([1, 2], 2), ([2, 3, 4], 6), ([3, 5, 2, 4], 8):
        small = bs.new_instance(weights, capacity)
        f_small = len(bs.enumerate_feasible(small))
        for draws in (f_small, f_small + 1, 2 * f_small, 4 * f_small, 8 * f_small):
            bound = bs.prob_complete_bound(small.n, f_small, draws)
            exact = completion_prob_exact(small.n, f_small, draws)
            assert bound <= exact <= 1
            if draws == f_small:
                assert bound == exact  # the bound is tight at the minimum draw count
    print(f"criterion 3: all {F} prefix sizes within 3 sigma (worst {worst_z:.2f})")


def test_criterion_4_simulator_physics(n4_setup, rng):
    # norm preservation across sizes and both drive profiles
    n12 = dict(bs.benchmark_instances())["n12-uniform-a"]
    cases = [
        bs.new_instance([1, 2], 2),
        bs.new_instance([9, 78, 66, 44, 44, 86, 9, 70, 21, 10], 100),
        n12,
    ]
    worst_drift = 0.0
    for inst in cases:
        for profile in ("strong", "moderate"):
            ev = bs.TrotterEvolver(inst, bs.default_config(inst, profile=profile))
            psi = ev.evolve(ev.bare_energies)
            worst_drift = max(worst_drift, abs(float(np.linalg.norm(psi)) - 1.0))
            psi = ev.evolve_penalized(np.arange(3, dtype=np.int64))
            worst_drift = max(worst_drift, abs(float(np.linalg.norm(psi)) - 1.0))
    assert worst_drift < 1e-9

    # Trotter error against the dense reference, global phase removed,
    # strictly decreasing over the pinned step counts
    inst4, config4, ref = n4_setup
    energies = bs.build_diagonal(inst4, config4.alpha, config4.beta).energies
    errors = []
    for n_t in (10, 50, 250, 1250):
        psi = bs.TrotterEvolver(inst4, replace(config4, n_trotter=n_t)).evolve(energies)
        overlap = abs(np.vdot(ref, psi))
        errors.append(float(np.sqrt(max(0.0, 2.0 * (1.0 - overlap)))))
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] > 0.0 and errors[0] > errors[-1]

    # Pauli expansion differs from the direct energy formula by at most a
    # mask-independent constant
    worst_spread = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        capacity = int(rng.integers(5, 120))
        weights = [int(w) for w in rng.integers(1, capacity + 1, size=n)]
        inst = bs.new_instance(weights, capacity)
        beta = float(rng.uniform(0.05, 2.0))
        alpha = float(rng.uniform(0.0, 2.0 * beta * capacity))
        direct = bs.build_diagonal(inst, alpha, beta).energies
        diff = direct - pauli_diagonal(weights, capacity, alpha, beta)
        scale = max(1.0, float(np.max(np.abs(direct))))
        worst_spread = max(worst_spread, float(diff.max() - diff.min()) / scale)
    assert worst_spread < 1e-9
    print(
        f"criterion 4: drift {worst_drift:.1e}, errors {['%.2e' % e for e in errors]}, "
        f"pauli spread {worst_spread:.1e}"
    )


def test_criterion_5_penalty_monotonic_and_reordering():
    gammas = (0.0, 1.0, 2.0, 5.0, 10.0)
    for weights, capacity in ([2, 3, 4], 6), ([3, 5, 2, 4], 8):
        inst = bs.new_instance(weights, capacity)
        base = bs.default_config(inst, profile="moderate", gamma=1.0)
        ev = bs.TrotterEvolver(inst, base)
        p0 = np.abs(ev.evolve(ev.bare_energies)) ** 2
        feasible = list(bs.enumerate_feasible(inst).masks)
        penalized = sorted(sorted(feasible, key=lambda m: -p0[m])[:2])
        marks = np.asarray(penalized, dtype=np.int64)

        probs = []
        for gamma in gammas:
            if gamma == 0.0:
                psi = ev.evolve(ev.bare_energies)
            else:
                g_ev = bs.TrotterEvolver(inst, replace(base, gamma=gamma))
                psi = g_ev.evolve_penalized(marks)
            probs.append(np.abs(psi) ** 2)
        for mask in penalized:
            series = [float(p[mask]) for p in probs]
            for lo, hi in zip(series[1:], series):
                assert lo <= hi + 1e-12, (
                    f"P[{mask}] increased along gamma on {weights}: {series}"
                )
        assert int(np.argmax(probs[0])) in penalized  # by construction
        assert int(np.argmax(probs[-1])) not in penalized
    print("criterion 5: penalized-mask probabilities non-increasing, arg-max moved")


def test_criterion_6_switch_thresholds_exact():
    from binsampler.hybrid import should_switch
    from test_hybrid import synthetic_trace

    pol = bs.SwitchPolicy()
    # never before iteration 100, even for a flagrant plateau
    assert should_switch(synthetic_trace([5] * 99), pol) is False
    assert should_switch(synthetic_trace([5] * 100), pol) is True
    # the decision is exactly (a <= 1/4) AND (rmsd >= 2) once eligible
    assert should_switch(synthetic_trace(list(range(1, 201))), pol) is False  # a>1/4, clean
    assert should_switch(synthetic_trace([x + 50 for x in range(1, 151)]), pol) is False  # a>1/4
    assert should_switch(synthetic_trace([1] * 150), pol) is False  # shallow but clean
    assert should_switch(synthetic_trace([20] * 400), pol) is True  # shallow and ragged
    # boundaries: slope exactly 1/4 and rmsd exactly 2 both count as stagnation
    eligible = bs.SwitchPolicy(min_iterations=1)
    quarter = synthetic_trace([1 / 4 + 5, 2 / 4 - 5, 3 / 4 - 5, 4 / 4 + 5])
    assert should_switch(quarter, eligible) is True
    edge = synthetic_trace([2.0, -2.0, -2.0, 2.0])
    assert should_switch(edge, eligible) is True
    print("criterion 6: switch rule reproduces thresholds exactly")


def _load_curve(path: Path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 0], data[:, 1]


@pytest.mark.suite
def test_criterion_7_qualitative_suite_reproduction(tmp_path):
    plan_path = bs.write_benchmark_suite(tmp_path / "suite")
    plan = bs.load_plan(plan_path)
    out = tmp_path / "results"
    t0 = time.perf_counter()
    rows = bs.run_benchmark(plan, out, workers=1)
    wall = time.perf_counter() - t0
    assert wall < 7200.0, f"suite took {wall:.0f}s (budget 2h)"

    cells = {(r["instance_id"], r["strategy"], r["run"]): r for r in rows}
    instances = sorted({r["instance_id"] for r in rows})
    runs = (1, 2)

    # (i) the walk reaches full coverage in fewer iterations than random
    both, random_slower = 0, 0
    for inst_id in instances:
        for r in runs:
            rnd, wlk = cells[(inst_id, "random", r)], cells[(inst_id, "walk", r)]
            if rnd["completed"] == "true" and wlk["completed"] == "true":
                both += 1
                if rnd["iterations_to_complete"] > wlk["iterations_to_complete"]:
                    random_slower += 1
    assert both > 0
    frac_i = random_slower / both
    assert frac_i >= 0.90, f"random slower than walk in only {frac_i:.0%} of {both} cells"

    # (ii) the walk's curve needs the extra f2 parameter: strictly smaller
    # residual than a pure line
    walk_runs, f2_wins = 0, 0
    for inst_id in instances:
        for r in runs:
            curve_path = out / "curves" / f"{inst_id}__walk__r{r}.csv"
            if not curve_path.exists():
                continue
            walk_runs += 1
            xs, ys = _load_curve(curve_path)
            if bs.fit_curve((xs, ys), "f2").rmsd < bs.fit_curve((xs, ys), "f3").rmsd:
                f2_wins += 1
    assert walk_runs > 0
    frac_ii = f2_wins / walk_runs
    assert frac_ii >= 0.80, f"f2 beat f3 in only {frac_ii:.0%} of {walk_runs} walk runs"

    # (iii) the annealer's curve is the more linear one wherever both
    # strategies produced a meaningful sample of finds
    eligible, anneal_flatter = 0, 0
    for inst_id in instances:
        for r in runs:
            pair = {}
            for strategy in ("anneal", "walk"):
                trace_path = out / "traces" / f"{inst_id}__{strategy}__r{r}.csv"
                curve_path = out / "curves" / f"{inst_id}__{strategy}__r{r}.csv"
                if not curve_path.exists():
                    continue
                trace = bs.load_trace(trace_path)
                if trace.distinct_found >= 25:
                    pair[strategy] = curve_path
            if len(pair) == 2:
                eligible += 1
                r_ann = bs.fit_curve(_load_curve(pair["anneal"]), "f3").rmsd
                r_wlk = bs.fit_curve(_load_curve(pair["walk"]), "f3").rmsd
                if r_ann <= r_wlk:
                    anneal_flatter += 1
    assert eligible > 0
    frac_iii = anneal_flatter / eligible
    assert frac_iii >= 0.70, (
        f"anneal f3 fit flatter in only {frac_iii:.0%} of {eligible} eligible runs"
    )

    # truncated cells must be flagged, not silently dropped
    meta = json.loads((out / "run_meta.json").read_text())
    flagged = {c["cell"] for c in meta["cells"] if c["budget_hit"]}
    for (inst_id, strategy, r), row in cells.items():
        name = f"{inst_id}__{strategy}__r{r}"
        iters = next(c["iterations"] for c in meta["cells"] if c["cell"] == name)
        if row["completed"] == "false" and iters < plan.max_iters[strategy]:
            assert name in flagged
    print(
        f"criterion 7: wall {wall / 60:.1f} min; random-slower {frac_i:.0%} of {both}; "
        f"f2-wins {frac_ii:.0%} of {walk_runs}; anneal-flatter {frac_iii:.0%} of "
        f"{eligible}; {len(flagged)} truncated cells flagged"
    )


FORCE_SWITCH = ["--min-iterations", "50", "--slope-threshold", "inf",
                "--rmsd-threshold", "0"]


def test_criterion_8_hybrid_contract(tmp_path, small_instance):
    # (a) the first post-switch Hamiltonian penalizes exactly the walk finds,
    # checked through the CLI debug dump on three instance sizes
    stock = dict(bs.benchmark_instances())
    probes = [
        ("fixture-n10", small_instance),
        ("n10-normal-d", stock["n10-normal-d"]),
        ("n12-normal-c", stock["n12-normal-c"]),
    ]
    for name, inst in probes:
        inst_path = tmp_path / f"{name}.json"
        bs.save_instance(inst, inst_path)
        dump = tmp_path / f"dump-{name}"
        out = tmp_path / f"{name}.csv"
        rc = cli_main([
            "sample", "--instance", str(inst_path), "--strategy", "hybrid",
            "--seed", "9", "--max-iters", "56", "--out", str(out),
            "--dump-state", str(dump), *FORCE_SWITCH,
        ])
        assert rc == 0
        trace = bs.load_trace(out)
        assert trace.switch_iteration == 50
        walk_found = sorted(
            {m for m, new in zip(trace.masks[:50], trace.new_flags) if new}
        )
        pen_lines = (dump / "first_anneal_penalized.csv").read_text().splitlines()
        assert [int(m, 16) for m in pen_lines[1:]] == walk_found
        ham = {}
        with open(dump / "first_anneal_hamiltonian.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                ham[int(row["mask_hex"], 16)] = float(row["energy"])
        cfg = bs.default_config(inst)
        bare = bs.build_diagonal(inst, cfg.alpha, cfg.beta).energies
        for mask in range(2**inst.n):
            expect = bare[mask] + (cfg.gamma if mask in walk_found else 0.0)
            assert ham[mask] == pytest.approx(expect, abs=1e-12)

    # (b) disabling the thresholds reproduces the pure walk byte-for-byte
    oracle = len(bs.enumerate_feasible(small_instance))
    policy = bs.SwitchPolicy(slope_threshold=0.0, rmsd_threshold=float("inf"))
    hybrid = bs.run_until_complete(small_instance, "hybrid", seed=11, max_iters=3000,
                                   oracle_size=oracle, switch_policy=policy,
                                   instance_id="twin")
    walk = bs.run_until_complete(small_instance, "walk", seed=11, max_iters=3000,
                                 oracle_size=oracle, instance_id="twin")
    pa, pb = tmp_path / "h.csv", tmp_path / "w.csv"
    bs.save_trace(hybrid, pa)
    bs.save_trace(walk, pb)
    assert pa.read_bytes() == pb.read_bytes()
    print("criterion 8: dump matches walk-found set on 3 instances; byte-identical twin")


def test_criterion_9_bench_determinism(tmp_path):
    src = tmp_path / "instances"
    src.mkdir()
    bs.save_instance(bs.new_instance([1, 1], 2), src / "d1.json")
    bs.save_instance(bs.new_instance([2, 3, 4], 6), src / "d2.json")
    plan = bs.BenchmarkPlan(
        instances=[str(src / "d1.json"), str(src / "d2.json")],
        max_iters={"anneal": 3000},
    )

    def run(tag: str, workers: int) -> dict[str, bytes]:
        out = tmp_path / tag
        bs.run_benchmark(plan, out, workers=workers)
        return {
            str(p.relative_to(out)): p.read_bytes()
            for p in sorted(out.rglob("*"))
            if p.is_file() and p.name != "run_meta.json"
        }

    first = run("a", 1)
    assert run("b", 1) == first, "two single-worker executions differ"
    assert run("c", 8) == first, "worker count changed the outputs"
    assert any(k.startswith("traces/") for k in first)
    assert "summary.csv" in first
    print(f"criterion 9: {len(first)} files byte-identical across runs and workers 1/8")

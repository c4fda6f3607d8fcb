"""Acceptance gate: one test per top-level criterion, each printing a verdict.

The heavy sweeps reuse module-scoped baselines; the whole module is the
slowest part of the suite (dominated by the two full fault heatmaps).
"""

import json
import time

import numpy as np
import pytest

from ftpit import collocation as coll
from ftpit import faults as fl
from ftpit import overhead as oh
from ftpit import problems as pb
from ftpit import sweeper as sw
from ftpit.cli import main
from ftpit.config import RunConfig, build_simulation, default_config
from ftpit.controller import run_block, run_simulation
from ftpit.transfer import compute_fas_tau, make_transfer_pair, restrict_level


def verdict(name, ok):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


@pytest.fixture(scope="module")
def heat_runs():
    cfg = default_config("heat")
    setup = build_simulation(cfg)
    baseline = run_block(setup.hierarchy, 16, setup.dt, 0, setup.u0, setup.opts)
    return cfg, setup, baseline


@pytest.fixture(scope="module")
def advection_runs():
    cfg = default_config("advection")
    setup = build_simulation(cfg)
    baseline = run_block(setup.hierarchy, 16, setup.dt, 0, setup.u0, setup.opts)
    return cfg, setup, baseline


def single_fault_k_add(setup, baseline, strategy, cell):
    plan = fl.generate_fault_plan(fl.EXPLICIT_LIST, events=[cell])
    hook = fl.make_fault_hook(plan, fl.RecoveryStrategy(strategy))
    block = run_block(setup.hierarchy, setup.num_procs, setup.dt, 0, setup.u0,
                      setup.opts, fault_hook=hook)
    return block.k_last_rank - baseline.k_last_rank


def test_quadrature_preconditioner_suite():
    start = time.perf_counter()
    ok = True
    for kind, m in ((coll.GAUSS_LOBATTO, 3), (coll.GAUSS_LOBATTO, 5),
                    (coll.GAUSS_RADAU_RIGHT, 2), (coll.GAUSS_RADAU_RIGHT, 3),
                    (coll.GAUSS_RADAU_RIGHT, 5)):
        table = coll.make_table(kind, m)
        ok &= bool(np.all(np.diff(table.nodes) > 0))
        if kind == coll.GAUSS_LOBATTO:
            ok &= table.nodes[0] == 0.0 and table.nodes[-1] == 1.0
        else:
            ok &= table.nodes[0] > 0.0 and abs(table.nodes[-1] - 1.0) < 1e-14
        for j in range(m):
            approx = table.q_matrix @ table.nodes ** j
            ok &= np.max(np.abs(approx - table.nodes ** (j + 1) / (j + 1))) < 1e-12
        ok &= np.max(np.abs(table.q_matrix.sum(1) - table.nodes)) < 1e-12
        ok &= np.max(np.abs(np.cumsum(table.s_matrix, 0) - table.q_matrix)) < 1e-12
        qd_ie = coll.build_preconditioner(coll.IMPLICIT_EULER, table).qd
        ok &= np.allclose(qd_ie, np.tril(qd_ie))
        ok &= np.max(np.abs(qd_ie.sum(1) - table.nodes)) < 1e-12
        qd_lu = coll.build_preconditioner(coll.LU, table).qd
        ok &= np.allclose(qd_lu, np.tril(qd_lu))
        qd_ee = coll.build_preconditioner(coll.EXPLICIT_EULER, table).qd
        ok &= np.allclose(qd_ee, np.tril(qd_ee, -1))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1.0
    verdict(f"quadrature-suite ({elapsed:.2f}s)", ok)


def test_sweeper_oracle_equivalence():
    start = time.perf_counter()
    ok = True
    # Dahlquist: sweep iterates converge to the direct collocation solution
    table = coll.make_table(coll.GAUSS_LOBATTO, 3)
    qd = coll.build_preconditioner(coll.IMPLICIT_EULER, table)
    prob = pb.dahlquist(-1.0)
    u_star = sw.solve_collocation_direct(prob, np.array([1.0]), 0.5, table)
    level = sw.make_level(prob, table, qd, None, dt=0.5, t_left=0.0)
    sw.spread(level, prob, np.array([1.0]))
    for _ in range(40):
        sw.sweep(level, prob)
    ok &= np.max(np.abs(level.u - u_star)) < 1e-11

    # heat: same statement with the IMEX split
    table5 = coll.make_table(coll.GAUSS_LOBATTO, 5)
    qd5 = coll.build_preconditioner(coll.LU, table5)
    qe5 = coll.build_preconditioner(coll.EXPLICIT_EULER, table5)
    heat = pb.heat1d(0.5, 63)
    u0 = heat.initial_condition()
    u_star = sw.solve_collocation_direct(heat, u0, 0.5, table5)
    level = sw.make_level(heat, table5, qd5, qe5, dt=0.5, t_left=0.0)
    sw.spread(level, heat, u0)
    for _ in range(40):
        sw.sweep(level, heat)
    ok &= np.max(np.abs(level.u - u_star)) < 1e-11

    # matrix form vs literal node-to-node recursion on random data
    rng = np.random.default_rng(3)
    from test_sweeper import node_to_node_sweep
    for _ in range(10):
        lvl = sw.make_level(prob, table, qd, None, dt=0.5, t_left=0.0)
        lvl.u0 = rng.standard_normal(1)
        lvl.u[:] = rng.standard_normal((3, 1))
        sw.refresh_f(lvl, prob)
        twin = sw.LevelState(table=lvl.table, qd_impl=lvl.qd_impl, qd_expl=None,
                             dt=lvl.dt, t_left=lvl.t_left, u0=lvl.u0.copy(),
                             u=lvl.u.copy(), f_impl=lvl.f_impl.copy(),
                             f_expl=lvl.f_expl.copy(), tau=None)
        sw.sweep(lvl, prob)
        node_to_node_sweep(twin, prob)
        ok &= np.max(np.abs(lvl.u - twin.u)) < 1e-13
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5.0
    verdict(f"sweeper-oracle ({elapsed:.2f}s)", ok)


def test_serial_equivalence():
    start = time.perf_counter()
    ok = True
    # P=1 PFASST on two identical levels vs plain SDC with n_f+n_c sweeps
    from ftpit.controller import (Hierarchy, LevelSetup, PfasstOptions,
                                  SimulationSetup, make_ranks,
                                  pfasst_iteration, predictor)
    table = coll.make_table(coll.GAUSS_LOBATTO, 5)
    qd = coll.build_preconditioner(coll.LU, table)
    qe = coll.build_preconditioner(coll.EXPLICIT_EULER, table)
    prob = pb.heat1d(0.5, 63)
    level = LevelSetup(problem=prob, table=table, qd_impl=qd, qd_expl=qe)
    pair = make_transfer_pair(prob, prob, table.nodes, table.nodes)
    hierarchy = Hierarchy(levels=(level, level), pairs=(pair,))
    opts = PfasstOptions(tolerance=1e-13, k_max=10)
    ranks = make_ranks(hierarchy, 1, 0.5, 0)
    u0 = prob.initial_condition()
    predictor(ranks, hierarchy, u0, opts)

    oracle = sw.make_level(prob, table, qd, qe, dt=0.5, t_left=0.0)
    sw.spread(oracle, prob, u0)
    sw.sweep(oracle, prob)  # predictor's single coarse sweep
    for _ in range(5):
        pfasst_iteration(ranks, hierarchy, opts)
        sw.sweep(oracle, prob)
        sw.sweep(oracle, prob)
        ok &= np.max(np.abs(ranks[0].levels[0].u - oracle.u)) < 1e-13

    # FAS tau on identical levels vanishes
    fine = sw.make_level(prob, table, qd, qe, dt=0.5, t_left=0.0)
    coarse = sw.make_level(prob, table, qd, qe, dt=0.5, t_left=0.0, finest=False)
    sw.spread(fine, prob, u0)
    sw.sweep(fine, prob)
    restrict_level(fine, pair, coarse, prob)
    ok &= np.max(np.abs(compute_fas_tau(fine, coarse, pair))) < 1e-14
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5.0
    verdict(f"serial-equivalence ({elapsed:.2f}s)", ok)


def test_heat_prototype(heat_runs):
    start = time.perf_counter()
    _cfg, setup, baseline = heat_runs
    ok = baseline.converged
    k = baseline.k_last_rank
    ok &= 7 <= k <= 11
    k_two_corr = single_fault_k_add(setup, baseline, fl.TWO_SIDED_CORR, (7, 6))
    k_one = single_fault_k_add(setup, baseline, fl.ONE_SIDED, (7, 6))
    k_one_corr = single_fault_k_add(setup, baseline, fl.ONE_SIDED_CORR, (7, 6))
    ok &= k_two_corr <= 2
    ok &= k_one >= k_one_corr
    ok &= 3 <= k_one <= 6  # reference reports 4 or 5, one either way
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120.0
    verdict(
        f"heat-prototype (K={k}, two-corr={k_two_corr}, one={k_one}, "
        f"one-corr={k_one_corr}, {elapsed:.1f}s)", ok)


def test_advection_prototype(advection_runs):
    start = time.perf_counter()
    _cfg, setup, baseline = advection_runs
    ok = baseline.converged
    k = baseline.k_last_rank
    ok &= 9 <= k <= 13
    k_two_corr = single_fault_k_add(setup, baseline, fl.TWO_SIDED_CORR, (7, 6))
    ok &= k_two_corr <= 3
    k_one = single_fault_k_add(setup, baseline, fl.ONE_SIDED, (7, 6))
    ok &= 2 <= k_one <= 5  # reference reports 3 or 4, one either way
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120.0
    verdict(f"advection-prototype (K={k}, two-corr={k_two_corr}, one={k_one}, "
            f"{elapsed:.1f}s)", ok)


def test_heatmap_sweeps(heat_runs, advection_runs):
    start = time.perf_counter()
    ok = True
    summary = []
    for label, (cfg, setup, baseline) in (("heat", heat_runs),
                                          ("advection", advection_runs)):
        k_base = baseline.k_last_rank
        corr_cells, corr_strict = 0, 0
        for strategy in fl.ALL_STRATEGIES:
            k_adds = {}
            for step in range(setup.num_procs):
                for k_fault in range(1, k_base + 1):
                    k_adds[(step, k_fault)] = single_fault_k_add(
                        setup, baseline, strategy, (step, k_fault))
            values = np.array(list(k_adds.values()))
            if strategy == fl.RESTART_BLOCK:
                ok &= all(v == kf for (_s, kf), v in k_adds.items())
            else:
                ok &= values.min() >= -2 and values.max() <= 8
            if strategy in (fl.ONE_SIDED_CORR, fl.TWO_SIDED_CORR):
                ok &= all(v <= kf for (_s, kf), v in k_adds.items())
                corr_cells += len(k_adds)
                corr_strict += sum(1 for (_s, kf), v in k_adds.items() if v < kf)
            summary.append((label, strategy, values.min(), values.max()))
        ok &= corr_strict / corr_cells >= 0.95
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1800.0
    ranges = "; ".join(f"{l}/{s}:[{lo},{hi}]" for l, s, lo, hi in summary)
    verdict(f"heatmap-sweeps ({ranges}, {elapsed:.0f}s)", ok)


def test_overhead_model():
    start = time.perf_counter()
    ok = True
    m = oh.CostModel(num_procs=16, k_iterations=9, k_fault=6, k_add=1,
                     n_coarse=1, n_fine=1, gamma_coarse=0.1, gamma_fine=1.0,
                     n_rec=3, gamma_rec=0.0)
    ok &= abs(oh.t_no_fault(m) - 11.5) < 1e-12
    ok &= abs(oh.overhead_restart(m) - 8.2) < 1e-12
    ok &= abs(oh.overhead_recovery(m) - 1.4) < 1e-12
    ok &= abs(oh.efficiency_ratio(m).ratio - 8.2 / 1.4) < 1e-12
    rng = np.random.default_rng(99)
    for _ in range(1000):
        model = oh.CostModel(
            num_procs=int(rng.integers(1, 64)),
            k_iterations=int(rng.integers(1, 30)),
            k_fault=int(rng.integers(1, 20)),
            k_add=int(rng.integers(0, 15)),
            n_coarse=int(rng.integers(1, 4)),
            n_fine=int(rng.integers(1, 4)),
            gamma_coarse=float(rng.uniform(0.001, 1.0)),
            gamma_fine=float(rng.uniform(0.5, 10.0)),
            n_rec=int(rng.integers(0, 32)),
            gamma_rec=float(rng.uniform(0.0, 2.0)),
        )
        quotient = oh.overhead_restart(model) / oh.overhead_recovery(model)
        ok &= abs(oh.efficiency_ratio(model).ratio - quotient) \
            <= 1e-12 * abs(quotient)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1.0
    verdict(f"overhead-model ({elapsed:.2f}s)", ok)


def gray_scott_config():
    return RunConfig(problem="gray-scott", num_procs=8, num_nodes=3,
                     node_kind=coll.GAUSS_RADAU_RIGHT,
                     preconditioner=coll.LU, dofs=[129, 65], dt=2.0,
                     t_end=64.0, tolerance=1e-7, prolong_order=4, seed=2016,
                     fault_probability=0.03)


def test_gray_scott_stress():
    start = time.perf_counter()
    ok = True
    cfg = gray_scott_config()
    setup = build_simulation(cfg)
    baseline = run_simulation(setup)
    ok &= all(b.converged for b in baseline)
    counts = [k for b in baseline for k in b.k_per_rank]
    plan = fl.generate_fault_plan(fl.BERNOULLI, probability=cfg.fault_probability,
                                  seed=cfg.seed, baseline_counts=counts)
    ok &= len(plan.events) > 0
    outcomes = {}
    for strategy in fl.RECOVERY_STRATEGIES:
        hook = fl.make_fault_hook(plan, fl.RecoveryStrategy(strategy))
        results = run_simulation(setup, fault_hook=hook)
        ok &= all(b.converged for b in results)
        ok &= all(e["n_rec"] <= cfg.num_procs
                  for b in results for e in b.fault_events)
        k_adds = [r.k_last_rank - b.k_last_rank
                  for r, b in zip(results, baseline)]
        ok &= max(k_adds) <= 7
        drift = float(np.max(np.abs(results[-1].end_value
                                    - baseline[-1].end_value)))
        ok &= drift < 1e-4
        outcomes[strategy] = (k_adds, drift)
        # identical seed, identical outputs
        repeat = run_simulation(setup, fault_hook=fl.make_fault_hook(
            plan, fl.RecoveryStrategy(strategy)))
        ok &= all(np.array_equal(a.end_value, b.end_value)
                  and a.k_per_rank == b.k_per_rank
                  and a.residual_records == b.residual_records
                  for a, b in zip(results, repeat))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600.0
    digest = "; ".join(f"{s}:K_add={v[0]},drift={v[1]:.1e}"
                       for s, v in outcomes.items())
    verdict(f"gray-scott-stress ({digest}, {elapsed:.1f}s)", ok)


def test_determinism_byte_identical(tmp_path):
    cfg = {"problem": "heat", "num_procs": 4, "num_nodes": 3, "dofs": [31, 15],
           "dt": 0.5, "t_end": 2.0, "tolerance": 1e-9, "seed": 7,
           "strategy": "two-sided-corr", "fault_step": 1, "fault_iteration": 2}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["run", "--config", str(path), "--out", str(out)]) == 0
        outputs.append((
            (out / "residuals.csv").read_bytes(),
            (out / "summary.json").read_bytes(),
        ))
    ok = outputs[0] == outputs[1]
    verdict("determinism", ok)

"""Exit criteria for the package, one test per criterion.

Each test logs a PASS/FAIL line that is echoed in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest

from nonstat_vi import (
    BoundInputs,
    ExperimentConfig,
    Mdp,
    PeriodicPolicy,
    asymptotic_bounds,
    audit_trace_inequalities,
    build_tightness_instance,
    evaluate_periodic,
    extract_periodic_policy,
    loss,
    run_experiment,
    run_tightness,
    thm1_bound,
    thm3_bound,
)

from oracles import random_mdp_arrays, rollout_value

GRID = list(itertools.product([0.5, 0.9, 0.99], range(1, 9), [0.0, 0.1], [0.0, 1.0]))
AUDIT_SLACK = 1e-8


def garnet_config(trials=200, **kw):
    return ExperimentConfig(
        source="garnet",
        k=30,
        m_list=[1, 2, 5, 10, 30],
        errors={"kind": "random_span", "bound": 0.2},
        trials=trials,
        base_seed=2024,
        **kw,
    )


@pytest.fixture(scope="module")
def tightness_runs():
    start = time.perf_counter()
    runs = []
    for gamma, k, eps, delta in GRID:
        inst = build_tightness_instance(gamma, k, eps, delta)
        runs.append((inst, run_tightness(inst)))
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def garnet_run():
    start = time.perf_counter()
    result = run_experiment(garnet_config())
    return result, time.perf_counter() - start


def _log(log, n, ok, detail):
    log.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def test_c1_tightness_equality(tightness_runs, acceptance_log):
    runs, elapsed = tightness_runs
    worst, bar_ok = 0.0, True
    for inst, res in runs:
        bound = thm1_bound(BoundInputs(inst.mdp.gamma, inst.k, 1, inst.eps, inst.delta))
        worst = max(worst, abs(res.loss - bound) / max(1.0, bound))
        bar_ok &= bool(np.array_equal(res.policy, inst.bar_policy))
    spot = next(res for inst, res in runs
                if (inst.mdp.gamma, inst.k, inst.eps, inst.delta) == (0.5, 2, 0.1, 1.0))
    ok = worst <= 1e-6 and bar_ok and abs(spot.loss - 0.6) <= 1e-9 and elapsed < 5
    _log(acceptance_log, 1, ok,
         f"{len(runs)} instances, max rel gap {worst:.2e}, spot loss {spot.loss:.12g}, "
         f"{elapsed:.2f}s")
    assert bar_ok
    assert worst <= 1e-6
    assert abs(spot.loss - 0.6) <= 1e-9 and abs(spot.predicted_loss - 0.6) <= 1e-9
    assert elapsed < 5


def test_c2_periodic_bound_validity(garnet_run, acceptance_log):
    result, elapsed = garnet_run
    rows = result.rows
    worst = min(row["bound_thm3"] - row["loss"] for row in rows)
    ok = len(rows) == 1000 and worst >= -1e-8 and elapsed < 60
    _log(acceptance_log, 2, ok,
         f"{len(rows)} rows, min margin {worst:.4g}, {elapsed:.1f}s")
    assert len(rows) == 200 * 5
    assert all(row["n_states"] == 20 and row["n_actions"] == 4 for row in rows)
    assert all(row["eps_span"] <= 0.2 for row in rows)
    assert worst >= -1e-8
    assert elapsed < 60


def test_c3_m1_consistency(acceptance_log):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        b = BoundInputs(float(rng.uniform(0, 0.999)), int(rng.integers(1, 200)), 1,
                        float(rng.uniform(0, 10)), float(rng.uniform(0, 10)))
        t1, t3 = thm1_bound(b), thm3_bound(b)
        worst = max(worst, abs(t3 - t1) / abs(t1) if t1 else abs(t3))
    _log(acceptance_log, 3, worst <= 1e-12, f"max rel diff {worst:.2e}")
    assert worst <= 1e-12


def test_c4_improvement_factor(acceptance_log):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        g = float(rng.uniform(0, 0.999))
        k = int(rng.integers(1, 200))
        b = BoundInputs(g, k, int(rng.integers(1, k + 1)),
                        float(rng.uniform(0, 10)), float(rng.uniform(0, 10)))
        t1 = thm1_bound(b)
        if t1 == 0:
            continue
        factor = (1 - g) / (1 - g**b.m)
        worst = max(worst, abs(thm3_bound(b) / t1 - factor) / factor)
    _log(acceptance_log, 4, worst <= 1e-12, f"max rel diff {worst:.2e}")
    assert worst <= 1e-12


def test_c5_asymptotic_values(acceptance_log):
    a = asymptotic_bounds(0.9, eps_inf=1.0, eps_span=1.0)
    ok = abs(a.classic - 180) <= 1e-9 and abs(a.nonstat_limit - 9) <= 1e-9
    _log(acceptance_log, 5, ok, f"classic {a.classic:.12g}, nonstat {a.nonstat_limit:.12g}")
    assert a.classic == pytest.approx(180.0, rel=1e-12)
    assert a.nonstat_limit == pytest.approx(9.0, rel=1e-12)


def test_c6_periodic_rollout_oracle(acceptance_log):
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n, na = int(rng.integers(1, 11)), int(rng.integers(1, 5))
        p, r = random_mdp_arrays(rng, n, na, sparsity=0.4)
        gamma = float(rng.uniform(0.1, 0.95))
        cycle = [rng.integers(na, size=n) for _ in range(int(rng.integers(1, 6)))]
        v = evaluate_periodic(Mdp(p, r, gamma), PeriodicPolicy(tuple(cycle)))
        worst = max(worst, float(np.max(np.abs(v - rollout_value(p, r, gamma, cycle)))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 30
    _log(acceptance_log, 6, ok, f"max gap {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-6
    assert elapsed < 30


def test_c7_proof_audit(tightness_runs, garnet_run, acceptance_log):
    runs, _ = tightness_runs
    worst_slack, worst_eq = np.inf, 0.0
    for inst, res in runs:
        report = audit_trace_inequalities(
            inst.mdp, res.trace, res.v_star, range(1, inst.k + 1)
        )
        slacks = [s for _, s in report.value_error]
        slacks += list(report.recursion.values())
        slacks += [s for _, _, s in report.loss_bound.values()]
        worst_slack = min(worst_slack, min(slacks))
        worst_eq = max(worst_eq, abs(report.loss_bound[1][2]))
    garnet_ok = all(row["audit_ok"] for row in garnet_run[0].rows)
    ok = worst_slack >= -AUDIT_SLACK and worst_eq <= 1e-9 and garnet_ok
    _log(acceptance_log, 7, ok,
         f"min slack {worst_slack:.2e}, equality gap {worst_eq:.2e}, "
         f"garnet audits {'ok' if garnet_ok else 'FAILED'}")
    assert worst_slack >= -AUDIT_SLACK
    assert worst_eq <= 1e-9
    assert garnet_ok


def test_c8_nonstationary_helps(acceptance_log):
    inst = build_tightness_instance(0.5, 2, 0.1, 1.0)
    res = run_tightness(inst)
    l1 = loss(res.v_star, evaluate_periodic(inst.mdp, extract_periodic_policy(res.trace, 1)))
    l2 = loss(res.v_star, evaluate_periodic(inst.mdp, extract_periodic_policy(res.trace, 2)))
    b2 = thm3_bound(BoundInputs(0.5, 2, 2, 0.1, 1.0))
    ok = abs(l1 - 0.6) <= 1e-9 and abs(l2 - 0.3) <= 1e-9 and abs(b2 - 0.4) <= 1e-12 and l2 <= b2
    _log(acceptance_log, 8, ok, f"loss m=1 {l1:.12g}, loss m=2 {l2:.12g}, bound m=2 {b2:.12g}")
    assert l1 == pytest.approx(0.6, abs=1e-9)
    assert l2 == pytest.approx(0.3, abs=1e-9)
    assert b2 == pytest.approx(0.4, abs=1e-12)
    assert l2 <= b2


def test_c9_determinism(tmp_path, garnet_run, acceptance_log):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        run_experiment(garnet_config(trials=20, output=str(path)))
    a, b = (p.read_bytes() for p in paths)
    # the first 20 trials of the full run must match as well
    full = garnet_run[0].to_csv().encode().split(b"\r\n")
    prefix = b"\r\n".join(full[: 1 + 20 * 5]) + b"\r\n"
    ok = a == b and a == prefix
    _log(acceptance_log, 9, ok, f"{len(a)} bytes, identical={a == b}")
    assert a == b
    assert a == prefix

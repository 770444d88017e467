"""The ten acceptance criteria at their stated tolerances.

Each test records one ``criterion N: PASS|FAIL`` line, printed in the pytest
terminal summary.  Sweeps run at the production settings (n = 16, dt = 0.01,
T = 0.5, tol_rel = 1e-6) and are shared between criteria through module
fixtures.  Expect about seven minutes on one core.
"""
import sys
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fixedstress.biot import (
    BiotProblem,
    SolutionState,
    StoppingConfig,
    TuningSpec,
    TuningVariant,
    monolithic_step,
    run_monolithic,
    run_simulation,
)
from fixedstress.cases import NU_VALUES, make_case
from fixedstress.sweep import SweepConfig, find_optimal_omega, iterations_at, run_sweep, write_reports
from fixedstress.verification import convergence_study

pytestmark = pytest.mark.slow

CASES = ["1a", "1b", "1c", "2"]


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, ACCEPTANCE_LINES[n]


@pytest.fixture(scope="module")
def sweep_1a():
    return run_sweep(SweepConfig.for_case("1a"))


@pytest.fixture(scope="module")
def sweep_1b():
    return run_sweep(SweepConfig.for_case("1b", variations=(0.01, 0.49)))


@pytest.fixture(scope="module")
def sweep_1c():
    return run_sweep(SweepConfig.for_case("1c", variations=(0.1, 1000.0)))


@pytest.fixture(scope="module")
def sweep_2():
    return run_sweep(SweepConfig.for_case("2"))


def test_criterion_1_oracle_equivalence():
    """Each converged splitting state against monolithic_step from the same previous state.

    The deviation of two independently marched trajectories is reported too;
    it accumulates the per-step iteration error and is not the criterion.
    """
    cfg = StoppingConfig(tol_rel=1e-10)
    worst = drift = 0.0
    for case_id in CASES:
        case = make_case(case_id)
        for n in (2, 4):
            prob = BiotProblem.from_case(case, n)
            rep = run_simulation(case, TuningSpec(case.sweep_base), cfg, n=n, keep_states=True)
            assert rep.converged and len(rep.states) == 50
            prev = SolutionState.zeros(prob.layout)
            for fs, traj in zip(rep.states, run_monolithic(prob)):
                ref = monolithic_step(prev, prob, fs.t)
                for a, b, c in zip(fs.fields(), ref.fields(), traj.fields()):
                    worst = max(worst, np.linalg.norm(a - b) / np.linalg.norm(b))
                    drift = max(drift, np.linalg.norm(a - c) / np.linalg.norm(c))
                prev = fs
    record(1, worst <= 1e-8, f"max per-step relative deviation {worst:.2e} (limit 1e-8); trajectory drift {drift:.2e}")


@pytest.mark.xfail(
    strict=True,
    reason="case 1c at 0.1 mD with 2 lambda converges but 9 steps need up to 2141 iterations (cap 2000)",
)
def test_criterion_2_guaranteed_convergence_window():
    failures = []
    runs = 0
    for case_id in CASES:
        base = make_case(case_id)
        for v in base.variation:
            case = make_case(case_id, **{base.variation_axis: v})
            for spec in (TuningSpec(TuningVariant.TwoTimesDD, dimension=2), TuningSpec(TuningVariant.TwoLambda)):
                runs += 1
                if not run_simulation(case, spec).converged:
                    failures.append(f"{case_id} {base.variation_axis}={v} {spec.variant.value}")
    record(2, not failures, f"{runs - len(failures)}/{runs} runs converged at every step {failures or ''}")


def test_criterion_3_case_1a_optimum_window(sweep_1a):
    best = {nu: find_optimal_omega(sweep_1a, nu).omega for nu in NU_VALUES}
    ok = all(0.90 <= w <= 1.10 for w in best.values())
    record(3, ok, "omega* by nu: " + ", ".join(f"{nu:g}->{w:g}" for nu, w in best.items()))


def test_criterion_4_case_1a_monotone_in_nu(sweep_1a):
    its = [iterations_at(sweep_1a, nu, 1.0).iterations for nu in NU_VALUES]
    ok = all(a > b for a, b in zip(its, its[1:]))
    record(4, ok, f"iterations at omega=1: {its}")


def test_criterion_5_case_1b_shift(sweep_1b):
    soft = find_optimal_omega(sweep_1b, 0.01)
    at_one = iterations_at(sweep_1b, 0.01, 1.0)
    ratio = at_one.iterations / soft.iterations if at_one.converged else float("inf")
    stiff = find_optimal_omega(sweep_1b, 0.49)
    ok = 0.70 <= soft.omega <= 0.85 and ratio >= 2.0 and 0.90 <= stiff.omega <= 1.10
    record(
        5,
        ok,
        f"nu=0.01 omega*={soft.omega:g} ({soft.iterations} it), omega=1 -> {at_one.iterations} it, "
        f"ratio {ratio:.2f}; nu=0.49 omega*={stiff.omega:g}",
    )


def test_criterion_6_case_1c_permeability(sweep_1c):
    tight = find_optimal_omega(sweep_1c, 0.1).omega
    loose = find_optimal_omega(sweep_1c, 1000.0).omega
    record(6, tight > loose, f"omega*(0.1 mD)={tight:g}, omega*(1000 mD)={loose:g}")


@pytest.mark.xfail(
    strict=True,
    reason="optimum sits at 1.14 / 1.11 times the 2D base for nu = 0.01 / 0.1 on every mesh tried",
)
def test_criterion_7_case_2_two_dimensional(sweep_2):
    best = {nu: find_optimal_omega(sweep_2, nu).omega for nu in NU_VALUES}
    ok = all(0.90 <= w <= 1.10 for w in best.values())
    record(7, ok, "omega* by nu: " + ", ".join(f"{nu:g}->{w:g}" for nu, w in best.items()))


def test_criterion_8_mathematical_tuning_suboptimal(sweep_1a):
    best = find_optimal_omega(sweep_1a, 0.49)
    rep = run_simulation(make_case("1a", nu=0.49), TuningSpec(TuningVariant.TwoLambda))
    ratio = rep.accumulated_iterations / best.iterations
    record(8, rep.converged and ratio >= 1.2, f"2 lambda {rep.accumulated_iterations} it vs omega* {best.iterations} it, ratio {ratio:.3f}")


def test_criterion_9_manufactured_convergence():
    study = convergence_study((4, 8, 16, 32))
    orders = {k: study[f"{k}_order"][-1] for k in ("p_l2", "q_l2", "u_h1")}
    ok = all(o >= 0.9 for o in orders.values())
    record(9, ok, "orders on 16->32: " + ", ".join(f"{k} {o:.3f}" for k, o in orders.items()))


def test_criterion_10_deterministic_csv(sweep_1a, tmp_path):
    cfg = SweepConfig.for_case("1a")
    tables = [sweep_1a, run_sweep(cfg), run_sweep(cfg), run_sweep(replace(cfg, workers=4))]
    blobs = []
    for i, table in enumerate(tables):
        (path,) = [p for p in write_reports(table, tmp_path / f"run{i}") if p.suffix == ".csv"]
        blobs.append(path.read_bytes())
    ok = len(set(blobs)) == 1
    record(10, ok, f"{len(blobs)} sweeps (3 with 1 worker, 1 with 4 workers): {len(set(blobs))} distinct CSV file(s)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

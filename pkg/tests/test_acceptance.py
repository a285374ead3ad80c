"""Acceptance criteria, each run at its stated tolerance on the bundled configs."""
import time

import numpy as np
import pytest
from conftest import bundled, record_criterion

from helmscat.runner import run_experiment
from helmscat.scatmat import OperatorCache
from helmscat.selftest import run_all


def timed_run(name, cache=None):
    cfg = bundled(name)
    t0 = time.perf_counter()
    result = run_experiment(cfg, cache=cache if cache is not None else OperatorCache())
    return cfg, result, time.perf_counter() - t0


def test_criterion_1_manufactured_multibody():
    cfg, res, elapsed = timed_run("starfish4_k25_manufactured_N352")
    s = cfg.scatterers[0].discretization
    assert (cfg.kappa, s["N"], s["d"], cfg.eps, cfg.gmres_tol, len(cfg.scatterers)) == (25.0, 352, 0.08, 1e-8, 1e-9, 4)
    rep = res.report
    ok = rep.converged and rep.E_far <= 1e-7 and elapsed <= 120
    detail = f"E_far {rep.E_far:.2e} (<= 1e-7), {elapsed:.1f}s (<= 120s)"
    assert record_criterion("1 manufactured 4-starfish kappa=25", ok, detail)


def test_criterion_2_starfish_k1_row():
    cfg, res, elapsed = timed_run("starfish4_k1_N256")
    row = res.row()
    assert (row["N"], row["d"], cfg.eps) == (256, 0.1, 1e-10)
    ok = abs(row["N_skel"] - 39) <= 3 and row["E_inc"] <= 1e-8 and 15 <= row["K"] <= 300 and elapsed <= 60
    detail = f"N_skel {row['N_skel']} (39+-3), E_inc {row['E_inc']:.2e} (<= 1e-8), K {row['K']:.2f} ([15, 300]), {elapsed:.1f}s (<= 60s)"
    assert record_criterion("2 4-starfish kappa=1 N=256", ok, detail)


def test_criterion_3_spectral_convergence(shared_cache):
    errs = [timed_run(f"starfish4_k10_N{N}", shared_cache)[1].report.E_inc for N in (192, 256, 352)]
    ok = errs[1] <= errs[0] / 10 and errs[2] <= errs[1] / 10
    detail = "E_inc " + " -> ".join(f"{e:.2e}" for e in errs) + " (>= 10x per step)"
    assert record_criterion("3 4-starfish kappa=10 convergence", ok, detail)


def test_criterion_4_teardrops():
    _, res, _ = timed_run("teardrop8_m16")
    row = res.row()
    ok = row["N"] == 896 and row["E_inc"] <= 1e-5 and row["K"] <= 500
    detail = f"N {row['N']} (896), E_inc {row['E_inc']:.2e} (<= 1e-5), K {row['K']:.2f} (<= 500)"
    assert record_criterion("4 8-teardrop m=16", ok, detail)


def test_criterion_5_cavities(shared_cache):
    _, r16, _ = timed_run("cavity8_mseg16", shared_cache)
    _, r32, _ = timed_run("cavity8_mseg32", shared_cache)
    e16, e32 = r16.report.E_inc, r32.report.E_inc
    ok = r32.row()["N"] == 2688 and r32.report.converged and e32 <= 1e-4 and e32 <= 0.1 * e16
    detail = f"N {r32.row()['N']} (2688), converged {r32.report.converged}, E_inc {e32:.2e} (<= 1e-4, <= 0.1 x {e16:.2e})"
    assert record_criterion("5 8-cavity m_seg=32", ok, detail)


def test_criterion_6_ellipsoids():
    t0 = time.perf_counter()
    _, coarse, _ = timed_run("ellipsoid2_k5_N256")
    cfg, fine, _ = timed_run("ellipsoid2_k5_N1024")
    elapsed = time.perf_counter() - t0
    assert (cfg.kappa, fine.row()["N"], fine.row()["d"], cfg.eps) == (5.0, 1024, 0.1, 1e-6)
    e256, e1024 = coarse.report.E_inc, fine.report.E_inc
    ok = e1024 <= 1e-1 and e1024 <= 0.1 * e256 and elapsed <= 600
    detail = f"E_inc {e1024:.2e} (<= 1e-1, <= 0.1 x {e256:.2e}), {elapsed:.1f}s (<= 600s)"
    assert record_criterion("6 two ellipsoids kappa=5", ok, detail)


def test_criterion_7_iteration_counts(shared_cache):
    mv = {T: timed_run(f"scaling_T{T}", shared_cache)[1].report.matvec_count for T in (4, 8, 16)}
    fixed = [timed_run(f"iterations_starfish4_N{N}", shared_cache)[1].report.matvec_count for N in (256, 352)]
    ok = mv[4] <= 40 and mv[16] <= 120 and mv[4] < mv[8] < mv[16] and abs(fixed[0] - fixed[1]) <= 2
    detail = f"matvecs T=4/8/16 {mv[4]}/{mv[8]}/{mv[16]} (<= 40, increasing, <= 120); N=256/352 {fixed[0]}/{fixed[1]} (differ <= 2)"
    assert record_criterion("7 iteration counts", ok, detail)


def test_criterion_8_selftest():
    t0 = time.perf_counter()
    results = run_all(seed=0, out=lambda s: None)
    elapsed = time.perf_counter() - t0
    failed = [name for name, ok, _ in results if not ok]
    ok = not failed and elapsed <= 300
    detail = f"{len(results) - len(failed)}/{len(results)} suites pass, {elapsed:.1f}s (<= 300s)" + (f"; failed: {failed}" if failed else "")
    assert record_criterion("8 property suites", ok, detail)

"""Fast invariant checks run by ``helmscat selftest``.

Each check returns ``(passed, detail)``; ``run_all`` times and reports them.
"""
import time

import numpy as np

from .densela import column_id, gmres
from .fields import Monopoles
from .geometry2d import Contour2D, discretize_smooth
from .mfs import build_local_system, mfs_field, solve_local_dirichlet
from .multibody import BodySpec, build_problem, reconstruct_full, scatterer_field, solve_multibody
from .skeleton import build_B
from .specfun import Kernel, bessel_j0, bessel_y0


def check_kernel_symmetry(rng):
    worst = 0.0
    for dim in (2, 3):
        k = Kernel(dim, rng.uniform(0.5, 30))
        X = rng.uniform(-5, 5, (40, dim))
        Y = rng.uniform(-5, 5, (30, dim))
        worst = max(worst, np.max(np.abs(k.matrix(X, Y) - k.matrix(Y, X).T)))
    return worst == 0.0, f"max asymmetry {worst:.1e}"


def _deriv(f, x, h):
    # fourth-order central difference
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def check_wronskian(rng):
    x = rng.uniform(0.1, 50, 1000)
    h = 1e-4 * np.maximum(1, x)
    w = bessel_j0(x) * _deriv(bessel_y0, x, h) - _deriv(bessel_j0, x, h) * bessel_y0(x)
    err = np.max(np.abs(w * np.pi * x / 2 - 1))
    return err <= 1e-10, f"max relative Wronskian defect {err:.1e}"


def check_id_planted_rank(rng, trials=100):
    eps = 1e-8
    bad = []
    for t in range(trials):
        m, n = rng.integers(20, 60, 2)
        r = int(rng.integers(1, min(m, n) + 1))
        M = (rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))) @ (
            rng.standard_normal((r, n)) + 1j * rng.standard_normal((r, n))
        )
        f = column_id(M, eps)
        resid = np.linalg.norm(M - M[:, f.skeleton] @ f.coefficients) / np.linalg.norm(M)
        # incoming fields reuse the skeleton through the transpose
        tresid = np.linalg.norm(M.T - f.interp.conj() @ M.T[f.skeleton]) / np.linalg.norm(M)
        identity = np.array_equal(f.interp[f.skeleton], np.eye(f.rank))
        if max(resid, tresid) > 10 * eps or not identity or f.rank != r:
            bad.append(t)
    return not bad, f"{trials - len(bad)}/{trials} planted-rank IDs exact in rank, residuals and Z identity"


def check_gmres(rng):
    n = 60
    details = []
    ok = True
    for d in (1, 3, 7):
        lam = rng.standard_normal(d) + 1j * rng.standard_normal(d) + 3
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        A = Q @ np.diag(lam[rng.integers(0, d, n)]) @ Q.conj().T
        b = rng.standard_normal(n) + 0j
        res = gmres(lambda v: A @ v, b, tol=1e-12, max_iter=n)
        true = np.linalg.norm(b - A @ res.x) / np.linalg.norm(b)
        monotone = all(a >= b for a, b in zip(res.residual_history, res.residual_history[1:]))
        consistent = abs(true - res.final_residual) <= 1e-14 and true <= 1e-10
        ok &= res.converged and res.iterations <= d and monotone and consistent
        details.append(f"d={d}:{res.iterations}it")
    return ok, ", ".join(details)


def check_disk_mfs(rng):
    k = Kernel(2, 5.0)
    disc = discretize_smooth(Contour2D("circle"), 128, 0.25)
    sys = build_local_system(disc, k)
    y0 = np.array([0.2, 0.1])
    q, _ = solve_local_dirichlet(sys, k.matrix(disc.colloc, y0[None])[:, 0])
    th = 2 * np.pi * np.arange(64) / 64
    T = 3 * np.stack([np.cos(th), np.sin(th)], -1)
    exact = k.matrix(T, y0[None])[:, 0]
    err = np.max(np.abs(mfs_field(sys, q, T) - exact)) / np.max(np.abs(exact))
    return err <= 1e-10, f"max relative error {err:.1e}"


def check_loop_closure(rng):
    eps = 1e-10
    k = Kernel(2, 5.0)
    bodies = [BodySpec(Contour2D("circle", center=c), {"scheme": "smooth", "N": 128, "d": 0.25}) for c in ((0, 0), (4, 0.5))]
    gp = build_problem(bodies, k, eps)
    inc = Monopoles([[0.2, 0.1], [4.1, 0.3]], [1.0, 0.5 - 0.3j])
    rep = solve_multibody(gp, inc, 1e-13)
    worst = {"closure": 0.0, "proxy": 0.0, "compress": 0.0}
    for t, op in enumerate(gp.scatterers):
        qt = rep.q_hat[gp.block(t)]
        full = reconstruct_full(gp, t, rep.q_hat, inc, "physical")
        worst["closure"] = max(worst["closure"], np.linalg.norm(op.compress(full) - qt) / np.linalg.norm(qt))
        z = op.proxy_points()
        a = scatterer_field(gp, t, rep.q_hat, inc, z, "skeleton")
        b = scatterer_field(gp, t, rep.q_hat, inc, z, "mfs")
        worst["proxy"] = max(worst["proxy"], np.linalg.norm(a - b) / np.linalg.norm(b))
        B = build_B(op.proxy, op.disc, k)
        q = rng.standard_normal(op.disc.m) + 1j * rng.standard_normal(op.disc.m)
        Bq = B @ q
        worst["compress"] = max(worst["compress"], np.linalg.norm(B[:, op.skel.skeleton] @ op.compress(q) - Bq) / np.linalg.norm(Bq))
    ok = worst["closure"] <= 50 * eps and worst["proxy"] <= 10 * eps and worst["compress"] <= 10 * eps
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


CHECKS = (
    ("specfun: kernel symmetry", check_kernel_symmetry),
    ("specfun: Wronskian", check_wronskian),
    ("densela: planted-rank ID", check_id_planted_rank),
    ("densela: GMRES residuals and eigenvalue bound", check_gmres),
    ("mfs: disk manufactured solution", check_disk_mfs),
    ("scatmat/multibody: loop closure", check_loop_closure),
)


def run_all(seed=0, out=print):
    rng = np.random.default_rng(seed)
    results = []
    start = time.perf_counter()
    for name, check in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = check(rng)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
        out(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail}; {time.perf_counter() - t0:.2f}s)")
    out(f"selftest finished in {time.perf_counter() - start:.1f}s")
    return results

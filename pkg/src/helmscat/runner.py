"""Drive one configured experiment: build, solve, measure, write CSV files."""
import csv
import io
import logging
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError
from .fields import Monopoles, PlaneWave
from .geometry2d import Contour2D
from .geometry3d import Surface3D, rotation_matrix
from .multibody import MANUFACTURED, BodySpec, Reference, build_problem, compute_errors, eval_scattered, solve_multibody
from .scatmat import OperatorCache
from .specfun import Kernel

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("N", "d", "N_skel", "K", "E_far", "E_inc", "matvecs")
TIMING_COLUMNS = ("t_local", "t_solve", "t_matvec")


def make_shape(cfg, s):
    if cfg.dim == 2:
        return Contour2D(s.shape, s.params, s.center, s.rotation)
    return Surface3D(s.shape, s.params, s.center, rotation_matrix(s.rotation))


def make_bodies(cfg, disc_override=None, proxy_override=None):
    bodies = []
    for s in cfg.scatterers:
        disc = dict(disc_override) if disc_override is not None else dict(s.discretization)
        proxy = proxy_override if proxy_override is not None else s.proxy_points
        bodies.append(BodySpec(make_shape(cfg, s), disc, proxy))
    return bodies


def make_incoming(cfg, bodies=None):
    inc = cfg.incoming
    if inc["type"] == "plane_wave":
        return PlaneWave(inc["direction"])
    if inc["type"] == "monopoles":
        return Monopoles(np.array(inc["locations"], dtype=float).reshape(-1, cfg.dim), np.array(inc["strengths"]))
    # manufactured: one monopole near each body's interior anchor
    bodies = bodies if bodies is not None else make_bodies(cfg)
    rng = np.random.default_rng(cfg.seed)
    anchors = np.array([b.shape.interior_point for b in bodies])
    if inc["jitter"] > 0:
        step = rng.standard_normal(anchors.shape)
        step /= np.linalg.norm(step, axis=1, keepdims=True)
        anchors = anchors + inc["jitter"] * rng.uniform(0, 1, (len(bodies), 1)) * step
    for i, (b, a) in enumerate(zip(bodies, anchors)):
        if not b.shape.contains(a)[0]:
            raise ConfigError(f"incoming.jitter: manufactured monopole {i} leaves its scatterer")
    if inc["strengths"] is not None:
        strengths = np.array(inc["strengths"])
    else:
        strengths = rng.uniform(0.5, 1.5, len(bodies)) * np.exp(2j * np.pi * rng.uniform(0, 1, len(bodies)))
    return Monopoles(anchors, strengths)


class ExperimentResult:
    def __init__(self, cfg, problem, report, incoming, reference=None):
        self.cfg = cfg
        self.problem = problem
        self.report = report
        self.incoming = incoming
        self.reference = reference

    def row(self):
        gp, rep = self.problem, self.report
        first = gp.scatterers[0].disc
        row = {
            "N": first.m,
            "d": self.cfg.scatterers[0].discretization["d"],
            "N_skel": max(op.k for op in gp.scatterers),
            "K": rep.K,
            "E_far": rep.E_far,
            "E_inc": rep.E_inc,
            "matvecs": rep.matvec_count,
        }
        if self.cfg.timings:
            row.update({k: rep.timings[k] for k in TIMING_COLUMNS})
        return row

    def columns(self):
        return TABLE_COLUMNS + (TIMING_COLUMNS if self.cfg.timings else ())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6e}"


def format_table(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] if isinstance(r.get(c), str) else _fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def run_experiment(cfg, out_dir=None, condition=None, grid=None, cache=None):
    """Build, solve and measure one experiment; write its CSV files to ``out_dir``.

    ``condition`` and ``grid`` override the config's outputs.
    """
    cache = cache if cache is not None else OperatorCache()
    kernel = Kernel(cfg.dim, cfg.kappa)
    bodies = make_bodies(cfg)
    incoming = make_incoming(cfg, bodies)
    gp = build_problem(bodies, kernel, cfg.eps, cfg.rel_cutoff, cfg.proxy_radius_factor, cache)
    cond = cfg.condition_number if condition is None else condition
    report = solve_multibody(gp, incoming, cfg.gmres_tol, cfg.max_iter, condition=cond)

    ref = None
    if cfg.reference is not None:
        if cfg.reference["mode"] == "manufactured":
            ref = MANUFACTURED
        else:
            rb = make_bodies(cfg, cfg.reference["discretization"], cfg.reference.get("proxy_points"))
            ref_eps = cfg.reference.get("eps") or cfg.eps
            ref_gp = build_problem(rb, kernel, ref_eps, cfg.rel_cutoff, cfg.proxy_radius_factor, cache)
            ref_rep = solve_multibody(ref_gp, incoming, ref_eps / 10, cfg.max_iter)
            ref = Reference(ref_gp, ref_rep.q_hat)
        report.E_far, report.E_inc = compute_errors(gp, report.q_hat, incoming, ref)

    result = ExperimentResult(cfg, gp, report, incoming, ref)
    grid = grid if grid is not None else cfg.grid
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / cfg.table).write_text(format_table([result.row()], result.columns()))
        if grid is not None:
            emit_grid(gp, report.q_hat, incoming, grid, out / f"{cfg.name}_grid.csv")
    logger.info("%s: %s", cfg.name, result.row())
    return result


def grid_points(spec):
    if spec.nx < 1 or spec.ny < 1:
        raise ConfigError(f"grid: nx and ny must be >= 1, got {spec.nx} x {spec.ny}")
    xs = np.linspace(spec.xmin, spec.xmax, spec.nx)
    ys = np.linspace(spec.ymin, spec.ymax, spec.ny)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    return np.stack([X.ravel(), Y.ravel()], -1)


def total_field(gp, q_hat, incoming, points):
    """``u - v`` (scattered plus incident) at ``points``; NaN inside scatterers."""
    pts = np.atleast_2d(points)
    inside = np.zeros(len(pts), dtype=bool)
    for op in gp.scatterers:
        inside |= op.body_contains(pts)
    vals = np.full(len(pts), np.nan + 0j)
    if (~inside).any():
        outside = pts[~inside]
        vals[~inside] = eval_scattered(gp, q_hat, incoming, outside) - incoming.evaluate(outside, gp.kernel)
    return vals


def emit_grid(gp, q_hat, incoming, spec, path=None):
    """Write ``x, y, Re, Im`` of the total field; interior points get empty fields."""
    if gp.dim != 2:
        raise GeometryError("field grids are only available in 2D")
    pts = grid_points(spec)
    vals = total_field(gp, q_hat, incoming, pts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "y", "re", "im"))
    for (x, y), u in zip(pts, vals):
        if np.isnan(u.real):
            w.writerow((f"{x:.10g}", f"{y:.10g}", "", ""))
        else:
            w.writerow((f"{x:.10g}", f"{y:.10g}", f"{u.real:.15e}", f"{u.imag:.15e}"))
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text

"""The compressed multi-scatterer system ``(I + S G) q = S v`` and its fields.

Each scatterer contributes its skeleton points and scattering matrix.  The
only global coupling is ``G``, the kernel between skeleton points of
different scatterers; ``GlobalProblem.G_apply`` is the one place a fast
summation method would plug in.
"""
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .densela import DEFAULT_CUTOFF, cond2, gmres
from .errors import DomainError, GeometryError
from .fields import Monopoles
from .geometry2d import DEFAULT_RADIUS_FACTOR, TWO_PI, discretize_panels, discretize_smooth
from .geometry3d import discretize_surface, fibonacci_sphere
from .scatmat import OperatorCache, build_scatterer

logger = logging.getLogger(__name__)

DENSE_LIMIT = 50_000
PRECOMPUTE_LIMIT = 4_000  # above this G is re-evaluated block by block per matvec
COND_LIMIT = 20_000
FAR_RADIUS = 10.0
FAR_POINTS_2D = 64
FAR_POINTS_3D = 128
TEST_POINTS_2D = 200
TEST_GRID_3D = (20, 10)


class GlobalProblem:
    """Scatterer operators placed in space plus the kernel coupling them."""

    def __init__(self, scatterers, kernel, t_local=0.0):
        scatterers = list(scatterers)
        if not scatterers:
            raise ValueError("need at least one scatterer")
        for op in scatterers:
            if op.kernel != kernel:
                raise ValueError("all scatterers must share the problem kernel")
        self.scatterers = scatterers
        self.kernel = kernel
        self.t_local = t_local
        self.offsets = np.concatenate([[0], np.cumsum([op.k for op in scatterers])]).astype(int)
        self.all_skeleton_coords = np.vstack([op.skeleton_coords for op in scatterers])
        if self.size > DENSE_LIMIT:
            raise ValueError(f"{self.size} skeleton unknowns exceed the dense limit {DENSE_LIMIT}")
        self._check_separation()
        self._G = self.dense_G() if self.size <= PRECOMPUTE_LIMIT else None

    @property
    def T(self):
        return len(self.scatterers)

    @property
    def size(self):
        return int(self.offsets[-1])

    @property
    def dim(self):
        return self.kernel.dim

    def block(self, tau):
        return slice(self.offsets[tau], self.offsets[tau + 1])

    def _check_separation(self):
        for s, op in enumerate(self.scatterers):
            for t, other in enumerate(self.scatterers):
                if s != t and np.any(op.proxy_contains(other.colloc)):
                    raise GeometryError(
                        f"proxy surface of scatterer {s} encloses collocation points of scatterer {t}; "
                        "move the bodies apart or shrink the proxy radius"
                    )

    def dense_G(self):
        G = np.zeros((self.size, self.size), dtype=complex)
        for t in range(self.T):
            xt = self.scatterers[t].skeleton_coords
            for s in range(t + 1, self.T):
                blk = self.kernel.matrix(xt, self.scatterers[s].skeleton_coords)
                G[self.block(t), self.block(s)] = blk
                G[self.block(s), self.block(t)] = blk.T
        return G

    def G_rows(self, tau, q):
        """``(G q)`` restricted to the skeleton of scatterer ``tau``."""
        if self._G is not None:
            return self._G[self.block(tau)] @ q
        out = np.zeros(self.scatterers[tau].k, dtype=complex)
        xt = self.scatterers[tau].skeleton_coords
        for s, op in enumerate(self.scatterers):
            if s != tau:
                out += self.kernel.matrix(xt, op.skeleton_coords) @ q[self.block(s)]
        return out

    def G_apply(self, q):
        if self._G is not None:
            return self._G @ q
        return np.concatenate([self.G_rows(t, q) for t in range(self.T)])

    def far_targets(self):
        """Points on a radius-10 circle (sphere) around the centroid of the body centers."""
        center = np.mean([np.asarray(op.disc.shape.center) + op.shift for op in self.scatterers], axis=0)
        if self.dim == 2:
            th = TWO_PI * np.arange(FAR_POINTS_2D) / FAR_POINTS_2D
            return center + FAR_RADIUS * np.stack([np.cos(th), np.sin(th)], -1)
        return center + FAR_RADIUS * fibonacci_sphere(FAR_POINTS_3D)

    def test_points(self, tau):
        """Fixed boundary points of scatterer ``tau``, uniform and half-offset in parameter."""
        op = self.scatterers[tau]
        shape = op.disc.shape
        if self.dim == 2:
            t = TWO_PI * (np.arange(TEST_POINTS_2D) + 0.5) / TEST_POINTS_2D
            return shape.position(t) + op.shift
        u, v = shape.param_grid(*TEST_GRID_3D, offset=0.5)
        return shape.position(u, v) + op.shift


@dataclass
class SolveReport:
    q_hat: np.ndarray
    matvec_count: int
    residual_history: list
    converged: bool
    final_residual: float
    E_far: float = None
    E_inc: float = None
    K: float = None
    timings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Reference:
    """A solved problem used as the reference in self-reference error mode."""

    problem: GlobalProblem
    q_hat: np.ndarray


MANUFACTURED = "manufactured"


def _check_q(gp, q_hat):
    q_hat = np.asarray(q_hat, dtype=complex)
    if q_hat.shape != (gp.size,):
        raise ValueError(f"expected {gp.size} skeleton charges, got shape {q_hat.shape}")
    return q_hat


def apply_global(gp, q_hat):
    q_hat = _check_q(gp, q_hat)
    Gq = gp.G_apply(q_hat)
    out = q_hat.copy()
    for t, op in enumerate(gp.scatterers):
        out[gp.block(t)] += op.S @ Gq[gp.block(t)]
    return out


def assemble_rhs(gp, incoming):
    """Effective skeleton charges ``Z^* C A^+ v_tau`` for every scatterer."""
    return np.concatenate([op.effective_charges(incoming.evaluate(op.colloc, gp.kernel)) for op in gp.scatterers])


def global_matrix(gp):
    if gp.size > COND_LIMIT:
        raise ValueError(f"refusing to materialize a {gp.size}x{gp.size} system (limit {COND_LIMIT})")
    M = gp._G if gp._G is not None else gp.dense_G()
    M = np.vstack([op.S @ M[gp.block(t)] for t, op in enumerate(gp.scatterers)])
    M[np.diag_indices_from(M)] += 1
    return M


def global_condition_number(gp):
    return cond2(global_matrix(gp))


def solve_multibody(gp, incoming, gmres_tol=1e-10, max_iter=500, reference=None, condition=False):
    """GMRES on ``apply_global``; non-convergence is flagged, not raised.

    With ``reference`` (``"manufactured"`` or a ``Reference``) the error
    metrics are filled in; ``condition=True`` also computes ``K``.
    """
    t0 = time.perf_counter()
    rhs = assemble_rhs(gp, incoming)
    mv_time = [0.0]

    def matvec(x):
        t = time.perf_counter()
        y = apply_global(gp, x)
        mv_time[0] += time.perf_counter() - t
        return y

    if not np.any(rhs):
        q_hat = np.zeros(gp.size, dtype=complex)
        report = SolveReport(q_hat, 0, [0.0], True, 0.0)
    else:
        res = gmres(matvec, rhs, tol=gmres_tol, max_iter=max_iter)
        report = SolveReport(res.x, res.iterations, res.residual_history, res.converged, res.final_residual)
        if not res.converged:
            logger.warning("global solve did not reach tol %.1e in %d matvecs", gmres_tol, res.iterations)
    t_solve = time.perf_counter() - t0
    report.timings = {
        "t_local": gp.t_local,
        "t_solve": t_solve,
        "t_matvec": mv_time[0] / max(report.matvec_count, 1),
    }
    if reference is not None:
        report.E_far, report.E_inc = compute_errors(gp, report.q_hat, incoming, reference)
    if condition:
        report.K = global_condition_number(gp)
    return report


def reconstruct_full(gp, tau, q_hat, incoming, where="physical"):
    """Full source strengths of scatterer ``tau`` on its boundary or its MFS surface."""
    if not isinstance(tau, (int, np.integer)) or not 0 <= tau < gp.T:
        raise IndexError(f"scatterer index must lie in [0, {gp.T}), got {tau!r}")
    if where not in ("physical", "mfs"):
        raise ValueError(f"where must be 'physical' or 'mfs', got {where!r}")
    q_hat = _check_q(gp, q_hat)
    op = gp.scatterers[tau]
    w = incoming.evaluate(op.colloc, gp.kernel) - op.skel.U @ gp.G_rows(tau, q_hat)
    q_mfs = op.mfs_strengths(w)
    return q_mfs if where == "mfs" else op.translate_sources(q_mfs)


def scatterer_field(gp, tau, q_hat, incoming, targets, representation="auto", _mfs=None):
    """Outgoing field of scatterer ``tau`` alone.

    ``auto`` uses the skeleton charges outside the proxy surface and the
    reconstructed MFS sources inside it.
    """
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    op = gp.scatterers[tau]
    if representation == "skeleton":
        near = np.zeros(len(x), dtype=bool)
    elif representation == "mfs":
        near = np.ones(len(x), dtype=bool)
    elif representation == "auto":
        near = op.proxy_contains(x)
    else:
        raise ValueError(f"unknown representation {representation!r}")
    u = np.zeros(len(x), dtype=complex)
    if not near.all():
        u[~near] = gp.kernel.apply(x[~near], op.skeleton_coords, q_hat[gp.block(tau)])
    if near.any():
        q_mfs = _mfs if _mfs is not None else reconstruct_full(gp, tau, q_hat, incoming, "mfs")
        u[near] = gp.kernel.apply(x[near], op.sources, q_mfs)
    return u


def eval_scattered(gp, q_hat, incoming, targets):
    """Total scattered field at exterior targets."""
    q_hat = _check_q(gp, q_hat)
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    for t, op in enumerate(gp.scatterers):
        inside = op.body_contains(x)
        if inside.any():
            raise DomainError(f"{int(inside.sum())} target(s) lie inside scatterer {t}")
    u = np.zeros(len(x), dtype=complex)
    for t in range(gp.T):
        u += scatterer_field(gp, t, q_hat, incoming, x)
    return u


def incoming_on_boundary(gp, q_hat, incoming):
    """``w_tau = v - sum_{sigma != tau} u_sigma`` at each scatterer's test points."""
    q_hat = _check_q(gp, q_hat)
    out = []
    for t in range(gp.T):
        pts = gp.test_points(t)
        w = incoming.evaluate(pts, gp.kernel)
        for s in range(gp.T):
            if s != t:
                w = w - scatterer_field(gp, s, q_hat, incoming, pts)
        out.append(w)
    return out


def _owner(gp, locations):
    owner = np.full(len(locations), -1)
    for t, op in enumerate(gp.scatterers):
        owner[op.body_contains(locations)] = t
    return owner


def compute_errors(gp, q_hat, incoming, reference=MANUFACTURED):
    """``(E_far, E_inc)``: max relative errors at far targets and in ``w_tau``."""
    q_hat = _check_q(gp, q_hat)
    targets = gp.far_targets()
    u = eval_scattered(gp, q_hat, incoming, targets)
    w = incoming_on_boundary(gp, q_hat, incoming)
    if isinstance(reference, str):
        if reference != MANUFACTURED:
            raise ValueError(f"unknown reference mode {reference!r}")
        if not isinstance(incoming, Monopoles):
            raise ValueError("manufactured reference needs a monopole incoming field")
        owner = _owner(gp, incoming.locations)
        if np.any(owner < 0):
            raise ValueError("manufactured monopoles must all lie inside scatterers")
        u_ref = incoming.evaluate(targets, gp.kernel)
        w_ref = [incoming.subset(owner == t).evaluate(gp.test_points(t), gp.kernel) for t in range(gp.T)]
    elif isinstance(reference, Reference):
        ref = reference.problem
        if ref.T != gp.T:
            raise ValueError(f"reference has {ref.T} scatterers, problem has {gp.T}")
        u_ref = eval_scattered(ref, reference.q_hat, incoming, targets)
        w_ref = incoming_on_boundary(ref, reference.q_hat, incoming)
    else:
        raise TypeError(f"reference must be {MANUFACTURED!r} or a Reference, got {type(reference).__name__}")
    e_far = float(np.max(np.abs(u - u_ref)) / np.max(np.abs(u_ref)))
    w_all, w_ref_all = np.concatenate(w), np.concatenate(w_ref)
    e_inc = float(np.max(np.abs(w_all - w_ref_all)) / np.max(np.abs(w_ref_all)))
    return e_far, e_inc


# -- construction --------------------------------------------------------------


@dataclass(frozen=True)
class BodySpec:
    """A shape placed in space plus its discretization.

    ``disc`` holds ``scheme`` (``smooth``, ``panels`` or ``surface``) and the
    scheme's parameters: ``N``/``d``; ``m_panels``/``p_panel``/``n_refine``/``d``;
    or ``n_u``/``n_v``/``d``.
    """

    shape: object
    disc: dict
    proxy_points: int = None


def discretize(shape, disc):
    scheme = disc.get("scheme")
    if scheme == "smooth":
        return discretize_smooth(shape, disc["N"], disc["d"])
    if scheme == "panels":
        return discretize_panels(shape, disc["m_panels"], disc.get("p_panel", 16), disc.get("n_refine", 0), disc["d"])
    if scheme == "surface":
        return discretize_surface(shape, disc["n_u"], disc["n_v"], disc["d"])
    raise GeometryError(f"unknown discretization scheme {scheme!r}; allowed: smooth, panels, surface")


def build_problem(
    bodies,
    kernel,
    eps,
    rel_cutoff=DEFAULT_CUTOFF,
    radius_factor=DEFAULT_RADIUS_FACTOR,
    cache=None,
):
    """Build (or reuse) every scatterer operator and assemble the global problem.

    Operators are built for the shape at the origin and then moved, so
    translated copies of one body share all their matrices.
    """
    cache = cache if cache is not None else OperatorCache()
    t0 = time.perf_counter()
    ops = []
    for body in bodies:
        shape = body.shape
        center = np.asarray(shape.center, dtype=float)
        if len(center) != kernel.dim:
            raise GeometryError(f"{kernel.dim}D kernel given a {len(center)}D body")
        canonical = replace(shape, center=tuple(np.zeros(kernel.dim)))
        key = {
            "kind": shape.kind,
            "params": shape.params,
            "rotation": np.asarray(shape.rotation),
            "disc": body.disc,
            "proxy_points": body.proxy_points,
            "kernel": [kernel.dim, kernel.kappa],
            "eps": eps,
            "cutoff": rel_cutoff,
            "radius_factor": radius_factor,
        }

        def builder(canonical=canonical, body=body):
            d = discretize(canonical, body.disc)
            return build_scatterer(d, kernel, eps, rel_cutoff, radius_factor, body.proxy_points)

        ops.append(cache.get_or_build(key, builder).translated(center))
    t_local = time.perf_counter() - t0
    logger.info("built %d scatterer operators in %.2fs (%d reused)", len(ops), t_local, cache.hits)
    return GlobalProblem(ops, kernel, t_local=t_local)

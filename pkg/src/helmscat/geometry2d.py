"""Parametrized 2D scatterer contours and their MFS discretizations.

Every contour is traversed counter-clockwise for ``t`` in ``[0, 2*pi)``,
so the inward normal is the tangent rotated by +90 degrees.  Piecewise
shapes (C-shape, rod) split the parameter range into segments whose
lengths follow their panel-allocation ratios.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

TWO_PI = 2 * np.pi
SHAPE_KINDS = ("circle", "ellipse", "starfish", "teardrop", "cshape", "rod")

_DEFAULTS = {
    "circle": {"radius": 1.0},
    "ellipse": {"a": 1.0, "b": 0.5},
    "starfish": {"scale": 1.0},
    "teardrop": {"scale": 1.0},
    "cshape": {"outer_radius": 1.0, "inner_radius": 0.6, "half_opening": np.pi / 6},
    "rod": {"length": 1.6, "cap_radius": 0.2},
}

# fraction of base panels per segment, in traversal order
_SEGMENT_RATIOS = {
    "cshape": (2 / 5, 3 / 20, 3 / 10, 3 / 20),
    "rod": (4 / 11, 3 / 22, 4 / 11, 3 / 22),
}

POLYGON_POINTS = 4096
MIN_PANEL_LENGTH = 1e-14


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Contour2D:
    kind: str
    params: dict = field(default_factory=dict)
    center: tuple = (0.0, 0.0)
    rotation: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise GeometryError(f"unknown shape kind {self.kind!r}; allowed: {', '.join(SHAPE_KINDS)}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise GeometryError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged = {**_DEFAULTS[self.kind], **self.params}
        for name, val in merged.items():
            if not np.isfinite(val) or (name != "half_opening" and val <= 0):
                raise GeometryError(f"{self.kind}.{name} must be positive and finite, got {val}")
        if self.kind == "cshape":
            if merged["inner_radius"] >= merged["outer_radius"]:
                raise GeometryError("cshape needs inner_radius < outer_radius")
            if not 0 < merged["half_opening"] < np.pi / 2:
                raise GeometryError("cshape half_opening must lie in (0, pi/2)")
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "rotation", float(self.rotation))

    # -- parametrization ---------------------------------------------------

    @property
    def segment_ratios(self):
        return _SEGMENT_RATIOS.get(self.kind, (1.0,))

    @property
    def segment_breaks(self):
        """Parameter values bounding the segments, ``[0, ..., 2*pi]``."""
        return TWO_PI * np.concatenate([[0.0], np.cumsum(self.segment_ratios)])

    @property
    def corner_params(self):
        """Parameters where the curve loses smoothness (refinement targets)."""
        if self.kind == "teardrop":
            return (0.0,)
        if self.kind in _SEGMENT_RATIOS:
            return tuple(self.segment_breaks[:-1])
        return ()

    @property
    def kink_params(self):
        """Subset of corners where the tangent itself jumps."""
        return (0.0,) if self.kind == "teardrop" else ()

    def _local(self, t):
        """Position and d/dt derivative before rotation/translation."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "circle":
            r = p["radius"]
            return r * np.stack([np.cos(t), np.sin(t)], -1), r * np.stack([-np.sin(t), np.cos(t)], -1)
        if self.kind == "ellipse":
            a, b = p["a"], p["b"]
            return np.stack([a * np.cos(t), b * np.sin(t)], -1), np.stack([-a * np.sin(t), b * np.cos(t)], -1)
        if self.kind == "starfish":
            s = p["scale"]
            f = s * (81 / 101 - 20 / 101 * np.cos(5 * t))
            df = s * (100 / 101 * np.sin(5 * t))
            pos = np.stack([f * np.cos(t), f * np.sin(t)], -1)
            der = np.stack([df * np.cos(t) - f * np.sin(t), df * np.sin(t) + f * np.cos(t)], -1)
            return pos, der
        if self.kind == "teardrop":
            return self._teardrop(t)
        return self._piecewise(t)

    def _teardrop(self, t):
        s = self.params["scale"]
        pi = np.pi
        # expand about the corner from whichever side is nearer, avoiding cancellation
        u = np.where(t > pi, t - TWO_PI, t)
        neg = t > pi
        x = np.where(neg, 1 + 4 / pi * u + 2 / pi**2 * u**2, 1 - 4 / pi * u + 2 / pi**2 * u**2)
        y = np.where(
            neg,
            4 / pi * u + 6 / pi**2 * u**2 + 2 / pi**3 * u**3,
            4 / pi * u - 6 / pi**2 * u**2 + 2 / pi**3 * u**3,
        )
        dx = np.where(neg, 4 / pi + 4 / pi**2 * u, -4 / pi + 4 / pi**2 * u)
        dy = np.where(neg, 4 / pi + 12 / pi**2 * u + 6 / pi**3 * u**2, 4 / pi - 12 / pi**2 * u + 6 / pi**3 * u**2)
        return s * np.stack([x, y], -1), s * np.stack([dx, dy], -1)

    def _segment_funcs(self):
        """(position(s), d position/ds) for each segment, s in [0, 1]."""
        p = self.params
        if self.kind == "rod":
            L, r = p["length"], p["cap_radius"]
            h = L / 2

            def line(a, b):
                a, b = np.asarray(a, float), np.asarray(b, float)
                return lambda s: (a + np.multiply.outer(s, b - a), np.broadcast_to(b - a, np.shape(s) + (2,)))

            def cap(cx, th0):
                c = np.array([cx, 0.0])

                def f(s):
                    th = th0 + np.pi * s
                    pos = c + r * np.stack([np.cos(th), np.sin(th)], -1)
                    return pos, np.pi * r * np.stack([-np.sin(th), np.cos(th)], -1)

                return f

            return [line((-h, -r), (h, -r)), cap(h, -np.pi / 2), line((h, r), (-h, r)), cap(-h, np.pi / 2)]

        Ro, Ri, al = p["outer_radius"], p["inner_radius"], p["half_opening"]
        rc, cm = (Ro - Ri) / 2, (Ro + Ri) / 2

        def arc(R, th0, th1):
            def f(s):
                th = th0 + (th1 - th0) * s
                pos = R * np.stack([np.cos(th), np.sin(th)], -1)
                return pos, (th1 - th0) * R * np.stack([-np.sin(th), np.cos(th)], -1)

            return f

        def cap(angle, sign):
            # sign=+1: outer -> inner bulging toward increasing angle; -1: inner -> outer
            er = np.array([np.cos(angle), np.sin(angle)])
            et = np.array([-np.sin(angle), np.cos(angle)])
            c = cm * er

            def f(s):
                ph = np.pi * np.asarray(s, float)
                co, si = np.cos(ph)[..., None], np.sin(ph)[..., None]
                pos = c + sign * rc * (co * er + si * et)
                der = sign * np.pi * rc * (-si * er + co * et)
                return pos, der

            return f

        return [arc(Ro, al, TWO_PI - al), cap(-al, 1.0), arc(Ri, TWO_PI - al, al), cap(al, -1.0)]

    def _piecewise(self, t):
        t = np.asarray(t, dtype=float)
        breaks = self.segment_breaks
        funcs = self._segment_funcs()
        tt = np.mod(t, TWO_PI)
        idx = np.clip(np.searchsorted(breaks, tt, side="right") - 1, 0, len(funcs) - 1)
        pos = np.empty(tt.shape + (2,))
        der = np.empty(tt.shape + (2,))
        for i, f in enumerate(funcs):
            mask = idx == i
            if not np.any(mask):
                continue
            width = breaks[i + 1] - breaks[i]
            s = (tt[mask] - breaks[i]) / width
            pp, dd = f(s)
            pos[mask] = pp
            der[mask] = dd / width
        return pos, der

    def position(self, t):
        pos, _ = self._local(t)
        return pos @ _rot(self.rotation).T + np.asarray(self.center)

    def derivative(self, t):
        _, der = self._local(t)
        return der @ _rot(self.rotation).T

    def inward_normal(self, t):
        der = self.derivative(t)
        n = np.stack([-der[..., 1], der[..., 0]], -1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def polygon(self, n=POLYGON_POINTS):
        t = np.union1d(TWO_PI * np.arange(n) / n, np.asarray(self.corner_params, float))
        return self.position(t)

    def contains(self, points, n=POLYGON_POINTS):
        """Ray-crossing interiority test against an ``n``-vertex polygon."""
        return points_in_polygon(np.atleast_2d(points), self.polygon(n))

    @property
    def bounding_radius(self):
        return float(np.max(np.linalg.norm(self.polygon() - np.asarray(self.center), axis=1)))

    @property
    def interior_point(self):
        """A point well inside the body (the C-shape's center is not)."""
        local = np.zeros(2)
        if self.kind == "cshape":
            local[0] = -(self.params["outer_radius"] + self.params["inner_radius"]) / 2
        return _rot(self.rotation) @ local + np.asarray(self.center)


def points_in_polygon(points, poly):
    """Even-odd ray casting along +x; ``poly`` is an (n, 2) closed loop."""
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < xcross)
    return np.count_nonzero(hits, axis=1) % 2 == 1


def eval_contour(c, t):
    """Position and inward unit normal of ``c`` at parameter ``t``."""
    t = float(t)
    if np.mod(t, TWO_PI) in c.kink_params:
        raise GeometryError(f"normal undefined at corner parameter t={t}")
    return c.position(t), c.inward_normal(t)


@dataclass(frozen=True)
class Discretization:
    """Collocation points on the boundary and MFS sources inside it.

    Parameter arrays are ``(m,)`` in 2D and ``(m, 2)`` in 3D.
    """

    shape: object
    colloc: np.ndarray
    colloc_params: np.ndarray
    sources: np.ndarray
    source_params: np.ndarray
    inward_normals: np.ndarray
    d_local: np.ndarray
    panel_index: np.ndarray = None
    weights: np.ndarray = None
    panels: np.ndarray = None
    corner_params: tuple = ()

    @property
    def m(self):
        return len(self.colloc)

    @property
    def n(self):
        return len(self.sources)

    @property
    def dim(self):
        return self.colloc.shape[1]


def _check_sources(shape, colloc, sources):
    inside = shape.contains(sources)
    if not np.all(inside):
        bad = int(np.sum(~inside))
        raise GeometryError(f"{bad} MFS source(s) escape the region enclosed by the {shape.kind} boundary")
    _check_distinct(sources, "MFS sources")
    _check_distinct(colloc, "collocation points")


def _check_distinct(pts, what, tol=1e-12):
    if len(pts) < 2:
        return
    from scipy.spatial import cKDTree

    pairs = cKDTree(pts).query_pairs(tol)
    if pairs:
        raise GeometryError(f"{what} collide (min pairwise distance < {tol})")


def discretize_smooth(c, N, d):
    """Equispaced-in-parameter collocation (N points) and N/2 MFS sources."""
    if N < 4 or N % 2:
        raise GeometryError(f"N must be an even integer >= 4, got {N}")
    if not d > 0:
        raise GeometryError(f"MFS distance d must be positive, got {d}")
    t = TWO_PI * np.arange(N) / N
    ts = 2 * TWO_PI * np.arange(N // 2) / N
    x = c.position(t)
    nrm = c.inward_normal(ts)
    y = c.position(ts) + d * nrm
    _check_sources(c, x, y)
    return Discretization(
        shape=c,
        colloc=x,
        colloc_params=t,
        sources=y,
        source_params=ts,
        inward_normals=nrm,
        d_local=np.full(len(ts), float(d)),
        corner_params=c.corner_params,
    )


def allocate_panels(ratios, total):
    """Integer panel counts per segment by largest remainder, each >= 1."""
    raw = np.asarray(ratios) * total
    counts = np.maximum(np.floor(raw).astype(int), 1)
    order = np.argsort(-(raw - np.floor(raw)), kind="stable")
    i = 0
    while counts.sum() < total:
        counts[order[i % len(order)]] += 1
        i += 1
    if counts.sum() > total:
        raise GeometryError(f"cannot place {total} panels on {len(ratios)} segments")
    return counts


def panel_breakpoints(c, m_panels, n_refine):
    """Panel endpoints ``(a, b)`` after dyadic refinement toward each corner."""
    breaks = c.segment_breaks
    counts = allocate_panels(c.segment_ratios, m_panels)
    base = []
    for (t0, t1), cnt in zip(zip(breaks[:-1], breaks[1:]), counts):
        edges = np.linspace(t0, t1, cnt + 1)
        base.extend(zip(edges[:-1], edges[1:]))
    corners = [float(k) for k in c.corner_params] + ([TWO_PI] if 0.0 in c.corner_params else [])

    def at_corner(t):
        return any(abs(t - k) < 1e-12 for k in corners)

    panels = []
    for a, b in base:
        left, right = at_corner(a), at_corner(b)
        if n_refine == 0 or not (left or right):
            panels.append((a, b))
            continue
        if left and right:
            mid = 0.5 * (a + b)
            panels.extend(_dyadic(a, mid, n_refine, toward_left=True))
            panels.extend(_dyadic(mid, b, n_refine, toward_left=False))
        else:
            panels.extend(_dyadic(a, b, n_refine, toward_left=left))
    panels = np.array(panels)
    short = panels[:, 1] - panels[:, 0]
    if short.min() < MIN_PANEL_LENGTH:
        raise GeometryError(
            f"dyadic refinement collapses panels to parameter length {short.min():.2e} "
            f"(< {MIN_PANEL_LENGTH}); reduce n_refine"
        )
    return panels


def _dyadic(a, b, levels, toward_left):
    h = b - a
    if toward_left:
        cuts = [a] + [a + h * 2.0 ** (-j) for j in range(levels, -1, -1)]
    else:
        cuts = [b - h * 2.0 ** (-j) for j in range(0, levels + 1)] + [b]
    return list(zip(cuts[:-1], cuts[1:]))


def discretize_panels(c, m_panels, p_panel=16, n_refine=0, d=0.1):
    """Gauss-Legendre panel discretization with dyadic corner refinement.

    Each panel carries ``p_panel`` collocation nodes and ``p_panel // 2``
    MFS sources; sources sit at ``min(d, arclength / 2)`` inside the panel.
    """
    if m_panels < 2:
        raise GeometryError(f"need at least 2 base panels, got {m_panels}")
    if p_panel < 2 or p_panel % 2:
        raise GeometryError(f"p_panel must be even and >= 2, got {p_panel}")
    if n_refine < 0:
        raise GeometryError("n_refine must be >= 0")
    if not d > 0:
        raise GeometryError(f"MFS distance d must be positive, got {d}")

    panels = panel_breakpoints(c, m_panels, n_refine)
    xi, wi = np.polynomial.legendre.leggauss(p_panel)
    xs, _ = np.polynomial.legendre.leggauss(p_panel // 2)
    a, b = panels[:, :1], panels[:, 1:]
    half = 0.5 * (b - a)
    t = (a + half * (xi + 1)).ravel()
    ts = (a + half * (xs + 1)).ravel()

    x = c.position(t)
    speed = np.linalg.norm(c.derivative(t), axis=1).reshape(len(panels), p_panel)
    arclen = (speed * wi).sum(axis=1) * half[:, 0]
    d_panel = np.minimum(d, 0.5 * arclen)
    d_loc = np.repeat(d_panel, p_panel // 2)
    nrm = c.inward_normal(ts)
    y = c.position(ts) + d_loc[:, None] * nrm
    _check_sources(c, x, y)
    return Discretization(
        shape=c,
        colloc=x,
        colloc_params=t,
        sources=y,
        source_params=ts,
        inward_normals=nrm,
        d_local=d_loc,
        panel_index=np.repeat(np.arange(len(panels)), p_panel),
        weights=(speed * wi * half).ravel(),
        panels=panels,
        corner_params=c.corner_params,
    )


@dataclass(frozen=True)
class ProxySurface:
    points: np.ndarray
    center: np.ndarray
    radius: float

    @property
    def p(self):
        return len(self.points)

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.linalg.norm(pts - self.center, axis=1) < self.radius


DEFAULT_RADIUS_FACTOR = 2.7
MIN_PROXY_POINTS_2D = 3


def _proxy_frame(disc, radius_factor):
    if not radius_factor > 1:
        raise ValueError(f"radius_factor must exceed 1, got {radius_factor}")
    # panel nodes cluster at corners, so weight them by arclength to get the
    # centroid of the curve rather than of the refinement
    if disc.weights is not None:
        center = disc.weights @ disc.colloc / disc.weights.sum()
    else:
        center = disc.colloc.mean(axis=0)
    radius = radius_factor * np.max(np.linalg.norm(disc.colloc - center, axis=1))
    return center, radius


def build_proxy_circle(disc, radius_factor=DEFAULT_RADIUS_FACTOR, p_count=None):
    """``p_count`` equispaced points (default ``N + 1``) on a circle enclosing ``disc``."""
    if p_count is None:
        p_count = disc.m + 1
    if p_count < MIN_PROXY_POINTS_2D:
        raise ValueError(f"p_count must be >= {MIN_PROXY_POINTS_2D}, got {p_count}")
    center, radius = _proxy_frame(disc, radius_factor)
    th = TWO_PI * np.arange(p_count) / p_count
    pts = center + radius * np.stack([np.cos(th), np.sin(th)], -1)
    return ProxySurface(points=pts, center=center, radius=float(radius))

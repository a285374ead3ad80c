"""Smooth 3D scatterers (ellipsoid, torus) on tensor-product parameter grids."""
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry2d import DEFAULT_RADIUS_FACTOR, Discretization, ProxySurface, _check_distinct, _proxy_frame

SURFACE_KINDS = ("ellipsoid", "torus")
_DEFAULTS = {
    "ellipsoid": {"a": 1.0, "b": 0.7, "c": 0.5},
    "torus": {"R": 1.0, "r": 0.4},
}
MIN_PROXY_POINTS_3D = 32


def rotation_matrix(angles):
    """Rotation from z-y-x Euler angles (radians)."""
    a, b, c = angles
    Rz = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
    Ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
    Rx = np.array([[1, 0, 0], [0, np.cos(c), -np.sin(c)], [0, np.sin(c), np.cos(c)]])
    return Rz @ Ry @ Rx


@dataclass(frozen=True)
class Surface3D:
    kind: str
    params: dict = field(default_factory=dict)
    center: tuple = (0.0, 0.0, 0.0)
    rotation: np.ndarray = None

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise GeometryError(f"unknown surface kind {self.kind!r}; allowed: {', '.join(SURFACE_KINDS)}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise GeometryError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged = {**_DEFAULTS[self.kind], **self.params}
        for name, val in merged.items():
            if not (np.isfinite(val) and val > 0):
                raise GeometryError(f"{self.kind}.{name} must be positive and finite, got {val}")
        if self.kind == "torus" and merged["r"] >= merged["R"]:
            raise GeometryError("torus needs minor radius r < major radius R")
        rot = np.eye(3) if self.rotation is None else np.asarray(self.rotation, dtype=float)
        if rot.shape != (3, 3) or not np.allclose(rot @ rot.T, np.eye(3), atol=1e-12):
            raise GeometryError("rotation must be a 3x3 orthogonal matrix")
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "rotation", rot)

    def _local(self, u, v):
        """Position and (unnormalized) inward normal in body coordinates."""
        p = self.params
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        if self.kind == "ellipsoid":
            a, b, c = p["a"], p["b"], p["c"]
            pos = np.stack([a * sv * cu, b * sv * su, c * cv], -1)
            # gradient of the implicit function points outward
            grad = pos / np.array([a * a, b * b, c * c])
            return pos, -grad
        R, r = p["R"], p["r"]
        pos = np.stack([(R + r * cv) * cu, (R + r * cv) * su, r * sv], -1)
        outward = np.stack([cv * cu, cv * su, sv], -1)
        return pos, -outward

    def position(self, u, v):
        pos, _ = self._local(u, v)
        return pos @ self.rotation.T + np.asarray(self.center)

    def inward_normal(self, u, v):
        _, nrm = self._local(u, v)
        nrm = nrm @ self.rotation.T
        return nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)

    def contains(self, points):
        """Interior test via the implicit description of each body."""
        x = (np.atleast_2d(points) - np.asarray(self.center)) @ self.rotation
        p = self.params
        if self.kind == "ellipsoid":
            return (x[:, 0] / p["a"]) ** 2 + (x[:, 1] / p["b"]) ** 2 + (x[:, 2] / p["c"]) ** 2 < 1
        rho = np.hypot(x[:, 0], x[:, 1])
        return np.hypot(rho - p["R"], x[:, 2]) < p["r"]

    def param_grid(self, n_u, n_v, offset=0.0):
        """Uniform (u, v) grid; ellipsoid v avoids the poles by half a step."""
        u = 2 * np.pi * (np.arange(n_u) + offset) / n_u
        if self.kind == "ellipsoid":
            v = np.pi * (np.arange(n_v) + 0.5) / n_v
        else:
            v = 2 * np.pi * (np.arange(n_v) + offset) / n_v
        U, V = np.meshgrid(u, v, indexing="ij")
        return U.ravel(), V.ravel()

    @property
    def interior_point(self):
        local = np.array([self.params["R"], 0.0, 0.0]) if self.kind == "torus" else np.zeros(3)
        return self.rotation @ local + np.asarray(self.center)

    @property
    def bounding_radius(self):
        u, v = self.param_grid(64, 64)
        return float(np.max(np.linalg.norm(self.position(u, v) - np.asarray(self.center), axis=1)))


def discretize_surface(s, n_u, n_v, d):
    """``n_u * n_v`` collocation points and a half-resolution grid of sources."""
    if n_u < 2 or n_v < 2 or n_u % 2 or n_v % 2:
        raise GeometryError(f"grid sizes must be even and >= 2, got {n_u} x {n_v}")
    if not d > 0:
        raise GeometryError(f"MFS distance d must be positive, got {d}")
    if s.kind == "torus" and d >= s.params["r"]:
        raise GeometryError(f"MFS distance {d} reaches the torus centerline (minor radius {s.params['r']})")
    u, v = s.param_grid(n_u, n_v)
    us, vs = s.param_grid(n_u // 2, n_v // 2)
    x = s.position(u, v)
    nrm = s.inward_normal(us, vs)
    y = s.position(us, vs) + d * nrm
    inside = s.contains(y)
    if not np.all(inside):
        raise GeometryError(f"{int(np.sum(~inside))} MFS source(s) escape the {s.kind}")
    _check_distinct(y, "MFS sources")
    _check_distinct(x, "collocation points")
    return Discretization(
        shape=s,
        colloc=x,
        colloc_params=np.stack([u, v], -1),
        sources=y,
        source_params=np.stack([us, vs], -1),
        inward_normals=nrm,
        d_local=np.full(len(us), float(d)),
    )


def fibonacci_sphere(p):
    """Quasi-uniform unit vectors on the sphere (golden-angle spiral)."""
    i = np.arange(p) + 0.5
    z = 1 - 2 * i / p
    rho = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], -1)


def build_proxy_sphere(disc, radius_factor=DEFAULT_RADIUS_FACTOR, p_count=None):
    if p_count is None:
        p_count = disc.m + 1
    if p_count < MIN_PROXY_POINTS_3D:
        raise ValueError(f"p_count must be >= {MIN_PROXY_POINTS_3D}, got {p_count}")
    center, radius = _proxy_frame(disc, radius_factor)
    pts = center + radius * fibonacci_sphere(p_count)
    return ProxySurface(points=pts, center=center, radius=float(radius))

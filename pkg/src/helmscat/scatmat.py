"""Per-scatterer scattering matrices ``S = Z^* C A^+ U``.

``C`` is the least-squares translation from MFS sources to sources on the
collocation points.  It is formed as ``B^+ D`` right to left: grouping
``(Z^* B^+) D`` instead amplifies rounding by the tiny singular values of
``B`` that ``D`` never excites.
"""
import hashlib
import json
import logging
import pickle
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .densela import DEFAULT_CUTOFF, PinvOperator
from .geometry2d import DEFAULT_RADIUS_FACTOR, build_proxy_circle
from .geometry3d import build_proxy_sphere
from .mfs import build_local_system
from .skeleton import build_B, skeletonize

logger = logging.getLogger(__name__)


def build_D(proxy, disc, kernel):
    """``D[i, j] = phi(z_i - y_j)``: MFS sources to proxy points."""
    return kernel.matrix(proxy.points, disc.sources)


def build_translation(B, D, rel_cutoff=DEFAULT_CUTOFF):
    """Dense ``C`` solving ``B C = D`` in the truncated least-squares sense."""
    return PinvOperator(B, rel_cutoff).apply(D)


@dataclass(frozen=True)
class ScattererOperator:
    disc: object
    proxy: object
    kernel: object
    skel: object
    local: object
    D: np.ndarray
    C: np.ndarray
    Vstar: np.ndarray  # Z^* C, k x n
    S: np.ndarray
    translation_mismatch: float
    offset: np.ndarray = None

    @property
    def k(self):
        return self.skel.rank

    @property
    def shift(self):
        return np.zeros(self.disc.dim) if self.offset is None else self.offset

    @property
    def colloc(self):
        return self.disc.colloc + self.shift

    @property
    def sources(self):
        return self.disc.sources + self.shift

    @property
    def skeleton_coords(self):
        return self.colloc[self.skel.skeleton]

    @property
    def proxy_center(self):
        return self.proxy.center + self.shift

    @property
    def proxy_radius(self):
        return self.proxy.radius

    def proxy_contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.linalg.norm(pts - self.proxy_center, axis=1) < self.proxy_radius

    def body_contains(self, pts):
        """True for points strictly inside the scatterer itself."""
        return self.disc.shape.contains(np.atleast_2d(pts) - self.shift)

    def proxy_points(self):
        return self.proxy.points + self.shift

    def translate_sources(self, q_mfs):
        """Equivalent sources on all collocation points, ``C q_mfs``."""
        return self.C @ q_mfs

    def mfs_strengths(self, w):
        return self.local.pinv.apply(w)

    def effective_charges(self, v):
        """``Z^* C A^+ v`` for boundary data ``v`` on all collocation points."""
        return self.Vstar @ self.local.pinv.apply(v)

    def compress(self, q):
        return self.skel.Z.conj().T @ q

    def translated(self, delta):
        """Copy moved rigidly by ``delta``; the matrices are translation invariant."""
        return replace(self, offset=self.shift + np.asarray(delta, dtype=float))


def build_scatterer(disc, kernel, eps, rel_cutoff=DEFAULT_CUTOFF, radius_factor=DEFAULT_RADIUS_FACTOR, p_count=None):
    if disc.dim == 2:
        proxy = build_proxy_circle(disc, radius_factor, p_count)
    else:
        proxy = build_proxy_sphere(disc, radius_factor, p_count)
    B = build_B(proxy, disc, kernel)
    skel = skeletonize(B, eps)
    local = build_local_system(disc, kernel, rel_cutoff)
    D = build_D(proxy, disc, kernel)
    C = PinvOperator(B, rel_cutoff).apply(D)
    Vstar = skel.Z.conj().T @ C
    S = Vstar @ local.pinv.apply(skel.U)
    mismatch = float(np.linalg.norm(B @ C - D) / np.linalg.norm(D))
    if mismatch > 1e-6:
        logger.warning("translation operator reproduces the proxy field only to %.1e", mismatch)
    return ScattererOperator(
        disc=disc,
        proxy=proxy,
        kernel=kernel,
        skel=skel,
        local=local,
        D=D,
        C=C,
        Vstar=Vstar,
        S=S,
        translation_mismatch=mismatch,
    )


def build_scattering_matrix(op):
    """Recompute ``S`` right-to-left from the stored factors."""
    return op.Vstar @ op.local.pinv.apply(op.skel.U)


class OperatorCache:
    """Reuse operators across translated copies of the same body.

    Keys hash everything the matrices depend on except the body's position.
    With ``directory`` set, operators are also pickled to disk.
    """

    def __init__(self, directory=None):
        self._mem = {}
        self.directory = Path(directory) if directory else None
        self.hits = 0

    @staticmethod
    def key(spec):
        blob = json.dumps(spec, sort_keys=True, default=_jsonable)
        return hashlib.sha256(blob.encode()).hexdigest()[:24]

    def get_or_build(self, spec, builder):
        key = self.key(spec)
        if key in self._mem:
            self.hits += 1
            return self._mem[key]
        if self.directory is not None:
            path = self.directory / f"{key}.pkl"
            if path.exists():
                with path.open("rb") as fh:
                    op = pickle.load(fh)
                self._mem[key] = op
                self.hits += 1
                return op
        op = builder()
        self._mem[key] = op
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            with (self.directory / f"{key}.pkl").open("wb") as fh:
                pickle.dump(op, fh, protocol=pickle.HIGHEST_PROTOCOL)
        return op


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.round(15).tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")

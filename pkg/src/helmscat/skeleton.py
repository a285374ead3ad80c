"""Proxy-surface skeletonization of a scatterer's collocation points."""
import logging
from dataclasses import dataclass

import numpy as np

from .densela import column_id

logger = logging.getLogger(__name__)

INTERP_WARN = 1e3


@dataclass(frozen=True)
class Skeletonization:
    """Skeleton indices with interpolation matrix ``Z`` (m x k) and ``U = conj(Z)``."""

    skeleton: np.ndarray
    Z: np.ndarray
    eps: float
    residual: float

    @property
    def U(self):
        return self.Z.conj()

    @property
    def rank(self):
        return len(self.skeleton)


def build_B(proxy, disc, kernel):
    """Outgoing map ``B[i, j] = phi(z_i - x_j)``, sources on the boundary to proxy points."""
    inside = proxy.contains(disc.colloc)
    if not np.all(inside):
        raise ValueError("proxy surface must strictly enclose all collocation points")
    return kernel.matrix(proxy.points, disc.colloc)


def skeletonize(B, eps):
    fac = column_id(B, eps)
    if fac.achieved_residual > 10 * eps:
        raise RuntimeError(f"ID residual {fac.achieved_residual:.2e} exceeds 10*eps")
    zmax = np.abs(fac.interp).max()
    if zmax > INTERP_WARN:
        logger.warning("large interpolation weights (max |Z| = %.1e); check the proxy radius", zmax)
    return Skeletonization(skeleton=fac.skeleton, Z=fac.interp, eps=eps, residual=fac.achieved_residual)

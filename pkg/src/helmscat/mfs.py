"""Single-body MFS collocation system ``A q = w``."""
from dataclasses import dataclass

import numpy as np

from .densela import DEFAULT_CUTOFF, PinvOperator


@dataclass(frozen=True)
class LocalSystem:
    """``A[i, j] = phi(x_i - y_j)`` together with its truncated pseudo-inverse."""

    disc: object
    kernel: object
    A: np.ndarray
    pinv: PinvOperator


def build_local_system(disc, kernel, rel_cutoff=DEFAULT_CUTOFF):
    A = kernel.matrix(disc.colloc, disc.sources)
    return LocalSystem(disc=disc, kernel=kernel, A=A, pinv=PinvOperator(A, rel_cutoff))


def solve_local_dirichlet(sys, w):
    """MFS strengths for boundary data ``w`` and the relative collocation residual."""
    w = np.asarray(w, dtype=complex)
    if w.shape[0] != sys.A.shape[0]:
        raise ValueError(f"boundary data has length {w.shape[0]}, expected {sys.A.shape[0]}")
    if not np.all(np.isfinite(w)):
        raise ValueError("boundary data must be finite")
    nw = np.linalg.norm(w)
    if nw == 0:
        return np.zeros(sys.A.shape[1], dtype=complex), 0.0
    q = sys.pinv.apply(w)
    return q, float(np.linalg.norm(sys.A @ q - w) / nw)


def mfs_field(sys, q, targets):
    """Field of the MFS sources with strengths ``q`` at ``targets``."""
    return sys.kernel.apply(targets, sys.disc.sources, q)

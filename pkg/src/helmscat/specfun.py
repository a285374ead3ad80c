"""Bessel functions and the Helmholtz fundamental solution in 2D and 3D.

``J0``/``Y0`` are evaluated by the Cephes routines shipped with scipy
(power series near the origin, asymptotic modulus/phase rational
approximations further out).  The wrappers here add the domain checks the
rest of the package relies on.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, SingularityError

# distances below this are treated as coincident points
COINCIDENT_TOL = 1e-300


def _as_checked(x, strictly_positive):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    if strictly_positive and np.any(x <= 0):
        raise DomainError("argument must be > 0 (logarithmic singularity at 0)")
    if np.any(x < 0):
        raise DomainError("argument must be >= 0")
    return x


def _scalar_or_array(x, out):
    return out.item() if np.ndim(x) == 0 else out


def bessel_j0(x):
    """J0(x) for real ``x >= 0`` (scalar or array)."""
    xa = _as_checked(x, strictly_positive=False)
    return _scalar_or_array(x, special.j0(xa))


def bessel_y0(x):
    """Y0(x) for real ``x > 0`` (scalar or array)."""
    xa = _as_checked(x, strictly_positive=True)
    return _scalar_or_array(x, special.y0(xa))


def hankel0_first(x):
    """H0^(1)(x) = J0(x) + i Y0(x) for real ``x > 0``."""
    xa = _as_checked(x, strictly_positive=True)
    out = special.j0(xa) + 1j * special.y0(xa)
    return _scalar_or_array(x, out)


@dataclass(frozen=True)
class Kernel:
    """Free-space Helmholtz fundamental solution at wavenumber ``kappa``."""

    dim: int
    kappa: float

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim!r}")
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa!r}")

    @property
    def wavelength(self):
        return 2 * np.pi / self.kappa

    def of_distance(self, r):
        """phi evaluated on an array of distances (no coincidence check)."""
        r = np.asarray(r, dtype=float)
        kr = self.kappa * r
        if self.dim == 2:
            return 0.25j * (special.j0(kr) + 1j * special.y0(kr))
        return np.exp(1j * kr) / (4 * np.pi * r)

    def matrix(self, targets, sources):
        """Dense matrix ``M[i, j] = phi(targets[i] - sources[j])``."""
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        if targets.shape[1] != self.dim or sources.shape[1] != self.dim:
            raise ValueError(
                f"point dimension mismatch: kernel is {self.dim}D, got "
                f"{targets.shape[1]}D targets and {sources.shape[1]}D sources"
            )
        r = pairwise_distances(targets, sources)
        if r.size and r.min() < COINCIDENT_TOL:
            i, j = np.unravel_index(np.argmin(r), r.shape)
            raise SingularityError(
                f"kernel evaluated at coincident points (target {i}, source {j})"
            )
        return self.of_distance(r)

    def apply(self, targets, sources, charges):
        """Field at ``targets`` of monopoles at ``sources`` with ``charges``.

        Blocked over targets to bound memory.
        """
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        charges = np.asarray(charges)
        out = np.empty((targets.shape[0],) + charges.shape[1:], dtype=complex)
        block = max(1, 2_000_000 // max(1, len(sources)))
        for start in range(0, len(targets), block):
            sl = slice(start, start + block)
            out[sl] = self.matrix(targets[sl], sources) @ charges
        return out


def pairwise_distances(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def kernel_eval(k, x, y):
    """phi_kappa(x - y) for a single pair of points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (k.dim,) or y.shape != (k.dim,):
        raise ValueError(f"expected {k.dim}D points, got shapes {x.shape} and {y.shape}")
    r = float(np.sqrt(np.sum((x - y) ** 2)))
    if r < COINCIDENT_TOL:
        raise SingularityError("kernel evaluated at coincident points")
    return complex(k.of_distance(r))

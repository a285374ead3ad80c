"""Dense complex linear algebra used by the local and global solvers.

Column-pivoted QR and the SVD come from LAPACK through scipy/numpy; the
interpolative decomposition, the truncated pseudo-inverse and GMRES are
built on top of them here.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 1e-13


def _check_matrix(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


@dataclass(frozen=True)
class IdFactorization:
    """Column interpolative decomposition ``M ~= M[:, skeleton] @ interp.conj().T``.

    ``interp`` is cols x k and contains the identity at rows ``skeleton``.
    """

    skeleton: np.ndarray
    interp: np.ndarray
    achieved_residual: float

    @property
    def rank(self):
        return len(self.skeleton)

    @property
    def coefficients(self):
        """The k x cols matrix ``Z^*`` (identity at the skeleton columns)."""
        return self.interp.conj().T


def column_id(M, eps):
    """Interpolative decomposition of the columns of ``M`` to tolerance ``eps``.

    The rank is the number of pivots with ``|R[j, j]| > eps * |R[0, 0]|``
    in a column-pivoted QR.  If the resulting Frobenius residual exceeds
    ``10 * eps * ||M||_F`` the rank is grown until it does not.
    """
    M = _check_matrix(M, "M")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    normM = np.linalg.norm(M)
    if normM == 0:
        raise ValueError("cannot factor an all-zero matrix")

    _, R, perm = scipy.linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    kmax = len(diag)
    # cut at the first small pivot (diag need not be monotone after norm downdating)
    small = np.nonzero(diag <= eps * diag[0])[0]
    k = max(int(small[0]), 1) if small.size else kmax

    # residual of the rank-k ID equals ||R22||_F
    tail = _trailing_norms(np.abs(R) ** 2)
    while k < kmax and tail[k] > 10 * eps * normM:
        k += 1

    m = M.shape[1]
    R11 = R[:k, :k]
    R12 = R[:k, k:]
    T = scipy.linalg.solve_triangular(R11, R12) if k < m else np.zeros((k, 0))
    coeffs = np.zeros((k, m), dtype=np.result_type(M, complex))
    coeffs[:, perm[:k]] = np.eye(k)
    coeffs[:, perm[k:]] = T
    skel = perm[:k].copy()
    residual = np.linalg.norm(M - M[:, skel] @ coeffs) / normM
    return IdFactorization(skeleton=skel, interp=coeffs.conj().T, achieved_residual=float(residual))


def _trailing_norms(R2):
    """``out[k] = ||R[k:, k:]||_F`` for each k (R2 holds |R|^2)."""
    n = min(R2.shape)
    out = np.zeros(n + 1)
    for k in range(n - 1, -1, -1):
        # R[k:, k:] = R[k+1:, k+1:] plus row k (cols k:) plus column k (rows k+1:)
        out[k] = out[k + 1] ** 2 + R2[k, k:].sum() + R2[k + 1 :, k].sum()
        out[k] = np.sqrt(out[k])
    return out


class PinvOperator:
    """Truncated-SVD pseudo-inverse of a dense matrix.

    Singular values ``s <= rel_cutoff * s_max`` are discarded.  The SVD
    factors are kept; the pseudo-inverse itself is never formed.
    """

    def __init__(self, A, rel_cutoff=DEFAULT_CUTOFF):
        A = _check_matrix(A, "A")
        if not 0 < rel_cutoff < 1:
            raise ValueError(f"rel_cutoff must lie in (0, 1), got {rel_cutoff}")
        W, s, Vh = np.linalg.svd(A, full_matrices=False)
        if s[0] == 0:
            raise ValueError("cannot pseudo-invert an all-zero matrix")
        r = int(np.sum(s > rel_cutoff * s[0]))
        self.shape = A.shape
        self.rel_cutoff = rel_cutoff
        self.singular_values = s
        self.rank = r
        self._Wh = W[:, :r].conj().T
        self._inv_s = 1.0 / s[:r]
        self._V = Vh[:r].conj().T

    def __matmul__(self, b):
        return self.apply(b)

    def apply(self, b):
        b = np.asarray(b)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"expected leading dimension {self.shape[0]}, got {b.shape[0]}")
        c = self._Wh @ b
        c = c * (self._inv_s if b.ndim == 1 else self._inv_s[:, None])
        return self._V @ c


def pinv_factor(A, rel_cutoff=DEFAULT_CUTOFF):
    return PinvOperator(A, rel_cutoff)


def lsq_solve(B, D, rel_cutoff=DEFAULT_CUTOFF):
    """Truncated-SVD least-squares solution of ``B @ C = D``."""
    B = _check_matrix(B, "B")
    D = np.asarray(D)
    if D.shape[0] != B.shape[0]:
        raise ValueError(f"shape mismatch: B is {B.shape}, D is {D.shape}")
    return pinv_factor(B, rel_cutoff).apply(D)


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = np.nan


def gmres(apply, b, tol=1e-10, max_iter=200):
    """Unrestarted GMRES (Arnoldi with Givens rotations), zero initial guess.

    ``apply`` maps a vector to a vector of the same length.  The history
    holds the relative residual estimate after each iteration, starting with
    1.0 for the zero guess.  ``final_residual`` is recomputed from scratch
    as ``||b - A x|| / ||b||``.  Hitting ``max_iter`` is reported through
    ``converged`` rather than raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    b = np.asarray(b, dtype=complex)
    beta = np.linalg.norm(b)
    if beta == 0:
        raise ValueError("right-hand side must be nonzero")

    n = b.shape[0]
    max_iter = min(max_iter, n)
    Q = np.zeros((max_iter + 1, n), dtype=complex)
    H = np.zeros((max_iter + 1, max_iter), dtype=complex)
    cs = np.zeros(max_iter, dtype=complex)
    sn = np.zeros(max_iter, dtype=complex)
    g = np.zeros(max_iter + 1, dtype=complex)
    g[0] = beta
    Q[0] = b / beta
    history = [1.0]
    converged = False
    j = 0
    for j in range(max_iter):
        w = np.asarray(apply(Q[j]), dtype=complex)
        wnorm = np.linalg.norm(w)
        # classical Gram-Schmidt with one reorthogonalization pass
        for _ in range(2):
            h = Q[: j + 1].conj() @ w
            H[: j + 1, j] += h
            w = w - h @ Q[: j + 1]
        H[j + 1, j] = np.linalg.norm(w)
        breakdown = abs(H[j + 1, j]) <= 1e-14 * wnorm
        if not breakdown:
            Q[j + 1] = w / H[j + 1, j]

        for i in range(j):
            tmp = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + np.conj(cs[i]) * H[i + 1, j]
            H[i, j] = tmp
        cs[j], sn[j], H[j, j] = _givens(H[j, j], H[j + 1, j])
        H[j + 1, j] = 0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]
        history.append(abs(g[j + 1]) / beta)
        if history[-1] <= tol or breakdown:
            converged = history[-1] <= tol or breakdown
            break

    k = j + 1
    y = scipy.linalg.solve_triangular(H[:k, :k], g[:k])
    x = Q[:k].T @ y
    final = np.linalg.norm(b - apply(x)) / beta
    if not converged:
        logger.warning("GMRES stopped after %d iterations at residual %.3e", k, history[-1])
    return GmresResult(x=x, iterations=k, residual_history=history, converged=converged, final_residual=float(final))


def _givens(a, b):
    """Complex Givens rotation zeroing ``b`` against ``a``."""
    if b == 0:
        return 1.0 + 0j, 0j, a
    if a == 0:
        return 0j, 1.0 + 0j, b
    r = np.hypot(abs(a), abs(b))
    c = abs(a) / r
    phase = a / abs(a)
    s = phase * np.conj(b) / r
    return c, s, phase * r


def cond2(M):
    """2-norm condition number via the full SVD; ``inf`` if singular."""
    M = _check_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise ValueError("cond2 needs a square matrix")
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] == 0:
        return np.inf
    return float(s[0] / s[-1])

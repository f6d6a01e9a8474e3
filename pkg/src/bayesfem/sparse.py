"""Sparse symmetric linear algebra kernel.

Sparse SPD systems are factorized once (reverse Cuthill-McKee reordering
followed by a banded Cholesky) and the factor is reused across arbitrarily
many right-hand sides.  A dense symmetric eigensolver with deterministic
ordering and sign conventions, and a seeded counter-based Gaussian generator
round out the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import CapacityError, InvalidArgumentError, NotPositiveDefiniteError

DENSE_CAP_DEFAULT = 4096

_SYM_RTOL = 1e-10


def _as_csc(A):
    if not sp.issparse(A):
        A = sp.csc_matrix(A)
    return A.tocsc()


def check_symmetric(A, rtol=_SYM_RTOL):
    """Raise unless A is symmetric within rtol (relative to its max entry)."""
    A = _as_csc(A)
    scale = max(abs(A).max(), 1e-300) if A.nnz else 1.0
    dev = abs(A - A.T).max() if A.nnz else 0.0
    if dev > rtol * scale:
        raise InvalidArgumentError(
            f"matrix is not symmetric: max asymmetry {dev:.3e} vs scale {scale:.3e}"
        )
    return A


@dataclass
class CholeskyFactor:
    """Reusable sparse Cholesky factor of a symmetric positive definite matrix.

    Stores the fill-reducing permutation ``perm`` and the lower band factor
    ``band`` (LAPACK lower banded storage) of the permuted matrix, so that
    ``A[perm][:, perm] == L @ L.T``.
    """

    n: int
    perm: np.ndarray
    band: np.ndarray

    def solve(self, b):
        """Solve A x = b for one RHS vector or a matrix of column RHS."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise InvalidArgumentError(
                f"rhs has leading dimension {b.shape[0]}, expected {self.n}"
            )
        bp = b[self.perm]
        xp = scipy.linalg.cho_solve_banded((self.band, True), bp)
        x = np.empty_like(xp)
        x[self.perm] = xp
        return x

    def lower_matvec(self, z):
        """Return P^T L z, a matrix square root action: cov of result is A."""
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.n:
            raise InvalidArgumentError(
                f"operand has leading dimension {z.shape[0]}, expected {self.n}"
            )
        w = self._lower_csc() @ z
        x = np.empty_like(w)
        x[self.perm] = w
        return x

    def _lower_csc(self):
        if not hasattr(self, "_L"):
            nb = self.band.shape[0] - 1
            rows, cols, vals = [], [], []
            for d in range(nb + 1):
                idx = np.nonzero(self.band[d, : self.n - d])[0]
                cols.append(idx)
                rows.append(idx + d)
                vals.append(self.band[d, idx])
            self._L = sp.csc_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.n, self.n),
            )
        return self._L


def cholesky(A, ordering="rcm"):
    """Factorize a sparse symmetric positive definite matrix.

    ordering: "rcm" (default) or "natural".
    """
    A = check_symmetric(A)
    n = A.shape[0]
    if ordering == "rcm":
        perm = np.asarray(reverse_cuthill_mckee(A, symmetric_mode=True), dtype=np.intp)
    elif ordering == "natural":
        perm = np.arange(n, dtype=np.intp)
    else:
        raise InvalidArgumentError(f"unknown ordering {ordering!r}")
    Ap = A[perm][:, perm].tocoo()
    lower = Ap.row >= Ap.col
    bw = int((Ap.row[lower] - Ap.col[lower]).max()) if Ap.nnz else 0
    band = np.zeros((bw + 1, n))
    band[Ap.row[lower] - Ap.col[lower], Ap.col[lower]] += Ap.data[lower]
    try:
        cb = scipy.linalg.cholesky_banded(band, lower=True)
    except scipy.linalg.LinAlgError as exc:
        pivot = _failed_pivot(exc, band, perm)
        raise NotPositiveDefiniteError(pivot) from exc
    return CholeskyFactor(n=n, perm=perm, band=cb)


def _failed_pivot(exc, band, perm):
    # LAPACK reports "%d-th leading minor ... not positive definite".
    msg = str(exc)
    for tok in msg.replace("-", " ").split():
        if tok.isdigit():
            return int(perm[int(tok) - 1])
    return -1


def solve(factor, b):
    """Solve with a prebuilt CholeskyFactor (functional alias)."""
    return factor.solve(b)


def sym_eig(A, dense_cap=DENSE_CAP_DEFAULT):
    """Eigendecomposition of a dense symmetric matrix.

    Returns (Q, lam) with eigenvalues sorted descending, ties broken by
    original index, and each eigenvector's largest-magnitude entry positive.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise InvalidArgumentError("sym_eig expects a square matrix")
    if n > dense_cap:
        raise CapacityError(f"dimension {n} exceeds dense cap {dense_cap}")
    scale = max(np.abs(A).max(), 1e-300)
    if np.abs(A - A.T).max() > _SYM_RTOL * scale:
        raise InvalidArgumentError("sym_eig requires a symmetric matrix")
    lam, Q = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    Q = Q[:, order]
    # deterministic signs: largest-magnitude entry of each column positive
    lead = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[lead, np.arange(n)])
    signs[signs == 0] = 1.0
    Q = Q * signs
    return Q, lam


def rng_stream(seed, stream=0):
    """Independent, reproducible Gaussian stream from a counter-based generator."""
    mask = (1 << 64) - 1
    key = [int(seed) & mask, int(stream) & mask]
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_vector(rng, n):
    """n i.i.d. standard normals via Box-Muller over the given stream."""
    if n < 0:
        raise InvalidArgumentError("n must be nonnegative")
    m = (n + 1) // 2
    u1 = rng.random(m)
    u2 = rng.random(m)
    u1 = np.maximum(u1, np.finfo(float).tiny)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n]

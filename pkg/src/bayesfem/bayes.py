"""Gaussian priors on the forcing term, posterior moments over the fine
solution, exact error recovery, and eigenvalue rescaling.

The posterior covariance is never materialized unless the interior dimension
is below a configurable dense cap; everywhere else it is exposed as an
action built from the reusable sparse Cholesky factors of K and of the
observed coarse Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import sparse
from .errors import CapacityError, InvalidArgumentError
from .sparse import DENSE_CAP_DEFAULT

WHITE_NOISE_SIGMA_E = 1e-6  # std; variance 1e-12 regularizes Phi^T M Phi


@dataclass(frozen=True)
class PriorSpec:
    """Forcing-term prior: white noise (cov alpha^2 M) or Green's (cov K)."""

    kind: str                 # "white_noise" | "greens"
    alpha: float = 1.0
    sigma_e: float | None = None

    def __post_init__(self):
        if self.kind not in ("white_noise", "greens"):
            raise InvalidArgumentError(f"unknown prior kind {self.kind!r}")
        if self.alpha <= 0:
            raise InvalidArgumentError("alpha must be positive")
        default = WHITE_NOISE_SIGMA_E if self.kind == "white_noise" else 0.0
        sigma_e = default if self.sigma_e is None else float(self.sigma_e)
        if sigma_e < 0:
            raise InvalidArgumentError("sigma_e must be nonnegative")
        object.__setattr__(self, "sigma_e", sigma_e)

    @classmethod
    def white_noise(cls, alpha=1.0, sigma_e=None):
        return cls(kind="white_noise", alpha=alpha, sigma_e=sigma_e)

    @classmethod
    def greens(cls, sigma_e=None):
        return cls(kind="greens", sigma_e=sigma_e)


@dataclass(frozen=True)
class BoundaryPrior:
    """Normal priors on Dirichlet displacements and Neumann forces."""

    m_d: np.ndarray | None = None
    Sigma_d: object = None    # sparse or dense, over Dirichlet DOFs
    beta: float = 1.0
    m_n: np.ndarray | None = None
    Sigma_n: object = None    # sparse or dense, over interior DOFs
    gamma: float = 1.0


@dataclass
class PosteriorMoments:
    """Posterior mean plus implicit, solve-based covariance actions."""

    mean: np.ndarray
    prior: PriorSpec
    Sigma_f: sp.csc_matrix
    Phi: sp.csc_matrix
    K_factor: object = field(repr=False)
    S_factor: object = field(repr=False)     # factor of Phi^T Sigma_f Phi + sigma_e^2 I
    Sigma_f_factor: object = field(default=None, repr=False)

    @property
    def n(self):
        return self.Phi.shape[0]

    def cov_action(self, v):
        """Posterior covariance action v -> Sigma* v (columnwise for matrices)."""
        w = self.K_factor.solve(v)
        t = self.Sigma_f @ w
        s = t - self.Sigma_f @ (self.Phi @ self.S_factor.solve(self.Phi.T @ t))
        return self.K_factor.solve(s)

    def prior_cov_action(self, v):
        """Prior covariance action v -> K^-1 Sigma_f K^-1 v."""
        return self.K_factor.solve(self.Sigma_f @ self.K_factor.solve(v))

    def dense_cov(self, dense_cap=DENSE_CAP_DEFAULT):
        if self.n > dense_cap:
            raise CapacityError(f"interior dimension {self.n} exceeds dense cap {dense_cap}")
        C = self.cov_action(np.eye(self.n))
        return 0.5 * (C + C.T)

    def dense_prior_cov(self, dense_cap=DENSE_CAP_DEFAULT):
        if self.n > dense_cap:
            raise CapacityError(f"interior dimension {self.n} exceeds dense cap {dense_cap}")
        C = self.prior_cov_action(np.eye(self.n))
        return 0.5 * (C + C.T)

    def std(self, dense_cap=DENSE_CAP_DEFAULT, allow_columnwise=False):
        """Pointwise posterior standard deviation diag(Sigma*)^(1/2).

        Above the dense cap the diagonal is extracted by unit-vector actions,
        which costs O(n) solves; that path must be requested explicitly.
        """
        if self.n <= dense_cap:
            d = np.diag(self.dense_cov(dense_cap))
        elif allow_columnwise:
            d = np.empty(self.n)
            e = np.zeros(self.n)
            for j in range(self.n):
                e[j] = 1.0
                d[j] = self.cov_action(e)[j]
                e[j] = 0.0
        else:
            raise CapacityError(
                f"interior dimension {self.n} exceeds dense cap {dense_cap}; "
                "pass allow_columnwise=True for the O(n)-solve diagonal"
            )
        return np.sqrt(np.maximum(d, 0.0))


def prior_covariance_f(prior, K, M):
    """Forcing covariance: alpha^2 M for white noise, K for the Green's prior."""
    if prior.kind == "white_noise":
        if prior.alpha == 1.0:
            return M.tocsc()
        return (prior.alpha**2 * M).tocsc()
    return K.tocsc()


def posterior_moments(prior, system, forcing_mean=None, forcing_cov=None):
    """Condition the fine-space prior on the coarse force vector.

    forcing_mean / forcing_cov override the zero-mean homogeneous forcing
    prior; they are produced by boundary_prior_moments for inhomogeneous
    boundary conditions.
    """
    Sigma_f = forcing_cov if forcing_cov is not None else prior_covariance_f(
        prior, system.K, system.M
    )
    Phi = system.Phi
    K_factor = sparse.cholesky(system.K)
    S = (Phi.T @ Sigma_f @ Phi).tocsc()
    if prior.sigma_e > 0:
        S = (S + prior.sigma_e**2 * sp.identity(S.shape[0], format="csc")).tocsc()
    S_factor = sparse.cholesky(S)
    g = Phi.T @ system.f
    if forcing_mean is None:
        rhs = Sigma_f @ (Phi @ S_factor.solve(g))
    else:
        innovation = g - Phi.T @ forcing_mean
        rhs = forcing_mean + Sigma_f @ (Phi @ S_factor.solve(innovation))
    mean = K_factor.solve(rhs)
    return PosteriorMoments(
        mean=mean, prior=prior, Sigma_f=Sigma_f, Phi=Phi,
        K_factor=K_factor, S_factor=S_factor,
    )


def f_hat_projection(M, Phi, f, sigma_e):
    """Weighted projection of the fine load onto the coarse space and back."""
    S = (Phi.T @ M @ Phi).tocsc()
    if sigma_e > 0:
        S = (S + sigma_e**2 * sp.identity(S.shape[0], format="csc")).tocsc()
    return M @ (Phi @ sparse.cholesky(S).solve(Phi.T @ f))


def discretization_error(system):
    """e = K^-1 f - Phi Kc^-1 g, via two sparse solves."""
    u_fine = sparse.cholesky(system.K).solve(system.f)
    u_coarse = sparse.cholesky(system.Kc).solve(system.g)
    return u_fine - system.Phi @ u_coarse


def error_recovery(post, f):
    """Sigma* f, which equals the discretization error under the Green's prior."""
    if post.prior.kind != "greens" or post.prior.sigma_e != 0:
        raise InvalidArgumentError(
            "error recovery requires the Green's prior with zero observation noise"
        )
    return post.cov_action(f)


def contraction_check(prior, system, dense_cap=DENSE_CAP_DEFAULT):
    """Residual of Sigma* Sigma^-1 u_hat = u_hat - m*, relative to ||u_hat||."""
    n = system.n_interior
    if n > dense_cap:
        raise CapacityError(f"interior dimension {n} exceeds dense cap {dense_cap}")
    post = posterior_moments(prior, system)
    u_hat = post.K_factor.solve(system.f)
    # Sigma^-1 u_hat = K Sigma_f^-1 K u_hat = K Sigma_f^-1 f
    w = system.K @ sparse.cholesky(post.Sigma_f).solve(system.f)
    lhs = post.cov_action(w)
    rhs = u_hat - post.mean
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(u_hat))


def rescale_eigenvalues(Sigma_star, f, dense_cap=DENSE_CAP_DEFAULT):
    """Replace posterior covariance eigenvalues by load-rescaled magnitudes.

    Returns (Sigma_hat, Q, E) with Sigma_hat = Q diag(E) Q^T and
    E_i = |lambda_i * (Q^T f)_i|.
    """
    Sigma_star = np.asarray(Sigma_star, dtype=float)
    Q, lam = sparse.sym_eig(Sigma_star, dense_cap=dense_cap)
    f_tilde = Q.T @ np.asarray(f, dtype=float)
    E = np.abs(lam * f_tilde)
    Sigma_hat = (Q * E) @ Q.T
    return 0.5 * (Sigma_hat + Sigma_hat.T), Q, E


def boundary_prior_moments(bp, K_id, Sigma_f):
    """Effective forcing prior under inhomogeneous boundary conditions.

    Returns (m_f_tilde, Sigma_f_tilde).  The Dirichlet mean enters the
    interior forcing through the standard lifting -K_id m_d; the covariance
    picks up beta^2 K_id Sigma_d K_id^T + gamma^2 Sigma_n.  With all
    boundary data zero, Sigma_f is returned unchanged.
    """
    n_i, n_d = K_id.shape
    m_f = np.zeros(n_i)
    if bp.m_d is not None:
        m_d = np.asarray(bp.m_d, dtype=float)
        if len(m_d) != n_d:
            raise InvalidArgumentError(f"m_d has length {len(m_d)}, expected {n_d}")
        m_f -= K_id @ m_d
    if bp.m_n is not None:
        m_n = np.asarray(bp.m_n, dtype=float)
        if len(m_n) != n_i:
            raise InvalidArgumentError(f"m_n has length {len(m_n)}, expected {n_i}")
        m_f += m_n
    Sigma = Sigma_f
    if bp.Sigma_d is not None:
        Sigma_d = sp.csc_matrix(bp.Sigma_d)
        if Sigma_d.shape != (n_d, n_d):
            raise InvalidArgumentError(f"Sigma_d has shape {Sigma_d.shape}, expected {(n_d, n_d)}")
        if Sigma_d.nnz:
            Sigma = (Sigma + bp.beta**2 * (K_id @ Sigma_d @ K_id.T)).tocsc()
    if bp.Sigma_n is not None:
        Sigma_n = sp.csc_matrix(bp.Sigma_n)
        if Sigma_n.shape != (n_i, n_i):
            raise InvalidArgumentError(f"Sigma_n has shape {Sigma_n.shape}, expected {(n_i, n_i)}")
        if Sigma_n.nnz:
            Sigma = (Sigma + bp.gamma**2 * Sigma_n).tocsc()
    return m_f, Sigma

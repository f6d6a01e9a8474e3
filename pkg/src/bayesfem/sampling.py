"""Ensemble sampling of the prior and posterior through the force vector.

All randomness flows through counter-based streams split per ensemble
column: column j of a run with seed s draws from stream (s, j), and its
observation noise from stream (s, N + j), so via-f and via-u runs stay
decoupled and reproducible under any parallel schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import bayes, sparse
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Ensemble:
    """Samples as columns of X (n_interior x n_samples)."""

    X: np.ndarray
    seed: int
    kind: str  # "prior" | "posterior_via_f" | "posterior_via_u"

    @property
    def n_samples(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class SampleStats:
    """Sample mean and factored sample covariance of an ensemble."""

    mean: np.ndarray
    residual: np.ndarray   # X - mean 1^T
    n_samples: int

    def cov_dense(self, dense_cap=sparse.DENSE_CAP_DEFAULT):
        self._need_cov()
        n = len(self.mean)
        if n > dense_cap:
            raise InvalidArgumentError(
                f"dense sample covariance of dimension {n} exceeds cap {dense_cap}"
            )
        return self.residual @ self.residual.T / (self.n_samples - 1)

    def cov_diag(self):
        self._need_cov()
        return (self.residual**2).sum(axis=1) / (self.n_samples - 1)

    def _need_cov(self):
        if self.n_samples < 2:
            raise InvalidArgumentError("covariance statistics need at least 2 samples")


def ensemble_stats(ensemble):
    X = ensemble.X
    mean = X.mean(axis=1)
    return SampleStats(mean=mean, residual=X - mean[:, None], n_samples=X.shape[1])


def _force_samples(Sigma_f_factor, seed, columns, n, diagonal_sqrt=None):
    """Draw N(0, Sigma_f) samples, one per stream index in `columns`."""
    Z = np.column_stack(
        [sparse.gaussian_vector(sparse.rng_stream(seed, j), n) for j in columns]
    )
    if diagonal_sqrt is not None:
        return diagonal_sqrt[:, None] * Z
    return Sigma_f_factor.lower_matvec(Z)


def sample_prior(prior, system, n_samples, seed, diagonal_approximation=False):
    """Prior ensemble: f ~ N(0, Sigma_f), then one fine solve per column."""
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    Sigma_f = bayes.prior_covariance_f(prior, system.K, system.M)
    K_factor = sparse.cholesky(system.K)
    diag_sqrt = np.sqrt(Sigma_f.diagonal()) if diagonal_approximation else None
    Sf_factor = None if diagonal_approximation else sparse.cholesky(Sigma_f)
    F = _force_samples(Sf_factor, seed, range(n_samples), system.n_interior, diag_sqrt)
    X = K_factor.solve(F)
    return Ensemble(X=X, seed=seed, kind="prior")


def sample_posterior_via_f(prior, system, n_samples, seed, diagonal_approximation=False):
    """Posterior ensemble via the force-space Kalman update (Joseph form).

    Per column: f* = f + G_f (g - Phi^T f + e) with
    G_f = Sigma_f Phi (Phi^T Sigma_f Phi + sigma_e^2 I)^-1, then one fine solve.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    Sigma_f = bayes.prior_covariance_f(prior, system.K, system.M)
    K_factor = sparse.cholesky(system.K)
    S_factor = _observed_gram_factor(Sigma_f, system.Phi, prior.sigma_e)
    diag_sqrt = np.sqrt(Sigma_f.diagonal()) if diagonal_approximation else None
    Sf_factor = None if diagonal_approximation else sparse.cholesky(Sigma_f)
    F = _force_samples(Sf_factor, seed, range(n_samples), system.n_interior, diag_sqrt)
    innov = system.g[:, None] - system.Phi.T @ F
    if prior.sigma_e > 0:
        E = np.column_stack(
            [sparse.gaussian_vector(sparse.rng_stream(seed, n_samples + j), system.m_interior)
             for j in range(n_samples)]
        )
        innov = innov + prior.sigma_e * E
    F_post = F + Sigma_f @ (system.Phi @ S_factor.solve(innov))
    X = K_factor.solve(F_post)
    return Ensemble(X=X, seed=seed, kind="posterior_via_f")


def sample_posterior_via_u(prior, system, n_samples, seed, diagonal_approximation=False):
    """Posterior ensemble via the displacement-space Kalman update.

    Per column: u* = u + G (g - H u + e), with the gain realized through
    solve compositions; two fine solves per sample.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    Sigma_f = bayes.prior_covariance_f(prior, system.K, system.M)
    K_factor = sparse.cholesky(system.K)
    S_factor = _observed_gram_factor(Sigma_f, system.Phi, prior.sigma_e)
    diag_sqrt = np.sqrt(Sigma_f.diagonal()) if diagonal_approximation else None
    Sf_factor = None if diagonal_approximation else sparse.cholesky(Sigma_f)
    F = _force_samples(Sf_factor, seed, range(n_samples), system.n_interior, diag_sqrt)
    U = K_factor.solve(F)                          # first fine solve (prior samples)
    innov = system.g[:, None] - system.Phi.T @ (system.K @ U)   # H u = Phi^T K u
    if prior.sigma_e > 0:
        E = np.column_stack(
            [sparse.gaussian_vector(sparse.rng_stream(seed, n_samples + j), system.m_interior)
             for j in range(n_samples)]
        )
        innov = innov + prior.sigma_e * E
    gain = K_factor.solve(Sigma_f @ (system.Phi @ S_factor.solve(innov)))  # second solve
    return Ensemble(X=U + gain, seed=seed, kind="posterior_via_u")


def _observed_gram_factor(Sigma_f, Phi, sigma_e):
    S = (Phi.T @ Sigma_f @ Phi).tocsc()
    if sigma_e > 0:
        S = (S + sigma_e**2 * sp.identity(S.shape[0], format="csc")).tocsc()
    return sparse.cholesky(S)

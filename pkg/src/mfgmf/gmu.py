"""The Gaussian mixture update.

Fuses a Gaussian-mixture prior with a Gaussian-mixture information source
through a (non)linear map: every (prior component, information component)
pair undergoes an extended-Kalman conditioning, and the pair weights are the
innovation likelihoods, normalized in the log domain and blended toward
uniform by a defensive factor.

Covariances are stored grouped: the gain and posterior covariance depend on
the information source only through its covariance group, so an information
mixture with one shared covariance (the KDE case) costs one gain and one
posterior covariance per prior component instead of one per pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .core import GaussianMixture
from .errors import ArgumentError, NumericalError

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class InformationMap:
    """A deterministic map with Jacobian, from state space to information space.

    ``apply``/``jacobian`` act on single vectors; the optional ``*_many``
    variants act on (K, n) stacks and default to a Python loop.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    domain_dim: int
    range_dim: int
    apply_many: Callable[[np.ndarray], np.ndarray] | None = None
    jacobian_many: Callable[[np.ndarray], np.ndarray] | None = None

    def apply_batch(self, points: np.ndarray) -> np.ndarray:
        if self.apply_many is not None:
            return np.asarray(self.apply_many(points), dtype=float)
        return np.stack([np.asarray(self.apply(p), dtype=float) for p in points])

    def jacobian_batch(self, points: np.ndarray) -> np.ndarray:
        if self.jacobian_many is not None:
            return np.asarray(self.jacobian_many(points), dtype=float)
        return np.stack([np.asarray(self.jacobian(p), dtype=float) for p in points])


def linear_map(matrix) -> InformationMap:
    """InformationMap for a constant linear operator."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    m, n = matrix.shape
    return InformationMap(
        apply=lambda x: matrix @ x,
        jacobian=lambda x: matrix,
        domain_dim=n,
        range_dim=m,
        apply_many=lambda pts: pts @ matrix.T,
        jacobian_many=lambda pts: np.broadcast_to(matrix, (pts.shape[0], m, n)).copy(),
    )


def check_jacobian(imap: InformationMap, points: np.ndarray, rtol: float = 1e-5,
                   step: float = 1e-6) -> float:
    """Max relative error of the Jacobian against central finite differences."""
    worst = 0.0
    for x in np.atleast_2d(points):
        jac = np.atleast_2d(imap.jacobian(x))
        fd = np.empty_like(jac)
        for c in range(x.size):
            delta = np.zeros_like(x)
            delta[c] = step * max(1.0, abs(x[c]))
            fd[:, c] = (np.asarray(imap.apply(x + delta)) - np.asarray(imap.apply(x - delta))) / (
                2.0 * delta[c]
            )
        scale = max(np.abs(jac).max(), 1.0)
        worst = max(worst, float(np.abs(jac - fd).max() / scale))
    if worst > rtol:
        raise NumericalError(f"Jacobian mismatch vs finite differences: {worst:.3e}")
    return worst


@dataclass(frozen=True)
class GmuConfig:
    """Defensive weight regularization: ``w <- (1-delta) w + delta / K``."""

    defensive_factor: float = 1e-4

    def __post_init__(self):
        if not 0.0 <= self.defensive_factor <= 1.0:
            raise ArgumentError("defensive factor must lie in [0, 1]")


def gaussian_mixture_update(prior: GaussianMixture, info: GaussianMixture,
                            imap: InformationMap, cfg: GmuConfig) -> GaussianMixture:
    """Condition a mixture prior on a mixture information source through a map.

    Returns the ``K_prior * K_info``-component posterior mixture, components
    ordered prior-major (pair ``(i, j)`` at index ``i * K_info + j``).
    Posterior covariances are grouped per (prior component, information
    covariance group).
    """
    if imap.domain_dim != prior.dim or imap.range_dim != info.dim:
        raise ArgumentError(
            f"map ({imap.domain_dim}->{imap.range_dim}) does not connect prior "
            f"(n={prior.dim}) to information source (m={info.dim})"
        )
    k_prior, k_info = prior.n_components, info.n_components
    n, m = prior.dim, info.dim
    g_info = info.n_cov_groups

    jacobians = imap.jacobian_batch(prior.means)
    projected = imap.apply_batch(prior.means)
    if jacobians.shape != (k_prior, m, n) or projected.shape != (k_prior, m):
        raise ArgumentError("map output shapes inconsistent with declared dimensions")

    with np.errstate(divide="ignore"):
        logw_prior = np.log(prior.weights)
        logw_info = np.log(info.weights)

    post_means = np.empty((k_prior, k_info, n))
    post_covs = np.empty((k_prior, g_info, n, n))
    raw_logw = np.empty((k_prior, k_info))

    for gi in range(prior.n_cov_groups):
        rows = np.nonzero(prior.cov_index == gi)[0]
        if rows.size == 0:
            continue
        cov_x = prior.covariances[gi]
        jac = jacobians[rows]                                  # (R, m, n)
        jac_cov = jac @ cov_x                                  # (R, m, n)
        for gj in range(g_info):
            cols = np.nonzero(info.cov_index == gj)[0]
            if cols.size == 0:
                continue
            innov_cov = jac_cov @ jac.transpose(0, 2, 1) + info.covariances[gj]
            innov_cov = 0.5 * (innov_cov + innov_cov.transpose(0, 2, 1))
            try:
                chol = np.linalg.cholesky(innov_cov)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("innovation covariance not factorizable") from exc
            logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)

            # Gain G = Sigma_x Lambda^T S^{-1}, one per prior component.
            gain = np.linalg.solve(innov_cov, jac_cov).transpose(0, 2, 1)  # (R, n, m)

            innovations = projected[rows][:, None, :] - info.means[cols][None, :, :]
            post_means[np.ix_(rows, cols)] = (
                prior.means[rows][:, None, :]
                - innovations @ gain.transpose(0, 2, 1)
            )
            cov_post = cov_x - gain @ jac_cov
            post_covs[rows, gj] = 0.5 * (cov_post + cov_post.transpose(0, 2, 1))

            sol = np.linalg.solve(innov_cov, innovations.transpose(0, 2, 1))  # (R, m, C)
            quad = np.einsum("rjm,rmj->rj", innovations, sol)
            raw_logw[np.ix_(rows, cols)] = (
                logw_prior[rows][:, None]
                + logw_info[cols][None, :]
                - 0.5 * (quad + logdet[:, None] + m * _LOG_2PI)
            )

    flat_raw = raw_logw.reshape(-1)
    total = logsumexp(flat_raw)
    if not np.isfinite(total):
        raise NumericalError("all posterior mixture weights vanished")
    weights = np.exp(flat_raw - total)

    delta = cfg.defensive_factor
    weights = (1.0 - delta) * weights + delta / weights.size
    weights = weights / weights.sum()

    cov_index = (
        np.repeat(np.arange(k_prior, dtype=np.int64) * g_info, k_info)
        + np.tile(info.cov_index, k_prior)
    )
    return GaussianMixture(
        means=post_means.reshape(k_prior * k_info, n),
        covariances=post_covs.reshape(k_prior * g_info, n, n),
        weights=weights,
        cov_index=cov_index,
    )


def gmu_shared_covariance(prior: GaussianMixture, info: GaussianMixture,
                          imap: InformationMap, cfg: GmuConfig) -> GaussianMixture:
    """Mixture update fast path for shared-covariance inputs.

    Both inputs must carry a single covariance group (the KDE case); the
    output then stores one gain's worth of posterior covariance per prior
    component rather than per pair.  Results match the generic update.
    """
    if prior.n_cov_groups != 1 or info.n_cov_groups != 1:
        raise ArgumentError("shared-covariance update requires single-group inputs")
    return gaussian_mixture_update(prior, info, imap, cfg)

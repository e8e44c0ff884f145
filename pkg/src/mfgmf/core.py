"""Ensembles, Gaussian mixtures, densities, and sampling.

This module is the shared numerical substrate: weighted ensembles of state
vectors, finite Gaussian mixtures (with covariance sharing between
components), log-domain density evaluation, and reproducible sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ArgumentError, DegenerateEnsembleError, NumericalError

_WEIGHT_TOL = 1e-12
_SYM_TOL = 1e-10

# Jitter policy for Cholesky factorization: scaled identity is added before
# factoring, with one retry at the larger epsilon.
_JITTER_EPS = (1e-10, 1e-8)


@dataclass(frozen=True)
class RngStream:
    """A reproducible, splittable random stream.

    Identical ``(seed, stream)`` pairs reproduce identical draw sequences;
    distinct stream ids are statistically independent (counter-based Philox
    keying).  Instances are cheap value objects; call :meth:`generator` to get
    a consumable ``numpy.random.Generator``.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.seed & 0xFFFFFFFFFFFFFFFF, self.stream & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, offset: int) -> "RngStream":
        """Derive a related-but-independent stream (disjoint stream id)."""
        return RngStream(self.seed, self.stream + offset)


def as_generator(rng) -> np.random.Generator:
    """Accept either an RngStream or an already-built Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ArgumentError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


class Ensemble:
    """A weighted collection of state vectors.

    Parameters
    ----------
    members : array_like, shape (N, n)
        One state vector per row.
    weights : array_like, shape (N,), optional
        Non-negative, summing to one.  Uniform when omitted.
    """

    __slots__ = ("members", "weights")

    def __init__(self, members, weights=None):
        members = np.atleast_2d(np.asarray(members, dtype=float))
        if members.ndim != 2 or members.shape[0] < 1 or members.shape[1] < 1:
            raise ArgumentError("members must be a non-empty (N, n) array")
        n_members = members.shape[0]
        if weights is None:
            weights = np.full(n_members, 1.0 / n_members)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (n_members,):
                raise ArgumentError("weights must have one entry per member")
            if np.any(weights < 0):
                raise ArgumentError("weights must be non-negative")
            if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
                raise ArgumentError("weights must sum to 1 within 1e-12")
        self.members = members
        self.weights = weights

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def dim(self) -> int:
        return self.members.shape[1]

    def __repr__(self):
        return f"Ensemble(N={self.size}, n={self.dim})"


def ensemble_mean_cov(ensemble: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean and unbiased weighted covariance of an ensemble.

    The covariance uses the normalized-weights unbiased divisor
    ``1 - sum(w**2)``, which reduces to the usual ``N - 1`` divisor for
    uniform weights.  Requires at least two members.
    """
    mean = ensemble.weights @ ensemble.members
    if ensemble.size < 2:
        raise DegenerateEnsembleError("covariance requires at least 2 members")
    centered = ensemble.members - mean
    denom = 1.0 - float(ensemble.weights @ ensemble.weights)
    if denom <= 0.0:
        raise DegenerateEnsembleError("effective ensemble size too small for covariance")
    cov = (centered.T * ensemble.weights) @ centered / denom
    return mean, 0.5 * (cov + cov.T)


def ensemble_mean(ensemble: Ensemble) -> np.ndarray:
    return ensemble.weights @ ensemble.members


class GaussianMixture:
    """A finite Gaussian mixture with grouped covariance storage.

    Component ``k`` has mean ``means[k]`` and covariance
    ``covariances[cov_index[k]]``; several components may share one stored
    matrix (kernel density estimates share a single matrix across all
    components, mixture updates share one matrix per prior component).

    Parameters
    ----------
    means : (K, n) array
    covariances : (G, n, n) array
        Stored covariance groups, ``G <= K``.
    weights : (K,) array
    cov_index : (K,) int array, optional
        Maps components to covariance groups.  Defaults to the identity
        (``G == K``) or all-zeros when a single group is given.
    """

    __slots__ = ("means", "covariances", "weights", "cov_index", "_chol", "_half_logdet")

    def __init__(self, means, covariances, weights, cov_index=None):
        means = np.atleast_2d(np.asarray(means, dtype=float))
        covariances = np.asarray(covariances, dtype=float)
        if covariances.ndim == 2:
            covariances = covariances[None, :, :]
        weights = np.asarray(weights, dtype=float)
        n_comp, dim = means.shape
        n_groups = covariances.shape[0]
        if covariances.shape[1:] != (dim, dim):
            raise ArgumentError("covariance shape does not match mean dimension")
        if weights.shape != (n_comp,):
            raise ArgumentError("weights must have one entry per component")
        if cov_index is None:
            if n_groups == 1:
                cov_index = np.zeros(n_comp, dtype=np.int64)
            elif n_groups == n_comp:
                cov_index = np.arange(n_comp, dtype=np.int64)
            else:
                raise ArgumentError("cov_index required when 1 < G < K")
        else:
            cov_index = np.asarray(cov_index, dtype=np.int64)
            if cov_index.shape != (n_comp,) or cov_index.min() < 0 or cov_index.max() >= n_groups:
                raise ArgumentError("cov_index out of range")
        if np.any(weights < 0):
            raise ArgumentError("weights must be non-negative")
        if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ArgumentError("weights must sum to 1 within 1e-12")
        self.means = means
        self.covariances = covariances
        self.weights = weights
        self.cov_index = cov_index
        self._chol = None
        self._half_logdet = None

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_cov_groups(self) -> int:
        return self.covariances.shape[0]

    def cholesky_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower Cholesky factor and half log-determinant per covariance group.

        Factors are computed once with the jitter policy (scaled-identity
        jitter, one retry at a larger epsilon) and cached.  An exactly zero
        covariance factorizes to the zero matrix with ``half_logdet = -inf``
        (usable for sampling, not for densities).
        """
        if self._chol is None:
            self._chol, self._half_logdet = _factor_spd_stack(self.covariances)
        return self._chol, self._half_logdet

    def cholesky_for_groups(self, groups: np.ndarray) -> np.ndarray:
        """Factors for selected covariance groups only (used by sampling).

        Avoids factoring every group of a large posterior mixture when only a
        few components were drawn; falls back to the full cache when present.
        """
        if self._chol is not None:
            return self._chol[groups]
        unique, inverse = np.unique(groups, return_inverse=True)
        chol, _ = _factor_spd_stack(self.covariances[unique])
        return chol[inverse]

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def validate(self) -> None:
        """Check the full type invariants (symmetry, factorizability, weights)."""
        for g in range(self.n_cov_groups):
            cov = self.covariances[g]
            scale = max(np.abs(cov).max(), 1.0)
            if np.abs(cov - cov.T).max() > _SYM_TOL * scale:
                raise NumericalError(f"covariance group {g} is not symmetric within 1e-10")
        self.cholesky_factors()

    def __repr__(self):
        return f"GaussianMixture(K={self.n_components}, n={self.dim}, G={self.n_cov_groups})"


def _factor_spd(cov: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky with scaled-identity jitter: eps * trace/n, retried once."""
    dim = cov.shape[0]
    trace_scale = np.trace(cov) / dim
    if trace_scale == 0.0 and not np.any(cov):
        return np.zeros_like(cov), -np.inf
    for eps in _JITTER_EPS:
        try:
            chol = np.linalg.cholesky(cov + (eps * trace_scale) * np.eye(dim))
        except np.linalg.LinAlgError:
            continue
        return chol, float(np.sum(np.log(np.diag(chol))))
    raise NumericalError("covariance not factorizable after jitter policy")


def _factor_spd_stack(covs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched jittered Cholesky; falls back per matrix on failure."""
    count, dim = covs.shape[0], covs.shape[1]
    traces = np.einsum("gii->g", covs) / dim
    jittered = covs + (_JITTER_EPS[0] * traces)[:, None, None] * np.eye(dim)
    try:
        chol = np.linalg.cholesky(jittered)
        half_logdet = np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        return chol, half_logdet
    except np.linalg.LinAlgError:
        chol = np.empty_like(covs)
        half_logdet = np.empty(count)
        for g in range(count):
            chol[g], half_logdet[g] = _factor_spd(covs[g])
        return chol, half_logdet


def mixture_mean_cov(gm: GaussianMixture, unbiased_spread: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the mixture distribution.

    With ``unbiased_spread=False`` this is the exact distributional covariance
    ``sum_i w_i Sigma_i + sum_i w_i (mu_i - mu)(mu_i - mu)^T``.  With
    ``unbiased_spread=True`` the between-component term uses the same
    unbiased divisor as :func:`ensemble_mean_cov`, which makes the
    kernel-density covariance identity hold exactly (the KDE bandwidth is
    built from the unbiased ensemble covariance).
    """
    mean = gm.mean()
    centered = gm.means - mean
    spread = (centered.T * gm.weights) @ centered
    if unbiased_spread:
        denom = 1.0 - float(gm.weights @ gm.weights)
        if denom <= 0.0:
            raise DegenerateEnsembleError("unbiased spread needs > 1 effective component")
        spread = spread / denom
    within = np.einsum("k,kij->ij", np.bincount(gm.cov_index, weights=gm.weights,
                                                minlength=gm.n_cov_groups), gm.covariances)
    cov = within + spread
    return mean, 0.5 * (cov + cov.T)


def gm_logpdf(gm: GaussianMixture, x) -> float:
    """Log-density of the mixture at a single point (log-domain, max-shifted)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (gm.dim,):
        raise ArgumentError(f"point has dimension {x.shape}, mixture has {gm.dim}")
    return float(gm_logpdf_many(gm, x[None, :])[0])


def gm_logpdf_many(gm: GaussianMixture, points: np.ndarray) -> np.ndarray:
    """Log-density of the mixture at each row of ``points`` (shape (M, n))."""
    points = np.ascontiguousarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != gm.dim:
        raise ArgumentError("points must be (M, n) with n matching the mixture")
    chol, half_logdet = gm.cholesky_factors()
    if not np.all(np.isfinite(half_logdet)):
        raise NumericalError("mixture contains a zero covariance; density undefined")
    with np.errstate(divide="ignore"):
        logw = np.log(gm.weights)
    return kernels.gm_logpdf_points(
        points, gm.means, gm.cov_index, chol, half_logdet, logw
    )


def discrete_sample(weights, count: int, rng) -> np.ndarray:
    """Multinomial index draws from a discrete weight distribution."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise ArgumentError("weights must be a non-empty vector")
    if np.any(weights < 0):
        raise ArgumentError("weights must be non-negative")
    total = weights.sum()
    if total <= 0:
        raise ArgumentError("weights must have positive sum")
    gen = as_generator(rng)
    return gen.choice(weights.size, size=count, p=weights / total)


def gm_sample(gm: GaussianMixture, count: int, rng) -> Ensemble:
    """Draw an equally weighted ensemble from a Gaussian mixture.

    Each draw samples a component index from the weights, then samples that
    component's normal through its (cached) Cholesky factor.
    """
    if count < 1:
        raise ArgumentError("count must be >= 1")
    gen = as_generator(rng)
    indices = discrete_sample(gm.weights, count, gen)
    normals = gen.standard_normal((count, gm.dim))
    factors = gm.cholesky_for_groups(gm.cov_index[indices])
    draws = gm.means[indices] + (factors @ normals[:, :, None])[:, :, 0]
    return Ensemble(draws)

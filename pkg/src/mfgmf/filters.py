"""Single-cycle analysis operations for the four non-adaptive filters.

All analyses are pure given explicit random streams: the stochastic Kalman
variants (EnKF, MFEnKF) use perturbed observations and per-member linearized
gains; the mixture variants (EnGMF, MFEnGMF) run kernel density estimation
and Gaussian mixture updates, then resample.  The multifidelity variants fuse
a full-space theory ensemble with a reduced-space surrogate ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    Ensemble,
    GaussianMixture,
    as_generator,
    ensemble_mean_cov,
    gm_sample,
)
from .errors import ArgumentError, DegenerateEnsembleError, NumericalError, ResourceLimitError
from .gmu import GmuConfig, gaussian_mixture_update, gmu_shared_covariance
from .kde import KdeConfig, LocalizationMatrix, kde_estimate
from .models import CouplingMap, DynamicalModel, ObservationModel, perturbed_observations

KALMAN_VARIANTS = ("enkf", "mfenkf")
MIXTURE_VARIANTS = ("engmf", "mfengmf")
MULTIFIDELITY_VARIANTS = ("mfenkf", "mfengmf")
VARIANTS = KALMAN_VARIANTS + MIXTURE_VARIANTS


@dataclass(frozen=True)
class FilterConfig:
    """Per-variant analysis parameters.

    Kalman variants read the inflation factors; mixture variants read the
    bandwidth scaling factors and defensive factor.  Localization (full state
    space only) applies to every variant.
    """

    variant: str
    n_x: int
    n_u: int = 0
    s_x: float = 1.0
    s_u: float = 1.0
    alpha_x: float = 1.0
    alpha_u: float = 1.0
    defensive: float = 1e-4
    localization: LocalizationMatrix | None = None
    component_cap: int = 1_000_000
    independent_uhat_perturbations: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ArgumentError(f"unknown filter variant {self.variant!r}")
        if self.n_x < 2:
            raise ArgumentError("theory ensemble size must be >= 2")
        if self.variant in MULTIFIDELITY_VARIANTS and self.n_u < 2:
            raise ArgumentError("multifidelity variants require a reduced ensemble (N_U >= 2)")
        if self.alpha_x < 1.0 or self.alpha_u < 1.0:
            raise ArgumentError("inflation factors must be >= 1")
        if self.s_x <= 0.0 or self.s_u <= 0.0:
            raise ArgumentError("bandwidth scaling factors must be positive")

    def with_trust(self, s_x: float, s_u: float | None = None) -> "FilterConfig":
        if s_u is None:
            return replace(self, s_x=s_x)
        return replace(self, s_x=s_x, s_u=s_u)


@dataclass
class AnalysisResult:
    """Outputs of one analysis cycle.

    ``density`` is the posterior mixture for mixture variants and an s=1
    kernel density estimate of the analysis ensemble for Kalman variants;
    ``mean_estimate`` is the variant's posterior state estimate (mixture
    mean, ensemble mean, or control-variate total mean).
    """

    variant: str
    posterior_theory: Ensemble
    mean_estimate: np.ndarray
    posterior_reduced: Ensemble | None = None
    posterior_uhat: Ensemble | None = None
    posterior_total: Ensemble | None = None
    density: GaussianMixture | None = None
    diagnostics: dict = field(default_factory=dict)


def inflate(ensemble: Ensemble, alpha: float) -> Ensemble:
    """Widen an ensemble about its mean: ``x <- mean + alpha (x - mean)``."""
    if alpha < 1.0:
        raise ArgumentError("inflation factor must be >= 1")
    if alpha == 1.0:
        return ensemble
    mean = ensemble.weights @ ensemble.members
    return Ensemble(mean + alpha * (ensemble.members - mean), ensemble.weights)


def propagate(ensemble: Ensemble, model: DynamicalModel, rng) -> Ensemble:
    """Member-wise model propagation; weights are preserved."""
    gen = as_generator(rng)
    return Ensemble(model.step_many(ensemble.members, gen), ensemble.weights)


def _effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(weights**2))


def _member_gains(cov: np.ndarray, jacobians: np.ndarray, noise_cov: np.ndarray) -> np.ndarray:
    """Per-member linearized gains ``K_i = Sigma H_i^T (H_i Sigma H_i^T + R)^{-1}``."""
    jac_cov = jacobians @ cov                                   # (N, m, n)
    innov_cov = jac_cov @ jacobians.transpose(0, 2, 1) + noise_cov
    innov_cov = 0.5 * (innov_cov + innov_cov.transpose(0, 2, 1))
    try:
        gains = np.linalg.solve(innov_cov, jac_cov).transpose(0, 2, 1)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance not invertible") from exc
    return gains


def enkf_analysis(ensemble: Ensemble, obs: ObservationModel, y, cfg: FilterConfig,
                  rng, perturbations: np.ndarray | None = None) -> AnalysisResult:
    """Perturbed-observations EnKF with per-member linearized gains."""
    if ensemble.size < 2:
        raise DegenerateEnsembleError("EnKF requires at least 2 members")
    gen = as_generator(rng)
    inflated = inflate(ensemble, cfg.alpha_x)
    _, cov = ensemble_mean_cov(inflated)
    if cfg.localization is not None:
        cov = cfg.localization.rho * cov

    members = inflated.members
    jacobians = obs.operator.jacobian_batch(members)
    predicted = obs.operator.apply_batch(members)
    if perturbations is None:
        perturbations = perturbed_observations(obs, y, inflated.size, gen).members
    gains = _member_gains(cov, jacobians, obs.noise_cov)
    updated = members - np.einsum("knm,km->kn", gains, predicted - perturbations)
    posterior = Ensemble(updated, inflated.weights)
    density = kde_estimate(posterior, KdeConfig(scaling_factor=1.0))
    return AnalysisResult(
        variant="enkf",
        posterior_theory=posterior,
        mean_estimate=posterior.weights @ posterior.members,
        density=density,
        diagnostics={"mean_gain_norm": float(np.mean(np.linalg.norm(gains, axis=(1, 2))))},
    )


def engmf_analysis(ensemble: Ensemble, obs: ObservationModel, y, cfg: FilterConfig,
                   rng) -> AnalysisResult:
    """Ensemble Gaussian mixture filter: KDE, mixture update with the
    observation, multinomial resampling back to the ensemble size."""
    gen = as_generator(rng)
    prior = kde_estimate(ensemble, KdeConfig(cfg.s_x, cfg.localization))
    posterior = gmu_shared_covariance(
        prior, obs.as_mixture(y), obs.operator, GmuConfig(cfg.defensive)
    )
    resampled = gm_sample(posterior, ensemble.size, gen)
    return AnalysisResult(
        variant="engmf",
        posterior_theory=resampled,
        mean_estimate=posterior.mean(),
        density=posterior,
        diagnostics={"effective_components": _effective_sample_size(posterior.weights)},
    )


def _cross_cov(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mean_a = weights @ a
    mean_b = weights @ b
    denom = 1.0 - float(weights @ weights)
    return ((a - mean_a).T * weights) @ (b - mean_b) / denom


def mfenkf_analysis(theory: Ensemble, reduced: Ensemble, coupling: CouplingMap,
                    obs: ObservationModel, y, cfg: FilterConfig, rng,
                    perturbations: np.ndarray | None = None) -> AnalysisResult:
    """Single-step multifidelity EnKF on the linear control-variate coupling.

    The total-variate covariance is assembled from the theory ensemble, its
    encoded control ensemble, and the surrogate ensemble with the coupling
    gain ``S = Phi / 2``; the three linearized updates share perturbed
    observations between the theory and control ensembles.
    """
    if theory.size < 2 or reduced.size < 2:
        raise DegenerateEnsembleError("MFEnKF requires N_X >= 2 and N_U >= 2")
    gen = as_generator(rng)

    uhat = Ensemble(coupling.encode.apply_batch(theory.members), theory.weights)
    theory = inflate(theory, cfg.alpha_x)
    uhat = inflate(uhat, cfg.alpha_x)
    reduced = inflate(reduced, cfg.alpha_u)

    coupling_gain = 0.5 * coupling.decode.jacobian(uhat.weights @ uhat.members)

    _, cov_x = ensemble_mean_cov(theory)
    _, cov_uhat = ensemble_mean_cov(uhat)
    _, cov_u = ensemble_mean_cov(reduced)
    cross = _cross_cov(theory.members, uhat.members, theory.weights)
    cov_total = (
        cov_x
        - cross @ coupling_gain.T
        - coupling_gain @ cross.T
        + coupling_gain @ (cov_uhat + cov_u) @ coupling_gain.T
    )
    cov_total = 0.5 * (cov_total + cov_total.T)
    if cfg.localization is not None:
        cov_total = cfg.localization.rho * cov_total

    pert_x = (perturbations if perturbations is not None
              else perturbed_observations(obs, y, theory.size, gen).members)
    pert_u = perturbed_observations(obs, y, reduced.size, gen).members
    pert_uhat = (perturbed_observations(obs, y, theory.size, gen).members
                 if cfg.independent_uhat_perturbations else pert_x)

    def kalman_update(members: np.ndarray, pert: np.ndarray):
        jac = obs.operator.jacobian_batch(members)
        gains = _member_gains(cov_total, jac, obs.noise_cov)
        innov = obs.operator.apply_batch(members) - pert
        return np.einsum("knm,km->kn", gains, innov)

    post_theory = Ensemble(theory.members - kalman_update(theory.members, pert_x),
                           theory.weights)

    def reduced_update(ens: Ensemble, pert: np.ndarray) -> Ensemble:
        lifted = coupling.decode.apply_batch(ens.members)
        update = kalman_update(lifted, pert)
        enc_jac = coupling.encode.jacobian_batch(lifted)
        return Ensemble(ens.members - np.einsum("krn,kn->kr", enc_jac, update), ens.weights)

    post_uhat = reduced_update(uhat, pert_uhat)
    post_reduced = reduced_update(reduced, pert_u)

    mean_estimate = (
        post_theory.weights @ post_theory.members
        - coupling_gain @ (post_uhat.weights @ post_uhat.members
                           - post_reduced.weights @ post_reduced.members)
    )
    total_members = (
        post_theory.members
        - (post_uhat.members
           - post_reduced.members[np.arange(post_theory.size) % post_reduced.size])
        @ coupling_gain.T
    )
    total = Ensemble(total_members, post_theory.weights)
    return AnalysisResult(
        variant="mfenkf",
        posterior_theory=post_theory,
        posterior_reduced=post_reduced,
        posterior_uhat=post_uhat,
        posterior_total=total,
        mean_estimate=mean_estimate,
        density=kde_estimate(total, KdeConfig(scaling_factor=1.0)),
    )


def mfengmf_analysis(theory: Ensemble, reduced: Ensemble, coupling: CouplingMap,
                     obs: ObservationModel, y, cfg: FilterConfig, rng) -> AnalysisResult:
    """Multifidelity ensemble Gaussian mixture filter.

    Fuses the theory-ensemble KDE with the surrogate-ensemble KDE through the
    encoder (the nonlinear analogue of the control-variate coupling), then
    with the observation; resamples ``N_X + N_U`` members from the posterior
    and encodes the last ``N_U`` back to the reduced space.
    """
    if theory.size < 2 or reduced.size < 2:
        raise DegenerateEnsembleError("MFEnGMF requires N_X >= 2 and N_U >= 2")
    n_components = theory.size * reduced.size
    if n_components > cfg.component_cap:
        raise ResourceLimitError(
            f"mixture would need {n_components} components (cap {cfg.component_cap})"
        )
    gen = as_generator(rng)

    prior_x = kde_estimate(theory, KdeConfig(cfg.s_x, cfg.localization))
    prior_u = kde_estimate(reduced, KdeConfig(cfg.s_u))
    fused = gmu_shared_covariance(prior_x, prior_u, coupling.encode, GmuConfig(cfg.defensive))
    posterior = gaussian_mixture_update(fused, obs.as_mixture(y), obs.operator,
                                        GmuConfig(cfg.defensive))

    draws = gm_sample(posterior, theory.size + reduced.size, gen)
    post_theory = Ensemble(draws.members[: theory.size])
    post_reduced = Ensemble(coupling.encode.apply_batch(draws.members[theory.size :]))
    return AnalysisResult(
        variant="mfengmf",
        posterior_theory=post_theory,
        posterior_reduced=post_reduced,
        mean_estimate=posterior.mean(),
        density=posterior,
        diagnostics={
            "effective_components": _effective_sample_size(posterior.weights),
            "n_components": posterior.n_components,
        },
    )

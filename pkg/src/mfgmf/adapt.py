"""Expectation-maximization adaptation of the bandwidth scaling factors.

One EM step per assimilation: draw posterior samples at the current trust
state (the expectation set, frozen thereafter), then run a fixed number of
finite-difference gradient-ascent steps on the joint log-density objective
over the scaling factors.  The sequential filters carry the adapted state
into the next cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Ensemble, as_generator, gm_logpdf_many
from .errors import ArgumentError, NumericalError
from .gmu import GmuConfig, gmu_shared_covariance
from .kde import KdeConfig, LocalizationMatrix, kde_estimate
from .models import CouplingMap, ObservationModel

# Scaling factors are clamped here; non-positive factors would collapse or
# invert the KDE covariance.
S_MIN = 0.05


@dataclass(frozen=True)
class TrustState:
    """Bandwidth scaling factors carried across assimilation cycles."""

    s_x: float
    s_u: float | None = None

    def __post_init__(self):
        if self.s_x < S_MIN or (self.s_u is not None and self.s_u < S_MIN):
            raise ArgumentError(f"scaling factors must be >= {S_MIN}")

    @property
    def multifidelity(self) -> bool:
        return self.s_u is not None


@dataclass(frozen=True)
class EmConfig:
    """Ascent protocol: step count, fixed step size, FD step, sample count."""

    ascent_steps: int = 25
    step_size: float = 1.0 / 32.0
    fd_step: float = 1e-6
    sample_count: int | None = None

    def __post_init__(self):
        if self.ascent_steps < 0 or self.step_size < 0 or self.fd_step <= 0:
            raise ArgumentError("EM configuration values must be positive")


BANANA_EM = EmConfig(ascent_steps=25, step_size=1.0 / 32.0, fd_step=1e-6)
SEQUENTIAL_EM = EmConfig(ascent_steps=1, step_size=1.0 / 128.0, fd_step=1e-6)


@dataclass(frozen=True)
class EmPriorInputs:
    """The forecast-side inputs the objective's prior density is built from."""

    theory: Ensemble
    localization: LocalizationMatrix | None = None
    reduced: Ensemble | None = None
    coupling: CouplingMap | None = None
    defensive: float = 1e-4


def _prior_density(trust: TrustState, inputs: EmPriorInputs):
    kde_x = kde_estimate(inputs.theory, KdeConfig(trust.s_x, inputs.localization))
    if not trust.multifidelity:
        return kde_x
    if inputs.reduced is None or inputs.coupling is None:
        raise ArgumentError("multifidelity trust state needs reduced ensemble and coupling")
    kde_u = kde_estimate(inputs.reduced, KdeConfig(trust.s_u))
    return gmu_shared_covariance(kde_x, kde_u, inputs.coupling.encode,
                                 GmuConfig(inputs.defensive))


def em_objective(trust: TrustState, posterior_samples: Ensemble,
                 prior_inputs: EmPriorInputs, obs: ObservationModel, y) -> float:
    """Sample-mean joint log density: measurement likelihood plus prior density.

    Only the prior term depends on the trust state; the likelihood term is
    included so the value matches the EM objective being ascended.
    """
    samples = posterior_samples.members
    y = np.atleast_1d(np.asarray(y, dtype=float))

    residual = obs.operator.apply_batch(samples) - y
    chol = np.linalg.cholesky(obs.noise_cov)
    sol = np.linalg.solve(chol, residual.T)
    m = y.size
    log_lik = -0.5 * (
        np.einsum("mk,mk->k", sol, sol)
        + 2.0 * np.sum(np.log(np.diag(chol)))
        + m * np.log(2.0 * np.pi)
    )

    log_prior = gm_logpdf_many(_prior_density(trust, prior_inputs), samples)
    value = float(np.mean(log_lik) + np.mean(log_prior))
    if not np.isfinite(value):
        raise NumericalError("EM objective is not finite")
    return value


def em_adapt_step(prior_inputs: EmPriorInputs, obs: ObservationModel, y,
                  trust: TrustState, cfg: EmConfig, analysis_fn, rng,
                  analysis=None) -> TrustState:
    """One full EM step; returns the updated trust state.

    Runs the analysis at the current trust state (or reuses a precomputed
    one), freezes its posterior draws as the expectation sample set, then
    ascends the objective by forward finite differences with a fixed step
    size, clamping at the scaling-factor floor.
    """
    gen = as_generator(rng)
    if analysis is None:
        analysis = analysis_fn(trust, gen)
    count = cfg.sample_count or analysis.posterior_theory.size
    samples = Ensemble(analysis.posterior_theory.members[:count])

    values = np.array([trust.s_x] if not trust.multifidelity else [trust.s_x, trust.s_u])

    def unpack(vec) -> TrustState:
        if trust.multifidelity:
            return TrustState(s_x=float(vec[0]), s_u=float(vec[1]))
        return TrustState(s_x=float(vec[0]))

    for _ in range(cfg.ascent_steps):
        base = em_objective(unpack(values), samples, prior_inputs, obs, y)
        grad = np.empty_like(values)
        for k in range(values.size):
            shifted = values.copy()
            shifted[k] += cfg.fd_step
            grad[k] = (em_objective(unpack(shifted), samples, prior_inputs, obs, y)
                       - base) / cfg.fd_step
        values = np.maximum(values + cfg.step_size * grad, S_MIN)
    return unpack(values)

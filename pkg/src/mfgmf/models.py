"""Dynamical models, observation operators, and coupling maps.

Covers the two benchmark problems: the static 2-D range-observation problem
with its mock linear projection surrogate, and the 40-variable Lorenz '96
system with pairwise-norm observations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Ensemble, GaussianMixture, as_generator
from .errors import ArgumentError
from .gmu import InformationMap, linear_map

_NORM_FLOOR = 1e-12  # below this, norm-operator Jacobian rows are zeroed


@dataclass(frozen=True)
class DynamicalModel:
    """A one-assimilation-interval state propagator.

    ``step_many`` advances a stack of states; the rng argument feeds process
    noise and is unused by deterministic models.
    """

    dimension: int
    step_many: Callable[[np.ndarray, np.random.Generator], np.ndarray]

    def step(self, x: np.ndarray, rng) -> np.ndarray:
        return self.step_many(np.atleast_2d(np.asarray(x, dtype=float)), as_generator(rng))[0]


@dataclass(frozen=True)
class CouplingMap:
    """Encoder/decoder pair between full and reduced state spaces."""

    encode: InformationMap   # full (n) -> reduced (r)
    decode: InformationMap   # reduced (r) -> full (n)

    @property
    def full_dim(self) -> int:
        return self.encode.domain_dim

    @property
    def reduced_dim(self) -> int:
        return self.encode.range_dim


@dataclass(frozen=True)
class ObservationModel:
    """Measurement operator with Jacobian plus Gaussian error covariance."""

    operator: InformationMap
    noise_cov: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        if cov.shape != (self.operator.range_dim,) * 2:
            raise ArgumentError("noise covariance shape does not match operator range")
        if np.abs(cov - cov.T).max() > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ArgumentError("noise covariance must be symmetric")
        object.__setattr__(self, "noise_cov", cov)

    def noise_chol(self) -> np.ndarray:
        if not np.any(self.noise_cov):
            return np.zeros_like(self.noise_cov)
        return np.linalg.cholesky(self.noise_cov)

    def as_mixture(self, y: np.ndarray) -> GaussianMixture:
        """The observation as a one-component information mixture N(y, R)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return GaussianMixture(y[None, :], self.noise_cov[None, :, :], np.array([1.0]))


def perturbed_observations(obs: ObservationModel, y, count: int, rng) -> Ensemble:
    """Synthetic observation ensemble with mean ``y`` and covariance ``R``."""
    if count < 1:
        raise ArgumentError("count must be >= 1")
    gen = as_generator(rng)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    draws = y + gen.standard_normal((count, y.size)) @ obs.noise_chol().T
    return Ensemble(draws)


# --------------------------------------------------------------------------
# Lorenz '96
# --------------------------------------------------------------------------

def lorenz96_rhs(x: np.ndarray, forcing: float = 8.0) -> np.ndarray:
    """Cyclic Lorenz '96 tendencies; accepts a state vector or a (N, n) stack."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 4:
        raise ArgumentError("Lorenz '96 needs at least 4 sites")
    xm1 = np.roll(x, 1, axis=-1)
    xm2 = np.roll(x, 2, axis=-1)
    xp1 = np.roll(x, -1, axis=-1)
    return -xm1 * (xm2 - xp1) - x + forcing


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    if dt <= 0:
        raise ArgumentError("dt must be positive")
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def lorenz96_model(n: int = 40, forcing: float = 8.0, dt: float = 0.05,
                   interval: float = 0.2) -> DynamicalModel:
    """Deterministic Lorenz '96 propagator over one assimilation interval.

    Integrates with fixed-step RK4; the interval must be a whole number of
    steps.  No process noise (twin-experiment theory model).
    """
    substeps = round(interval / dt)
    if abs(substeps * dt - interval) > 1e-12:
        raise ArgumentError("assimilation interval must be a multiple of dt")

    def step_many(states, rng):
        out = np.array(states, dtype=float)
        for _ in range(substeps):
            out = rk4_step(lambda s: lorenz96_rhs(s, forcing), out, dt)
        return out

    return DynamicalModel(dimension=n, step_many=step_many)


def lorenz96_attractor_state(n: int = 40, forcing: float = 8.0,
                             spinup_time: float = 10.0) -> np.ndarray:
    """A state on the attractor: perturbed equilibrium integrated forward."""
    x = np.full(n, forcing)
    x[0] += 0.01
    steps = round(spinup_time / 0.05)
    for _ in range(steps):
        x = rk4_step(lambda s: lorenz96_rhs(s, forcing), x, 0.05)
    return x


def lorenz96_observation_operator(n: int = 40) -> InformationMap:
    """Pairwise-norm observation operator ``[h(x)]_i = sqrt(x_{2i-1}^2 + x_{2i}^2)``.

    Jacobian rows degenerate at the origin of a pair; below the floor the row
    is zeroed so updates locally ignore that observation.
    """
    if n % 2:
        raise ArgumentError("pairwise-norm operator needs an even dimension")
    m = n // 2

    def apply_many(states):
        states = np.atleast_2d(states)
        pairs = states.reshape(states.shape[0], m, 2)
        return np.sqrt(np.sum(pairs**2, axis=2))

    def jacobian_many(states):
        states = np.atleast_2d(states)
        norms = apply_many(states)
        safe = np.where(norms < _NORM_FLOOR, 1.0, norms)
        scaled = states.reshape(states.shape[0], m, 2) / safe[:, :, None]
        scaled = np.where(norms[:, :, None] < _NORM_FLOOR, 0.0, scaled)
        jac = np.zeros((states.shape[0], m, n))
        rows = np.arange(m)
        jac[:, rows, 2 * rows] = scaled[:, :, 0]
        jac[:, rows, 2 * rows + 1] = scaled[:, :, 1]
        return jac

    return InformationMap(
        apply=lambda x: apply_many(x[None, :])[0],
        jacobian=lambda x: jacobian_many(x[None, :])[0],
        domain_dim=n,
        range_dim=m,
        apply_many=apply_many,
        jacobian_many=jacobian_many,
    )


def lorenz96_observation_model(n: int = 40, noise_var: float = 0.25) -> ObservationModel:
    return ObservationModel(
        operator=lorenz96_observation_operator(n),
        noise_cov=noise_var * np.eye(n // 2),
    )


# --------------------------------------------------------------------------
# Static 2-D range-observation ("banana") problem
# --------------------------------------------------------------------------

BANANA_PRIOR_MEAN = np.array([-3.5, 0.0])
BANANA_PRIOR_COV = np.array([[1.0, 0.5], [0.5, 1.0]])
BANANA_OBS_VALUE = np.array([1.0])
BANANA_OBS_VAR = 1e-2


def norm_observation_operator(n: int = 2) -> InformationMap:
    """Euclidean-norm observation ``h(x) = ||x||`` with zero-guarded Jacobian."""

    def apply_many(states):
        return np.linalg.norm(np.atleast_2d(states), axis=1, keepdims=True)

    def jacobian_many(states):
        states = np.atleast_2d(states)
        norms = np.linalg.norm(states, axis=1, keepdims=True)
        safe = np.where(norms < _NORM_FLOOR, 1.0, norms)
        rows = np.where(norms < _NORM_FLOOR, 0.0, states / safe)
        return rows[:, None, :]

    return InformationMap(
        apply=lambda x: apply_many(x[None, :])[0],
        jacobian=lambda x: jacobian_many(x[None, :])[0],
        domain_dim=n,
        range_dim=1,
        apply_many=apply_many,
        jacobian_many=jacobian_many,
    )


def banana_problem() -> tuple[GaussianMixture, ObservationModel, CouplingMap]:
    """The static 2-D problem: Gaussian prior, range observation, mock projection.

    The mock surrogate keeps only the second coordinate; its decoder is the
    right inverse ``u -> (0, u)``.  Surrogate samples are made by projecting
    fresh prior samples (no surrogate noise).
    """
    prior = GaussianMixture(
        BANANA_PRIOR_MEAN[None, :], BANANA_PRIOR_COV[None, :, :], np.array([1.0])
    )
    obs = ObservationModel(
        operator=norm_observation_operator(2),
        noise_cov=np.array([[BANANA_OBS_VAR]]),
    )
    coupling = CouplingMap(
        encode=linear_map(np.array([[0.0, 1.0]])),
        decode=linear_map(np.array([[0.0], [1.0]])),
    )
    return prior, obs, coupling


def zero_dynamics(n: int) -> DynamicalModel:
    """Identity propagator, useful in tests."""
    return DynamicalModel(dimension=n, step_many=lambda states, rng: np.array(states))

"""Single-cycle analyses against Kalman oracles and limit behaviors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfgmf.core import Ensemble, GaussianMixture, RngStream, ensemble_mean_cov, gm_sample, mixture_mean_cov
from mfgmf.errors import ArgumentError, DegenerateEnsembleError, ResourceLimitError
from mfgmf.filters import (
    FilterConfig,
    enkf_analysis,
    engmf_analysis,
    inflate,
    mfenkf_analysis,
    mfengmf_analysis,
    propagate,
)
from mfgmf.gmu import linear_map
from mfgmf.kde import silverman_bandwidth
from mfgmf.models import (
    BANANA_OBS_VALUE,
    CouplingMap,
    ObservationModel,
    banana_problem,
    lorenz96_model,
    zero_dynamics,
)
from mfgmf.metrics import banana_true_posterior

from test_gmu import kalman_posterior


def test_inflate_identity():
    ens = Ensemble(RngStream(0).generator().normal(size=(8, 3)))
    assert inflate(ens, 1.0) is ens


def test_inflate_scales_spread():
    out = inflate(Ensemble([[-1.0], [1.0]]), 2.0)
    assert np.allclose(out.members, [[-2.0], [2.0]])
    _, cov = ensemble_mean_cov(out)
    assert cov[0, 0] == pytest.approx(8.0)  # 4x the original 2.0


@given(st.integers(min_value=0, max_value=2**32 - 1),
       st.floats(min_value=1.0, max_value=3.0))
@settings(max_examples=20, deadline=None)
def test_inflate_preserves_mean(seed, alpha):
    ens = Ensemble(RngStream(seed).generator().normal(size=(7, 4)))
    out = inflate(ens, alpha)
    assert np.abs(out.weights @ out.members - ens.weights @ ens.members).max() < 1e-14


def _linear_obs_model(obs_matrix, noise_cov):
    return ObservationModel(operator=linear_map(obs_matrix), noise_cov=noise_cov)


def _gaussian_ensemble(mean, cov, count, stream):
    gm = GaussianMixture(np.asarray(mean, dtype=float)[None, :],
                         np.asarray(cov, dtype=float)[None], [1.0])
    return gm_sample(gm, count, stream)


PRIOR_MEAN = np.array([1.0, -0.5])
PRIOR_COV = np.array([[1.0, 0.3], [0.3, 0.8]])
OBS_MATRIX = np.array([[1.0, 0.5]])
OBS_COV = np.array([[0.4]])
OBS_VALUE = np.array([1.4])


def test_enkf_matches_kalman_oracle():
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, 10_000, RngStream(50))
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    cfg = FilterConfig(variant="enkf", n_x=10_000)
    result = enkf_analysis(ens, obs, OBS_VALUE, cfg, RngStream(51))
    ref_mean, ref_cov = kalman_posterior(PRIOR_MEAN, PRIOR_COV, OBS_MATRIX, OBS_VALUE, OBS_COV)
    sigma = np.sqrt(np.diag(ref_cov) / ens.size)
    assert np.all(np.abs(result.mean_estimate - ref_mean) < 3 * sigma)
    _, post_cov = ensemble_mean_cov(result.posterior_theory)
    assert np.abs(post_cov - ref_cov).max() < 10 * np.abs(ref_cov).max() / np.sqrt(ens.size)


def test_enkf_uninformative_observation_keeps_prior():
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, 50, RngStream(52))
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV * 1e12)
    cfg = FilterConfig(variant="enkf", n_x=50)
    result = enkf_analysis(ens, obs, OBS_VALUE, cfg, RngStream(53))
    rel = np.abs(result.posterior_theory.members - ens.members) / (np.abs(ens.members) + 1.0)
    assert rel.max() < 1e-4


def test_enkf_zero_innovation_is_identity():
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, 30, RngStream(54))
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    cfg = FilterConfig(variant="enkf", n_x=30)
    perturbations = ens.members @ OBS_MATRIX.T  # y_i^pert = h(x_i)
    result = enkf_analysis(ens, obs, OBS_VALUE, cfg, RngStream(55),
                           perturbations=perturbations)
    assert np.abs(result.posterior_theory.members - ens.members).max() < 1e-12


def test_enkf_requires_two_members():
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    cfg = FilterConfig(variant="enkf", n_x=2)
    with pytest.raises(DegenerateEnsembleError):
        enkf_analysis(Ensemble([[0.0, 0.0]]), obs, OBS_VALUE, cfg, RngStream(0))


def test_engmf_matches_widened_kalman_oracle():
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, 10_000, RngStream(56))
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    scaling = 1.3
    cfg = FilterConfig(variant="engmf", n_x=10_000, s_x=scaling, defensive=0.0)
    result = engmf_analysis(ens, obs, OBS_VALUE, cfg, RngStream(57))
    mean_hat, cov_hat = ensemble_mean_cov(ens)
    widened = (1.0 + (scaling * silverman_bandwidth(ens.size, 2)) ** 2) * cov_hat
    ref_mean, ref_cov = kalman_posterior(mean_hat, widened, OBS_MATRIX, OBS_VALUE, OBS_COV)
    sigma = np.sqrt(np.diag(ref_cov) / ens.size)
    assert np.all(np.abs(result.mean_estimate - ref_mean) < 3 * sigma)


def test_engmf_banana_mean_matches_quadrature():
    prior, obs, _ = banana_problem()
    ens = gm_sample(prior, 10_000, RngStream(58))
    cfg = FilterConfig(variant="engmf", n_x=10_000)
    result = engmf_analysis(ens, obs, BANANA_OBS_VALUE, cfg, RngStream(59))
    reference = banana_true_posterior().mean()
    assert np.abs(result.mean_estimate - reference).max() < 0.05


def test_engmf_full_defensive_uniform_weights():
    prior, obs, _ = banana_problem()
    ens = gm_sample(prior, 40, RngStream(60))
    cfg = FilterConfig(variant="engmf", n_x=40, defensive=1.0)
    result = engmf_analysis(ens, obs, BANANA_OBS_VALUE, cfg, RngStream(61))
    assert np.allclose(result.density.weights, 1.0 / 40.0, atol=1e-12)


def test_engmf_resample_size_and_weights():
    prior, obs, _ = banana_problem()
    ens = gm_sample(prior, 33, RngStream(62))
    cfg = FilterConfig(variant="engmf", n_x=33)
    result = engmf_analysis(ens, obs, BANANA_OBS_VALUE, cfg, RngStream(63))
    assert result.posterior_theory.size == 33
    assert np.allclose(result.posterior_theory.weights, 1.0 / 33.0)


def _toy_coupling():
    # encode keeps the first coordinate; decode embeds it back
    return CouplingMap(encode=linear_map([[1.0, 0.0]]), decode=linear_map([[1.0], [0.0]]))


def test_mfenkf_coupling_gain_is_half_decoder_jacobian():
    _, _, coupling = banana_problem()
    gain = 0.5 * coupling.decode.jacobian(np.zeros(1))
    assert np.array_equal(gain, [[0.0], [0.5]])


def test_mfenkf_null_case_total_mean_equals_theory_mean():
    coupling = _toy_coupling()
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, 20_000, RngStream(64))
    reduced = Ensemble(coupling.encode.apply_batch(ens.members))
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    cfg = FilterConfig(variant="mfenkf", n_x=20_000, n_u=20_000)
    result = mfenkf_analysis(ens, reduced, coupling, obs, OBS_VALUE, cfg, RngStream(65))
    theory_mean = result.posterior_theory.weights @ result.posterior_theory.members
    assert np.abs(result.mean_estimate - theory_mean).max() < 0.02


def test_mfenkf_matches_kalman_oracle_on_linear_toy():
    coupling = _toy_coupling()
    count = 10_000
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, count, RngStream(66))
    reduced = Ensemble(coupling.encode.apply_batch(
        _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, count, RngStream(67)).members))
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    cfg = FilterConfig(variant="mfenkf", n_x=count, n_u=count)
    result = mfenkf_analysis(ens, reduced, coupling, obs, OBS_VALUE, cfg, RngStream(68))

    theta = np.array([[1.0, 0.0]])
    coupling_gain = 0.5 * np.array([[1.0], [0.0]])
    cross = PRIOR_COV @ theta.T
    reduced_cov = theta @ PRIOR_COV @ theta.T
    total_cov = (PRIOR_COV - cross @ coupling_gain.T - coupling_gain @ cross.T
                 + coupling_gain @ (2.0 * reduced_cov) @ coupling_gain.T)
    ref_mean, ref_cov = kalman_posterior(PRIOR_MEAN, total_cov, OBS_MATRIX, OBS_VALUE, OBS_COV)
    sigma = np.sqrt(np.diag(ref_cov) / count)
    assert np.all(np.abs(result.mean_estimate - ref_mean) < 4 * sigma)


def test_mfenkf_rejects_missing_reduced_ensemble():
    with pytest.raises(ArgumentError):
        FilterConfig(variant="mfenkf", n_x=10, n_u=0)
    coupling = _toy_coupling()
    obs = _linear_obs_model(OBS_MATRIX, OBS_COV)
    cfg = FilterConfig(variant="mfenkf", n_x=10, n_u=5)
    ens = _gaussian_ensemble(PRIOR_MEAN, PRIOR_COV, 10, RngStream(69))
    with pytest.raises(DegenerateEnsembleError):
        mfenkf_analysis(ens, Ensemble([[0.0]]), coupling, obs, OBS_VALUE, cfg, RngStream(0))


def test_mfengmf_resample_sizes_exact():
    prior, obs, coupling = banana_problem()
    ens = gm_sample(prior, 12, RngStream(70))
    reduced = Ensemble(coupling.encode.apply_batch(gm_sample(prior, 37, RngStream(71)).members))
    cfg = FilterConfig(variant="mfengmf", n_x=12, n_u=37)
    result = mfengmf_analysis(ens, reduced, coupling, obs, BANANA_OBS_VALUE, cfg, RngStream(72))
    assert result.posterior_theory.size == 12
    assert result.posterior_reduced.size == 37
    assert result.posterior_reduced.dim == 1
    assert result.density.n_components == 12 * 37


def test_mfengmf_full_defensive_uniform_weights():
    prior, obs, coupling = banana_problem()
    ens = gm_sample(prior, 10, RngStream(73))
    reduced = Ensemble(coupling.encode.apply_batch(gm_sample(prior, 20, RngStream(74)).members))
    cfg = FilterConfig(variant="mfengmf", n_x=10, n_u=20, defensive=1.0)
    result = mfengmf_analysis(ens, reduced, coupling, obs, BANANA_OBS_VALUE, cfg, RngStream(75))
    assert np.allclose(result.density.weights, 1.0 / 200.0, atol=1e-12)


def test_mfengmf_component_cap():
    prior, obs, coupling = banana_problem()
    ens = gm_sample(prior, 40, RngStream(76))
    reduced = Ensemble(coupling.encode.apply_batch(gm_sample(prior, 40, RngStream(77)).members))
    cfg = FilterConfig(variant="mfengmf", n_x=40, n_u=40, component_cap=1000)
    with pytest.raises(ResourceLimitError):
        mfengmf_analysis(ens, reduced, coupling, obs, BANANA_OBS_VALUE, cfg, RngStream(78))


def test_mfengmf_large_surrogate_scaling_recovers_engmf():
    # with no trust in the surrogate, the fused prior reverts to the theory KDE
    prior, obs, coupling = banana_problem()
    ens = gm_sample(prior, 25, RngStream(79))
    reduced = Ensemble(coupling.encode.apply_batch(gm_sample(prior, 50, RngStream(80)).members))
    cfg_mf = FilterConfig(variant="mfengmf", n_x=25, n_u=50, s_x=1.0, s_u=1e6)
    cfg_single = FilterConfig(variant="engmf", n_x=25, s_x=1.0)
    mf = mfengmf_analysis(ens, reduced, coupling, obs, BANANA_OBS_VALUE, cfg_mf, RngStream(81))
    single = engmf_analysis(ens, obs, BANANA_OBS_VALUE, cfg_single, RngStream(82))
    mean_mf, cov_mf = mixture_mean_cov(mf.density)
    mean_single, cov_single = mixture_mean_cov(single.density)
    assert np.abs(mean_mf - mean_single).max() < 1e-3 * max(1.0, np.abs(mean_single).max())
    assert np.abs(cov_mf - cov_single).max() < 1e-3 * np.abs(cov_single).max()


def test_mfengmf_hundred_cycle_mixture_validity(small_rom):
    from mfgmf.harness import make_lorenz96_truth
    from mfgmf.kde import build_localization

    surrogate = small_rom["surrogate"]
    coupling = surrogate.autoencoder.coupling_map()
    model = lorenz96_model()
    obs_model = __import__("mfgmf.models", fromlist=["lorenz96_observation_model"]) \
        .lorenz96_observation_model()
    truth, ys = make_lorenz96_truth(100, RngStream(90, 0))
    gen = RngStream(90, 2).generator()
    init = RngStream(90, 1).generator()
    theory = Ensemble(truth[0] + init.standard_normal((10, 40)))
    reduced = Ensemble(coupling.encode.apply_batch(truth[0] + init.standard_normal((30, 40))))
    cfg = FilterConfig(variant="mfengmf", n_x=10, n_u=30, s_x=2.0, s_u=2.0,
                       localization=build_localization(40, 4.0))
    u_model = surrogate.as_model()
    for k in range(1, 101):
        theory = propagate(theory, model, gen)
        reduced = propagate(reduced, u_model, gen)
        result = mfengmf_analysis(theory, reduced, coupling, obs_model, ys[k - 1], cfg, gen)
        result.density.validate()
        assert result.density.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert result.posterior_theory.size == 10
        assert result.posterior_reduced.size == 30
        theory = result.posterior_theory
        reduced = result.posterior_reduced


def test_propagate_zero_dynamics_identity():
    ens = Ensemble(RngStream(91).generator().normal(size=(6, 4)))
    out = propagate(ens, zero_dynamics(4), RngStream(92))
    assert np.array_equal(out.members, ens.members)
    assert np.array_equal(out.weights, ens.weights)


def test_propagate_equilibrium_unchanged():
    ens = Ensemble(np.full((4, 40), 8.0))
    out = propagate(ens, lorenz96_model(), RngStream(93))
    assert np.allclose(out.members, 8.0)


def test_propagate_surrogate_keeps_reduced_dimension(small_rom):
    surrogate = small_rom["surrogate"]
    encoded = surrogate.autoencoder.encode_many(np.full((5, 40), 8.0))
    out = propagate(Ensemble(encoded), surrogate.as_model(), RngStream(94))
    assert out.members.shape == (5, 14)

"""Multifidelity ensemble Gaussian mixture filtering.

Sequential data assimilation that fuses a trustworthy full-order ensemble
with samples from an untrustworthy reduced-order surrogate through Gaussian
mixture updates, with kernel-density bandwidth scaling factors acting as
adaptable measures of trust.  Ships the EnKF, EnGMF, MFEnKF, and MFEnGMF
analyses, EM trust adaptation, the two benchmark problems, and an experiment
harness.
"""

__version__ = "0.1.0"

from .core import (
    Ensemble,
    GaussianMixture,
    RngStream,
    discrete_sample,
    ensemble_mean_cov,
    gm_logpdf,
    gm_logpdf_many,
    gm_sample,
    mixture_mean_cov,
)
from .kde import KdeConfig, LocalizationMatrix, build_localization, kde_estimate, silverman_bandwidth
from .gmu import GmuConfig, InformationMap, gaussian_mixture_update, gmu_shared_covariance, linear_map
from .models import (
    CouplingMap,
    DynamicalModel,
    ObservationModel,
    banana_problem,
    lorenz96_model,
    lorenz96_rhs,
    perturbed_observations,
    rk4_step,
)
from .filters import (
    AnalysisResult,
    FilterConfig,
    enkf_analysis,
    engmf_analysis,
    inflate,
    mfenkf_analysis,
    mfengmf_analysis,
    propagate,
)
from .adapt import EmConfig, EmPriorInputs, TrustState, em_adapt_step, em_objective
from .metrics import (
    GridDensity,
    GridSpec,
    banana_true_posterior,
    f_divergence,
    filter_density_for_metric,
    spatio_temporal_rmse,
)
from .rom import (
    MlpAutoencoder,
    RomSurrogate,
    collect_training_data,
    load_rom,
    rom_forward,
    save_rom,
    train_autoencoder,
)

"""Experiment orchestration: configuration, Monte Carlo runs, CSV emission.

Two experiments are wired up: the static 2-D range-observation problem
(scored by f-divergence against the quadrature posterior) and the Lorenz '96
twin experiment (scored by spatio-temporal RMSE against the synthetic truth).
Replicates own disjoint random streams keyed by (seed, replicate, purpose),
so results are independent of execution order and truth trajectories are
paired across filter variants run at the same seed.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .adapt import (
    BANANA_EM,
    SEQUENTIAL_EM,
    EmConfig,
    EmPriorInputs,
    TrustState,
    em_adapt_step,
)
from .core import Ensemble, RngStream, as_generator, gm_sample
from .errors import ConfigError, MfgmfError
from .filters import (
    AnalysisResult,
    FilterConfig,
    enkf_analysis,
    engmf_analysis,
    mfenkf_analysis,
    mfengmf_analysis,
    propagate,
)
from .kde import build_localization
from .metrics import (
    DEFAULT_BANANA_GRID,
    GridSpec,
    banana_true_posterior,
    f_divergence,
    filter_density_for_metric,
    spatio_temporal_rmse,
)
from .models import (
    BANANA_OBS_VALUE,
    banana_problem,
    lorenz96_attractor_state,
    lorenz96_model,
    lorenz96_observation_model,
)
from .rom import RomSurrogate, load_rom

FILTER_NAMES = ("none", "enkf", "engmf", "mfenkf", "mfengmf", "aengmf", "amfengmf")
MULTIFIDELITY_FILTERS = ("mfenkf", "mfengmf", "amfengmf")
ADAPTIVE_FILTERS = ("aengmf", "amfengmf")
MIXTURE_FILTERS = ("engmf", "mfengmf", "aengmf", "amfengmf")

# Reference levels from the Lorenz '96 benchmark figures.
NO_FILTER_RMSE = 3.6269
BAYESIAN_RMSE = 0.5413

# Purpose offsets for per-replicate stream derivation.
_STREAMS_PER_REPLICATE = 8
_TRUTH, _INIT, _FILTER, _EM, _SURROGATE = range(5)

DIVERGED = "diverged"


@dataclass
class ExperimentConfig:
    """Fully resolved parameters of one experiment invocation."""

    experiment: str
    filter: str = "engmf"
    n_x: int = 25
    n_u: int = 100
    r_dim: int = 28
    s_x: float = 1.0
    s_u: float = 1.0
    alpha_x: float = 1.0
    alpha_u: float = 1.0
    defensive: float = 1e-4
    loc_radius: float | None = 4.0
    replicates: int = 0          # 0 -> desk-scale default for the experiment
    steps: int = 600
    spinup: int = 100
    seed: int = 0
    rom_path: str | None = None
    truth_path: str | None = None
    out_path: str | None = None
    workers: int = 0             # 0 -> one per core (capped by replicates)
    paper_scale: bool = False
    em_ascent_steps: int | None = None
    em_step_size: float | None = None
    em_fd_step: float = 1e-6
    use_resampled_kde: bool = False
    independent_uhat_perturbations: bool = False
    component_cap: int = 1_000_000
    dump_density: str | None = None
    dump_resolution: int = 201
    # sweep grids (None -> the scalar value above)
    n_x_grid: list[int] | None = None
    s_x_grid: list[float] | None = None
    s_u_grid: list[float] | None = None
    alpha_x_grid: list[float] | None = None
    alpha_u_grid: list[float] | None = None

    def __post_init__(self):
        if self.experiment not in ("banana", "lorenz96"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.filter not in FILTER_NAMES:
            raise ConfigError(f"unknown filter {self.filter!r}")
        if self.experiment == "banana" and self.filter == "none":
            raise ConfigError("the static experiment requires a filter")
        if self.replicates == 0:
            if self.paper_scale:
                self.replicates = 10008 if self.experiment == "banana" else 20
            else:
                self.replicates = 1000 if self.experiment == "banana" else 5
        if self.paper_scale and self.experiment == "lorenz96":
            self.steps = 1100
        if self.replicates < 1:
            raise ConfigError("replicate count must be >= 1")
        if self.experiment == "lorenz96" and not 0 <= self.spinup < self.steps:
            raise ConfigError("need 0 <= spinup < steps")
        if self.filter in MULTIFIDELITY_FILTERS and self.experiment == "lorenz96" \
                and not self.rom_path:
            raise ConfigError(f"filter {self.filter!r} needs --rom-path")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def em_config(self) -> EmConfig:
        base = BANANA_EM if self.experiment == "banana" else SEQUENTIAL_EM
        return EmConfig(
            ascent_steps=self.em_ascent_steps if self.em_ascent_steps is not None
            else base.ascent_steps,
            step_size=self.em_step_size if self.em_step_size is not None else base.step_size,
            fd_step=self.em_fd_step,
        )

    def filter_config(self, localization=None) -> FilterConfig:
        variant = {"aengmf": "engmf", "amfengmf": "mfengmf"}.get(self.filter, self.filter)
        return FilterConfig(
            variant=variant,
            n_x=self.n_x,
            n_u=self.n_u if variant in ("mfenkf", "mfengmf") else 0,
            s_x=self.s_x, s_u=self.s_u,
            alpha_x=self.alpha_x, alpha_u=self.alpha_u,
            defensive=self.defensive,
            localization=localization,
            component_cap=self.component_cap,
            independent_uhat_perturbations=self.independent_uhat_perturbations,
        )


@dataclass(frozen=True)
class ResultRow:
    """One metric value for one replicate of one configuration."""

    experiment: str
    filter: str
    n_x: int
    n_u: int
    r_dim: int
    s_x: float
    s_u: float
    alpha_x: float
    alpha_u: float
    seed: int
    replicate: int
    metric: str
    value: float | str
    runtime_seconds: float
    artifact_version: str = __version__


CSV_COLUMNS = [f.name for f in dataclasses.fields(ResultRow)]


def replicate_stream(seed: int, replicate: int, purpose: int) -> RngStream:
    return RngStream(seed, replicate * _STREAMS_PER_REPLICATE + purpose)


# --------------------------------------------------------------------------
# Static 2-D experiment
# --------------------------------------------------------------------------

def _banana_ensembles(cfg: ExperimentConfig, replicate: int):
    prior, obs, coupling = banana_problem()
    init = replicate_stream(cfg.seed, replicate, _INIT).generator()
    theory = gm_sample(prior, cfg.n_x, init)
    reduced = Ensemble(coupling.encode.apply_batch(gm_sample(prior, cfg.n_u, init).members))
    return prior, obs, coupling, theory, reduced


def _run_adaptive(cfg: ExperimentConfig, analysis_fn, prior_inputs, obs, y,
                  trust: TrustState, em_rng, final_rng) -> tuple[AnalysisResult, TrustState]:
    trust = em_adapt_step(prior_inputs, obs, y, trust, cfg.em_config(),
                          analysis_fn, em_rng)
    return analysis_fn(trust, final_rng), trust


def _banana_replicate(cfg: ExperimentConfig, replicate: int) -> list[ResultRow]:
    start = time.perf_counter()
    _, obs, coupling, theory, reduced = _banana_ensembles(cfg, replicate)
    y = BANANA_OBS_VALUE
    fc = cfg.filter_config()
    filter_rng = replicate_stream(cfg.seed, replicate, _FILTER)
    extra: dict[str, float] = {}

    def fixed_analysis(trust: TrustState, rng) -> AnalysisResult:
        tuned = fc.with_trust(trust.s_x, trust.s_u)
        if trust.multifidelity:
            return mfengmf_analysis(theory, reduced, coupling, obs, y, tuned, rng)
        return engmf_analysis(theory, obs, y, tuned, rng)

    try:
        if cfg.filter == "enkf":
            result = enkf_analysis(theory, obs, y, fc, filter_rng)
        elif cfg.filter == "engmf":
            result = engmf_analysis(theory, obs, y, fc, filter_rng)
        elif cfg.filter == "mfenkf":
            result = mfenkf_analysis(theory, reduced, coupling, obs, y, fc, filter_rng)
        elif cfg.filter == "mfengmf":
            result = mfengmf_analysis(theory, reduced, coupling, obs, y, fc, filter_rng)
        else:
            multifidelity = cfg.filter == "amfengmf"
            trust = TrustState(cfg.s_x, cfg.s_u if multifidelity else None)
            inputs = EmPriorInputs(
                theory=theory,
                reduced=reduced if multifidelity else None,
                coupling=coupling if multifidelity else None,
                defensive=cfg.defensive,
            )
            result, trust = _run_adaptive(
                cfg, fixed_analysis, inputs, obs, y, trust,
                replicate_stream(cfg.seed, replicate, _EM), filter_rng,
            )
            extra["s_x"] = trust.s_x
            if trust.multifidelity:
                extra["s_u"] = trust.s_u
        density = filter_density_for_metric(result, cfg.use_resampled_kde)
        value = f_divergence(banana_true_posterior(), density)
    except MfgmfError:
        value = DIVERGED
        extra = {}

    runtime = time.perf_counter() - start
    rows = [_row(cfg, replicate, "f_divergence", value, runtime)]
    rows.extend(_row(cfg, replicate, name, val, 0.0) for name, val in extra.items())
    return rows


def _row(cfg: ExperimentConfig, replicate: int, metric: str, value, runtime: float,
         overrides: dict | None = None) -> ResultRow:
    fields = dict(
        experiment=cfg.experiment, filter=cfg.filter,
        n_x=cfg.n_x, n_u=cfg.n_u if cfg.filter in MULTIFIDELITY_FILTERS else 0,
        r_dim=cfg.r_dim if (cfg.experiment == "lorenz96"
                            and cfg.filter in MULTIFIDELITY_FILTERS) else 0,
        s_x=cfg.s_x, s_u=cfg.s_u, alpha_x=cfg.alpha_x, alpha_u=cfg.alpha_u,
        seed=cfg.seed, replicate=replicate, metric=metric, value=value,
        runtime_seconds=runtime,
    )
    if overrides:
        fields.update(overrides)
    return ResultRow(**fields)


# --------------------------------------------------------------------------
# Lorenz '96 twin experiment
# --------------------------------------------------------------------------

def make_lorenz96_truth(steps: int, rng, n: int = 40, settle_cycles: int = 25):
    """Truth trajectory and noisy observations for one replicate.

    Starts from the reference attractor state, decorrelates it with a small
    seeded perturbation plus a settle stretch, then records ``steps`` cycles.
    Returns (truth, observations) with shapes (steps+1, n) and (steps, n/2).
    """
    gen = as_generator(rng)
    model = lorenz96_model(n)
    obs = lorenz96_observation_model(n)
    state = lorenz96_attractor_state(n) + 1e-4 * gen.standard_normal(n)
    for _ in range(settle_cycles):
        state = model.step(state, gen)
    truth = np.empty((steps + 1, n))
    truth[0] = state
    for k in range(1, steps + 1):
        truth[k] = model.step(truth[k - 1], gen)
    noise = gen.standard_normal((steps, n // 2)) @ obs.noise_chol().T
    observations = obs.operator.apply_batch(truth[1:]) + noise
    return truth, observations


def save_truth(path, truth: np.ndarray, observations: np.ndarray) -> None:
    np.savez_compressed(path, truth=truth, observations=observations)


def load_truth(path):
    with np.load(path) as data:
        return np.array(data["truth"]), np.array(data["observations"])


_SURROGATE_CACHE: dict[str, RomSurrogate] = {}


def _surrogate(cfg: ExperimentConfig) -> RomSurrogate:
    surrogate = _SURROGATE_CACHE.get(cfg.rom_path)
    if surrogate is None:
        autoencoder, res_mean, res_cov = load_rom(cfg.rom_path)
        surrogate = RomSurrogate(autoencoder, lorenz96_model(autoencoder.state_dim),
                                 res_mean, res_cov)
        _SURROGATE_CACHE[cfg.rom_path] = surrogate
    return surrogate


def _lorenz96_replicate(cfg: ExperimentConfig, replicate: int) -> list[ResultRow]:
    start = time.perf_counter()
    n = 40
    model = lorenz96_model(n)
    obs = lorenz96_observation_model(n)
    localization = build_localization(n, cfg.loc_radius) if cfg.loc_radius else None
    fc = cfg.filter_config(localization) if cfg.filter != "none" else None
    multifidelity = cfg.filter in MULTIFIDELITY_FILTERS
    adaptive = cfg.filter in ADAPTIVE_FILTERS

    if cfg.truth_path:
        truth, observations = load_truth(cfg.truth_path)
        if truth.shape[0] < cfg.steps + 1:
            raise ConfigError(f"truth file has {truth.shape[0] - 1} steps, need {cfg.steps}")
    else:
        truth, observations = make_lorenz96_truth(
            cfg.steps, replicate_stream(cfg.seed, replicate, _TRUTH), n
        )

    init = replicate_stream(cfg.seed, replicate, _INIT).generator()
    theory = Ensemble(truth[0] + init.standard_normal((cfg.n_x, n)))
    surrogate = coupling = u_model = None
    reduced = None
    if multifidelity:
        surrogate = _surrogate(cfg)
        coupling = surrogate.autoencoder.coupling_map()
        u_model = surrogate.as_model()
        reduced = Ensemble(coupling.encode.apply_batch(
            truth[0] + init.standard_normal((cfg.n_u, n))
        ))

    filter_gen = replicate_stream(cfg.seed, replicate, _FILTER).generator()
    surrogate_gen = replicate_stream(cfg.seed, replicate, _SURROGATE).generator()
    em_gen = replicate_stream(cfg.seed, replicate, _EM).generator()
    trust = TrustState(cfg.s_x, cfg.s_u if cfg.filter == "amfengmf" else None) \
        if adaptive else None

    estimates = np.empty((cfg.steps, n))
    trust_rows: list[ResultRow] = []
    diverged = False
    guard = 10.0 * NO_FILTER_RMSE
    last_cycle = cfg.steps

    for k in range(1, cfg.steps + 1):
        theory = propagate(theory, model, filter_gen)
        if multifidelity:
            reduced = propagate(reduced, u_model, surrogate_gen)
        y_k = observations[k - 1]

        if cfg.filter == "none":
            estimate = theory.weights @ theory.members
        else:
            try:
                tuned = fc.with_trust(trust.s_x, trust.s_u) if adaptive else fc
                if tuned.variant == "enkf":
                    result = enkf_analysis(theory, obs, y_k, tuned, filter_gen)
                elif tuned.variant == "engmf":
                    result = engmf_analysis(theory, obs, y_k, tuned, filter_gen)
                elif tuned.variant == "mfenkf":
                    result = mfenkf_analysis(theory, reduced, coupling, obs, y_k,
                                             tuned, filter_gen)
                else:
                    result = mfengmf_analysis(theory, reduced, coupling, obs, y_k,
                                              tuned, filter_gen)
                if adaptive:
                    inputs = EmPriorInputs(
                        theory=theory,
                        localization=localization,
                        reduced=reduced if trust.multifidelity else None,
                        coupling=coupling if trust.multifidelity else None,
                        defensive=cfg.defensive,
                    )
                    trust = em_adapt_step(inputs, obs, y_k, trust, cfg.em_config(),
                                          None, em_gen, analysis=result)
                    trust_rows.append(_row(cfg, replicate, f"s_x@{k:04d}", trust.s_x, 0.0))
                    if trust.multifidelity:
                        trust_rows.append(
                            _row(cfg, replicate, f"s_u@{k:04d}", trust.s_u, 0.0))
                theory = result.posterior_theory
                if multifidelity:
                    reduced = result.posterior_reduced
                estimate = result.mean_estimate
            except MfgmfError:
                diverged = True
        if not diverged:
            estimates[k - 1] = estimate
            cycle_rmse = spatio_temporal_rmse(estimate[None, :], truth[k][None, :])
            diverged = not np.isfinite(cycle_rmse) or cycle_rmse > guard
        if diverged:
            last_cycle = k
            break

    runtime = time.perf_counter() - start
    if diverged or last_cycle <= cfg.spinup:
        value: float | str = DIVERGED
    else:
        value = spatio_temporal_rmse(estimates[cfg.spinup:], truth[cfg.spinup + 1:])
    return [_row(cfg, replicate, "rmse", value, runtime)] + trust_rows


# --------------------------------------------------------------------------
# Drivers
# --------------------------------------------------------------------------

def _replicate_worker(args):
    cfg_dict, replicate = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    if cfg.experiment == "banana":
        return _banana_replicate(cfg, replicate)
    return _lorenz96_replicate(cfg, replicate)


def _run_replicates(cfg: ExperimentConfig) -> list[ResultRow]:
    workers = cfg.workers or min(os.cpu_count() or 1, cfg.replicates)
    if cfg.experiment == "banana":
        banana_true_posterior().mask_info()  # warm the cache before forking
    jobs = [(cfg.to_dict(), rep) for rep in range(cfg.replicates)]
    if workers <= 1 or cfg.replicates == 1:
        nested = [_replicate_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(_replicate_worker, jobs, chunksize=4))
    rows = [row for group in nested for row in group]
    return rows + _aggregate_rows(cfg, rows)


def _aggregate_rows(cfg: ExperimentConfig, rows: list[ResultRow]) -> list[ResultRow]:
    """One mean row per primary metric (replicate index -1, '_mean' suffix)."""
    primary = "f_divergence" if cfg.experiment == "banana" else "rmse"
    values = [r.value for r in rows if r.metric == primary]
    finite = [v for v in values if isinstance(v, float) and np.isfinite(v)]
    runtime = sum(r.runtime_seconds for r in rows)
    mean = float(np.mean(finite)) if finite else DIVERGED
    return [_row(cfg, -1, f"{primary}_mean", mean, runtime)]


def run_banana(cfg: ExperimentConfig) -> list[ResultRow]:
    if cfg.experiment != "banana":
        raise ConfigError("run_banana needs a banana experiment config")
    rows = _run_replicates(cfg)
    if cfg.dump_density:
        dump_banana_densities(cfg, cfg.dump_density)
    return rows


def run_lorenz96(cfg: ExperimentConfig) -> list[ResultRow]:
    if cfg.experiment != "lorenz96":
        raise ConfigError("run_lorenz96 needs a lorenz96 experiment config")
    return _run_replicates(cfg)


def run_sweep(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    """Cartesian-product parameter sweep; returns rows plus argmin summary.

    Mixture filters sweep the bandwidth grids, Kalman filters the inflation
    grids; single-point grids reduce to plain runs.
    """
    if cfg.experiment != "lorenz96":
        raise ConfigError("parameter sweeps are defined for the lorenz96 experiment")
    n_x_values = cfg.n_x_grid or [cfg.n_x]
    if cfg.filter in MIXTURE_FILTERS:
        first = [("s_x", v) for v in (cfg.s_x_grid or [cfg.s_x])]
        second = [("s_u", v) for v in (cfg.s_u_grid or [cfg.s_u])] \
            if cfg.filter in MULTIFIDELITY_FILTERS else [(None, None)]
    else:
        first = [("alpha_x", v) for v in (cfg.alpha_x_grid or [cfg.alpha_x])]
        second = [("alpha_u", v) for v in (cfg.alpha_u_grid or [cfg.alpha_u])] \
            if cfg.filter in MULTIFIDELITY_FILTERS else [(None, None)]

    all_rows: list[ResultRow] = []
    best: dict[int, tuple[float, dict]] = {}
    for n_x in n_x_values:
        for name_a, val_a in first:
            for name_b, val_b in second:
                point = {"n_x": n_x}
                if name_a:
                    point[name_a] = val_a
                if name_b:
                    point[name_b] = val_b
                sub = dataclasses.replace(cfg, **point)
                sub.n_x_grid = sub.s_x_grid = sub.s_u_grid = None
                sub.alpha_x_grid = sub.alpha_u_grid = None
                rows = _run_replicates(sub)
                all_rows.extend(rows)
                aggregate = next(r for r in rows if r.replicate == -1)
                if isinstance(aggregate.value, float):
                    if n_x not in best or aggregate.value < best[n_x][0]:
                        best[n_x] = (aggregate.value, point)
    argmin = {
        str(n_x): {"mean": value, **point} for n_x, (value, point) in sorted(best.items())
    }
    return all_rows, {"argmin_by_n_x": argmin, "filter": cfg.filter}


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: list[ResultRow], path) -> None:
    """RFC-4180 CSV with a header; deterministic row order is the caller's."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([
                    _format_value(getattr(row, column)) for column in CSV_COLUMNS
                ])
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc


def read_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def write_metadata(path, cfg: ExperimentConfig, elapsed: float,
                   extra: dict | None = None) -> None:
    meta = {
        "config": cfg.to_dict(),
        "artifact_version": __version__,
        "kernel_implementation": kernels.IMPLEMENTATION,
        "elapsed_seconds": elapsed,
    }
    if extra:
        meta.update(extra)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)


def metadata_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".meta.json"


# --------------------------------------------------------------------------
# Density dump for figure panels
# --------------------------------------------------------------------------

def dump_banana_densities(cfg: ExperimentConfig, path) -> None:
    """Grid log-densities and samples of the four non-adaptive filters.

    Written as JSON for the plotting frontend: the quadrature posterior, the
    prior and likelihood parameters, and per filter the analysis samples plus
    its metric density evaluated on the dump grid.
    """
    from .core import gm_logpdf_many
    from .models import BANANA_OBS_VAR, BANANA_PRIOR_COV, BANANA_PRIOR_MEAN

    res = cfg.dump_resolution
    spec = GridSpec(bounds=DEFAULT_BANANA_GRID.bounds, shape=(res, res))
    posterior = banana_true_posterior(spec)
    _, obs, coupling, theory, reduced = _banana_ensembles(cfg, replicate=0)
    y = BANANA_OBS_VALUE

    panels = {}
    for name in ("enkf", "engmf", "mfenkf", "mfengmf"):
        sub = dataclasses.replace(cfg, filter=name)
        fc = sub.filter_config()
        rng = replicate_stream(cfg.seed, 0, _FILTER)
        if name == "enkf":
            result = enkf_analysis(theory, obs, y, fc, rng)
        elif name == "engmf":
            result = engmf_analysis(theory, obs, y, fc, rng)
        elif name == "mfenkf":
            result = mfenkf_analysis(theory, reduced, coupling, obs, y, fc, rng)
        else:
            result = mfengmf_analysis(theory, reduced, coupling, obs, y, fc, rng)
        density = filter_density_for_metric(result, cfg.use_resampled_kde)
        log_q = gm_logpdf_many(density, posterior.points()).reshape(spec.shape)
        log_q -= np.log(posterior.integrate(np.exp(log_q)))
        panels[name] = {
            "log_density": log_q.tolist(),
            "samples": result.posterior_theory.members.tolist(),
            "reduced_samples": (result.posterior_reduced.members.ravel().tolist()
                                if result.posterior_reduced is not None else None),
        }

    doc = {
        "grid": {
            "x_min": spec.bounds[0][0], "x_max": spec.bounds[0][1],
            "y_min": spec.bounds[1][0], "y_max": spec.bounds[1][1],
            "nx": spec.shape[0], "ny": spec.shape[1],
        },
        "log_true_posterior": posterior.log_density.tolist(),
        "prior_mean": BANANA_PRIOR_MEAN.tolist(),
        "prior_cov": BANANA_PRIOR_COV.tolist(),
        "prior_samples": theory.members.tolist(),
        "reduced_prior_samples": reduced.members.ravel().tolist(),
        "obs_value": float(BANANA_OBS_VALUE[0]),
        "obs_var": BANANA_OBS_VAR,
        "filters": panels,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, sort_keys=True, separators=(",", ":"))

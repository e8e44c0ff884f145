"""Neural autoencoder reduced-order model: training, serialization, surrogate.

The surrogate is deliberately plain: one-hidden-layer tanh encoder and
decoder, full-batch Adam on a reconstruction loss plus a weakly enforced
right-invertibility penalty, a small snapshot budget, and no early stopping,
validation split, or extra regularization.  Its forward model decodes to the
full space, steps the reference dynamics, encodes back, and adds a Gaussian
residual fitted on the training pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import as_generator, ensemble_mean_cov, Ensemble
from .errors import ArgumentError, RomFormatError, TrainingFailureError
from .gmu import InformationMap
from .models import DynamicalModel, CouplingMap, lorenz96_attractor_state

ROM_FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.95
ADAM_EPS = 1e-8

_ENCODER_KEYS = ("w1", "b1", "w2", "b2")
_DECODER_KEYS = ("v1", "c1", "v2", "c2")


class MlpAutoencoder:
    """Affine-tanh-affine encoder and decoder with analytic Jacobians.

    Network weights act in standardized coordinates; the stored per-coordinate
    standardization is folded into the public ``encode``/``decode`` maps and
    their Jacobians.
    """

    def __init__(self, params: dict, x_mean: np.ndarray, x_std: np.ndarray):
        self.params = {k: np.asarray(v, dtype=float) for k, v in params.items()}
        self.x_mean = np.asarray(x_mean, dtype=float)
        self.x_std = np.asarray(x_std, dtype=float)
        w1 = self.params["w1"]
        if w1.shape[1] != self.x_mean.size:
            raise ArgumentError("encoder input size does not match standardization")
        for key in _ENCODER_KEYS + _DECODER_KEYS:
            if key not in self.params:
                raise ArgumentError(f"missing parameter {key}")
            if not np.all(np.isfinite(self.params[key])):
                raise ArgumentError(f"non-finite values in parameter {key}")

    @property
    def state_dim(self) -> int:
        return self.params["w1"].shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.params["w1"].shape[0]

    @property
    def reduced_dim(self) -> int:
        return self.params["w2"].shape[0]

    def encode_many(self, states: np.ndarray) -> np.ndarray:
        z = (np.atleast_2d(states) - self.x_mean) / self.x_std
        t = np.tanh(z @ self.params["w1"].T + self.params["b1"])
        return t @ self.params["w2"].T + self.params["b2"]

    def decode_many(self, reduced: np.ndarray) -> np.ndarray:
        t = np.tanh(np.atleast_2d(reduced) @ self.params["v1"].T + self.params["c1"])
        out = t @ self.params["v2"].T + self.params["c2"]
        return self.x_mean + self.x_std * out

    def encode(self, x: np.ndarray) -> np.ndarray:
        return self.encode_many(x[None, :])[0]

    def decode(self, u: np.ndarray) -> np.ndarray:
        return self.decode_many(u[None, :])[0]

    def encoder_jacobian_many(self, states: np.ndarray) -> np.ndarray:
        z = (np.atleast_2d(states) - self.x_mean) / self.x_std
        t = np.tanh(z @ self.params["w1"].T + self.params["b1"])
        gate = 1.0 - t**2
        jac = np.einsum("rh,kh,hn->krn", self.params["w2"], gate, self.params["w1"])
        return jac / self.x_std[None, None, :]

    def decoder_jacobian_many(self, reduced: np.ndarray) -> np.ndarray:
        t = np.tanh(np.atleast_2d(reduced) @ self.params["v1"].T + self.params["c1"])
        gate = 1.0 - t**2
        jac = np.einsum("nh,kh,hr->knr", self.params["v2"], gate, self.params["v1"])
        return jac * self.x_std[None, :, None]

    def encode_map(self) -> InformationMap:
        return InformationMap(
            apply=self.encode,
            jacobian=lambda x: self.encoder_jacobian_many(x[None, :])[0],
            domain_dim=self.state_dim,
            range_dim=self.reduced_dim,
            apply_many=self.encode_many,
            jacobian_many=self.encoder_jacobian_many,
        )

    def decode_map(self) -> InformationMap:
        return InformationMap(
            apply=self.decode,
            jacobian=lambda u: self.decoder_jacobian_many(u[None, :])[0],
            domain_dim=self.reduced_dim,
            range_dim=self.state_dim,
            apply_many=self.decode_many,
            jacobian_many=self.decoder_jacobian_many,
        )

    def coupling_map(self) -> CouplingMap:
        return CouplingMap(encode=self.encode_map(), decode=self.decode_map())


def init_params(state_dim: int, hidden_dim: int, r_dim: int, rng) -> dict:
    """Seeded symmetric-uniform initialization scaled by 1/sqrt(fan_in)."""
    gen = as_generator(rng)

    def layer(fan_out, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return (
            gen.uniform(-bound, bound, size=(fan_out, fan_in)),
            gen.uniform(-bound, bound, size=fan_out),
        )

    w1, b1 = layer(hidden_dim, state_dim)
    w2, b2 = layer(r_dim, hidden_dim)
    v1, c1 = layer(hidden_dim, r_dim)
    v2, c2 = layer(state_dim, hidden_dim)
    return {"w1": w1, "b1": b1, "w2": w2, "b2": b2,
            "v1": v1, "c1": c1, "v2": v2, "c2": c2}


def loss_and_gradients(params: dict, z: np.ndarray, right_inv_weight: float):
    """Loss and parameter gradients on standardized data ``z`` (T, n).

    Loss: mean ||dec(enc(z)) - z||^2 + weight * mean ||enc(dec(enc(z))) - enc(z)||^2.
    """
    w1, b1, w2, b2 = (params[k] for k in _ENCODER_KEYS)
    v1, c1, v2, c2 = (params[k] for k in _DECODER_KEYS)
    t_count = z.shape[0]

    t1 = np.tanh(z @ w1.T + b1)
    u = t1 @ w2.T + b2
    t2 = np.tanh(u @ v1.T + c1)
    zh = t2 @ v2.T + c2
    t3 = np.tanh(zh @ w1.T + b1)
    u2 = t3 @ w2.T + b2

    recon_err = zh - z
    inv_err = u2 - u
    loss = float(np.mean(np.sum(recon_err**2, axis=1))
                 + right_inv_weight * np.mean(np.sum(inv_err**2, axis=1)))

    # Reverse pass; the encoder runs twice, so w1/b1/w2/b2 collect two terms.
    d_u2 = 2.0 * right_inv_weight * inv_err
    d_a3 = (d_u2 @ w2) * (1.0 - t3**2)
    d_zh = 2.0 * recon_err + d_a3 @ w1
    d_a2 = (d_zh @ v2) * (1.0 - t2**2)
    d_u = d_a2 @ v1 - 2.0 * right_inv_weight * inv_err
    d_a1 = (d_u @ w2) * (1.0 - t1**2)

    grads = {
        "w2": (d_u2.T @ t3 + d_u.T @ t1) / t_count,
        "b2": (d_u2.sum(axis=0) + d_u.sum(axis=0)) / t_count,
        "w1": (d_a3.T @ zh + d_a1.T @ z) / t_count,
        "b1": (d_a3.sum(axis=0) + d_a1.sum(axis=0)) / t_count,
        "v2": d_zh.T @ t2 / t_count,
        "c2": d_zh.sum(axis=0) / t_count,
        "v1": d_a2.T @ u / t_count,
        "c1": d_a2.sum(axis=0) / t_count,
    }
    return loss, grads


def triangular_step_size(epoch: int, lr_min: float = 1e-4, lr_max: float = 1e-2,
                         period: int = 500) -> float:
    """Continuous triangle wave between the step-size bounds (min at epoch 0)."""
    phase = (epoch % period) / period
    return lr_min + (lr_max - lr_min) * (1.0 - abs(2.0 * phase - 1.0))


@dataclass
class AdamState:
    """First/second-moment accumulators and step counter for Adam."""

    first: dict
    second: dict
    step_count: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(
            first={k: np.zeros_like(v) for k, v in params.items()},
            second={k: np.zeros_like(v) for k, v in params.items()},
        )

    def update(self, params: dict, grads: dict, step_size: float) -> None:
        self.step_count += 1
        bias1 = 1.0 - ADAM_BETA1**self.step_count
        bias2 = 1.0 - ADAM_BETA2**self.step_count
        for key, grad in grads.items():
            m = self.first[key]
            v = self.second[key]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * grad
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * grad**2
            params[key] -= step_size * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)


def standardize_stats(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    return mean, np.where(std < 1e-12, 1.0, std)


def train_autoencoder(data, r_dim: int, epochs: int, rng,
                      hidden_dim: int = 100, right_inv_weight: float = 10.0,
                      lr_min: float = 1e-4, lr_max: float = 1e-2,
                      schedule_period: int = 500) -> MlpAutoencoder:
    """Full-batch Adam training of the autoencoder (deterministic given rng).

    Data are standardized per coordinate before training; the returned model
    folds the standardization back into its maps.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] < 1:
        raise ArgumentError("training data must be nonempty")
    if not 1 <= r_dim < data.shape[1]:
        raise ArgumentError("reduced dimension must be in [1, state_dim)")
    mean, std = standardize_stats(data)
    z = (data - mean) / std
    params = init_params(data.shape[1], hidden_dim, r_dim, rng)
    opt = AdamState.for_params(params)
    for epoch in range(epochs):
        loss, grads = loss_and_gradients(params, z, right_inv_weight)
        if not np.isfinite(loss):
            raise TrainingFailureError(f"non-finite loss at epoch {epoch}")
        opt.update(params, grads, triangular_step_size(epoch, lr_min, lr_max, schedule_period))
    return MlpAutoencoder(params, mean, std)


def training_loss(model: MlpAutoencoder, data, right_inv_weight: float = 10.0) -> float:
    """The training objective of a model on raw (unstandardized) data."""
    z = (np.atleast_2d(np.asarray(data, dtype=float)) - model.x_mean) / model.x_std
    loss, _ = loss_and_gradients(model.params, z, right_inv_weight)
    return loss


def collect_training_data(model: DynamicalModel, count: int, rng,
                          spinup_time: float = 10.0) -> np.ndarray:
    """Consecutive attractor snapshots, one assimilation interval apart.

    Starts from a reference attractor state, perturbs it from the stream, and
    discards an extra spinup stretch before collecting.
    """
    if count < 1:
        raise ArgumentError("count must be >= 1")
    gen = as_generator(rng)
    state = lorenz96_attractor_state(model.dimension)
    state = state + 1e-3 * gen.standard_normal(model.dimension)
    spinup_steps = round(spinup_time / 0.2)
    for _ in range(spinup_steps):
        state = model.step(state, gen)
    snapshots = np.empty((count, model.dimension))
    snapshots[0] = state
    for k in range(1, count):
        snapshots[k] = model.step(snapshots[k - 1], gen)
    return snapshots


@dataclass(frozen=True)
class RomSurrogate:
    """Trained autoencoder plus reference dynamics plus fitted residual noise."""

    autoencoder: MlpAutoencoder
    theory_model: DynamicalModel
    residual_mean: np.ndarray
    residual_cov: np.ndarray

    def residual_chol(self) -> np.ndarray:
        cov = self.residual_cov
        if not np.any(cov):
            return np.zeros_like(cov)
        eps = 1e-10 * np.trace(cov) / cov.shape[0]
        return np.linalg.cholesky(cov + eps * np.eye(cov.shape[0]))

    def forward_many(self, reduced: np.ndarray, rng) -> np.ndarray:
        gen = as_generator(rng)
        ae = self.autoencoder
        stepped = self.theory_model.step_many(ae.decode_many(reduced), gen)
        predicted = ae.encode_many(stepped)
        noise = gen.standard_normal(predicted.shape) @ self.residual_chol().T
        return predicted + self.residual_mean + noise

    def as_model(self) -> DynamicalModel:
        return DynamicalModel(dimension=self.autoencoder.reduced_dim,
                              step_many=self.forward_many)


def rom_forward(surrogate: RomSurrogate, u: np.ndarray, rng) -> np.ndarray:
    """One surrogate step of a single reduced state (decode, step, encode, noise)."""
    return surrogate.forward_many(np.asarray(u, dtype=float)[None, :], rng)[0]


def surrogate_residuals(autoencoder: MlpAutoencoder, theory_model: DynamicalModel,
                        data: np.ndarray) -> np.ndarray:
    """Reduced-space one-step errors of the surrogate over consecutive snapshots."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] < 3:
        raise ArgumentError("need at least 3 consecutive snapshots for residual stats")
    encoded = autoencoder.encode_many(data)
    dummy = np.random.default_rng(0)  # theory model is deterministic
    stepped = theory_model.step_many(autoencoder.decode_many(encoded[:-1]), dummy)
    predicted = autoencoder.encode_many(stepped)
    return encoded[1:] - predicted


def build_rom_surrogate(autoencoder: MlpAutoencoder, theory_model: DynamicalModel,
                        data: np.ndarray) -> RomSurrogate:
    """Fit the residual Gaussian on training pairs and assemble the surrogate."""
    residuals = surrogate_residuals(autoencoder, theory_model, data)
    mean, cov = ensemble_mean_cov(Ensemble(residuals))
    return RomSurrogate(autoencoder=autoencoder, theory_model=theory_model,
                        residual_mean=mean, residual_cov=cov)


def save_rom(autoencoder: MlpAutoencoder, residual_mean, residual_cov, path) -> None:
    """Write the model and residual stats as a versioned, deterministic JSON file."""
    doc = {
        "format_version": ROM_FORMAT_VERSION,
        "state_dim": autoencoder.state_dim,
        "hidden_dim": autoencoder.hidden_dim,
        "r_dim": autoencoder.reduced_dim,
        "standardize_mean": autoencoder.x_mean.tolist(),
        "standardize_std": autoencoder.x_std.tolist(),
        "encoder": {k: autoencoder.params[k].tolist() for k in _ENCODER_KEYS},
        "decoder": {k: autoencoder.params[k].tolist() for k in _DECODER_KEYS},
        "residual_mean": np.asarray(residual_mean, dtype=float).tolist(),
        "residual_cov": np.asarray(residual_cov, dtype=float).tolist(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, sort_keys=True, separators=(",", ":"))


def load_rom(path) -> tuple[MlpAutoencoder, np.ndarray, np.ndarray]:
    """Load a ROM file, validating version and shapes."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("format_version") != ROM_FORMAT_VERSION:
        raise RomFormatError(f"unsupported ROM format version {doc.get('format_version')!r}")
    state_dim, hidden_dim, r_dim = doc["state_dim"], doc["hidden_dim"], doc["r_dim"]
    if r_dim < 1 or state_dim < 1 or hidden_dim < 1:
        raise RomFormatError("ROM dimensions must be positive")
    shapes = {
        "w1": (hidden_dim, state_dim), "b1": (hidden_dim,),
        "w2": (r_dim, hidden_dim), "b2": (r_dim,),
        "v1": (hidden_dim, r_dim), "c1": (hidden_dim,),
        "v2": (state_dim, hidden_dim), "c2": (state_dim,),
    }
    params = {}
    for section, keys in (("encoder", _ENCODER_KEYS), ("decoder", _DECODER_KEYS)):
        for key in keys:
            arr = np.asarray(doc[section][key], dtype=float)
            if arr.shape != shapes[key]:
                raise RomFormatError(f"parameter {key} has shape {arr.shape}, expected {shapes[key]}")
            params[key] = arr
    mean = np.asarray(doc["standardize_mean"], dtype=float)
    std = np.asarray(doc["standardize_std"], dtype=float)
    if mean.shape != (state_dim,) or std.shape != (state_dim,):
        raise RomFormatError("standardization vectors have wrong shape")
    residual_mean = np.asarray(doc["residual_mean"], dtype=float)
    residual_cov = np.asarray(doc["residual_cov"], dtype=float)
    if residual_mean.shape != (r_dim,) or residual_cov.shape != (r_dim, r_dim):
        raise RomFormatError("residual statistics have wrong shape")
    return MlpAutoencoder(params, mean, std), residual_mean, residual_cov

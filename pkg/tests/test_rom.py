"""Autoencoder surrogate: training mechanics, serialization, forward model."""

import json

import numpy as np
import pytest

from mfgmf.core import RngStream
from mfgmf.errors import RomFormatError
from mfgmf.gmu import check_jacobian
from mfgmf.models import lorenz96_model, zero_dynamics
from mfgmf.rom import (
    ADAM_EPS,
    AdamState,
    MlpAutoencoder,
    RomSurrogate,
    build_rom_surrogate,
    collect_training_data,
    init_params,
    load_rom,
    loss_and_gradients,
    rom_forward,
    save_rom,
    surrogate_residuals,
    train_autoencoder,
    training_loss,
    triangular_step_size,
)


@pytest.fixture(scope="module")
def small_data():
    return collect_training_data(lorenz96_model(), 300, RngStream(21, 1))


@pytest.fixture(scope="module")
def small_model(small_data):
    return train_autoencoder(small_data, 14, 300, RngStream(21, 2))


def test_training_data_shape_and_bounds(small_data):
    assert small_data.shape == (300, 40)
    assert small_data.min() > -20.0 and small_data.max() < 25.0


def test_training_data_single_snapshot():
    data = collect_training_data(lorenz96_model(), 1, RngStream(21, 3))
    assert data.shape == (1, 40)


def test_training_data_consecutive_snapshots(small_data):
    # snapshots are one assimilation interval apart along one trajectory
    model = lorenz96_model()
    stepped = model.step(small_data[10], RngStream(0))
    assert np.allclose(stepped, small_data[11], atol=1e-10)


def test_zero_epochs_returns_initialization(small_data):
    a = train_autoencoder(small_data, 14, 0, RngStream(5))
    b = train_autoencoder(small_data, 14, 0, RngStream(5))
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


def test_training_deterministic(small_data):
    a = train_autoencoder(small_data, 14, 120, RngStream(9))
    b = train_autoencoder(small_data, 14, 120, RngStream(9))
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


def test_training_reduces_loss(small_data, small_model):
    initial = train_autoencoder(small_data, 14, 0, RngStream(21, 2))
    assert training_loss(small_model, small_data) < training_loss(initial, small_data) / 10.0


def test_right_invertibility_improves(small_data, small_model):
    initial = train_autoencoder(small_data, 14, 0, RngStream(21, 2))
    holdout = collect_training_data(lorenz96_model(), 50, RngStream(77, 1))

    def residual(model):
        encoded = model.encode_many(holdout)
        return np.linalg.norm(model.encode_many(model.decode_many(encoded)) - encoded)

    assert residual(small_model) <= residual(initial)


def test_gradients_match_finite_differences_miniature():
    rng = RngStream(31).generator()
    params = init_params(4, 3, 2, rng)
    z = rng.normal(size=(6, 4))
    for weight in (0.0, 10.0):
        _, grads = loss_and_gradients(params, z, weight)
        for key, grad in grads.items():
            fd = np.zeros_like(grad)
            flat = params[key].ravel()
            for i in range(flat.size):
                saved = flat[i]
                step = 1e-6 * max(1.0, abs(saved))
                flat[i] = saved + step
                up, _ = loss_and_gradients(params, z, weight)
                flat[i] = saved - step
                down, _ = loss_and_gradients(params, z, weight)
                flat[i] = saved
                fd.ravel()[i] = (up - down) / (2 * step)
            scale = max(np.abs(grad).max(), 1e-8)
            assert np.abs(grad - fd).max() / scale < 1e-5


def test_adam_first_step_magnitude():
    params = {"w": np.array([1.0, -2.0, 3.0])}
    opt = AdamState.for_params(params)
    grad = np.array([0.3, -0.7, 2.0])
    opt.update(params, {"w": grad}, step_size=0.01)
    moved = np.abs(params["w"] - np.array([1.0, -2.0, 3.0]))
    expected = 0.01 * np.abs(grad) / (np.abs(grad) + ADAM_EPS)
    assert np.allclose(moved, expected, atol=1e-12)
    assert np.allclose(moved, 0.01, atol=1e-6)


def test_triangular_schedule_shape():
    period = 100
    values = np.array([triangular_step_size(e, 1e-4, 1e-2, period) for e in range(250)])
    assert values.min() >= 1e-4 and values.max() <= 1e-2
    assert values[0] == pytest.approx(1e-4)
    assert values[50] == pytest.approx(1e-2)
    assert values[100] == pytest.approx(1e-4)
    steps = np.abs(np.diff(values))
    assert steps.max() <= 2 * (1e-2 - 1e-4) / period + 1e-12  # continuous, piecewise linear


def test_autoencoder_jacobians(small_model):
    points = collect_training_data(lorenz96_model(), 5, RngStream(70, 1))
    assert check_jacobian(small_model.encode_map(), points) < 1e-5
    encoded = small_model.encode_many(points)
    assert check_jacobian(small_model.decode_map(), encoded) < 1e-5


def test_rom_forward_shape_and_noise_free_composition(small_model, small_data):
    model = zero_dynamics(40)
    surrogate = RomSurrogate(small_model, model, np.zeros(14), np.zeros((14, 14)))
    u = small_model.encode(small_data[0])
    out = rom_forward(surrogate, u, RngStream(3))
    assert out.shape == (14,)
    assert np.allclose(out, small_model.encode(small_model.decode(u)), atol=1e-12)


def test_residual_statistics_recomputed(small_model, small_data):
    model = lorenz96_model()
    surrogate = build_rom_surrogate(small_model, model, small_data)
    residuals = surrogate_residuals(small_model, model, small_data)
    assert np.allclose(surrogate.residual_mean, residuals.mean(axis=0), rtol=0.05, atol=1e-12)
    recomputed = np.cov(residuals.T)
    scale = np.abs(recomputed).max()
    assert np.abs(surrogate.residual_cov - recomputed).max() < 0.05 * scale


def test_rom_file_roundtrip_bitexact(tmp_path, small_model, small_data):
    surrogate = build_rom_surrogate(small_model, lorenz96_model(), small_data)
    path_a, path_b = tmp_path / "a.json", tmp_path / "b.json"
    save_rom(small_model, surrogate.residual_mean, surrogate.residual_cov, path_a)
    loaded, mean, cov = load_rom(path_a)
    save_rom(loaded, mean, cov, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()
    x = RngStream(8).generator().normal(size=(10, 40)) * 5
    assert np.abs(loaded.encode_many(x) - small_model.encode_many(x)).max() < 1e-12


def test_rom_load_rejects_bad_files(tmp_path, small_model, small_data):
    surrogate = build_rom_surrogate(small_model, lorenz96_model(), small_data)
    path = tmp_path / "rom.json"
    save_rom(small_model, surrogate.residual_mean, surrogate.residual_cov, path)
    doc = json.loads(path.read_text())

    bad_version = dict(doc, format_version=99)
    (tmp_path / "v.json").write_text(json.dumps(bad_version))
    with pytest.raises(RomFormatError):
        load_rom(tmp_path / "v.json")

    bad_rdim = dict(doc, r_dim=0)
    (tmp_path / "r.json").write_text(json.dumps(bad_rdim))
    with pytest.raises(RomFormatError):
        load_rom(tmp_path / "r.json")

    bad_shape = json.loads(path.read_text())
    bad_shape["encoder"]["b2"] = [0.0]
    (tmp_path / "s.json").write_text(json.dumps(bad_shape))
    with pytest.raises(RomFormatError):
        load_rom(tmp_path / "s.json")


def test_autoencoder_rejects_nonfinite_params(small_model):
    params = {k: v.copy() for k, v in small_model.params.items()}
    params["w1"][0, 0] = np.nan
    with pytest.raises(Exception):
        MlpAutoencoder(params, small_model.x_mean, small_model.x_std)

import numpy as np
import pytest

from mfgmf.core import RngStream
from mfgmf.models import lorenz96_model
from mfgmf.rom import build_rom_surrogate, collect_training_data, save_rom, train_autoencoder


@pytest.fixture(scope="session")
def small_rom(tmp_path_factory):
    """A quickly trained r=14 surrogate for pipeline tests (not benchmark quality)."""
    model = lorenz96_model()
    data = collect_training_data(model, 300, RngStream(1234, 1))
    autoencoder = train_autoencoder(data, 14, 300, RngStream(1234, 2))
    surrogate = build_rom_surrogate(autoencoder, model, data)
    path = tmp_path_factory.mktemp("rom") / "rom_r14.json"
    save_rom(autoencoder, surrogate.residual_mean, surrogate.residual_cov, path)
    return {"path": str(path), "surrogate": surrogate, "autoencoder": autoencoder}
